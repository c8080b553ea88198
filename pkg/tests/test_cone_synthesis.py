# tests/test_cone_synthesis.py
import numpy as np
import pytest

from app.core.algebra.cone_synthesis import (
    certificate_from_q,
    commute_check,
    common_eigenvectors,
    require_valid,
    revalidate,
    synthesize_full_cone,
    synthesize_partial_cone,
    validate_certificate,
)
from app.core.algebra.matrix_algebra import conjugate, is_cooperative
from app.core.analysis.registry import example_registry
from app.core.utils.exceptions import InvalidCertificateError, NoCommonBasisError
from app.schemas.certificate import ConeCertificate, NotFound
from app.schemas.system import EllipticSystem


def _proportional(rows, reference):
    rows = np.atleast_2d(rows)
    for ref in np.atleast_2d(reference):
        target = ref / np.linalg.norm(ref)
        assert any(np.allclose(r / np.linalg.norm(r), target, atol=1e-9) for r in rows)


def test_commute_check():
    assert commute_check(example_registry("ex1.8").system)
    sys = EllipticSystem.from_arrays(B=[[[0, 1], [0, 0]], [[0, 0], [1, 0]]], C=np.zeros((2, 2)))
    assert not commute_check(sys)
    single = EllipticSystem.from_arrays(B=[[[1, 2], [3, 4]]], C=np.zeros((2, 2)))
    assert commute_check(single)


def test_full_cone_for_diagonalizable_drift(ex18_system):
    cert = synthesize_full_cone(ex18_system)
    assert isinstance(cert, ConeCertificate)
    assert cert.checks.passed
    D = cert.P_array @ ex18_system.B_arrays[0] @ cert.Q_array
    np.testing.assert_allclose(D, np.diag([2.0, 4.0]), atol=1e-10)
    assert np.all(cert.P_array >= 0)
    assert is_cooperative(conjugate(ex18_system.C_array, cert.Q_array)).is_cooperative
    _proportional(cert.cone_rows, [[1, 0.5], [4, 1]])
    np.testing.assert_allclose(cert.betas, [[2, 4], [0, 0]], atol=1e-10)


def test_diagonal_drift_gives_identity():
    sys = EllipticSystem.from_arrays(
        B=[[[1, 0], [0, 3]], [[-2, 0], [0, 5]]], C=[[-2, 1], [1, -2]]
    )
    cert = synthesize_full_cone(sys)
    assert isinstance(cert, ConeCertificate)
    np.testing.assert_allclose(np.abs(cert.Q_array), np.eye(2), atol=1e-12)
    np.testing.assert_allclose(cert.P_array, np.eye(2), atol=1e-12)


def test_antisymmetric_coupling_has_no_full_cone():
    result = synthesize_full_cone(example_registry("ex1.3").system)
    assert isinstance(result, NotFound)
    assert result.failed_condition == "P_rows_nonneg"
    assert result.search.candidates_evaluated == 4


def test_partial_cone_half_space(ex110_system):
    assert isinstance(synthesize_full_cone(ex110_system), NotFound)
    cert = synthesize_partial_cone(ex110_system)
    assert isinstance(cert, ConeCertificate)
    assert cert.k == 1
    assert cert.theorem == "partial"
    np.testing.assert_allclose(cert.Q_array, [[1, 1], [1, -1]], atol=1e-12)
    np.testing.assert_allclose(cert.P_array, [[0.5, 0.5], [0.5, -0.5]], atol=1e-12)
    _proportional(cert.cone_rows, [[1, 1]])


@pytest.mark.parametrize("seed", [0, 1, 2, 7, 42, 123, 2024])
def test_common_eigenvectors_independent_of_seed(ex110_system, seed):
    vectors, betas, _ = common_eigenvectors(ex110_system, seed=seed)
    np.testing.assert_allclose(vectors, [[1, 1], [-1, 1]], atol=1e-12)
    np.testing.assert_allclose(betas, [[-1, 1], [0, 0]], atol=1e-12)
    cert = synthesize_partial_cone(ex110_system, seed=seed)
    assert isinstance(cert, ConeCertificate)
    assert cert.k == 1


@pytest.mark.parametrize("seed", [0, 2, 42])
def test_symmetric_coupling_search_independent_of_seed(seed):
    result = synthesize_full_cone(example_registry("ex1.3").system, seed=seed)
    assert isinstance(result, NotFound)
    assert result.failed_condition == "P_rows_nonneg"


def test_partial_search_reproduces_full(ex18_system):
    full = synthesize_full_cone(ex18_system)
    partial = synthesize_partial_cone(ex18_system)
    assert partial.k == 2
    np.testing.assert_allclose(partial.Q_array, full.Q_array)


def test_complex_spectrum_has_no_common_basis():
    sys = EllipticSystem.from_arrays(B=[[[0, -1], [1, 0]]], C=-np.eye(2))
    with pytest.raises(NoCommonBasisError):
        common_eigenvectors(sys)
    with pytest.raises(NoCommonBasisError):
        synthesize_partial_cone(sys)


def test_positive_diagonal_rescaling_keeps_certificate(ex18_system):
    cert = synthesize_full_cone(ex18_system)
    scaled = certificate_from_q(ex18_system, cert.Q_array @ np.diag([3.0, 0.25]))
    assert scaled.checks.passed
    assert revalidate(ex18_system, scaled).passed


def test_negated_certificate_fails(ex18_system):
    cert = synthesize_full_cone(ex18_system)
    negated = certificate_from_q(ex18_system, -cert.Q_array)
    assert not negated.checks.P_rows_nonneg
    with pytest.raises(InvalidCertificateError):
        require_valid(ex18_system, negated)


def test_tampered_flags_are_not_trusted(ex18_system):
    cert = synthesize_full_cone(ex18_system)
    forged = cert.model_copy(update={"P": (-cert.P_array).tolist()})
    assert not revalidate(ex18_system, forged).passed


def test_validate_remark_m_matrix():
    entry = example_registry("remark1.8-matrices")
    checks = validate_certificate(entry.system, entry.reference_q, 2, [[0.0, 0.0]])
    assert checks.passed
