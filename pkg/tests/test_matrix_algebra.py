# tests/test_matrix_algebra.py
import numpy as np
import pytest

from app.core.algebra.matrix_algebra import (
    as_matrix,
    canonical_column,
    conjugate,
    eigen,
    flux_condition_orthant,
    is_cooperative,
    is_m_matrix,
    max_norm,
)
from app.core.utils.exceptions import (
    DimensionTooLargeError,
    InputError,
    NonSquareError,
    SingularQError,
)


def _parallel(u, v, atol=1e-10):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return abs(abs(u @ v) - np.linalg.norm(u) * np.linalg.norm(v)) <= atol


def test_eigen_distinct_real():
    decomposition = eigen([[6, 1], [-8, 0]])
    np.testing.assert_allclose(decomposition.eigenvalues.real, [2.0, 4.0], atol=1e-10)
    V = decomposition.real_eigenbasis
    assert V is not None
    assert _parallel(V[:, 0], [-1, 4])
    assert _parallel(V[:, 1], [0.5, -1])
    B = np.array([[6.0, 1.0], [-8.0, 0.0]])
    np.testing.assert_allclose(B @ V, V @ np.diag(decomposition.basis_eigenvalues), atol=1e-9)


def test_eigen_identity_gives_identity_basis():
    decomposition = eigen(np.eye(2))
    np.testing.assert_allclose(decomposition.eigenvalues.real, [1.0, 1.0])
    np.testing.assert_allclose(decomposition.real_eigenbasis, np.eye(2), atol=1e-12)
    assert decomposition.multiplicities == [(1.0, 2, 2)]


def test_eigen_rotation_has_no_real_basis():
    decomposition = eigen([[0, -1], [1, 0]])
    np.testing.assert_allclose(sorted(decomposition.eigenvalues.imag), [-1.0, 1.0], atol=1e-12)
    assert decomposition.real_eigenbasis is None
    assert not decomposition.all_real


def test_eigen_jordan_block_is_not_diagonalizable():
    decomposition = eigen([[1, 1], [0, 1]])
    assert decomposition.all_real
    assert decomposition.real_eigenbasis is None


def test_eigen_separates_close_eigenvalues():
    decomposition = eigen(np.diag([1.0, 1.0 + 1e-7]))
    assert decomposition.all_real
    assert decomposition.real_eigenbasis is not None
    np.testing.assert_allclose(np.abs(decomposition.real_eigenbasis), np.eye(2), atol=1e-12)
    np.testing.assert_allclose(decomposition.basis_eigenvalues, [1.0, 1.0 + 1e-7], rtol=1e-12)


@pytest.mark.parametrize(
    "v, expected",
    [
        ([1.0, -1.0], [1.0, -1.0]),
        ([-1.0, 1.0], [1.0, -1.0]),
        ([-0.7071067811865475, 0.7071067811865476], [1.0, -1.0]),
        ([0.0, -2.0, 1.0], [0.0, 1.0, -0.5]),
    ],
)
def test_canonical_column_ignores_rounding_ties(v, expected):
    np.testing.assert_allclose(canonical_column(np.array(v)), expected, atol=1e-12)


@pytest.mark.parametrize(
    "M, error",
    [
        ([[1, 2, 3], [4, 5, 6]], NonSquareError),
        (np.eye(17), DimensionTooLargeError),
        ([[1, np.nan], [0, 1]], InputError),
    ],
)
def test_eigen_rejects_bad_input(M, error):
    with pytest.raises(error):
        eigen(M)


@pytest.mark.parametrize(
    "C, expected",
    [
        ([[-3, 2], [1, -2]], True),
        ([[-4, 3], [0, -1]], True),
        ([[0, 1], [1, 0]], False),
        ([[-1, -0.5], [0, -1]], False),
    ],
)
def test_is_cooperative(C, expected):
    assert is_cooperative(C).is_cooperative is expected


def test_cooperativity_margins():
    report = is_cooperative([[-3, 2], [1, -2]])
    assert report.worst_offdiag_margin == 1.0
    assert report.worst_rowsum_margin == -1.0
    assert report.strict_level == 1.0


def test_m_matrix_decomposition():
    report = is_m_matrix([[2, -1], [-1, 2]])
    assert report
    assert report.s == pytest.approx(3.0)
    np.testing.assert_allclose(report.X, [[1, 1], [1, 1]])
    assert report.spectral_radius == pytest.approx(2.0)
    assert report.inverse_nonnegative


def test_identity_is_m_matrix():
    assert is_m_matrix(np.eye(3))


def test_singular_candidate_is_not_m_matrix():
    report = is_m_matrix([[0, -1], [-1, 0]])
    assert not report
    assert "spectral radius" in report.reason


def test_positive_offdiagonal_is_not_m_matrix():
    assert not is_m_matrix([[2, 1], [-1, 2]])


def test_conjugate_remark_matrices():
    result = conjugate([[-3, 2], [1, -2]], [[2, -1], [-1, 2]])
    assert max_norm(result - np.array([[-4, 3], [0, -1]])) <= 1e-12


def test_conjugate_identity_and_scalar(rng):
    C = rng.standard_normal((3, 3))
    np.testing.assert_allclose(conjugate(C, np.eye(3)), C, atol=1e-14)
    Q = rng.standard_normal((2, 2)) + 3 * np.eye(2)
    np.testing.assert_allclose(conjugate(-np.eye(2), Q), -np.eye(2), atol=1e-12)


def test_conjugate_singular_q():
    with pytest.raises(SingularQError):
        conjugate(np.eye(2), [[1, 1], [1, 1]])


@pytest.mark.parametrize(
    "C, expected",
    [
        ([[-3, 2], [1, -2]], True),
        ([[0, 1], [1, 0]], False),
        ([[0, 0], [0, 0]], True),
        ([[-1, -1], [0, -1]], False),
    ],
)
def test_flux_condition(C, expected):
    assert flux_condition_orthant(C, samples=1000) is expected


def test_as_matrix_rejects_ragged():
    with pytest.raises(InputError):
        as_matrix([[1, 2], [3]])


def test_canonical_column():
    np.testing.assert_allclose(canonical_column(np.array([1.0, -4.0])), [-0.25, 1.0])


def test_scalar_cooperativity_margin_is_real():
    report = is_cooperative([[-2.0]])
    assert report.is_cooperative
    assert report.worst_offdiag_margin == float("inf")
    assert report.strict_level == 2.0
