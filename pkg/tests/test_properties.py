# tests/test_properties.py
import numpy as np
import pytest

from app.core.algebra.cone_synthesis import synthesize_full_cone
from app.core.algebra.matrix_algebra import (
    conjugate,
    eigen,
    flux_condition_orthant,
    is_cooperative,
    is_m_matrix,
    permutation_matrices,
)
from app.schemas.certificate import ConeCertificate
from app.schemas.system import EllipticSystem


def _random_matrix(rng, m, cooperative):
    C = rng.uniform(-1.0, 1.0, (m, m))
    if cooperative:
        C = np.abs(C)
        np.fill_diagonal(C, 0.0)
        np.fill_diagonal(C, -C.sum(axis=1) - rng.uniform(0.1, 1.0, m))
    return C


@pytest.mark.parametrize("m", [2, 3, 4])
def test_conjugation_round_trip(rng, m):
    for _ in range(20):
        Q = rng.standard_normal((m, m)) + 3 * np.eye(m)
        C = rng.standard_normal((m, m))
        np.testing.assert_allclose(conjugate(conjugate(C, Q), np.linalg.inv(Q)), C, atol=1e-9)


def _row_sum_violation(rng, m):
    # off-diagonal signs fine, exactly one row sum pushed above zero
    C = _random_matrix(rng, m, cooperative=True)
    row = rng.integers(m)
    C[row, row] += -C[row].sum() + rng.uniform(1e-3, 1.0)
    return C


_GENERATORS = (
    lambda rng, m: _random_matrix(rng, m, cooperative=True),
    lambda rng, m: _random_matrix(rng, m, cooperative=False),
    _row_sum_violation,
)


@pytest.mark.parametrize("m", [2, 3, 4])
def test_flux_condition_matches_cooperativity(rng, m):
    outcomes = set()
    for trial in range(1000):
        C = _GENERATORS[trial % 3](rng, m)
        expected = is_cooperative(C).is_cooperative
        assert flux_condition_orthant(C, samples=100, seed=trial) == expected
        outcomes.add(expected)
    assert outcomes == {True, False}


@pytest.mark.parametrize("m", [2, 3, 4])
def test_row_sum_violation_is_seen_by_flux(rng, m):
    for trial in range(200):
        C = _row_sum_violation(rng, m)
        report = is_cooperative(C)
        assert report.worst_offdiag_margin >= 0.0
        assert not report.is_cooperative
        assert not flux_condition_orthant(C, samples=1, seed=trial)


@pytest.mark.parametrize("m", [2, 3, 4])
def test_cooperativity_is_permutation_invariant(rng, m):
    for trial in range(10):
        C = _random_matrix(rng, m, cooperative=trial % 2 == 0)
        expected = is_cooperative(C).is_cooperative
        for perm in permutation_matrices(m):
            assert is_cooperative(perm @ C @ perm.T).is_cooperative == expected


@pytest.mark.parametrize("m", [2, 3, 4])
def test_m_matrix_has_nonnegative_inverse(rng, m):
    for _ in range(20):
        N = rng.uniform(0.0, 1.0, (m, m))
        s = max(abs(np.linalg.eigvals(N))) + rng.uniform(0.5, 2.0)
        M = s * np.eye(m) - N
        report = is_m_matrix(M)
        assert report.is_m_matrix
        assert np.all(np.linalg.inv(M) >= -1e-12)


@pytest.mark.parametrize("m", [2, 3])
def test_spectrum_survives_similarity(rng, m):
    D = np.diag(np.arange(1.0, m + 1))
    Q = rng.standard_normal((m, m)) + 3 * np.eye(m)
    decomposition = eigen(Q @ D @ np.linalg.inv(Q))
    assert decomposition.all_real
    np.testing.assert_allclose(sorted(lam for lam, _, _ in decomposition.multiplicities), np.arange(1.0, m + 1), atol=1e-8)


def test_search_is_permutation_invariant(ex18_system):
    swap = np.array([[0.0, 1.0], [1.0, 0.0]])
    permuted = EllipticSystem.from_arrays(
        B=[swap @ B @ swap for B in ex18_system.B_arrays], C=swap @ ex18_system.C_array @ swap
    )
    assert isinstance(synthesize_full_cone(ex18_system), ConeCertificate)
    cert = synthesize_full_cone(permuted)
    assert isinstance(cert, ConeCertificate)
    np.testing.assert_allclose(sorted(cert.betas[0]), [2.0, 4.0], atol=1e-10)
