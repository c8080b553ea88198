# tests/test_registry.py
import numpy as np
import pytest

from app.core.analysis.fields import derivatives_consistent, residual
from app.core.analysis.registry import (
    REGISTRY_IDS,
    WMP_FAILS,
    WMP_HOLDS,
    confirm_entry_witness,
    example_registry,
    sample_points,
)
from app.core.utils.exceptions import UnknownIdError


@pytest.mark.parametrize("entry_id", ["ex1.1", "ex1.3", "ex1.10"])
def test_explicit_witnesses_violate_wmp(entry_id):
    entry = example_registry(entry_id)
    assert WMP_FAILS in entry.claims
    verdict = confirm_entry_witness(entry)
    assert verdict.fails
    assert verdict.witness.kind == "analytic"
    assert verdict.diagnostics["boundary_max"] <= 1e-10


@pytest.mark.parametrize("entry_id", [i for i in REGISTRY_IDS])
def test_witness_derivatives_match_differences(entry_id):
    entry = example_registry(entry_id)
    if entry.witness is None:
        pytest.skip("no explicit witness")
    interior, _ = sample_points(entry.region, 200, seed=3)
    assert derivatives_consistent(entry.witness, interior)


def test_ex11_residual_is_exact():
    entry = example_registry("ex1.1")
    interior, _ = sample_points(entry.region, 500, seed=1)
    # Delta u1 + D_2 u2 = -4 + 4 and Delta u2 + D_1 u1 = 2x - 2x
    np.testing.assert_allclose(residual(entry.system, entry.witness, interior), 0.0, atol=1e-12)
    assert entry.witness.value(np.array([[0.0, 0.0]]))[0, 0] == 1.0


def test_ex110_witness_value_at_center():
    entry = example_registry("ex1.10")
    np.testing.assert_allclose(
        entry.witness.value(np.array([[0.5, 0.5]]))[0], [1 / 256, -0.6875], rtol=1e-14
    )


@pytest.mark.parametrize("eps, eps_prime", [(1.0, 1.0), (0.5, 0.0), (0.0, 2.0), (-1.0, 3.0)])
def test_ex13_family(eps, eps_prime):
    entry = example_registry("ex1.3", eps=eps, eps_prime=eps_prime)
    assert confirm_entry_witness(entry, count=400).fails


def test_ex13_uncoupled_claims_wmp():
    entry = example_registry("ex1.3", eps=0.0, eps_prime=0.0)
    assert entry.claims == (WMP_HOLDS,)
    assert entry.witness is None
    with pytest.raises(UnknownIdError):
        confirm_entry_witness(entry)


def test_unknown_ids():
    with pytest.raises(UnknownIdError):
        example_registry("ex9.9")
    with pytest.raises(UnknownIdError):
        sample_points("triangle")


def test_sample_points_are_seeded():
    a, boundary = sample_points("unit_disk", 50, seed=4)
    b, _ = sample_points("unit_disk", 50, seed=4)
    np.testing.assert_array_equal(a, b)
    assert np.all(np.linalg.norm(a, axis=1) < 1.0)
    np.testing.assert_allclose(np.linalg.norm(boundary, axis=1), 1.0)
