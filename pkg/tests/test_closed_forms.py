# tests/test_closed_forms.py
import math

import numpy as np
import pytest
from pydantic import ValidationError

from app.core.analysis.closed_forms import (
    EXP_CUTOFF,
    SERIES_CUTOFF,
    c_threshold,
    figure_curves,
    find_violating_k,
    interval_witness,
    prop14_system,
    prop16_construct,
    prop16_subinterval,
    prop16_thresholds,
    rho_threshold,
    smoothstep_bounds,
    u_k_family,
    u_limit_field,
    wmp_fails_prediction,
    zeta,
    zeta_curve,
)
from app.core.analysis.fields import residual_values
from app.core.utils.exceptions import InvalidParamsError, NonPositiveCError, NonPositiveTauError
from app.schemas.analysis import Prop16Params, ZetaQuery

DEFAULTS = Prop16Params(eps=1, eps_tilde=2, alpha=-1, beta=3, c_tilde=1)


def test_zeta_values():
    assert zeta(1.0) == pytest.approx((math.cosh(1) - 1) / (math.sinh(1) - 1), rel=1e-12)
    assert zeta(50.0) == pytest.approx(1.0, rel=1e-12)
    assert zeta(1e-6) == pytest.approx(3e6, rel=1e-9)
    np.testing.assert_allclose(zeta(np.array([1.0, 2.0])), [zeta(1.0), zeta(2.0)])


@pytest.mark.parametrize("cut", [SERIES_CUTOFF, EXP_CUTOFF])
def test_zeta_branches_join(cut):
    below, above = zeta(cut * (1 - 1e-9)), zeta(cut * (1 + 1e-9))
    assert below == pytest.approx(above, rel=1e-7)


@pytest.mark.parametrize("tau", [0.0, -1.0, float("nan")])
def test_zeta_rejects_nonpositive(tau):
    with pytest.raises(NonPositiveTauError):
        zeta(tau)


def test_zeta_decreases():
    taus = np.logspace(-4, 1, 500)
    assert np.all(np.diff(zeta(taus)) < 0)


@pytest.mark.parametrize("rho", [0.25, 0.5, 1.0, 2.0])
def test_curve_limits_and_monotonicity(rho):
    assert zeta_curve(0.0, rho) == pytest.approx(3 / rho)
    assert zeta_curve(1e-10, rho) == pytest.approx(3 / rho, rel=1e-6)
    assert zeta_curve(1e8, rho) / 1e4 == pytest.approx(1.0, rel=1e-6)
    values = zeta_curve(np.logspace(-3, 4, 500), rho)
    assert np.all(np.diff(values) >= -1e-12)


def test_curve_rejects_negative_c():
    with pytest.raises(NonPositiveCError):
        zeta_curve(-1.0, 1.0)


def test_prediction():
    assert wmp_fails_prediction(ZetaQuery(rho=1, c=1, alpha_over_eps=1)).fails
    prediction = wmp_fails_prediction(ZetaQuery(rho=1, c=1, alpha_over_eps=10))
    assert not prediction.fails
    assert prediction.margin == pytest.approx(zeta(1.0) - 10)


def test_c_threshold():
    assert c_threshold(1.0, 0.0) == 0.0
    assert c_threshold(0.5, 5.9) == 0.0
    c0 = c_threshold(1.0, 100.0)
    assert c0 == pytest.approx(1e4, rel=1e-2)
    assert zeta_curve(c0, 1.0) == pytest.approx(100.0, rel=1e-9)
    assert wmp_fails_prediction(ZetaQuery(rho=1, c=c0 * 1.001, alpha_over_eps=100)).fails
    with pytest.raises(InvalidParamsError):
        c_threshold(0.0, 1.0)


def test_rho_threshold():
    rho0 = rho_threshold(1.0, 5.0)
    assert zeta_curve(1.0, rho0) == pytest.approx(5.0, rel=1e-9)
    assert wmp_fails_prediction(ZetaQuery(rho=0.9 * rho0, c=1, alpha_over_eps=5)).fails
    assert rho_threshold(4.0, 1.5) == math.inf
    assert rho_threshold(0.0, 3.0) == pytest.approx(1.0)


def test_figure_rows():
    rows = figure_curves()
    assert len(rows) == 1600
    assert {rho for _, _, rho in rows} == {0.25, 0.5, 1.0, 2.0}


def test_u_k_boundary_values_and_slope():
    q = ZetaQuery(rho=1, c=1, alpha_over_eps=3)
    k = 100
    field = u_k_family(q, 1.0, k)
    np.testing.assert_allclose(field.value(np.array([0.0, 1 / k]))[:, 0], 0.0, atol=1e-14)
    slope = field.gradient(np.array([0.0]))[0, 0, 0]
    assert slope == pytest.approx(1 / (2 * k), rel=0.2)


def test_u_k_solves_the_system():
    q = ZetaQuery(rho=1, c=1, alpha_over_eps=3)
    system = prop14_system(eps=1.0, alpha=3.0, c=1.0)
    for k in (1, 4, 64):
        values = residual_values(system, u_k_family(q, 1.0, k), np.linspace(0, 1, 201))
        assert np.abs(values).max() <= 1e-8


@pytest.mark.parametrize("c, k", [(900.0, 1), (1e6, 8), (1e8, 2)])
def test_u_k_large_argument(c, k):
    q = ZetaQuery(rho=1, c=c, alpha_over_eps=2)
    field = u_k_family(q, 1.0, k)
    np.testing.assert_allclose(field.value(np.array([0.0, 1 / k]))[:, 0], 0.0, atol=1e-12)
    xs = np.linspace(0, 1 / k, 201)
    assert np.all(np.isfinite(field.value(xs)))
    system = prop14_system(eps=1.0, alpha=2.0, c=c)
    assert np.abs(residual_values(system, field, xs)).max() <= 1e-8 * (1 + 2.0)


def test_violating_k_for_large_c():
    q = ZetaQuery(rho=0.5, c=1e6, alpha_over_eps=1)
    k = find_violating_k(q, 1.0)
    assert k is not None
    assert k & (k - 1) == 0


def test_limit_field():
    q = ZetaQuery(rho=1, c=1, alpha_over_eps=0)
    assert u_limit_field(q, 1.0).value(np.array([1.0]))[0, 0] == pytest.approx(-0.5430806, abs=1e-7)
    q = ZetaQuery(rho=1, c=1, alpha_over_eps=2)
    xs = np.linspace(0, 1, 11)
    np.testing.assert_allclose(
        u_k_family(q, 1.0, 10**6).value(xs), u_limit_field(q, 1.0).value(xs), atol=1e-5
    )
    flat = u_limit_field(ZetaQuery(rho=1, c=0, alpha_over_eps=2), 1.0)
    assert flat.value(np.array([1.0]))[0, 0] == pytest.approx(-0.5 + 2 / 6)


def test_u_k_rejects_zero_c():
    with pytest.raises(NonPositiveCError):
        u_k_family(ZetaQuery(rho=1, c=0, alpha_over_eps=1), 1.0, 1)


def test_violating_k_gives_interval_witness():
    q = ZetaQuery(rho=1, c=1, alpha_over_eps=1)
    k = find_violating_k(q, 1.0)
    assert k is not None
    verdict = interval_witness(q, 1.0, k)
    assert verdict.fails
    assert verdict.scope == "continuum"
    mirrored = interval_witness(q, 1.0, k, orientation=1)
    assert mirrored.fails


def test_smoothstep_bounds():
    slope, curvature = smoothstep_bounds()
    assert slope == pytest.approx(1.875, rel=1e-9)
    assert curvature == pytest.approx(10 / math.sqrt(3), rel=1e-9)


def test_prop16_thresholds():
    thresholds = prop16_thresholds(DEFAULTS)
    assert thresholds.x_star == pytest.approx(0.2)
    assert thresholds.sigma == pytest.approx(8.66e-4, rel=1e-3)
    assert thresholds.c_threshold == pytest.approx(2309, rel=1e-3)
    uncoupled = prop16_thresholds(Prop16Params(eps=1, c_tilde=1))
    assert uncoupled.sigma1 == pytest.approx(1.0)


def test_prop16_construction_and_subinterval():
    construction = prop16_construct(DEFAULTS, seed=0)
    assert construction.violates_wmp
    assert not construction.reflected
    check = prop16_subinterval(construction)
    assert check.violates_wmp
    a, b = check.interval
    assert 0.0 <= a < b <= 1.0


def test_prop16_negative_eps_reflects():
    params = Prop16Params(eps=-1, eps_tilde=-2, alpha=-1, beta=3, c_tilde=1)
    assert prop16_thresholds(params) == prop16_thresholds(DEFAULTS)
    construction = prop16_construct(params, seed=0)
    assert construction.reflected
    assert construction.violates_wmp


def test_prop16_rejects_small_c():
    with pytest.raises(InvalidParamsError):
        prop16_construct(DEFAULTS, c=10.0)
    with pytest.raises(ValidationError):
        Prop16Params(eps=0, c_tilde=1)


def test_queries_are_frozen():
    q = ZetaQuery(rho=1, c=1, alpha_over_eps=1)
    with pytest.raises(ValidationError):
        q.rho = 2.0
