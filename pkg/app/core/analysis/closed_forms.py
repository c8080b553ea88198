# app/core/analysis/closed_forms.py
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import optimize, special

from app.config import get_settings
from app.core.analysis.fields import (
    AnalyticField,
    FieldComponent,
    component_1d,
    confirm_witness,
    reflect_field,
    residual,
)
from app.core.utils.exceptions import (
    InvalidParamsError,
    NonPositiveCError,
    NonPositiveTauError,
)
from app.schemas.analysis import Prop16Params, ZetaQuery
from app.schemas.system import EllipticSystem
from app.schemas.verdict import Verdict

logger = logging.getLogger(__name__)
settings = get_settings()

SERIES_CUTOFF = 1e-3
# Below this c the curve value is replaced by its limit 3 / rho.
LIMIT_CUTOFF = 1e-12
# Above this tau cosh and sinh are rewritten with exp(-tau) only.
EXP_CUTOFF = 20.0

FIGURE_RHOS = (0.25, 0.5, 1.0, 2.0)


# ---------------------------------------------------------------- zeta


def _sinh_minus_identity(t: np.ndarray) -> np.ndarray:
    out = np.sinh(t) - t
    small = t < 1.0
    if np.any(small):
        ts = t[small]
        term = ts**3 / 6.0
        total = term.copy()
        for j in range(2, 12):
            term = term * ts**2 / ((2 * j) * (2 * j + 1))
            total += term
        out[small] = total
    return out


def zeta(tau):
    """
    zeta(tau) = (cosh tau - 1) / (sinh tau - tau) for tau > 0.

    Small tau goes through a rational series, large tau through exp(-tau)
    so that neither branch cancels nor overflows.

    Raises:
        NonPositiveTauError: if any tau <= 0
    """
    t = np.asarray(tau, dtype=float)
    if np.any(~(t > 0)):
        raise NonPositiveTauError(f"zeta needs tau > 0, got {tau}")
    flat = np.atleast_1d(t).ravel()
    out = np.empty_like(flat)

    small = flat < SERIES_CUTOFF
    large = flat > EXP_CUTOFF
    middle = ~(small | large)

    ts = flat[small]
    t2 = ts**2
    out[small] = 3.0 / ts * (1 + t2 / 12 + t2**2 / 360) / (1 + t2 / 20 + t2**2 / 840)

    tm = flat[middle]
    out[middle] = 2.0 * np.sinh(tm / 2) ** 2 / _sinh_minus_identity(tm)

    tl = flat[large]
    decay = np.exp(-tl)
    out[large] = (1 - decay) ** 2 / (1 - decay**2 - 2 * tl * decay)

    if t.ndim == 0:
        return float(out[0])
    return out.reshape(t.shape)


def zeta_curve(c, rho: float):
    """
    c -> zeta(sqrt(c) rho) sqrt(c), with the limit 3 / rho for c below 1e-12.
    """
    cs = np.asarray(c, dtype=float)
    if np.any(cs < 0):
        raise NonPositiveCError("c must be nonnegative")
    flat = np.atleast_1d(cs).ravel()
    out = np.full_like(flat, 3.0 / rho)
    live = flat >= LIMIT_CUTOFF
    root = np.sqrt(flat[live])
    out[live] = zeta(root * rho) * root
    if cs.ndim == 0:
        return float(out[0])
    return out.reshape(cs.shape)


@dataclass(frozen=True)
class Prediction:
    fails: bool
    margin: float
    value: float


def wmp_fails_prediction(q: ZetaQuery) -> Prediction:
    """
    Closed-form sufficient condition for the failure of wMP:
    zeta(rho sqrt(c)) sqrt(c) > alpha / eps.
    """
    value = zeta_curve(q.c, q.rho)
    margin = value - q.alpha_over_eps
    return Prediction(fails=margin > 0, margin=margin, value=value)


def c_threshold(rho: float, alpha_over_eps: float) -> float:
    """
    Smallest c0 >= 0 such that the failure condition holds for every c > c0.

    Returns 0 when alpha / eps < 3 / rho, the infimum of the curve.
    """
    if rho <= 0:
        raise InvalidParamsError("rho must be positive")
    if alpha_over_eps < 0:
        raise InvalidParamsError("alpha / eps must be nonnegative")
    if alpha_over_eps <= 3.0 / rho:
        return 0.0

    def gap(c: float) -> float:
        return zeta_curve(c, rho) - alpha_over_eps

    hi = 1.0
    while gap(hi) <= 0:
        hi *= 2.0
    return float(optimize.bisect(gap, 0.0, hi, xtol=1e-14, rtol=1e-13, maxiter=400))


def rho_threshold(c: float, alpha_over_eps: float) -> float:
    """
    Largest interval length rho0 such that the failure condition holds for rho < rho0.

    The curve decreases in rho towards sqrt(c), so rho0 is infinite when
    alpha / eps < sqrt(c).
    """
    if c < 0:
        raise NonPositiveCError("c must be nonnegative")
    if alpha_over_eps < 0:
        raise InvalidParamsError("alpha / eps must be nonnegative")
    if c < LIMIT_CUTOFF:
        return math.inf if alpha_over_eps == 0 else 3.0 / alpha_over_eps
    if alpha_over_eps <= math.sqrt(c):
        return math.inf

    def gap(rho: float) -> float:
        return zeta_curve(c, rho) - alpha_over_eps

    lo, hi = 1.0, 1.0
    while gap(lo) <= 0:
        lo /= 2.0
    while gap(hi) > 0:
        hi *= 2.0
        if hi > 1e300:
            return math.inf
    return float(optimize.bisect(gap, lo, hi, xtol=1e-14, rtol=1e-13, maxiter=400))


def figure_curves(
    rhos=FIGURE_RHOS, c_min: float = 1e-3, c_max: float = 1e4, samples: int = 400
) -> List[Tuple[float, float, float]]:
    """Rows (c, value, rho) of the curves c -> zeta(sqrt(c) rho) sqrt(c)."""
    cs = np.logspace(np.log10(c_min), np.log10(c_max), samples)
    rows = []
    for rho in rhos:
        for c, value in zip(cs, zeta_curve(cs, rho)):
            rows.append((float(c), float(value), float(rho)))
    return rows


# ------------------------------------------------------- u_k family


def prop14_system(
    eps: float, alpha: float, c: float, c_tilde: float = 0.0, orientation: int = -1
) -> EllipticSystem:
    """
    u'' -+ eps v' - c u + alpha v >= 0,  v'' - c_tilde v >= 0  on an interval.

    orientation -1 is the minus sign in front of eps v'.
    """
    if orientation not in (-1, 1):
        raise InvalidParamsError("orientation must be -1 or 1")
    return EllipticSystem.from_arrays(
        B=[[[0.0, orientation * eps], [0.0, 0.0]]],
        C=[[-c, alpha], [0.0, -c_tilde]],
        name=f"interval system eps={eps:g} alpha={alpha:g} c={c:g} c_tilde={c_tilde:g}",
    )


def _sinhc_minus_one(y: np.ndarray) -> np.ndarray:
    # sinh(y)/y - 1 without cancellation
    y = np.asarray(y, dtype=float)
    out = np.empty_like(y)
    small = np.abs(y) < 1e-2
    ys = y[small] ** 2
    out[small] = ys / 6 + ys**2 / 120 + ys**3 / 5040
    yl = y[~small]
    out[~small] = np.sinh(yl) / yl - 1
    return out


def _line_field() -> FieldComponent:
    return component_1d(
        lambda x: -x,
        lambda x: -np.ones_like(x),
        lambda x: np.zeros_like(x),
    )


def u_k_family(q: ZetaQuery, eps: float, k: int) -> AnalyticField:
    """
    Exact solution pair (u_k, v = -x) of the interval system with rho = q.rho.

    u_k solves u'' - eps v' - c u + alpha v = 0 with u_k(0) = u_k(1/k) = 0;
    written with expm1 so that small sqrt(c)/k does not cancel.

    Raises:
        NonPositiveCError: for c = 0 (see u_limit_field)
    """
    if q.c <= 0:
        raise NonPositiveCError("u_k family needs c > 0, use u_limit_field")
    if eps <= 0:
        raise InvalidParamsError("eps must be positive")
    if k < 1:
        raise InvalidParamsError("k must be a positive integer")

    c = q.c
    ratio = q.alpha_over_eps
    s = math.sqrt(c)
    a = s / k
    # A = 1/(1+e^a), B = 1/(1+e^-a)
    A = float(special.expit(-a))
    B = float(special.expit(a))
    scale = -eps / c

    if a <= EXP_CUTOFF:
        sh = math.sinh(a)

        def value(x):
            return scale * (
                A * np.expm1(s * x)
                + B * np.expm1(-s * x)
                - ratio * (np.sinh(s * x) / (k * sh) - x)
            )

        def first(x):
            return scale * (
                A * s * np.exp(s * x)
                - B * s * np.exp(-s * x)
                - ratio * (s * np.cosh(s * x) / (k * sh) - 1)
            )

        def second(x):
            return scale * c * (
                A * np.exp(s * x) + B * np.exp(-s * x) - ratio * np.sinh(s * x) / (k * sh)
            )

    else:
        # e^(s x - a) factored out of A e^(s x) and of sinh(s x), cosh(s x) over sinh(a)
        gap = -math.expm1(-2 * a)

        def growing(x):
            return np.exp(s * x - a)

        def value(x):
            sinh_ratio = -np.expm1(-2 * s * x) / gap
            return scale * (
                growing(x) * (B - ratio * sinh_ratio / k)
                - A
                + B * np.expm1(-s * x)
                + ratio * x
            )

        def first(x):
            cosh_ratio = (1 + np.exp(-2 * s * x)) / gap
            return scale * (
                s * growing(x) * (B - ratio * cosh_ratio / k)
                - B * s * np.exp(-s * x)
                + ratio
            )

        def second(x):
            sinh_ratio = -np.expm1(-2 * s * x) / gap
            return scale * c * (
                growing(x) * (B - ratio * sinh_ratio / k) + B * np.exp(-s * x)
            )

    return AnalyticField(
        name=f"u_k pair k={k} eps={eps:g} c={c:g} alpha/eps={ratio:g}",
        n=1,
        components=(component_1d(value, first, second), _line_field()),
        domain=f"(0, {q.rho:g})",
    )


def u_limit_field(q: ZetaQuery, eps: float) -> AnalyticField:
    """Pointwise limit of the u_k family as k -> infinity, including c = 0."""
    if eps <= 0:
        raise InvalidParamsError("eps must be positive")
    c = q.c
    alpha = q.alpha_over_eps * eps

    if c == 0:
        value = lambda x: -eps * x**2 / 2 + alpha * x**3 / 6
        first = lambda x: -eps * x + alpha * x**2 / 2
        second = lambda x: -eps + alpha * x
    else:
        s = math.sqrt(c)

        def value(x):
            bump = 2 * np.sinh(s * x / 2) ** 2
            return -(eps / c) * (bump - q.alpha_over_eps * x * _sinhc_minus_one(s * x))

        def first(x):
            return -(eps / c) * (
                s * np.sinh(s * x) - q.alpha_over_eps * 2 * np.sinh(s * x / 2) ** 2
            )

        def second(x):
            return -eps * np.cosh(s * x) + alpha * np.sinh(s * x) / s

    return AnalyticField(
        name=f"limit pair eps={eps:g} c={c:g} alpha/eps={q.alpha_over_eps:g}",
        n=1,
        components=(component_1d(value, first, second), _line_field()),
        domain=f"(0, {q.rho:g})",
    )


def find_violating_k(q: ZetaQuery, eps: float, k_max: int = 2**20) -> Optional[int]:
    """
    Smallest power of two k with u_k(rho) <= 0 and u_k'(0) > 0, or None.
    """
    k = 1
    while k <= k_max:
        field = u_k_family(q, eps, k)
        ends = field.value(np.array([0.0, q.rho]))[:, 0]
        slope = field.gradient(np.array([0.0]))[0, 0, 0]
        if ends[1] <= 0 and slope > 0:
            logger.info(f"u_k violates wMP from k={k} (u_k'(0)={slope:.3e})")
            return k
        k *= 2
    return None


def interval_witness(
    q: ZetaQuery, eps: float, k: int, c_tilde: float = 0.0, orientation: int = -1
) -> Verdict:
    """
    Confirms the u_k pair as a continuum counterexample on (0, rho).

    For orientation +1 the pair is reflected at rho/2.
    """
    field = u_k_family(q, eps, k)
    if orientation == 1:
        field = reflect_field(field, q.rho)
    system = prop14_system(eps, q.alpha_over_eps * eps, q.c, c_tilde, orientation)
    interior = np.linspace(0.0, q.rho, 1002)[1:-1]
    return confirm_witness(
        system, field, interior, np.array([0.0, q.rho]), kind="u_k pair"
    )


# ------------------------------------------------ coupled construction


def smoothstep(t):
    return t**3 * (10 - 15 * t + 6 * t**2)


def smoothstep_prime(t):
    return 30 * t**2 * (1 - t) ** 2


def smoothstep_second(t):
    return 60 * t * (1 - t) * (1 - 2 * t)


@lru_cache()
def smoothstep_bounds() -> Tuple[float, float]:
    """Sup norms of s' and s'' on [0, 1]."""
    slope = optimize.minimize_scalar(
        lambda t: -smoothstep_prime(t),
        bounds=(0.0, 1.0),
        method="bounded",
        options={"xatol": 1e-12},
    )
    curvature = optimize.minimize_scalar(
        lambda t: -abs(smoothstep_second(t)),
        bounds=(0.0, 0.5),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return float(-slope.fun), float(-curvature.fun)


@dataclass(frozen=True)
class Prop16Thresholds:
    x_star: float
    chi_slope: float
    chi_curvature: float
    sigma1: float
    sigma2: float
    sigma: float
    c_threshold: float

    def summary(self) -> Dict[str, float]:
        return dict(self.__dict__)


def prop16_thresholds(p: Prop16Params) -> Prop16Thresholds:
    """Cut-off scale and threshold on c, computed for the eps > 0 form of p."""
    r = p.reduced()
    slope, curvature = smoothstep_bounds()
    x_star = min(0.25, r.eps / (4 * abs(r.alpha) + 1))
    chi_slope = slope / x_star
    chi_curvature = curvature / x_star**2
    sigma1 = 1.0 / (abs(r.beta) + abs(r.eps_tilde) * chi_slope + 1)
    sigma2 = r.eps / (8 * chi_curvature)
    sigma = min(sigma1, sigma2)
    return Prop16Thresholds(
        x_star=x_star,
        chi_slope=chi_slope,
        chi_curvature=chi_curvature,
        sigma1=sigma1,
        sigma2=sigma2,
        sigma=sigma,
        c_threshold=(r.eps + abs(r.alpha)) / sigma,
    )


def prop16_system(p: Prop16Params, c: float) -> EllipticSystem:
    return EllipticSystem.from_arrays(
        B=[[[0.0, -p.eps], [-p.eps_tilde, 0.0]]],
        C=[[-c, p.alpha], [p.beta, -p.c_tilde]],
        name=f"coupled system eps={p.eps:g} eps_tilde={p.eps_tilde:g} c={c:g}",
    )


def _cutoff_pair(sigma: float, x_star: float, delta: float) -> AnalyticField:
    # u = sigma * chi(x) + delta * x with chi = -s(min(x / x_star, 1)); v = x^2 - x
    def value(x):
        t = np.clip(x / x_star, 0.0, 1.0)
        return -sigma * smoothstep(t) + delta * x

    def first(x):
        t = np.clip(x / x_star, 0.0, 1.0)
        return -sigma * smoothstep_prime(t) / x_star + delta

    def second(x):
        t = np.clip(x / x_star, 0.0, 1.0)
        return -sigma * smoothstep_second(t) / x_star**2

    u = component_1d(value, first, second)
    v = component_1d(lambda x: x**2 - x, lambda x: 2 * x - 1, lambda x: 2 * np.ones_like(x))
    return AnalyticField(
        name=f"cut-off pair sigma={sigma:.6g} delta={delta:.6g}",
        n=1,
        components=(u, v),
        domain="(0, 1)",
    )


def verification_points(seed: Optional[int] = None, grid: int = 10_000, extra: int = 1_000) -> np.ndarray:
    """Uniform interior grid of (0, 1) plus seeded random points, sorted."""
    seed = settings.default_seed if seed is None else seed
    uniform = np.linspace(0.0, 1.0, grid + 2)[1:-1]
    scattered = np.random.default_rng(seed).uniform(0.0, 1.0, extra)
    return np.sort(np.concatenate([uniform, scattered]))


@dataclass(frozen=True)
class Prop16Construction:
    params: Prop16Params
    thresholds: Prop16Thresholds
    c: float
    delta: float
    field: AnalyticField
    reflected: bool
    residual_minima: Tuple[float, float]
    boundary_max: float
    interior_max: float

    @property
    def violates_wmp(self) -> bool:
        return (
            min(self.residual_minima) > 0
            and self.boundary_max <= 0
            and self.interior_max > 0
        )

    def summary(self) -> dict:
        return {
            "params": self.params.model_dump(),
            "thresholds": self.thresholds.summary(),
            "c": self.c,
            "delta": self.delta,
            "reflected": self.reflected,
            "residual_minima": list(self.residual_minima),
            "boundary_max": self.boundary_max,
            "interior_max": self.interior_max,
        }


def _pair_checks(system: EllipticSystem, field: AnalyticField, points: np.ndarray):
    minima = residual(system, field, points)
    ends = field.value(np.array([0.0, 1.0]))
    inside = field.value(points)[:, 0]
    return (float(minima[0]), float(minima[1])), float(ends.max()), float(inside.max())


def prop16_construct(
    p: Prop16Params,
    c: Optional[float] = None,
    c_factor: float = 1.01,
    seed: Optional[int] = None,
) -> Prop16Construction:
    """
    Explicit pair violating wMP for the coupled system when c exceeds the threshold.

    Builds (sigma chi + delta x, x^2 - x) for the eps > 0 form and reflects it
    at x = 1/2 when eps < 0. delta is the largest power 2^-j for which every
    check passes on the verification points.

    Args:
        p (Prop16Params): system coefficients
        c (float): zero-order coefficient; defaults to c_factor * threshold
        c_factor (float): multiplier used when c is omitted
        seed (int): seed of the random verification points

    Raises:
        InvalidParamsError: c not above the threshold, or no admissible delta
    """
    thresholds = prop16_thresholds(p)
    c = c_factor * thresholds.c_threshold if c is None else c
    if c <= thresholds.c_threshold:
        raise InvalidParamsError(
            f"c={c:.6g} must exceed the threshold {thresholds.c_threshold:.6g}"
        )

    reflected = p.eps < 0
    system = prop16_system(p, c)
    points = verification_points(seed)

    for j in range(1, 61):
        delta = 2.0**-j
        field = _cutoff_pair(thresholds.sigma, thresholds.x_star, delta)
        if reflected:
            field = reflect_field(field, 1.0)
        minima, boundary_max, interior_max = _pair_checks(system, field, points)
        if min(minima) > 0 and boundary_max <= 0 and interior_max > 0:
            logger.info(
                f"coupled construction: sigma={thresholds.sigma:.4e}, "
                f"c={c:.4e}, delta=2^-{j}"
            )
            return Prop16Construction(
                params=p,
                thresholds=thresholds,
                c=c,
                delta=delta,
                field=field,
                reflected=reflected,
                residual_minima=minima,
                boundary_max=boundary_max,
                interior_max=interior_max,
            )
    raise InvalidParamsError("no admissible delta in 2^-1 .. 2^-60")


@dataclass(frozen=True)
class SubintervalCheck:
    interval: Tuple[float, float]
    c: float
    residual_minima: Tuple[float, float]
    boundary_max: float
    interior_max: float

    @property
    def violates_wmp(self) -> bool:
        return (
            min(self.residual_minima) >= 0
            and self.boundary_max <= 1e-12
            and self.interior_max > 0
        )


def prop16_subinterval(construction: Prop16Construction, c: Optional[float] = None) -> SubintervalCheck:
    """
    Restricts the constructed pair to the component of {u + delta x > 0}
    around its maximum and checks it there for a smaller c (default: half the threshold).
    """
    c = construction.thresholds.c_threshold / 2 if c is None else c
    field = construction.field

    def first(x: float) -> float:
        return float(field.value(np.array([x]))[0, 0])

    xs = np.linspace(0.0, 1.0, 20_001)
    w = field.value(xs)[:, 0]
    top = int(np.argmax(w))
    if w[top] <= 0:
        raise InvalidParamsError("constructed pair has no positive part")

    left = top
    while left > 0 and w[left - 1] > 0:
        left -= 1
    right = top
    while right < len(xs) - 1 and w[right + 1] > 0:
        right += 1
    a = 0.0 if left == 0 else optimize.brentq(first, xs[left - 1], xs[left], xtol=1e-15)
    b = 1.0 if right == len(xs) - 1 else optimize.brentq(first, xs[right], xs[right + 1], xtol=1e-15)

    interior = np.linspace(a, b, 2002)[1:-1]
    system = prop16_system(construction.params, c)
    minima = residual(system, field, interior)
    edges = field.value(np.array([a, b]))
    return SubintervalCheck(
        interval=(float(a), float(b)),
        c=c,
        residual_minima=(float(minima[0]), float(minima[1])),
        boundary_max=float(edges.max()),
        interior_max=float(field.value(interior)[:, 0].max()),
    )
