# app/core/analysis/fields.py
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from app.core.utils.exceptions import DimensionMismatchError
from app.schemas.system import EllipticSystem
from app.schemas.verdict import Verdict, Witness

ScalarMap = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class FieldComponent:
    """One scalar component with exact value, gradient (P, n) and Laplacian."""

    value: ScalarMap
    gradient: ScalarMap
    laplacian: ScalarMap


@dataclass(frozen=True)
class AnalyticField:
    """
    Candidate vector solution given by closed forms.

    Evaluators take points of shape (P, n) and return (P, m), (P, m, n), (P, m).
    """

    name: str
    n: int
    components: Tuple[FieldComponent, ...]
    domain: str = ""

    @property
    def m(self) -> int:
        return len(self.components)

    def value(self, points) -> np.ndarray:
        x = as_points(points, self.n)
        return np.stack([c.value(x) for c in self.components], axis=1)

    def gradient(self, points) -> np.ndarray:
        x = as_points(points, self.n)
        return np.stack([c.gradient(x) for c in self.components], axis=1)

    def laplacian(self, points) -> np.ndarray:
        x = as_points(points, self.n)
        return np.stack([c.laplacian(x) for c in self.components], axis=1)


def as_points(points, n: int) -> np.ndarray:
    x = np.asarray(points, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1, 1)
    if x.ndim == 1:
        x = x.reshape(-1, 1) if n == 1 else x.reshape(1, -1)
    if x.shape[1] != n:
        raise DimensionMismatchError(f"points have {x.shape[1]} coordinates, expected {n}")
    return x


def component_1d(value, first, second) -> FieldComponent:
    """Wraps scalar functions of x (1-D) into a component on points (P, 1)."""
    return FieldComponent(
        value=lambda p: value(p[:, 0]),
        gradient=lambda p: first(p[:, 0])[:, None],
        laplacian=lambda p: second(p[:, 0]),
    )


def reflect_field(field: AnalyticField, pivot: float, name: Optional[str] = None) -> AnalyticField:
    """Composes a 1-D field with x -> pivot - x."""

    def mirror(component: FieldComponent) -> FieldComponent:
        return FieldComponent(
            value=lambda p: component.value(pivot - p),
            gradient=lambda p: -component.gradient(pivot - p),
            laplacian=lambda p: component.laplacian(pivot - p),
        )

    return AnalyticField(
        name=name or f"{field.name} reflected at {pivot}",
        n=field.n,
        components=tuple(mirror(c) for c in field.components),
        domain=field.domain,
    )


def residual_values(sys: EllipticSystem, field: AnalyticField, points) -> np.ndarray:
    """
    Pointwise residual  Delta u_j + sum_i (B^(i) D_i u)_j + (C u)_j, shape (P, m).
    """
    if field.m != sys.m or field.n != sys.n:
        raise DimensionMismatchError(
            f"field is {field.n}->{field.m}, system is {sys.n}->{sys.m}"
        )
    x = as_points(points, sys.n)
    B = np.stack(sys.B_arrays)
    drift = np.einsum("ijk,pki->pj", B, field.gradient(x))
    return field.laplacian(x) + drift + field.value(x) @ sys.C_array.T


def residual(sys: EllipticSystem, field: AnalyticField, points) -> np.ndarray:
    """Per-component minimum of the residual over the given points."""
    return residual_values(sys, field, points).min(axis=0)


def check_derivatives(field: AnalyticField, points, h: float = 1e-4) -> float:
    """
    Largest relative gap between the exact derivatives and centered differences.

    The gap is measured against 1 + |exact| + |value|.
    """
    x = as_points(points, field.n)
    u = field.value(x)
    grad = field.gradient(x)
    lap = field.laplacian(x)
    fd_lap = np.zeros_like(lap)
    worst = 0.0
    for i in range(field.n):
        step = np.zeros(field.n)
        step[i] = h
        up, down = field.value(x + step), field.value(x - step)
        fd_grad = (up - down) / (2 * h)
        fd_lap += (up - 2 * u + down) / h**2
        gap = np.abs(fd_grad - grad[:, :, i]) / (1 + np.abs(grad[:, :, i]) + np.abs(u))
        worst = max(worst, float(gap.max()))
    gap = np.abs(fd_lap - lap) / (1 + np.abs(lap) + np.abs(u))
    return max(worst, float(gap.max()))


def derivatives_consistent(field: AnalyticField, points, h: float = 1e-4, rtol: float = 1e-5) -> bool:
    return check_derivatives(field, points, h) <= rtol


def confirm_witness(
    sys: EllipticSystem,
    field: AnalyticField,
    interior,
    boundary,
    rows: Optional[np.ndarray] = None,
    tol: float = 1e-10,
    kind: str = "analytic witness",
) -> Verdict:
    """
    Checks an analytic field as a counterexample: residuals >= -tol inside,
    rows . u <= tol on the boundary points and rows . u > 0 somewhere inside.

    Args:
        sys (EllipticSystem): the system the field should satisfy
        field (AnalyticField): candidate witness
        interior: points of the open domain, shape (P, n)
        boundary: points of the boundary, shape (Q, n)
        rows: cone rows; None means the negative orthant (wMP)

    Returns:
        Verdict: outcome "fails" when every check passes, otherwise "inconclusive"
    """
    interior = as_points(interior, sys.n)
    boundary = as_points(boundary, sys.n)
    rows = np.eye(sys.m) if rows is None else np.atleast_2d(np.asarray(rows, dtype=float))

    residual_min = residual(sys, field, interior)
    inside = field.value(interior) @ rows.T
    on_edge = field.value(boundary) @ rows.T
    worst = int(np.argmax(inside.max(axis=1)))
    interior_max = float(inside.max())
    boundary_max = float(on_edge.max())

    valid = bool(residual_min.min() >= -tol and boundary_max <= tol and interior_max > 0)
    return Verdict(
        outcome="fails" if valid else "inconclusive",
        margin=interior_max,
        kind=kind,
        scope="continuum",
        witness=Witness(
            kind="analytic",
            description=field.name,
            point=interior[worst].tolist(),
        )
        if valid
        else None,
        diagnostics={
            "residual_min": residual_min.tolist(),
            "boundary_max": boundary_max,
            "interior_max": interior_max,
            "interior_points": int(interior.shape[0]),
            "boundary_points": int(boundary.shape[0]),
        },
    )
