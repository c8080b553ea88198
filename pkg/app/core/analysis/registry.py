# app/core/analysis/registry.py
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np

from app.core.analysis.fields import AnalyticField, FieldComponent, confirm_witness
from app.core.utils.exceptions import UnknownIdError
from app.schemas.system import EllipticSystem, GridDomain
from app.schemas.verdict import Verdict

logger = logging.getLogger(__name__)

WMP_FAILS = "wmp_fails"
WMP_HOLDS = "wmp_holds"
CONE_INVARIANT = "cone_invariant"


@dataclass(frozen=True)
class RegistryEntry:
    """
    One worked example: its system, an explicit witness if there is one,
    and the verdicts asserted for it.
    """

    id: str
    system: EllipticSystem
    claims: Tuple[str, ...]
    witness: Optional[AnalyticField] = None
    region: str = "unit_square"
    grid: Optional[GridDomain] = None
    reference_q: Optional[np.ndarray] = None
    reference_k: Optional[int] = None
    extras: Dict[str, Any] = field(default_factory=dict)


def _component(value, gradient, laplacian) -> FieldComponent:
    # closed forms in (x1, x2) lifted to points of shape (P, 2)
    return FieldComponent(
        value=lambda p: value(p[:, 0], p[:, 1]),
        gradient=lambda p: np.stack(gradient(p[:, 0], p[:, 1]), axis=1),
        laplacian=lambda p: laplacian(p[:, 0], p[:, 1]),
    )


def _ones(x):
    return np.ones_like(x)


def _zeros(x):
    return np.zeros_like(x)


def _ex11() -> RegistryEntry:
    system = EllipticSystem.from_arrays(
        B=[[[0, 0], [1, 0]], [[0, 1], [0, 0]]],
        C=[[0, 0], [0, 0]],
        name="disk system with first-order coupling",
    )
    u1 = _component(
        lambda x, y: 1 - x**2 - y**2,
        lambda x, y: (-2 * x, -2 * y),
        lambda x, y: -4 * _ones(x),
    )
    u2 = _component(
        lambda x, y: x**3 / 3 + 4 * y - 20,
        lambda x, y: (x**2, 4 * _ones(y)),
        lambda x, y: 2 * x,
    )
    witness = AnalyticField(
        name="paraboloid pair on the unit disk", n=2, components=(u1, u2), domain="unit disk"
    )
    return RegistryEntry(
        id="ex1.1", system=system, claims=(WMP_FAILS,), witness=witness, region="unit_disk"
    )


def _ex13(eps: float = 1.0, eps_prime: float = 1.0) -> RegistryEntry:
    system = EllipticSystem.from_arrays(
        B=[[[0, -eps], [-eps_prime, 0]], [[0, 0], [0, 0]]],
        C=[[0, 0], [0, 0]],
        name=f"disk system eps={eps:g} eps'={eps_prime:g}",
    )
    if eps == 0 and eps_prime == 0:
        return RegistryEntry(
            id="ex1.3",
            system=system,
            claims=(WMP_HOLDS,),
            region="unit_disk",
            grid=GridDomain.rectangle((-1.0, -1.0), (1.0, 1.0), 21),
        )

    # bump = 1/2 - |x|^2 in the coupled slot, exponential barrier in the other
    coupling = eps if eps != 0 else eps_prime
    sign = 1.0 if coupling > 0 else -1.0
    height = math.e + 1
    scale = max(4 * math.e / abs(coupling), 2 * math.e * abs(eps_prime if eps != 0 else eps)) + 1

    bump = _component(
        lambda x, y: 0.5 - x**2 - y**2,
        lambda x, y: (-2 * x, -2 * y),
        lambda x, y: -4 * _ones(x),
    )
    barrier = _component(
        lambda x, y: scale * (np.exp(-sign * x) - height),
        lambda x, y: (-sign * scale * np.exp(-sign * x), _zeros(y)),
        lambda x, y: scale * np.exp(-sign * x),
    )
    components = (bump, barrier) if eps != 0 else (barrier, bump)
    witness = AnalyticField(
        name=f"bump and barrier, C={scale:.6g}, H={height:.6g}",
        n=2,
        components=components,
        domain="unit disk",
    )
    return RegistryEntry(
        id="ex1.3",
        system=system,
        claims=(WMP_FAILS,),
        witness=witness,
        region="unit_disk",
        extras={"C": scale, "H": height, "delta": 0.5},
    )


def _ex18() -> RegistryEntry:
    system = EllipticSystem.from_arrays(
        B=[[[6, 1], [-8, 0]], [[0, 0], [0, 0]]],
        C=[[-1, 0], [0, -1]],
        name="square system with diagonalizable drift",
    )
    return RegistryEntry(
        id="ex1.8",
        system=system,
        claims=(CONE_INVARIANT,),
        grid=GridDomain.rectangle((0.0, 0.0), (1.0, 1.0), 31),
        reference_q=np.linalg.inv(np.array([[1.0, 0.5], [4.0, 1.0]])),
        reference_k=2,
        extras={"cone_rows": [[1.0, 0.5], [4.0, 1.0]], "betas": [[2.0, 4.0], [0.0, 0.0]]},
    )


def _ex110() -> RegistryEntry:
    system = EllipticSystem.from_arrays(
        B=[[[0, 1], [1, 0]], [[0, 0], [0, 0]]],
        C=[[-1, 0], [0, -1]],
        name="square system with symmetric coupling",
    )

    def p(t):
        return t - t**2

    u1 = _component(
        lambda x, y: p(x) * p(y) ** 3,
        lambda x, y: ((1 - 2 * x) * p(y) ** 3, 3 * p(x) * p(y) ** 2 * (1 - 2 * y)),
        lambda x, y: -2 * p(y) ** 3
        + p(x) * (6 * p(y) * (1 - 2 * y) ** 2 - 6 * p(y) ** 2),
    )
    u2 = _component(
        lambda x, y: (x**2 + 2 * x - 4) * p(y),
        lambda x, y: ((2 * x + 2) * p(y), (x**2 + 2 * x - 4) * (1 - 2 * y)),
        lambda x, y: 2 * p(y) - 2 * (x**2 + 2 * x - 4),
    )
    witness = AnalyticField(
        name="polynomial pair on the unit square", n=2, components=(u1, u2), domain="unit square"
    )
    return RegistryEntry(
        id="ex1.10",
        system=system,
        claims=(WMP_FAILS, CONE_INVARIANT),
        witness=witness,
        grid=GridDomain.rectangle((0.0, 0.0), (1.0, 1.0), 31),
        reference_q=np.array([[1.0, 1.0], [1.0, -1.0]]),
        reference_k=1,
        extras={"cone_rows": [[1.0, 1.0]]},
    )


def _remark_matrices() -> RegistryEntry:
    system = EllipticSystem.from_arrays(
        B=[[[0, 0], [0, 0]]],
        C=[[-3, 2], [1, -2]],
        name="zero-order system conjugated by an M-matrix",
    )
    return RegistryEntry(
        id="remark1.8-matrices",
        system=system,
        claims=(CONE_INVARIANT,),
        grid=GridDomain.interval(0.0, 1.0, 51),
        reference_q=np.array([[2.0, -1.0], [-1.0, 2.0]]),
        reference_k=2,
        extras={"conjugate": [[-4.0, 3.0], [0.0, -1.0]]},
    )


_BUILDERS: Dict[str, Callable[..., RegistryEntry]] = {
    "ex1.1": _ex11,
    "ex1.3": _ex13,
    "ex1.8": _ex18,
    "ex1.10": _ex110,
    "remark1.8-matrices": _remark_matrices,
}

REGISTRY_IDS = tuple(_BUILDERS)


def example_registry(id: str, **params) -> RegistryEntry:
    """
    Looks up a worked example by id.

    Args:
        id (str): one of REGISTRY_IDS
        **params: example parameters (ex1.3 takes eps and eps_prime)

    Raises:
        UnknownIdError: for ids outside the registry
    """
    try:
        builder = _BUILDERS[id]
    except KeyError:
        raise UnknownIdError(f"unknown example id {id!r}; known: {', '.join(REGISTRY_IDS)}")
    return builder(**params)


def sample_points(region: str, count: int = 1000, seed: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """
    Seeded interior points and evenly spaced boundary points of the unit
    disk or the unit square.
    """
    rng = np.random.default_rng(seed)
    if region == "unit_disk":
        radius = 0.999 * np.sqrt(rng.random(count))
        angle = 2 * np.pi * rng.random(count)
        interior = np.stack([radius * np.cos(angle), radius * np.sin(angle)], axis=1)
        theta = np.linspace(0.0, 2 * np.pi, 400, endpoint=False)
        boundary = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        return interior, boundary
    if region == "unit_square":
        interior = 1e-3 + (1 - 2e-3) * rng.random((count, 2))
        t = np.linspace(0.0, 1.0, 101)
        zero, one = np.zeros_like(t), np.ones_like(t)
        boundary = np.concatenate(
            [
                np.stack([t, zero], axis=1),
                np.stack([t, one], axis=1),
                np.stack([zero, t], axis=1),
                np.stack([one, t], axis=1),
            ]
        )
        return interior, boundary
    raise UnknownIdError(f"unknown region {region!r}")


def confirm_entry_witness(entry: RegistryEntry, count: int = 1000, seed: int = 0) -> Verdict:
    """Analytic wMP-failure check of the entry's explicit witness."""
    if entry.witness is None:
        raise UnknownIdError(f"{entry.id} has no explicit witness")
    interior, boundary = sample_points(entry.region, count, seed)
    verdict = confirm_witness(entry.system, entry.witness, interior, boundary, kind=f"{entry.id} witness")
    logger.info(f"{entry.id}: analytic witness {verdict.outcome}, margin {verdict.margin:.4g}")
    return verdict
