# app/schemas/system.py
from typing import List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class EllipticSystem(BaseModel):
    """
    Linear system  Delta u + sum_i B^(i) D_i u + C u >= 0  with m unknowns in n variables.

    The second-order part is the component-wise Laplacian.
    """

    n: int = Field(..., ge=1)
    m: int = Field(..., ge=1)
    B: List[List[List[float]]]
    C: List[List[float]]
    name: Optional[str] = None

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_dimensions(self):
        if len(self.B) != self.n:
            raise ValueError(f"expected {self.n} first-order matrices, got {len(self.B)}")
        for i, matrix in enumerate(self.B):
            _check_square(matrix, self.m, f"B({i + 1})")
        _check_square(self.C, self.m, "C")
        return self

    @classmethod
    def from_arrays(cls, B, C, name: Optional[str] = None) -> "EllipticSystem":
        C = np.asarray(C, dtype=float)
        B = [np.asarray(b, dtype=float) for b in B]
        return cls(
            n=len(B),
            m=C.shape[0],
            B=[b.tolist() for b in B],
            C=C.tolist(),
            name=name,
        )

    @property
    def B_arrays(self) -> List[np.ndarray]:
        return [np.array(b, dtype=float) for b in self.B]

    @property
    def C_array(self) -> np.ndarray:
        return np.array(self.C, dtype=float)


def _check_square(matrix: List[List[float]], m: int, label: str) -> None:
    if len(matrix) != m or any(len(row) != m for row in matrix):
        raise ValueError(f"{label} must be {m}x{m}")
    if not np.all(np.isfinite(np.array(matrix, dtype=float))):
        raise ValueError(f"{label} has non-finite entries")


class GridDomain(BaseModel):
    """
    Tensor grid on an interval or a rectangle; nodes include the boundary.

    Node numbering is C-order over the axes (axis 0 slowest).
    """

    kind: Literal["interval", "rectangle"]
    lo: List[float]
    hi: List[float]
    resolution: List[int]

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_axes(self):
        dims = 1 if self.kind == "interval" else 2
        if not (len(self.lo) == len(self.hi) == len(self.resolution) == dims):
            raise ValueError(f"{self.kind} grid needs {dims} entries in lo, hi, resolution")
        for lo, hi, res in zip(self.lo, self.hi, self.resolution):
            if not hi > lo:
                raise ValueError(f"empty axis [{lo}, {hi}]")
            if res < 3:
                raise ValueError("resolution must be at least 3 points per axis")
        return self

    @classmethod
    def interval(cls, lo: float, hi: float, resolution: int) -> "GridDomain":
        return cls(kind="interval", lo=[lo], hi=[hi], resolution=[resolution])

    @classmethod
    def rectangle(
        cls, lo: Tuple[float, float], hi: Tuple[float, float], resolution
    ) -> "GridDomain":
        if isinstance(resolution, int):
            resolution = [resolution, resolution]
        return cls(kind="rectangle", lo=list(lo), hi=list(hi), resolution=list(resolution))

    @classmethod
    def from_step(cls, kind: str, lo: List[float], hi: List[float], h: float) -> "GridDomain":
        resolution = [int(round((b - a) / h)) + 1 for a, b in zip(lo, hi)]
        return cls(kind=kind, lo=list(lo), hi=list(hi), resolution=resolution)

    def with_resolution(self, resolution: List[int]) -> "GridDomain":
        return GridDomain(kind=self.kind, lo=self.lo, hi=self.hi, resolution=resolution)

    @property
    def ndim(self) -> int:
        return len(self.lo)

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(self.resolution)

    @property
    def h(self) -> np.ndarray:
        return (np.array(self.hi) - np.array(self.lo)) / (np.array(self.resolution) - 1)

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.resolution))

    @property
    def axes(self) -> List[np.ndarray]:
        return [np.linspace(a, b, r) for a, b, r in zip(self.lo, self.hi, self.resolution)]

    @property
    def coordinates(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=1)

    @property
    def boundary_mask(self) -> np.ndarray:
        index = np.indices(self.shape).reshape(self.ndim, -1)
        on_edge = np.zeros(self.n_nodes, dtype=bool)
        for axis, res in enumerate(self.resolution):
            on_edge |= (index[axis] == 0) | (index[axis] == res - 1)
        return on_edge

    @property
    def interior_index(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary_mask)

    @property
    def boundary_index(self) -> np.ndarray:
        return np.flatnonzero(self.boundary_mask)


class ConeSpec(BaseModel):
    """Cone {u : first k rows of P u <= 0} given directly in a problem file."""

    P: List[List[float]]
    k: int = Field(..., ge=1)


class ProblemFile(BaseModel):
    """
    Serialized instance of the system together with its analysis domain.
    """

    n: int = Field(..., ge=1)
    m: int = Field(..., ge=1)
    B: List[List[List[float]]] = Field(..., min_length=1)
    C: List[List[float]]
    domain: GridDomain
    cone: Optional[ConeSpec] = None
    seed: Optional[int] = None
    trials: Optional[int] = Field(default=None, ge=1)
    name: Optional[str] = None

    @model_validator(mode="after")
    def check_consistency(self):
        self.to_system()
        if self.domain.ndim != self.n:
            raise ValueError(f"domain has {self.domain.ndim} axes but n={self.n}")
        if self.cone is not None:
            if len(self.cone.P) != self.m or any(len(r) != self.m for r in self.cone.P):
                raise ValueError(f"cone P must be {self.m}x{self.m}")
            if self.cone.k > self.m:
                raise ValueError("cone k cannot exceed m")
        return self

    def to_system(self) -> EllipticSystem:
        return EllipticSystem(n=self.n, m=self.m, B=self.B, C=self.C, name=self.name)
