# app/schemas/bellman.py
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.schemas.system import GridDomain


class BellmanProblem(BaseModel):
    """
    Scalar operator  F[psi] = Delta psi + max_j b^j . grad psi  on a box.
    """

    n: int = Field(..., ge=1)
    drifts: List[List[float]] = Field(..., min_length=1)
    domain: GridDomain

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_drifts(self):
        for j, drift in enumerate(self.drifts):
            if len(drift) != self.n:
                raise ValueError(f"drift {j} has {len(drift)} entries, expected {self.n}")
        if not np.all(np.isfinite(np.array(self.drifts, dtype=float))):
            raise ValueError("drifts must be finite")
        if self.domain.ndim != self.n:
            raise ValueError(f"domain has {self.domain.ndim} axes but n={self.n}")
        return self

    @property
    def drift_array(self) -> np.ndarray:
        return np.array(self.drifts, dtype=float)


class EigenBound(BaseModel):
    """
    Certified interval [lower, upper] for the principal eigenvalue of F.

    lower comes from psi = 1 - delta * exp(gamma * x_1).
    """

    lower: float
    upper: Optional[float] = None
    gamma: float
    delta: float
    grid: GridDomain
    verified: bool = False
