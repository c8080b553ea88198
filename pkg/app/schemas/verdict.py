# app/schemas/verdict.py
from typing import Any, Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel

from app.schemas.system import GridDomain


class DiscreteField(BaseModel):
    """Vector field sampled at every grid node; values[j] holds component j."""

    domain: GridDomain
    values: List[List[float]]

    @classmethod
    def from_vector(cls, domain: GridDomain, vector: np.ndarray, m: int) -> "DiscreteField":
        # vector is interleaved: index = node * m + component
        nodes = np.asarray(vector, dtype=float).reshape(domain.n_nodes, m)
        return cls(domain=domain, values=nodes.T.tolist())

    @property
    def m(self) -> int:
        return len(self.values)

    def array(self) -> np.ndarray:
        """Node-major array of shape (N, m)."""
        return np.array(self.values, dtype=float).T

    def vector(self) -> np.ndarray:
        return self.array().ravel()


class Witness(BaseModel):
    """
    Explicit data demonstrating failure of wMP or of cone invariance.

    For discrete witnesses `field` carries the solved nodal values and `rhs`
    the interior source (interleaved, length m * interior nodes).
    """

    kind: Literal["discrete", "analytic"]
    description: str
    field: Optional[DiscreteField] = None
    rhs: Optional[List[float]] = None
    point: Optional[List[float]] = None


class Verdict(BaseModel):
    """
    Outcome of a maximum principle or invariance test.

    `scope` says what the statement is about: a discrete operator at fixed h,
    or an analytic (continuum) witness.
    """

    outcome: Literal["holds", "fails", "inconclusive"]
    margin: float
    kind: str
    scope: Literal["discrete", "continuum"] = "discrete"
    witness: Optional[Witness] = None
    diagnostics: Dict[str, Any] = {}

    @property
    def fails(self) -> bool:
        return self.outcome == "fails"

    @property
    def holds(self) -> bool:
        return self.outcome == "holds"
