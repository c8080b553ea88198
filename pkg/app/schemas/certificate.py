# app/schemas/certificate.py
from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel


class CertificateChecks(BaseModel):
    diagonalized: bool
    P_rows_nonneg: bool
    conj_coop: bool

    @property
    def passed(self) -> bool:
        return self.diagonalized and self.P_rows_nonneg and self.conj_coop

    def first_failure(self) -> Optional[str]:
        for name in ("diagonalized", "P_rows_nonneg", "conj_coop"):
            if not getattr(self, name):
                return name
        return None


class SearchStats(BaseModel):
    candidates_evaluated: int = 0
    sign_patterns: int = 0
    permutations_covered: int = 0
    subset_size: Optional[int] = None
    completion: Optional[str] = None
    seed: Optional[int] = None


class ConeCertificate(BaseModel):
    """
    Invertible Q with P = Q^-1 encoding the cone S = {u : first k rows of P u <= 0}.

    betas[i][j] is the eigenvalue of B^(i+1) on column j of Q, for j < k.
    """

    Q: List[List[float]]
    P: List[List[float]]
    k: int
    betas: List[List[float]]
    checks: CertificateChecks
    search: SearchStats = SearchStats()
    theorem: Literal["full", "partial"] = "full"

    @property
    def Q_array(self) -> np.ndarray:
        return np.array(self.Q, dtype=float)

    @property
    def P_array(self) -> np.ndarray:
        return np.array(self.P, dtype=float)

    @property
    def cone_rows(self) -> np.ndarray:
        return self.P_array[: self.k]

    @property
    def m(self) -> int:
        return len(self.Q)

    @property
    def is_full(self) -> bool:
        return self.k == self.m


class NotFound(BaseModel):
    """Outcome of a cone search that produced no certificate."""

    reason: str
    failed_condition: Optional[str] = None
    best_checks: Optional[CertificateChecks] = None
    notes: List[str] = []
    search: SearchStats = SearchStats()
