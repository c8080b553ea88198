# app/core/algebra/matrix_algebra.py
import itertools
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from app.config import get_settings
from app.core.utils.exceptions import (
    DimensionTooLargeError,
    InputError,
    NonSquareError,
    SingularQError,
)

logger = logging.getLogger(__name__)
settings = get_settings()

# Clusters closer than this (relative) are treated as one repeated eigenvalue.
CLUSTER_TOL = 1e-6
MAX_CONDITION = 1e12
# Entries within this relative gap of the largest one count as tied.
PIVOT_TIE = 1e-9


@dataclass(frozen=True)
class EigenSpace:
    eigenvalue: float
    algebraic: int
    basis: np.ndarray  # columns, unit max-norm, canonical sign

    @property
    def geometric(self) -> int:
        return self.basis.shape[1]


@dataclass(frozen=True)
class EigenDecomp:
    """
    Spectrum of a small dense matrix.

    real_eigenbasis is present only when every eigenvalue is real and the
    eigenspaces together span R^m with residual below tau_alg.
    """

    eigenvalues: np.ndarray
    real_spaces: List[EigenSpace]
    real_eigenbasis: Optional[np.ndarray] = None
    basis_eigenvalues: Optional[np.ndarray] = None
    condition_number: Optional[float] = None

    @property
    def all_real(self) -> bool:
        return sum(space.algebraic for space in self.real_spaces) == len(
            self.eigenvalues
        )

    @property
    def multiplicities(self) -> List[Tuple[float, int, int]]:
        return [(s.eigenvalue, s.algebraic, s.geometric) for s in self.real_spaces]

    def summary(self) -> dict:
        return {
            "eigenvalues": [
                {"re": float(v.real), "im": float(v.imag)} for v in self.eigenvalues
            ],
            "multiplicities": [
                {"eigenvalue": lam, "algebraic": alg, "geometric": geo}
                for lam, alg, geo in self.multiplicities
            ],
            "diagonalizable_over_reals": self.real_eigenbasis is not None,
            "condition_number": self.condition_number,
        }


@dataclass(frozen=True)
class CoopReport:
    is_cooperative: bool
    worst_offdiag_margin: float
    worst_rowsum_margin: float
    strict_level: float

    def summary(self) -> dict:
        return {
            "is_cooperative": self.is_cooperative,
            "worst_offdiag_margin": self.worst_offdiag_margin,
            "worst_rowsum_margin": self.worst_rowsum_margin,
            "strict_level": self.strict_level,
        }


@dataclass(frozen=True)
class MMatrixReport:
    is_m_matrix: bool
    s: float
    X: np.ndarray
    spectral_radius: float
    inverse_nonnegative: Optional[bool] = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.is_m_matrix

    def summary(self) -> dict:
        return {
            "is_m_matrix": self.is_m_matrix,
            "s": self.s,
            "X": self.X.tolist(),
            "spectral_radius": self.spectral_radius,
            "inverse_nonnegative": self.inverse_nonnegative,
            "reason": self.reason,
        }


def as_matrix(data, name: str = "matrix") -> np.ndarray:
    """
    Converts nested row lists (or an array) into a finite float matrix.

    Args:
        data: list of row lists or a 2-D array
        name (str): label used in error messages

    Returns:
        np.ndarray: float64 array of shape (rows, cols)
    """
    try:
        matrix = np.array(data, dtype=float)
    except (TypeError, ValueError) as e:
        raise InputError(f"{name} is not a rectangular numeric array: {e}")
    if matrix.ndim != 2 or matrix.size == 0:
        raise InputError(f"{name} must be a non-empty 2-D array, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise InputError(f"{name} has non-finite entries")
    return matrix


def require_square(M: np.ndarray, name: str = "matrix") -> int:
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise NonSquareError(f"{name} must be square, got shape {M.shape}")
    return M.shape[0]


def max_norm(M: np.ndarray) -> float:
    return float(np.max(np.abs(M))) if M.size else 0.0


def canonical_column(v: np.ndarray) -> np.ndarray:
    """Scales v to unit max-norm with its first largest entry positive."""
    magnitude = np.abs(v)
    pivot = int(np.flatnonzero(magnitude >= (1.0 - PIVOT_TIE) * magnitude.max())[0])
    return v / v[pivot]


def _eigenspace(A: np.ndarray, threshold: float) -> np.ndarray:
    # Orthonormal null space of A with an absolute singular value cut.
    _, s, vh = linalg.svd(A)
    return vh[s <= threshold].T


def _pivoted_basis(N: np.ndarray) -> np.ndarray:
    d = N.shape[1]
    if d == 1:
        return canonical_column(N[:, 0])[:, None]
    _, _, piv = linalg.qr(N.T, pivoting=True)
    rows = np.sort(piv[:d])
    basis = N @ np.linalg.inv(N[rows, :])
    basis[np.abs(basis) < 1e-14] = 0.0
    return np.column_stack([canonical_column(basis[:, j]) for j in range(d)])


def _cluster_space(
    M: np.ndarray, cluster: List[float], null_threshold: float, residual_tol: float
) -> Optional[EigenSpace]:
    m = M.shape[0]
    lam = float(np.mean(cluster))
    N = _eigenspace(M - lam * np.eye(m), null_threshold)
    if N.shape[1] == 0:
        return None
    if len(cluster) == 1 and N.shape[1] > 1:
        # keep the direction closest to the kernel
        N = N[:, -1:]
    basis = _pivoted_basis(N)
    residual = max_norm(M @ basis - lam * basis)
    if residual > residual_tol and len(cluster) > 1:
        logger.debug(f"eigenspace for {lam:.6g} rejected, residual {residual:.3e}")
        return None
    return EigenSpace(eigenvalue=lam, algebraic=len(cluster), basis=basis)


def eigen(M, tau: Optional[float] = None) -> EigenDecomp:
    """
    Eigenvalues and, when it exists, a real eigenbasis of a small matrix.

    LAPACK's Hessenberg/QR driver supplies the spectrum; eigenspaces of real
    clusters come from an SVD null space, reduced so that coordinate-aligned
    spaces come out as unit vectors.
    """
    tau = settings.tau_alg if tau is None else tau
    M = as_matrix(M)
    m = require_square(M)
    if m > settings.max_matrix_dimension:
        raise DimensionTooLargeError(
            f"matrix dimension {m} exceeds {settings.max_matrix_dimension}"
        )

    values = linalg.eigvals(M)
    order = np.lexsort((values.imag, values.real))
    values = values[order]
    scale = 1.0 + max_norm(M)

    real_values = np.sort(values[np.abs(values.imag) <= 1e3 * tau * scale].real)
    clusters: List[List[float]] = []
    for lam in real_values:
        if clusters and abs(lam - clusters[-1][-1]) <= CLUSTER_TOL * scale:
            clusters[-1].append(lam)
        else:
            clusters.append([lam])

    spaces = []
    null_threshold = np.sqrt(tau) * scale
    for cluster in clusters:
        space = _cluster_space(M, cluster, null_threshold, tau * scale)
        if space is not None:
            spaces.append(space)
            continue
        # Distinct eigenvalues merged by CLUSTER_TOL: solve each one alone.
        logger.debug(f"cluster {cluster} rejected, splitting into singletons")
        for lam in cluster:
            single = _cluster_space(M, [lam], null_threshold * 1e-3, tau * scale)
            if single is not None:
                spaces.append(single)

    all_real = len(real_values) == m
    geometric_total = sum(s.geometric for s in spaces)
    if all_real and geometric_total == m:
        V = np.hstack([s.basis for s in spaces])
        lambdas = np.concatenate([[s.eigenvalue] * s.geometric for s in spaces])
        cond = float(np.linalg.cond(V))
        if np.isfinite(cond) and cond < MAX_CONDITION:
            return EigenDecomp(values, spaces, V, lambdas, cond)
    return EigenDecomp(values, spaces)


def is_cooperative(C, tau: Optional[float] = None) -> CoopReport:
    """
    Cooperativity test: nonnegative off-diagonal entries, nonpositive row sums.
    """
    tau = settings.tau_alg if tau is None else tau
    C = as_matrix(C, "C")
    m = require_square(C, "C")
    offdiag = C[~np.eye(m, dtype=bool)]
    # m = 1 has no off-diagonal entries to violate
    worst_offdiag = float(offdiag.min()) if offdiag.size else float("inf")
    worst_rowsum = float(C.sum(axis=1).max())
    candidates = [-worst_rowsum, worst_offdiag]
    cooperative = worst_offdiag >= -tau and worst_rowsum <= tau
    return CoopReport(
        is_cooperative=bool(cooperative),
        worst_offdiag_margin=worst_offdiag,
        worst_rowsum_margin=worst_rowsum,
        strict_level=min(candidates),
    )


def is_m_matrix(Q, tau: Optional[float] = None) -> MMatrixReport:
    """
    Tests Q = sI - X with X >= 0 and s > spectral_radius(X).

    s is taken one above the largest diagonal entry, which keeps X
    nonnegative on the diagonal; the test itself does not depend on s.
    """
    tau = settings.tau_alg if tau is None else tau
    Q = as_matrix(Q, "Q")
    m = require_square(Q, "Q")
    s = float(np.max(np.diag(Q))) + 1.0
    X = s * np.eye(m) - Q
    radius = float(np.max(np.abs(linalg.eigvals(X))))
    offdiag = Q[~np.eye(m, dtype=bool)]
    if offdiag.size and offdiag.max() > tau:
        return MMatrixReport(False, s, X, radius, reason="positive off-diagonal entry")
    if radius >= s - tau:
        return MMatrixReport(False, s, X, radius, reason="spectral radius of X reaches s")
    inverse = np.linalg.inv(Q)
    nonneg = bool(inverse.min() >= -tau)
    if not nonneg:
        logger.warning(f"M-matrix with inverse entry {inverse.min():.3e} below zero")
    return MMatrixReport(True, s, X, radius, inverse_nonnegative=nonneg)


def conjugate(C, Q) -> np.ndarray:
    """
    Returns Q^-1 C Q.

    Raises:
        SingularQError: when cond(Q) is 1e12 or worse
    """
    C = as_matrix(C, "C")
    Q = as_matrix(Q, "Q")
    require_square(C, "C")
    require_square(Q, "Q")
    if C.shape != Q.shape:
        raise InputError(f"C {C.shape} and Q {Q.shape} differ in size")
    cond = np.linalg.cond(Q)
    if not np.isfinite(cond) or cond >= MAX_CONDITION:
        raise SingularQError(f"Q is numerically singular (cond={cond:.3e})")
    return np.linalg.solve(Q, C @ Q)


def _flux_points(m: int) -> List[Tuple[np.ndarray, np.ndarray]]:
    # Deterministic face centers, edges and translated vertices.
    ones = np.ones(m)
    points = []
    for j in range(m):
        e_j = np.eye(m)[j]
        points.append((e_j - ones, e_j))
        for k in range(m):
            if k != j:
                points.append((-np.eye(m)[k], e_j))
        points.append((ones.copy(), e_j))
    return points


def flux_condition_orthant(
    C, samples: int = 1000, seed: int = 0, tau: Optional[float] = None
) -> bool:
    """
    Checks p . (C u) <= 0 for boundary points u of the negative orthant and
    outward normals p at u.

    The orthant is tested together with its translates by positive multiples
    of (1, ..., 1): the untranslated faces see the off-diagonal signs, the
    translated vertex faces see the row sums.

    Args:
        C: square matrix
        samples (int): number of random boundary points on top of the fixed ones
        seed (int): seed of the random sampler

    Returns:
        bool: True when no sampled flux points outward
    """
    tau = settings.tau_alg if tau is None else tau
    C = as_matrix(C, "C")
    m = require_square(C, "C")
    if samples < 1:
        raise InputError("samples must be at least 1")

    rng = np.random.default_rng(seed)
    points = _flux_points(m)
    for _ in range(samples):
        zero_mask = rng.random(m) < 0.5
        zero_mask[rng.integers(m)] = True
        u = np.where(zero_mask, 0.0, -rng.exponential(1.0, m))
        p = np.where(zero_mask, rng.random(m), 0.0)
        shift = 0.0 if rng.random() < 0.5 else rng.exponential(1.0)
        points.append((u + shift, p))

    for u, p in points:
        flux = float(p @ (C @ u))
        if flux > tau * (1.0 + np.abs(p).sum() * max_norm(C) * np.abs(u).sum()):
            logger.debug(f"outward flux {flux:.3e} at u={u}, p={p}")
            return False
    return True


def permutation_matrices(m: int):
    for perm in itertools.permutations(range(m)):
        yield np.eye(m)[list(perm)]


def commutator_norm(A: np.ndarray, B: np.ndarray) -> float:
    return max_norm(A @ B - B @ A)
