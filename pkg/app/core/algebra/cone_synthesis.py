# app/core/algebra/cone_synthesis.py
import itertools
import logging
import math
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy import linalg

from app.config import get_settings
from app.core.algebra.matrix_algebra import (
    MAX_CONDITION,
    canonical_column,
    commutator_norm,
    conjugate,
    eigen,
    is_cooperative,
    max_norm,
)
from app.core.utils.exceptions import (
    InvalidCertificateError,
    NoCommonBasisError,
    SearchExhaustedError,
)
from app.schemas.certificate import (
    CertificateChecks,
    ConeCertificate,
    NotFound,
    SearchStats,
)
from app.schemas.system import EllipticSystem

logger = logging.getLogger(__name__)
settings = get_settings()

SynthesisResult = Union[ConeCertificate, NotFound]


def commute_check(sys: EllipticSystem, tau: Optional[float] = None) -> bool:
    """
    True iff every pair of first-order matrices commutes within tolerance.
    """
    tau = settings.tau_alg if tau is None else tau
    B = sys.B_arrays
    for i, j in itertools.combinations(range(len(B)), 2):
        bound = tau * (1.0 + max_norm(B[i]) * max_norm(B[j]))
        if commutator_norm(B[i], B[j]) > bound:
            return False
    return True


def _eigen_residual(B: np.ndarray, q: np.ndarray) -> Tuple[float, float]:
    beta = float(q @ B @ q / (q @ q))
    return beta, max_norm(B @ q - beta * q)


def common_eigenvectors(
    sys: EllipticSystem, seed: Optional[int] = None, tau: Optional[float] = None
) -> Tuple[np.ndarray, np.ndarray, List[str]]:
    """
    Real vectors that are eigenvectors of every B^(i).

    Candidates are the eigenvectors of a generic combination sum_i t_i B^(i);
    two independent draws of t must produce the same set.

    Returns:
        Tuple: (vectors as columns, betas table n x r, notes)
    """
    tau = settings.tau_alg if tau is None else tau
    seed = settings.default_seed if seed is None else seed
    B = sys.B_arrays
    rng = np.random.default_rng(seed)
    draws = rng.standard_normal((2, sys.n))

    found = []
    notes: List[str] = []
    for t in draws:
        M = sum(ti * Bi for ti, Bi in zip(t, B))
        decomposition = eigen(M, tau=tau)
        columns, betas = [], []
        for space in decomposition.real_spaces:
            if space.geometric > 1:
                note = (
                    f"eigenspace of dimension {space.geometric} searched through "
                    f"its pivoted representatives only"
                )
                if note not in notes:
                    notes.append(note)
            for q in space.basis.T:
                pairs = [_eigen_residual(Bi, q) for Bi in B]
                if all(r <= tau * (1.0 + max_norm(Bi)) for (_, r), Bi in zip(pairs, B)):
                    columns.append(q)
                    betas.append([beta for beta, _ in pairs])
        order = sorted(range(len(columns)), key=lambda j: tuple(betas[j]))
        vectors = (
            np.column_stack([columns[j] for j in order])
            if columns
            else np.zeros((sys.m, 0))
        )
        table = np.array([betas[j] for j in order]).T.reshape(sys.n, len(order))
        found.append((vectors, table))

    (V1, b1), (V2, b2) = found
    if not _same_directions(V1, V2):
        raise NoCommonBasisError("generic combinations disagree on the common eigenvectors")
    if V1.shape[1] == 0:
        raise NoCommonBasisError("the first-order matrices share no real eigenvector")
    return V1, b1, notes


def _same_directions(V1: np.ndarray, V2: np.ndarray, atol: float = 1e-6) -> bool:
    """True when the columns of V1 and V2 span the same lines, in any order and sign."""
    if V1.shape != V2.shape:
        return False
    if V1.shape[1] == 0:
        return True
    U1 = V1 / np.linalg.norm(V1, axis=0)
    U2 = V2 / np.linalg.norm(V2, axis=0)
    overlap = np.abs(U1.T @ U2)
    matched = set()
    for row in overlap:
        hits = [j for j in np.flatnonzero(row >= 1.0 - atol) if j not in matched]
        if not hits:
            return False
        matched.add(int(hits[0]))
    return True


def _rows_structure_ok(sys, Q, P, k, betas, tol) -> bool:
    for i, Bi in enumerate(sys.B_arrays):
        block = P[:k] @ Bi @ Q
        target = np.zeros_like(block)
        target[:, :k] = np.diag(betas[i][:k])
        if max_norm(block - target) > tol:
            return False
        for j in range(k):
            if max_norm(Bi @ Q[:, j] - betas[i][j] * Q[:, j]) > tol:
                return False
    return True


def validate_certificate(
    sys: EllipticSystem,
    Q,
    k: int,
    betas,
    tau: Optional[float] = None,
) -> CertificateChecks:
    """
    Independent re-check of the algebraic hypotheses for the cone given by Q and k.

    k = m is the full cone; k < m additionally requires the leading k x m block
    of Q^-1 C Q to be a cooperative block followed by zeros.
    """
    tau = settings.tau_alg if tau is None else tau
    Q = np.asarray(Q, dtype=float)
    m = sys.m
    cond = np.linalg.cond(Q)
    if not np.isfinite(cond) or cond >= MAX_CONDITION:
        return CertificateChecks(diagonalized=False, P_rows_nonneg=False, conj_coop=False)
    P = np.linalg.inv(Q)
    betas = np.asarray(betas, dtype=float).reshape(sys.n, -1)
    scale = 1.0 + max_norm(P) * max_norm(Q) * max(
        [max_norm(Bi) for Bi in sys.B_arrays] + [max_norm(sys.C_array), 1.0]
    )
    tol = tau * scale

    inverse_ok = max_norm(Q @ P - np.eye(m)) <= tol
    diagonalized = inverse_ok and _rows_structure_ok(sys, Q, P, k, betas, tol)
    # the cone depends on row directions only; scale the tolerance per row
    row_scale = np.maximum(np.abs(P[:k]).max(axis=1, keepdims=True), 1.0)
    rows_nonneg = bool(np.all(P[:k] >= -tau * row_scale))
    C_hat = conjugate(sys.C_array, Q)
    if k == m:
        conj_coop = is_cooperative(C_hat, tau=tol).is_cooperative
    else:
        conj_coop = (
            is_cooperative(C_hat[:k, :k], tau=tol).is_cooperative
            and max_norm(C_hat[:k, k:]) <= tol
        )
    return CertificateChecks(
        diagonalized=bool(diagonalized), P_rows_nonneg=rows_nonneg, conj_coop=bool(conj_coop)
    )


def certificate_from_q(
    sys: EllipticSystem, Q, k: Optional[int] = None, search: Optional[SearchStats] = None
) -> ConeCertificate:
    """
    Builds a certificate for a given Q (paper-supplied or search result).

    The betas are Rayleigh quotients of the first k columns; the checks are
    recomputed, so an invalid Q yields a certificate whose checks fail.
    """
    Q = np.asarray(Q, dtype=float)
    k = sys.m if k is None else k
    betas = np.array(
        [[_eigen_residual(Bi, Q[:, j])[0] for j in range(k)] for Bi in sys.B_arrays]
    )
    checks = validate_certificate(sys, Q, k, betas)
    return ConeCertificate(
        Q=Q.tolist(),
        P=np.linalg.inv(Q).tolist(),
        k=k,
        betas=betas.tolist(),
        checks=checks,
        search=search or SearchStats(),
        theorem="full" if k == sys.m else "partial",
    )


def revalidate(sys: EllipticSystem, cert: ConeCertificate) -> CertificateChecks:
    """Re-runs every check on a certificate without trusting its stored flags."""
    checks = validate_certificate(sys, cert.Q_array, cert.k, cert.betas)
    if max_norm(cert.Q_array @ cert.P_array - np.eye(sys.m)) > settings.tau_alg * (
        1.0 + max_norm(cert.P_array)
    ):
        return CertificateChecks(
            diagonalized=False, P_rows_nonneg=checks.P_rows_nonneg, conj_coop=checks.conj_coop
        )
    return checks


def require_valid(sys: EllipticSystem, cert: ConeCertificate) -> None:
    checks = revalidate(sys, cert)
    if not checks.passed:
        raise InvalidCertificateError(
            f"certificate fails re-validation: {checks.first_failure()}"
        )


def _score(checks: CertificateChecks) -> int:
    return int(checks.diagonalized) + int(checks.P_rows_nonneg) + int(checks.conj_coop)


def _sign_patterns(k: int):
    return itertools.product((1.0, -1.0), repeat=k)


def synthesize_full_cone(sys: EllipticSystem, seed: Optional[int] = None) -> SynthesisResult:
    """
    Searches Q with Q^-1 B^(i) Q diagonal, Q^-1 >= 0 and Q^-1 C Q cooperative.

    Columns come from the common eigenbasis with unit max-norm; the search
    runs over their 2^m sign patterns. Column permutations permute the rows
    of Q^-1 and conjugate Q^-1 C Q by a permutation, neither of which changes
    a check, so the sorted column order stands for all m! of them.

    Raises:
        NoCommonBasisError: fewer than m common real eigenvectors
        SearchExhaustedError: m above the configured search dimension
    """
    if sys.m > settings.search_max_dimension:
        raise SearchExhaustedError(
            f"m={sys.m} exceeds search dimension {settings.search_max_dimension}"
        )
    seed = settings.default_seed if seed is None else seed
    vectors, betas, notes = common_eigenvectors(sys, seed)
    if vectors.shape[1] < sys.m:
        raise NoCommonBasisError(
            f"only {vectors.shape[1]} of {sys.m} common real eigenvectors"
        )
    if not commute_check(sys):
        notes.append("first-order matrices do not commute")

    stats = SearchStats(
        sign_patterns=2 ** sys.m, permutations_covered=math.factorial(sys.m), seed=seed
    )
    best: Optional[CertificateChecks] = None
    for signs in _sign_patterns(sys.m):
        Q = vectors * np.array(signs)
        checks = validate_certificate(sys, Q, sys.m, betas)
        stats.candidates_evaluated += 1
        if checks.passed:
            logger.info(
                f"full cone found after {stats.candidates_evaluated} candidates"
            )
            return ConeCertificate(
                Q=Q.tolist(),
                P=np.linalg.inv(Q).tolist(),
                k=sys.m,
                betas=betas.tolist(),
                checks=checks,
                search=stats,
                theorem="full",
            )
        if best is None or _score(checks) > _score(best):
            best = checks

    logger.info(f"no full cone: best candidate fails {best.first_failure()}")
    return NotFound(
        reason="no sign pattern of the common eigenbasis satisfies all conditions",
        failed_condition=best.first_failure(),
        best_checks=best,
        notes=notes,
        search=stats,
    )


def _completions(vectors: np.ndarray, chosen: Tuple[int, ...], m: int):
    head = vectors[:, list(chosen)]
    rest = [j for j in range(vectors.shape[1]) if j not in chosen]
    options = []
    if rest:
        partial = np.hstack([head, vectors[:, rest]])
        options.append(("eigenvectors", np.hstack([vectors[:, rest], _fill(partial, m)])))
    options.append(("orthogonal", _fill(head, m)))
    return options


def _fill(columns: np.ndarray, m: int) -> np.ndarray:
    if columns.shape[1] >= m:
        return np.zeros((m, 0))
    complement = linalg.null_space(columns.T)
    return np.column_stack([canonical_column(c) for c in complement.T])


def synthesize_partial_cone(
    sys: EllipticSystem, seed: Optional[int] = None
) -> SynthesisResult:
    """
    Searches a cone built on k <= m common eigenvectors.

    Tries the largest k first, subsets in lexicographic order, then
    completion choices, then sign patterns of the first k columns. With
    k = m the result coincides with synthesize_full_cone.
    """
    if sys.m > settings.search_max_dimension:
        raise SearchExhaustedError(
            f"m={sys.m} exceeds search dimension {settings.search_max_dimension}"
        )
    seed = settings.default_seed if seed is None else seed
    vectors, betas, notes = common_eigenvectors(sys, seed)
    r = vectors.shape[1]
    stats = SearchStats(seed=seed)
    best: Optional[CertificateChecks] = None

    for k in range(r, 0, -1):
        for chosen in itertools.combinations(range(r), k):
            completions = (
                [("none", np.zeros((sys.m, 0)))]
                if k == sys.m
                else _completions(vectors, chosen, sys.m)
            )
            head = vectors[:, list(chosen)]
            head_betas = betas[:, list(chosen)]
            for label, tail in completions:
                base = np.hstack([head, tail])
                if base.shape[1] != sys.m or np.linalg.cond(base) >= MAX_CONDITION:
                    continue
                for signs in _sign_patterns(k):
                    Q = base.copy()
                    Q[:, :k] *= np.array(signs)
                    checks = validate_certificate(sys, Q, k, head_betas)
                    stats.candidates_evaluated += 1
                    stats.sign_patterns += 1
                    if checks.passed:
                        stats.subset_size = k
                        stats.completion = None if k == sys.m else label
                        stats.permutations_covered = math.factorial(k)
                        logger.info(
                            f"cone with k={k} found after {stats.candidates_evaluated} candidates"
                        )
                        return ConeCertificate(
                            Q=Q.tolist(),
                            P=np.linalg.inv(Q).tolist(),
                            k=k,
                            betas=head_betas.tolist(),
                            checks=checks,
                            search=stats,
                            theorem="full" if k == sys.m else "partial",
                        )
                    if best is None or _score(checks) > _score(best):
                        best = checks

    return NotFound(
        reason="no subset, completion or sign pattern satisfies the partial conditions",
        failed_condition=best.first_failure() if best else None,
        best_checks=best,
        notes=notes,
        search=stats,
    )
