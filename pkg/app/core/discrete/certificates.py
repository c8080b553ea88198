# app/core/discrete/certificates.py
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg, sparse

from app.config import get_settings
from app.core.algebra.cone_synthesis import revalidate
from app.core.algebra.matrix_algebra import conjugate, max_norm
from app.core.discrete.assembly import (
    DiscreteOperator,
    assemble,
    operator_norm,
    solve_dirichlet,
)
from app.core.utils.exceptions import (
    InvalidCertificateError,
    PartialConeUnsupportedError,
    SchemeUnsupportedError,
    SingularOperatorError,
    TooLargeForDenseError,
)
from app.schemas.certificate import ConeCertificate
from app.schemas.system import EllipticSystem, GridDomain
from app.schemas.verdict import DiscreteField, Verdict, Witness

logger = logging.getLogger(__name__)
settings = get_settings()


@dataclass(frozen=True)
class WitnessCheck:
    valid: bool
    residual_min: float
    boundary_max: float
    interior_max: float
    tolerance: float


def validate_witness(
    op: DiscreteOperator,
    field: DiscreteField,
    rows: Optional[np.ndarray] = None,
    tau: Optional[float] = None,
) -> WitnessCheck:
    """
    Re-checks a discrete witness against the operator it claims to break.

    The residual L_h u must be >= -tol at interior rows, rows . u <= tol at
    boundary nodes and rows . u > 10 tau somewhere inside; tol is tau scaled
    by ||L_h|| ||u||.

    Args:
        op (DiscreteOperator): operator of the original system
        field (DiscreteField): nodal values
        rows: cone rows (k x m); None means the negative orthant
        tau (float): base tolerance, defaults to TAU_MC
    """
    tau = settings.tau_mc if tau is None else tau
    rows = np.eye(op.m) if rows is None else np.atleast_2d(np.asarray(rows, dtype=float))
    u = field.vector()
    scale = max(1.0, operator_norm(op) * float(np.abs(u).max(initial=0.0)))
    tolerance = tau * scale

    residual = op.rows @ u
    nodes = field.array() @ rows.T
    inside = nodes[op.domain.interior_index]
    edge = nodes[op.domain.boundary_index]
    residual_min = float(residual.min(initial=0.0))
    boundary_max = float(edge.max(initial=-np.inf))
    interior_max = float(inside.max(initial=-np.inf))
    valid = residual_min >= -tolerance and boundary_max <= tau and interior_max > 10 * tau
    return WitnessCheck(valid, residual_min, boundary_max, interior_max, tolerance)


def _dense_inverse(op: DiscreteOperator):
    size = op.n_interior
    if size > settings.dense_limit:
        raise TooLargeForDenseError(
            f"{size} interior unknowns exceed the dense limit {settings.dense_limit}"
        )
    try:
        G = linalg.inv(op.L_II.toarray())
    except linalg.LinAlgError as e:
        raise SingularOperatorError(f"interior block is singular: {e}")
    if not np.all(np.isfinite(G)):
        raise SingularOperatorError("interior inverse has non-finite entries")
    H = G @ op.L_IB.toarray()
    return G, H


def _scaled_witness(
    op: DiscreteOperator, rhs: np.ndarray, boundary: np.ndarray, rows: np.ndarray, description: str
):
    field = solve_dirichlet(op, rhs, boundary)
    peak = float((field.array() @ rows.T)[op.domain.interior_index].max())
    if peak <= 0:
        return None, None
    rhs, boundary = rhs / peak, boundary / peak
    field = DiscreteField.from_vector(op.domain, field.vector() / peak, op.m)
    return field, Witness(kind="discrete", description=description, field=field, rhs=rhs.tolist())


def _sign_verdict(
    op: DiscreteOperator,
    source: np.ndarray,
    H: np.ndarray,
    tau: float,
    witness_op: DiscreteOperator,
    rows: np.ndarray,
    boundary_map: np.ndarray,
    kind: str,
) -> Verdict:
    # source: interior response to nonnegative sources, H: response to boundary data
    source_max = float(source.max(initial=-np.inf))
    boundary_max = float(H.max(initial=-np.inf))
    worst = max(source_max, boundary_max)
    diagnostics = {
        "tau_fd": tau,
        "max_source_entry": source_max,
        "max_boundary_entry": boundary_max,
        **op.metadata(),
    }
    if worst <= tau:
        return Verdict(outcome="holds", margin=-worst, kind=kind, diagnostics=diagnostics)

    m = witness_op.m
    rhs = np.zeros(witness_op.n_interior)
    boundary = np.zeros(witness_op.boundary_dofs.size)
    if source_max >= boundary_max:
        i, j = np.unravel_index(int(np.argmax(source)), source.shape)
        rhs[j] = 1.0
        description = f"unit source at interior unknown {j}"
    else:
        i, b = np.unravel_index(int(np.argmax(H)), H.shape)
        node, component = divmod(int(b), m)
        boundary[node * m : (node + 1) * m] = -boundary_map[:, component]
        description = f"boundary data at boundary node {node}, direction {component}"
    diagnostics["violating_interior_unknown"] = int(i)

    field, witness = _scaled_witness(witness_op, rhs, boundary, rows, description)
    if field is None:
        logger.warning(f"{kind}: positive entry {worst:.3e} but no interior violation")
        return Verdict(outcome="inconclusive", margin=-worst, kind=kind, diagnostics=diagnostics)

    check = validate_witness(witness_op, field, rows, tau=tau)
    diagnostics["witness_check"] = check.__dict__
    if not check.valid:
        logger.warning(f"{kind}: witness failed re-validation {check}")
        return Verdict(outcome="inconclusive", margin=-worst, kind=kind, diagnostics=diagnostics)
    return Verdict(outcome="fails", margin=-worst, kind=kind, witness=witness, diagnostics=diagnostics)


def wmp_certificate(op: DiscreteOperator) -> Verdict:
    """
    Discrete weak maximum principle through the sign pattern of the inverse.

    With G = L_II^-1 and H = G L_IB, u_int = G r - H u_bd, so wMP holds iff
    G <= tau and H <= tau entrywise. A positive entry is turned into a
    witness and re-validated.

    Raises:
        TooLargeForDenseError: more than DENSE_LIMIT interior unknowns
        SingularOperatorError: singular interior block
    """
    G, H = _dense_inverse(op)
    tau = settings.fd_tau_scale * (1.0 + max_norm(G))
    verdict = _sign_verdict(op, G, H, tau, op, np.eye(op.m), np.eye(op.m), "discrete wMP")
    logger.info(f"discrete wMP {verdict.outcome} on {op.domain.kind} {op.domain.resolution}")
    return verdict


def transformed_system(sys: EllipticSystem, cert: ConeCertificate) -> EllipticSystem:
    """
    System satisfied by v = P u: diagonal first-order part and Q^-1 C Q.

    Raises:
        InvalidCertificateError: when Q does not diagonalize every B^(i)
    """
    Q, P = cert.Q_array, cert.P_array
    tol = settings.tau_alg * (1.0 + max_norm(P) * max_norm(Q)) * (
        1.0 + max(max_norm(B) for B in sys.B_arrays)
    )
    diagonal = []
    for i, B in enumerate(sys.B_arrays):
        D = P @ B @ Q
        off = D - np.diag(np.diag(D))
        if max_norm(off) > tol:
            raise InvalidCertificateError(
                f"Q does not diagonalize B({i + 1}): off-diagonal {max_norm(off):.3e}"
            )
        diagonal.append(np.diag(np.diag(D)))
    return EllipticSystem.from_arrays(
        B=diagonal, C=conjugate(sys.C_array, Q), name=f"{sys.name or 'system'} in cone coordinates"
    )


def cone_certificate(
    sys: EllipticSystem, cert: ConeCertificate, g: GridDomain, scheme: str = "centered"
) -> Verdict:
    """
    Discrete invariance of S = {u : P u <= 0} for a full certificate.

    Assembles the transformed system for v = P u. With G, H its interior
    inverse and boundary product, S is invariant iff G (I x P) <= tau and
    H <= tau. Q = I reproduces wmp_certificate entry for entry.

    Only the centered scheme commutes with the change of variables; upwind
    stencils pick their sides from the diagonalized drift, not the original one.

    Raises:
        PartialConeUnsupportedError: k < m (use monte_carlo_invariance)
        SchemeUnsupportedError: scheme other than "centered"
        InvalidCertificateError: Q does not diagonalize the first-order part
    """
    if not cert.is_full:
        raise PartialConeUnsupportedError(
            f"cone certificate needs k = m, got k={cert.k}; use monte_carlo_invariance"
        )
    if scheme != "centered":
        raise SchemeUnsupportedError(
            f"cone certificate is exact only for the centered scheme, got {scheme!r}; use monte_carlo_invariance"
        )
    checks = revalidate(sys, cert)
    transformed = assemble(transformed_system(sys, cert), g, scheme)
    original = assemble(sys, g, scheme)

    G, H = _dense_inverse(transformed)
    lift = sparse.kron(sparse.identity(transformed.domain.interior_index.size), sparse.csr_matrix(cert.P_array))
    source = np.asarray((lift.T @ G.T).T)
    tau = settings.fd_tau_scale * (1.0 + max_norm(G))

    verdict = _sign_verdict(
        transformed, source, H, tau, original, cert.P_array, cert.Q_array, "discrete cone invariance"
    )
    verdict.diagnostics["certificate_checks"] = checks.model_dump()
    logger.info(f"discrete cone invariance {verdict.outcome}, margin {verdict.margin:.3e}")
    return verdict
