# app/core/bellman/bellman.py
import logging
import math
from typing import Optional

import numpy as np
from scipy import optimize, sparse
from scipy.sparse import linalg as splinalg

from app.config import get_settings
from app.core.algebra.cone_synthesis import require_valid
from app.core.utils.exceptions import (
    BoundaryNodeError,
    ConvergenceFailureError,
    DimensionMismatchError,
    InvalidCertificateError,
    InvalidParamsError,
)
from app.schemas.bellman import BellmanProblem, EigenBound
from app.schemas.certificate import ConeCertificate
from app.schemas.system import EllipticSystem, GridDomain
from app.schemas.verdict import DiscreteField

logger = logging.getLogger(__name__)
settings = get_settings()


def unit_box(n: int, resolution: Optional[int] = None) -> GridDomain:
    resolution = settings.verification_nodes if resolution is None else resolution
    if n == 1:
        return GridDomain.interval(0.0, 1.0, resolution)
    return GridDomain.rectangle((0.0, 0.0), (1.0, 1.0), resolution)


def reduce_to_bellman(
    sys: EllipticSystem, cert: ConeCertificate, domain: Optional[GridDomain] = None
) -> BellmanProblem:
    """
    Scalar Bellman problem of a full cone certificate.

    Row j of the transformed system reads Delta v_j + sum_i beta_j^(i) D_i v_j
    + (C_hat v)_j >= 0, so the drifts are b^j = (beta_j^(1), ..., beta_j^(n)).

    Raises:
        InvalidCertificateError: certificate fails re-validation or is partial
    """
    if not cert.is_full:
        raise InvalidCertificateError(f"reduction needs a full cone, got k={cert.k} < m={cert.m}")
    require_valid(sys, cert)
    domain = unit_box(sys.n) if domain is None else domain
    drifts = np.array(cert.betas, dtype=float).T
    return BellmanProblem(n=sys.n, drifts=drifts.tolist(), domain=domain)


def _interior_slices(ndim: int):
    return tuple(slice(1, -1) for _ in range(ndim))


def apply_F(p: BellmanProblem, psi) -> np.ndarray:
    """
    Centered F[psi] = Delta psi + max_j b^j . grad psi at every interior node.

    Returns:
        np.ndarray: values on the interior block, shape resolution - 2 per axis
    """
    grid = p.domain
    values = np.asarray(psi, dtype=float).reshape(grid.shape)
    inner = _interior_slices(grid.ndim)
    laplacian = np.zeros(tuple(r - 2 for r in grid.shape))
    gradient = []
    for axis, h in enumerate(grid.h):
        ahead = list(inner)
        behind = list(inner)
        ahead[axis] = slice(2, None)
        behind[axis] = slice(None, -2)
        up, down, mid = values[tuple(ahead)], values[tuple(behind)], values[inner]
        laplacian += (up - 2 * mid + down) / h**2
        gradient.append((up - down) / (2 * h))
    gradient = np.stack(gradient, axis=-1)
    drift = np.max(gradient @ p.drift_array.T, axis=-1)
    return laplacian + drift


def evaluate_F(p: BellmanProblem, psi, node: int) -> float:
    """
    F[psi] at one interior node (flat index in C order).

    Raises:
        BoundaryNodeError: node on the boundary
    """
    grid = p.domain
    if np.asarray(psi).size != grid.n_nodes:
        raise DimensionMismatchError(f"psi has {np.asarray(psi).size} values, grid has {grid.n_nodes}")
    if grid.boundary_mask[node]:
        raise BoundaryNodeError(f"node {node} lies on the boundary")
    index = np.unravel_index(node, grid.shape)
    inner = tuple(i - 1 for i in index)
    return float(apply_F(p, psi)[inner])


def supersolution_parameters(p: BellmanProblem):
    lowest = float(p.drift_array[:, 0].min())
    gamma = abs(lowest) + 1.0
    delta = 0.5 * math.exp(-gamma * p.domain.hi[0])
    return gamma, delta, lowest


def _psi_and_F(p: BellmanProblem, grid: GridDomain, gamma: float, delta: float, lowest: float):
    growth = delta * np.exp(gamma * grid.coordinates[:, 0])
    return 1.0 - growth, -gamma * growth * (gamma + lowest)


def supersolution_lower_bound(p: BellmanProblem, grid: Optional[GridDomain] = None) -> EigenBound:
    """
    Certified lower bound for the principal eigenvalue of F.

    psi = 1 - delta exp(gamma x_1) with gamma = |min_j b^j_1| + 1 and
    delta = exp(-gamma max x_1) / 2, so psi >= 1/2 and
    F[psi] = -delta gamma exp(gamma x_1) (gamma + min_j b^j_1) < 0.
    The bound is the largest lambda with F[psi] + lambda psi <= 0 at every
    verification node, located by bisection.

    Args:
        p (BellmanProblem): drifts and domain
        grid (GridDomain): verification grid; defaults to VERIFICATION_NODES per axis on the domain
    """
    grid = grid or p.domain.with_resolution([settings.verification_nodes] * p.domain.ndim)
    gamma, delta, lowest = supersolution_parameters(p)
    psi, F = _psi_and_F(p, grid, gamma, delta, lowest)

    def excess(lam: float) -> float:
        return float(np.max(F + lam * psi))

    hi = float(np.max(-F / psi)) + 1.0
    xtol = 1e-12
    root = optimize.bisect(excess, 0.0, hi, xtol=xtol, maxiter=200)
    bound = EigenBound(lower=float(root) - xtol, gamma=gamma, delta=delta, grid=grid)
    bound.verified = validate_supersolution(p, bound)
    logger.info(f"supersolution bound {bound.lower:.6g} (gamma={gamma:g}, delta={delta:.4g})")
    return bound


def validate_supersolution(
    p: BellmanProblem, bound: EigenBound, grid: Optional[GridDomain] = None, tau: Optional[float] = None
) -> bool:
    """Re-checks F[psi] + lower psi <= tau and psi >= 1/2 - tau on a (sub)grid."""
    tau = settings.tau_eig if tau is None else tau
    grid = bound.grid if grid is None else grid
    lowest = float(p.drift_array[:, 0].min())
    psi, F = _psi_and_F(p, grid, bound.gamma, bound.delta, lowest)
    return bool(np.all(F + bound.lower * psi <= tau) and np.all(psi >= 0.5 - tau))


def linear_principal_eigenvalue(
    drift: float,
    rho: float,
    h: Optional[float] = None,
    max_iter: Optional[int] = None,
    tol: Optional[float] = None,
) -> float:
    """
    Principal Dirichlet eigenvalue of -(psi'' + drift psi') on (0, rho).

    Inverse power iteration on the centered discretization with a sparse LU
    factorized once.

    Raises:
        ConvergenceFailureError: no convergence within max_iter iterations
    """
    h = settings.eigen_step if h is None else h
    max_iter = settings.eigen_max_iter if max_iter is None else max_iter
    tol = settings.tau_eig if tol is None else tol
    if rho <= 0:
        raise InvalidParamsError("rho must be positive")

    points = int(round(rho / h)) - 1
    if points < 1:
        raise InvalidParamsError(f"step {h} too coarse for an interval of length {rho}")
    step = rho / (points + 1)
    ones = np.ones(points)
    A = -(
        sparse.diags([ones[1:], -2 * ones, ones[1:]], [-1, 0, 1]) / step**2
        + drift * sparse.diags([-ones[1:], ones[1:]], [-1, 1]) / (2 * step)
    )
    A = A.tocsc()
    lu = splinalg.splu(A)

    x = ones / np.linalg.norm(ones)
    lam = 0.0
    for iteration in range(1, max_iter + 1):
        y = lu.solve(x)
        x_new = y / np.linalg.norm(y)
        lam_new = float(x_new @ (A @ x_new))
        residual = float(np.linalg.norm(A @ x_new - lam_new * x_new))
        x = x_new
        if abs(lam_new - lam) <= tol * abs(lam_new) and residual <= math.sqrt(tol) * abs(lam_new):
            logger.debug(f"principal eigenvalue {lam_new:.8g} after {iteration} iterations")
            return lam_new
        lam = lam_new
    raise ConvergenceFailureError(f"inverse iteration did not converge in {max_iter} steps")


def eigen_bound(p: BellmanProblem, grid: Optional[GridDomain] = None) -> EigenBound:
    """
    Lower bound from the supersolution and upper bound min_j sum over axes of
    the one-dimensional principal eigenvalues of the linear pieces.
    """
    bound = supersolution_lower_bound(p, grid)
    lengths = np.array(p.domain.hi) - np.array(p.domain.lo)
    upper = min(
        sum(linear_principal_eigenvalue(float(b), float(length)) for b, length in zip(drift, lengths))
        for drift in p.drift_array
    )
    bound.upper = float(upper)
    if bound.lower > bound.upper + settings.tau_eig:
        logger.warning(f"lower bound {bound.lower:.6g} exceeds upper bound {bound.upper:.6g}")
    return bound


def positive_envelope(field: DiscreteField) -> np.ndarray:
    """v* = max_j (v_j)^+ at every node."""
    return np.maximum(field.array().max(axis=1), 0.0)
