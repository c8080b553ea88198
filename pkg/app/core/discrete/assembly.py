# app/core/discrete/assembly.py
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Literal

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg

from app.core.utils.exceptions import (
    DimensionMismatchError,
    SingularOperatorError,
    UnsupportedDimensionError,
)
from app.schemas.system import EllipticSystem, GridDomain
from app.schemas.verdict import DiscreteField

logger = logging.getLogger(__name__)

Scheme = Literal["centered", "upwind"]


@dataclass(frozen=True)
class DiscreteOperator:
    """
    Finite-difference operator of the system on every node of the grid.

    Unknowns are interleaved: index = node * m + component, nodes in C order.
    Only the interior rows carry equations; boundary rows of `matrix` are the
    stencil rows as assembled and are never used.
    """

    system: EllipticSystem
    domain: GridDomain
    scheme: str
    matrix: sparse.csr_matrix
    interior_dofs: np.ndarray
    boundary_dofs: np.ndarray
    cfl_ratio: float

    @property
    def m(self) -> int:
        return self.system.m

    @property
    def cfl_flag(self) -> bool:
        return self.cfl_ratio > 1.0

    @property
    def n_interior(self) -> int:
        return self.interior_dofs.size

    @cached_property
    def rows(self) -> sparse.csr_matrix:
        return self.matrix[self.interior_dofs]

    @cached_property
    def L_II(self) -> sparse.csc_matrix:
        return self.rows[:, self.interior_dofs].tocsc()

    @cached_property
    def L_IB(self) -> sparse.csr_matrix:
        return self.rows[:, self.boundary_dofs].tocsr()

    def metadata(self) -> dict:
        return {
            "scheme": self.scheme,
            "h": self.domain.h.tolist(),
            "resolution": list(self.domain.resolution),
            "unknowns": int(self.matrix.shape[0]),
            "interior_unknowns": int(self.n_interior),
            "cfl_ratio": self.cfl_ratio,
            "cfl_flag": self.cfl_flag,
        }


def _dofs(nodes: np.ndarray, m: int) -> np.ndarray:
    return (nodes[:, None] * m + np.arange(m)[None, :]).ravel()


def _axis_operators(points: int, h: float):
    ones = np.ones(points)
    second = sparse.diags([ones[1:], -2 * ones, ones[1:]], [-1, 0, 1]) / h**2
    centered = sparse.diags([-ones[1:], ones[1:]], [-1, 1]) / (2 * h)
    forward = sparse.diags([-ones, ones[1:]], [0, 1]) / h
    backward = sparse.diags([-ones[1:], ones], [-1, 0]) / h
    return second, centered, forward, backward


def _lift(op: sparse.spmatrix, axis: int, shape) -> sparse.csr_matrix:
    # axis 0 varies slowest in C order
    factors = [sparse.identity(r, format="csr") for r in shape]
    factors[axis] = op
    lifted = factors[0]
    for factor in factors[1:]:
        lifted = sparse.kron(lifted, factor, format="csr")
    return lifted.tocsr()


def assemble(sys: EllipticSystem, g: GridDomain, scheme: Scheme = "centered") -> DiscreteOperator:
    """
    Assembles Delta u + sum_i B^(i) D_i u + C u on the grid.

    centered: second-order Laplacian and centered first differences.
    upwind: one-sided differences for the diagonal drift entries, chosen by
    their sign; off-diagonal couplings stay centered.

    Args:
        sys (EllipticSystem): the system
        g (GridDomain): interval (n = 1) or rectangle (n = 2)
        scheme (str): "centered" or "upwind"

    Returns:
        DiscreteOperator: block sparse operator over all nodes
    """
    if sys.n not in (1, 2):
        raise UnsupportedDimensionError(f"finite differences support n in (1, 2), got {sys.n}")
    if g.ndim != sys.n:
        raise DimensionMismatchError(f"grid has {g.ndim} axes, system has n={sys.n}")
    if scheme not in ("centered", "upwind"):
        raise UnsupportedDimensionError(f"unknown scheme {scheme!r}")

    m = sys.m
    shape = g.shape
    n_nodes = g.n_nodes
    eye_m = np.eye(m)

    laplacian = sparse.csr_matrix((n_nodes, n_nodes))
    matrix = sparse.kron(sparse.identity(n_nodes), sparse.csr_matrix(sys.C_array), format="csr")
    cfl = 0.0

    for axis, B in enumerate(sys.B_arrays):
        h = float(g.h[axis])
        second, centered, forward, backward = _axis_operators(shape[axis], h)
        laplacian = laplacian + _lift(second, axis, shape)
        cfl = max(cfl, h * float(np.abs(B).max()))

        diagonal = np.diag(np.diag(B))
        coupling = B - diagonal
        if np.any(coupling):
            matrix = matrix + sparse.kron(_lift(centered, axis, shape), sparse.csr_matrix(coupling))
        if scheme == "centered":
            matrix = matrix + sparse.kron(_lift(centered, axis, shape), sparse.csr_matrix(diagonal))
        else:
            ahead = np.diag(np.maximum(np.diag(B), 0.0))
            behind = np.diag(np.minimum(np.diag(B), 0.0))
            matrix = matrix + sparse.kron(_lift(forward, axis, shape), sparse.csr_matrix(ahead))
            matrix = matrix + sparse.kron(_lift(backward, axis, shape), sparse.csr_matrix(behind))

    matrix = (matrix + sparse.kron(laplacian, sparse.csr_matrix(eye_m))).tocsr()
    matrix.eliminate_zeros()

    if cfl > 1.0:
        logger.warning(
            f"h * max|B| = {cfl:.3g} > 1 on {g.kind} grid {list(shape)}; "
            f"the {scheme} scheme may lose monotonicity"
        )

    return DiscreteOperator(
        system=sys,
        domain=g,
        scheme=scheme,
        matrix=matrix,
        interior_dofs=_dofs(g.interior_index, m),
        boundary_dofs=_dofs(g.boundary_index, m),
        cfl_ratio=cfl,
    )


def factorize(op: DiscreteOperator):
    """Sparse LU of the interior block."""
    try:
        lu = splinalg.splu(op.L_II)
    except RuntimeError as e:
        raise SingularOperatorError(f"interior block is singular: {e}")
    return lu


def nodal_vector(op: DiscreteOperator, interior: np.ndarray, boundary: np.ndarray) -> np.ndarray:
    """Scatters interior and boundary unknowns into the interleaved nodal vector."""
    u = np.zeros(op.matrix.shape[0])
    u[op.interior_dofs] = interior
    u[op.boundary_dofs] = boundary
    return u


def solve_dirichlet(
    op: DiscreteOperator, rhs, boundary, lu=None
) -> DiscreteField:
    """
    Solves L_h u = rhs at interior nodes with u = boundary on boundary nodes.

    Args:
        op (DiscreteOperator): assembled operator
        rhs: interior values, length m * interior nodes (interleaved)
        boundary: boundary values, length m * boundary nodes (interleaved)
        lu: optional factorization from factorize(op)

    Raises:
        SingularOperatorError: singular interior block or residual check failure
    """
    rhs = np.asarray(rhs, dtype=float).ravel()
    boundary = np.asarray(boundary, dtype=float).ravel()
    if rhs.size != op.interior_dofs.size or boundary.size != op.boundary_dofs.size:
        raise DimensionMismatchError(
            f"expected {op.interior_dofs.size} interior and {op.boundary_dofs.size} "
            f"boundary values, got {rhs.size} and {boundary.size}"
        )
    lu = factorize(op) if lu is None else lu
    source = rhs - op.L_IB @ boundary
    interior = lu.solve(source)
    if not np.all(np.isfinite(interior)):
        raise SingularOperatorError("Dirichlet solve produced non-finite values")

    u = nodal_vector(op, interior, boundary)
    residual = np.abs(op.rows @ u - rhs).max(initial=0.0)
    bound = 1e-10 * (np.abs(rhs).max(initial=0.0) + operator_norm(op) * np.abs(u).max(initial=0.0))
    if residual > max(bound, 1e-300):
        raise SingularOperatorError(f"Dirichlet residual {residual:.3e} exceeds {bound:.3e}")
    return DiscreteField.from_vector(op.domain, u, op.m)


def operator_norm(op: DiscreteOperator) -> float:
    """Max absolute row sum of the interior rows."""
    return float(abs(op.rows).sum(axis=1).max())


def residual_at_interior(op: DiscreteOperator, field: DiscreteField) -> np.ndarray:
    """L_h u at interior rows, interleaved."""
    return op.rows @ field.vector()

