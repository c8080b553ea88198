# app/core/discrete/sampling.py
import logging
from typing import Optional

import numpy as np

from app.config import get_settings
from app.core.discrete.assembly import DiscreteOperator, assemble, factorize, nodal_vector
from app.core.discrete.certificates import validate_witness
from app.core.utils.exceptions import InvalidParamsError
from app.schemas.certificate import ConeCertificate
from app.schemas.system import EllipticSystem, GridDomain
from app.schemas.verdict import DiscreteField, Verdict, Witness

logger = logging.getLogger(__name__)
settings = get_settings()


def box_projection(rng: np.random.Generator, P: np.ndarray, Q: np.ndarray, k: int, count: int) -> np.ndarray:
    """
    count points of the cone {P_k u <= 0}: y uniform in [-1, 1]^m, the
    first k coordinates of P y replaced by -|.|, mapped back with Q.
    """
    m = P.shape[0]
    y = rng.uniform(-1.0, 1.0, size=(count, m))
    w = y @ P.T
    w[:, :k] = -np.abs(w[:, :k])
    return w @ Q.T


def extreme_ray(rng: np.random.Generator, Q: np.ndarray, k: int) -> np.ndarray:
    """-Q e_j for a random j < k, plus free coordinates beyond k."""
    m = Q.shape[0]
    w = np.zeros(m)
    w[int(rng.integers(k))] = -1.0
    w[k:] = rng.uniform(-1.0, 1.0, m - k)
    return Q @ w


def boundary_trial(op: DiscreteOperator, cert: ConeCertificate, seed: int, index: int) -> np.ndarray:
    """
    Boundary data of one trial, interleaved over boundary nodes.

    Even trials fill every boundary node, odd trials load one random node.
    The stream depends only on (seed, index).
    """
    rng = np.random.default_rng((seed, index))
    n_boundary = op.domain.boundary_index.size
    P, Q, k = cert.P_array, cert.Q_array, cert.k
    if index % 2 == 0:
        return box_projection(rng, P, Q, k, n_boundary).ravel()
    values = np.zeros((n_boundary, op.m))
    values[int(rng.integers(n_boundary))] = extreme_ray(rng, Q, k)
    return values.ravel()


def monte_carlo_invariance(
    sys: EllipticSystem,
    cert: ConeCertificate,
    g: GridDomain,
    trials: Optional[int] = None,
    seed: Optional[int] = None,
    scheme: str = "centered",
) -> Verdict:
    """
    Sampled invariance test of {u : first k rows of P u <= 0}.

    Solves the homogeneous Dirichlet problem for boundary data drawn in the
    cone and checks the cone rows at every interior node. Fails at the first
    violating trial, with the solved field as witness.

    Args:
        sys (EllipticSystem): the system
        cert (ConeCertificate): cone given by P and k (Q = P^-1 supplies free directions)
        g (GridDomain): grid
        trials (int): number of boundary samples, defaults to DEFAULT_TRIALS
        seed (int): base seed, defaults to DEFAULT_SEED

    Returns:
        Verdict: margin is minus the largest cone-row value seen
    """
    trials = settings.default_trials if trials is None else trials
    seed = settings.default_seed if seed is None else seed
    if trials < 1:
        raise InvalidParamsError("trials must be at least 1")

    op = assemble(sys, g, scheme)
    lu = factorize(op)
    rows = cert.cone_rows
    interior_nodes = op.domain.interior_index
    worst = -np.inf
    diagnostics = {"trials": trials, "seed": seed, "k": cert.k, "tau_mc": settings.tau_mc, **op.metadata()}

    for index in range(trials):
        boundary = boundary_trial(op, cert, seed, index)
        interior = lu.solve(-(op.L_IB @ boundary))
        u = nodal_vector(op, interior, boundary)
        values = (u.reshape(-1, op.m) @ rows.T)[interior_nodes]
        peak = float(values.max(initial=-np.inf))
        worst = max(worst, peak)
        if peak <= settings.tau_mc:
            continue

        field = DiscreteField.from_vector(op.domain, u / peak, op.m)
        check = validate_witness(op, field, rows)
        diagnostics.update(trial=index, witness_check=check.__dict__)
        logger.info(f"cone invariance fails at trial {index}, violation {peak:.3e}")
        if not check.valid:
            logger.warning(f"sampled witness failed re-validation: {check}")
            return Verdict(outcome="inconclusive", margin=-peak, kind="sampled cone invariance", diagnostics=diagnostics)
        return Verdict(
            outcome="fails",
            margin=-peak,
            kind="sampled cone invariance",
            witness=Witness(
                kind="discrete",
                description=f"homogeneous solve, boundary trial {index} (seed {seed})",
                field=field,
                rhs=np.zeros(op.n_interior).tolist(),
            ),
            diagnostics=diagnostics,
        )

    logger.info(f"cone invariance held over {trials} trials, worst value {worst:.3e}")
    diagnostics["worst_value"] = worst
    return Verdict(outcome="holds", margin=-worst, kind="sampled cone invariance", diagnostics=diagnostics)
