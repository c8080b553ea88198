# app/services/reproduce_service.py
import logging
import math
from pathlib import Path
from typing import Callable, Dict, Optional

import numpy as np

from app.config import Settings, get_settings
from app.core.algebra.cone_synthesis import certificate_from_q
from app.core.algebra.matrix_algebra import conjugate, is_cooperative, is_m_matrix, max_norm
from app.core.analysis.closed_forms import (
    c_threshold,
    figure_curves,
    find_violating_k,
    interval_witness,
    prop14_system,
    prop16_construct,
    prop16_subinterval,
    prop16_system,
    rho_threshold,
    u_k_family,
    u_limit_field,
    verification_points,
    wmp_fails_prediction,
    zeta,
)
from app.core.analysis.fields import check_derivatives, confirm_witness, residual_values
from app.core.analysis.registry import (
    CONE_INVARIANT,
    WMP_FAILS,
    WMP_HOLDS,
    RegistryEntry,
    confirm_entry_witness,
    example_registry,
    sample_points,
)
from app.core.bellman.bellman import reduce_to_bellman, supersolution_lower_bound
from app.core.discrete.assembly import assemble
from app.core.discrete.certificates import cone_certificate, wmp_certificate
from app.core.discrete.sampling import monte_carlo_invariance
from app.core.utils.exceptions import ClaimMismatchError, UnknownIdError
from app.core.utils.serialization import write_csv
from app.schemas.analysis import Prop16Params, ZetaQuery
from app.schemas.certificate import ConeCertificate
from app.schemas.report import Report
from app.schemas.system import GridDomain
from app.services.analysis_service import AnalysisService
from app.services.report_service import ReportService

logger = logging.getLogger(__name__)

PROP14_STEPS = (1 / 100, 1 / 200, 1 / 400)
PROP14_K = 50
PROP16_DEFAULTS = Prop16Params(eps=1.0, eps_tilde=2.0, alpha=-1.0, beta=3.0, c_tilde=1.0)


def rows_match(rows: np.ndarray, reference, tol: float = 1e-9) -> bool:
    """Every reference row is a positive multiple of some row of `rows`."""
    unit = [r / np.linalg.norm(r) for r in np.atleast_2d(rows)]
    for ref in np.atleast_2d(np.asarray(reference, dtype=float)):
        target = ref / np.linalg.norm(ref)
        if not any(np.allclose(u, target, atol=tol) for u in unit):
            return False
    return True


class ReproduceService:
    """
    Runs the worked examples end to end and records, per asserted claim,
    whether it was reproduced.
    """

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or get_settings()
        self.reports = ReportService(self.settings)
        self.analysis = AnalysisService(self.settings)
        self._scenarios: Dict[str, Callable[[Report], None]] = {
            "ex1.1": self._ex11,
            "ex1.3": self._ex13,
            "ex1.8": self._ex18,
            "ex1.10": self._ex110,
            "remark1.8-matrices": self._remark_matrices,
            "figure1": self._figure1,
            "prop1.4": self._prop14,
            "prop1.6": self._prop16,
        }
        self.out_dir = Path(self.settings.output_dir)
        self.seed = self.settings.default_seed
        self.trials = self.settings.default_trials

    @property
    def scenario_ids(self):
        return tuple(self._scenarios)

    def reproduce(
        self,
        scenario: str,
        seed: Optional[int] = None,
        trials: Optional[int] = None,
        out_dir: Optional[Path] = None,
    ) -> Report:
        """
        Runs one scenario.

        Args:
            scenario (str): registry id, "figure1", "prop1.4" or "prop1.6"
            seed (int): seed of every randomized step
            trials (int): Monte-Carlo trials for invariance checks
            out_dir (Path): where CSV files go

        Returns:
            Report: verdicts, certificates and one ClaimCheck per asserted claim

        Raises:
            UnknownIdError: scenario not known
        """
        if scenario not in self._scenarios:
            raise UnknownIdError(
                f"unknown scenario {scenario!r}; known: {', '.join(self.scenario_ids)}, all"
            )
        self.seed = self.settings.default_seed if seed is None else seed
        self.trials = self.settings.default_trials if trials is None else trials
        self.out_dir = Path(self.settings.output_dir if out_dir is None else out_dir)
        try:
            report = self.reports.new_report(
                f"reproduce {scenario}",
                {"scenario": scenario, "trials": self.trials},
                self.seed,
            )
            with self.reports.timed(report, scenario):
                self._scenarios[scenario](report)
            failed = [c.claim for c in report.claims if not c.reproduced]
            if failed:
                logger.warning(f"{scenario}: not reproduced: {', '.join(failed)}")
            else:
                logger.info(f"{scenario}: all {len(report.claims)} claims reproduced")
            return report
        except Exception as e:
            logger.error(f"Error reproducing {scenario}: {str(e)}")
            raise

    def reproduce_all(
        self,
        seed: Optional[int] = None,
        trials: Optional[int] = None,
        out_dir: Optional[Path] = None,
    ) -> Dict[str, Report]:
        """Every scenario in registry order, keyed by id."""
        return {
            scenario: self.reproduce(scenario, seed=seed, trials=trials, out_dir=out_dir)
            for scenario in self.scenario_ids
        }

    @staticmethod
    def require_reproduced(report: Report) -> None:
        """
        Raises:
            ClaimMismatchError: some asserted claim was not reproduced
        """
        failed = [c.claim for c in report.claims if not c.reproduced]
        if failed:
            raise ClaimMismatchError(f"{report.command}: not reproduced: {', '.join(failed)}")

    # ------------------------------------------------------------ helpers

    def _claim(self, report: Report, claim: str, reproduced: bool, detail: str = "") -> None:
        report.add_claim(claim, bool(reproduced), detail)
        if not reproduced:
            logger.warning(f"claim not reproduced: {claim} ({detail})")

    def _derivative_claim(self, report: Report, entry: RegistryEntry) -> None:
        interior, _ = sample_points(entry.region, 200, self.seed)
        gap = check_derivatives(entry.witness, interior)
        self._claim(report, "exact derivatives match finite differences", gap <= 1e-5, f"gap {gap:.2e}")

    def _analytic_witness(self, report: Report, entry: RegistryEntry) -> None:
        verdict = confirm_entry_witness(entry, 1000, self.seed)
        report.add_verdict("analytic_witness", verdict)
        self._claim(
            report,
            WMP_FAILS,
            verdict.fails,
            f"interior max {verdict.diagnostics['interior_max']:.6g}, "
            f"boundary max {verdict.diagnostics['boundary_max']:.6g}",
        )
        self._derivative_claim(report, entry)


    def _sampled(self, report: Report, name: str, entry: RegistryEntry, cert: ConeCertificate):
        verdict = monte_carlo_invariance(entry.system, cert, entry.grid, self.trials, self.seed)
        report.add_verdict(name, verdict)
        return verdict

    # ---------------------------------------------------------- scenarios

    def _ex11(self, report: Report) -> None:
        entry = example_registry("ex1.1")
        self._analytic_witness(report, entry)
        interior, _ = sample_points(entry.region, 1000, self.seed)
        worst = float(np.abs(residual_values(entry.system, entry.witness, interior)).max())
        self._claim(report, "witness solves the system", worst <= 1e-10, f"max |residual| {worst:.2e}")
        centre = float(entry.witness.value(np.zeros((1, 2)))[0, 0])
        self._claim(report, "u1(0, 0) = 1", abs(centre - 1.0) <= 1e-15, f"u1(0, 0) = {centre!r}")

    def _ex13(self, report: Report) -> None:
        entry = example_registry("ex1.3", eps=1.0, eps_prime=1.0)
        report.details["barrier"] = entry.extras
        self._analytic_witness(report, entry)

        search = self.analysis.full_cone(entry.system, self.seed)
        report.certificates["full"] = search
        self._claim(
            report,
            "no full invariant cone",
            not isinstance(search, ConeCertificate),
            getattr(search, "reason", "certificate found"),
        )

        classical = example_registry("ex1.3", eps=0.0, eps_prime=0.0)
        verdict = wmp_certificate(assemble(classical.system, classical.grid))
        report.add_verdict("uncoupled_wmp", verdict)
        self._claim(report, WMP_HOLDS, verdict.holds, f"margin {verdict.margin:.3e} (uncoupled)")

    def _ex18(self, report: Report) -> None:
        entry = example_registry("ex1.8")
        cert = self.analysis.full_cone(entry.system, self.seed)
        report.certificates["full"] = cert
        if not isinstance(cert, ConeCertificate):
            self._claim(report, "full cone synthesized", False, cert.reason)
            return

        D = cert.P_array @ entry.system.B_arrays[0] @ cert.Q_array
        off = max_norm(D - np.diag(np.diag(D)))
        spectrum = np.sort(np.diag(D))
        self._claim(
            report,
            "Q diagonalizes B(1) to diag(2, 4)",
            off <= 1e-10 and np.allclose(spectrum, [2.0, 4.0], atol=1e-10),
            f"off-diagonal {off:.2e}, diagonal {spectrum.tolist()}",
        )
        self._claim(
            report,
            "cone rows proportional to (1, 1/2) and (4, 1)",
            rows_match(cert.cone_rows, entry.extras["cone_rows"]),
            f"rows {cert.cone_rows.tolist()}",
        )

        verdict = cone_certificate(entry.system, cert, entry.grid)
        report.add_verdict("cone_certificate", verdict)
        sampled = self._sampled(report, "sampled_invariance", entry, cert)
        self._claim(
            report,
            CONE_INVARIANT,
            verdict.holds and sampled.holds,
            f"certificate {verdict.outcome}, sampled {sampled.outcome}, "
            f"worst {sampled.diagnostics.get('worst_value', float('nan')):.3e}",
        )

        bellman = reduce_to_bellman(entry.system, cert)
        bound = supersolution_lower_bound(bellman)
        report.details["bellman"] = bellman
        report.details["eigen_bound"] = bound
        self._claim(
            report,
            "principal eigenvalue of the reduced operator is positive",
            bound.lower > 0 and bound.verified,
            f"lower {bound.lower:.6g}, verified {bound.verified}",
        )

    def _ex110(self, report: Report) -> None:
        entry = example_registry("ex1.10")
        self._analytic_witness(report, entry)
        centre = entry.witness.value(np.array([[0.5, 0.5]]))[0]
        self._claim(
            report,
            "u(1/2, 1/2) = (1/256, -0.6875)",
            np.allclose(centre, [1 / 256, -0.6875], atol=1e-15),
            f"u(1/2, 1/2) = {centre.tolist()}",
        )

        cert = self.analysis.partial_cone(entry.system, self.seed)
        report.certificates["partial"] = cert
        if not isinstance(cert, ConeCertificate):
            self._claim(report, "half-space cone synthesized", False, cert.reason)
            return
        self._claim(
            report,
            "half-space cone u1 + u2 <= 0",
            cert.k == entry.reference_k and rows_match(cert.cone_rows, entry.extras["cone_rows"]),
            f"k={cert.k}, rows {cert.cone_rows.tolist()}",
        )
        sampled = self._sampled(report, "half_space", entry, cert)
        self._claim(report, CONE_INVARIANT, sampled.holds, f"sampled {sampled.outcome}")

        orthant = certificate_from_q(entry.system, np.eye(entry.system.m))
        report.certificates["orthant"] = orthant
        negative = self._sampled(report, "orthant", entry, orthant)
        self._claim(report, "negative orthant not invariant", negative.fails, f"sampled {negative.outcome}")

    def _remark_matrices(self, report: Report) -> None:
        entry = example_registry("remark1.8-matrices")
        C, Q = entry.system.C_array, entry.reference_q
        C_hat = conjugate(C, Q)
        error = max_norm(C_hat - np.array(entry.extras["conjugate"]))
        m_matrix = is_m_matrix(Q)
        report.details.update(
            conjugate=C_hat,
            m_matrix=m_matrix.summary(),
            cooperativity=is_cooperative(C).summary(),
            conjugate_cooperativity=is_cooperative(C_hat).summary(),
        )
        self._claim(report, "Q^-1 C Q = [[-4, 3], [0, -1]]", error <= 1e-12, f"max error {error:.2e}")
        self._claim(report, "Q is an invertible M-matrix", bool(m_matrix), f"s={m_matrix.s:g}")
        self._claim(
            report,
            "C and Q^-1 C Q are cooperative",
            is_cooperative(C).is_cooperative and is_cooperative(C_hat).is_cooperative,
        )

        cert = certificate_from_q(entry.system, Q)
        report.certificates["given"] = cert
        verdict = cone_certificate(entry.system, cert, entry.grid)
        report.add_verdict("cone_certificate", verdict)
        self._claim(report, CONE_INVARIANT, cert.checks.passed and verdict.holds, f"certificate {verdict.outcome}")

    def _figure1(self, report: Report) -> None:
        rows = figure_curves()
        path = write_csv(self.out_dir / "figure1.csv", ["c", "value", "rho"], rows)
        report.details["csv"] = [path.name]
        report.details["curves"] = sorted({r[2] for r in rows})
        report.details["samples"] = len(rows)

        increasing = True
        for rho in report.details["curves"]:
            values = np.array([r[1] for r in rows if r[2] == rho])
            increasing &= bool(np.all(np.diff(values) > 0))
        self._claim(report, "curves strictly increasing in c", increasing)

        small = ZetaQuery(rho=0.5, c=1e-10, alpha_over_eps=0.0)
        large = ZetaQuery(rho=1.0, c=1e6, alpha_over_eps=0.0)
        low = wmp_fails_prediction(small).value
        high = wmp_fails_prediction(large).value / math.sqrt(large.c)
        self._claim(report, "small-c limit 3/rho", abs(low - 6.0) <= 1e-4, f"value {low:.10g} at rho=0.5")
        self._claim(report, "large-c limit sqrt(c)", abs(high - 1.0) <= 1e-6, f"ratio {high:.12g}")

    def _prop14(self, report: Report) -> None:
        eps = 1.0
        q = ZetaQuery(rho=1.0, c=1.0, alpha_over_eps=0.0)
        value = float(zeta(1.0))
        prediction = wmp_fails_prediction(q)
        report.details.update(
            zeta_1=value,
            prediction=prediction.__dict__,
            c_threshold=c_threshold(q.rho, q.alpha_over_eps),
            rho_threshold=rho_threshold(q.c, q.alpha_over_eps),
            k0=find_violating_k(q, eps),
        )
        self._claim(report, "zeta(1) = 3.0998", abs(value - 3.0998) <= 1e-3, f"zeta(1) = {value:.10g}")
        self._claim(report, "failure condition holds", prediction.fails, f"margin {prediction.margin:.6g}")

        field = u_k_family(q, eps, PROP14_K)
        system = prop14_system(eps, 0.0, q.c)
        ends = field.value(np.array([0.0, q.rho]))[:, 0]
        slope = float(field.gradient(np.array([0.0]))[0, 0, 0])
        points = np.linspace(0.0, q.rho, 1000)
        worst = float(np.abs(residual_values(system, field, points)[:, 0]).max())
        self._claim(report, "u_k(0) = 0", ends[0] == 0.0, f"u_k(0) = {ends[0]!r}")
        self._claim(report, "u_k'(0) > 0", slope > 0, f"u_k'(0) = {slope:.6g}")
        self._claim(report, "u_k(rho) <= 0", ends[1] <= 0, f"u_k(1) = {ends[1]:.6g}")
        self._claim(report, "u_k solves the first equation", worst <= 1e-8, f"max |residual| {worst:.2e}")

        limit = float(u_limit_field(q, eps).value(np.array([1.0]))[0, 0])
        self._claim(report, "u_0(1) = -0.5430806", abs(limit + 0.5430806) <= 1e-7, f"u_0(1) = {limit:.10g}")

        continuum = interval_witness(q, eps, PROP14_K)
        report.add_verdict("u_k_witness", continuum)
        self._claim(report, WMP_FAILS, continuum.fails, f"analytic witness {continuum.outcome}")

        outcomes = []
        for h in PROP14_STEPS:
            grid = GridDomain.from_step("interval", [0.0], [q.rho], h)
            verdict = wmp_certificate(assemble(system, grid))
            if verdict.fails and continuum.fails:
                verdict.scope = "continuum"
            name = f"discrete_h{int(round(1 / h))}"
            report.add_verdict(name, verdict)
            outcomes.append(verdict.outcome)
        self._claim(
            report,
            "discrete wMP fails at every step",
            all(o == "fails" for o in outcomes),
            ", ".join(f"1/{int(round(1 / h))}: {o}" for h, o in zip(PROP14_STEPS, outcomes)),
        )

    def _prop16(self, report: Report) -> None:
        construction = prop16_construct(PROP16_DEFAULTS, seed=self.seed)
        report.details["construction"] = construction.summary()
        self._claim(
            report,
            WMP_FAILS,
            construction.violates_wmp,
            f"c = {construction.c:.6g}, residual minima {list(construction.residual_minima)}",
        )

        system = prop16_system(PROP16_DEFAULTS, construction.c)
        points = verification_points(self.seed)
        verdict = confirm_witness(
            system, construction.field, points, np.array([0.0, 1.0]), kind="cut-off pair"
        )
        report.add_verdict("cutoff_witness", verdict)

        sub = prop16_subinterval(construction)
        report.details["subinterval"] = {
            "interval": list(sub.interval),
            "c": sub.c,
            "residual_minima": list(sub.residual_minima),
            "boundary_max": sub.boundary_max,
            "interior_max": sub.interior_max,
        }
        self._claim(
            report,
            "wMP fails on a subinterval below the threshold",
            sub.violates_wmp,
            f"I = ({sub.interval[0]:.6g}, {sub.interval[1]:.6g}), c = {sub.c:.6g}",
        )
