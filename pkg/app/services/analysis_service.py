# app/services/analysis_service.py
import logging
from typing import Optional, Tuple

import numpy as np

from app.config import Settings, get_settings
from app.core.algebra.cone_synthesis import (
    SynthesisResult,
    certificate_from_q,
    commute_check,
    synthesize_full_cone,
    synthesize_partial_cone,
)
from app.core.algebra.matrix_algebra import (
    MAX_CONDITION,
    eigen,
    flux_condition_orthant,
    is_cooperative,
    is_m_matrix,
)
from app.core.utils.exceptions import ComputationError, EllipticLabError, SingularQError
from app.schemas.certificate import ConeCertificate, NotFound
from app.schemas.report import Report
from app.schemas.system import EllipticSystem, ProblemFile
from app.services.report_service import ReportService

logger = logging.getLogger(__name__)


def not_found_from(error: ComputationError) -> NotFound:
    return NotFound(reason=str(error), failed_condition=type(error).__name__)


def given_q(problem: ProblemFile) -> np.ndarray:
    """
    Q = P^-1 for the cone given in a problem file.

    Raises:
        SingularQError: P is singular or badly conditioned
    """
    P = np.array(problem.cone.P, dtype=float)
    if np.linalg.cond(P) > MAX_CONDITION:
        raise SingularQError(f"cone matrix P is singular (condition {np.linalg.cond(P):.3e})")
    return np.linalg.inv(P)


class AnalysisService:
    """
    Algebraic analysis of a problem: spectra, cooperativity and cone search.
    """

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or get_settings()
        self.reports = ReportService(self.settings)

    def full_cone(self, sys: EllipticSystem, seed: Optional[int] = None) -> SynthesisResult:
        try:
            return synthesize_full_cone(sys, seed)
        except ComputationError as e:
            logger.info(f"full cone search stopped: {e}")
            return not_found_from(e)

    def partial_cone(self, sys: EllipticSystem, seed: Optional[int] = None) -> SynthesisResult:
        try:
            return synthesize_partial_cone(sys, seed)
        except ComputationError as e:
            logger.info(f"partial cone search stopped: {e}")
            return not_found_from(e)

    def resolve_certificate(
        self, problem: ProblemFile, require_full: bool = False
    ) -> Tuple[Optional[ConeCertificate], Optional[NotFound]]:
        """
        Certificate for the problem: the cone given in the file, otherwise the
        full search, otherwise (unless require_full) the partial search.

        Returns:
            Tuple: (certificate, None) or (None, NotFound)
        """
        sys = problem.to_system()
        seed = self.settings.default_seed if problem.seed is None else problem.seed
        if problem.cone is not None:
            Q = given_q(problem)
            return certificate_from_q(sys, Q, problem.cone.k), None
        result = self.full_cone(sys, seed)
        if isinstance(result, ConeCertificate) or require_full:
            return (result, None) if isinstance(result, ConeCertificate) else (None, result)
        result = self.partial_cone(sys, seed)
        if isinstance(result, ConeCertificate):
            return result, None
        return None, result

    def analyze(self, problem: ProblemFile) -> Report:
        """
        Runs the algebraic checks and the cone search for a problem file.

        Args:
            problem (ProblemFile): parsed input

        Returns:
            Report: commute check, spectra, cooperativity, M-matrix test and search outcome
        """
        try:
            sys = problem.to_system()
            seed = self.settings.default_seed if problem.seed is None else problem.seed
            report = self.reports.new_report("analyze", problem, seed)

            with self.reports.timed(report, "algebra"):
                report.details["commute"] = commute_check(sys)
                spectra = []
                for i, B in enumerate(sys.B_arrays):
                    try:
                        spectra.append(eigen(B).summary())
                    except EllipticLabError as e:
                        spectra.append({"error": str(e)})
                        logger.warning(f"spectrum of B({i + 1}) unavailable: {e}")
                report.details["spectra"] = spectra
                coop = is_cooperative(sys.C_array)
                report.details["cooperativity"] = coop.summary()
                report.details["flux_condition"] = flux_condition_orthant(sys.C_array, seed=seed)

            with self.reports.timed(report, "search"):
                if problem.cone is not None:
                    Q = given_q(problem)
                    report.details["m_matrix"] = is_m_matrix(Q).summary()
                    cert = certificate_from_q(sys, Q, problem.cone.k)
                    report.certificates["given"] = cert
                full = self.full_cone(sys, seed)
                report.certificates["full"] = full
                if not isinstance(full, ConeCertificate):
                    report.certificates["partial"] = self.partial_cone(sys, seed)

            logger.info(
                f"analyze {problem.name or 'problem'}: "
                f"full cone {'found' if isinstance(full, ConeCertificate) else 'not found'}"
            )
            return report
        except Exception as e:
            logger.error(f"Error in analyze: {str(e)}")
            raise
