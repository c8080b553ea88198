# app/services/eigen_service.py
import logging
from typing import Optional

from app.config import Settings, get_settings
from app.core.bellman.bellman import eigen_bound, reduce_to_bellman
from app.schemas.certificate import NotFound
from app.schemas.report import Report
from app.schemas.system import ProblemFile
from app.services.analysis_service import AnalysisService
from app.services.report_service import ReportService

logger = logging.getLogger(__name__)


class EigenService:
    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or get_settings()
        self.reports = ReportService(self.settings)
        self.analysis = AnalysisService(self.settings)

    def eigen(self, problem: ProblemFile) -> Report:
        """
        Certified interval for the principal eigenvalue of the reduced
        Bellman operator on the problem's box.

        Needs a full cone; otherwise the report carries the NotFound record.
        """
        try:
            report = self.reports.new_report("eigen", problem, problem.seed)
            cert, missing = self.analysis.resolve_certificate(problem, require_full=True)
            if cert is None or not cert.is_full or not cert.checks.passed:
                report.certificates["cone"] = missing or NotFound(
                    reason=f"given cone is not a valid full certificate (k={cert.k})",
                    failed_condition=cert.checks.first_failure() or "partial",
                    best_checks=cert.checks,
                )
                logger.info("eigen: no full cone, nothing to reduce")
                return report

            report.certificates["cone"] = cert
            with self.reports.timed(report, "bellman"):
                bellman = reduce_to_bellman(problem.to_system(), cert, problem.domain)
                bound = eigen_bound(bellman)
            report.details["bellman"] = bellman
            report.details["eigen_bound"] = bound
            logger.info(f"eigen: mu_1 in [{bound.lower:.6g}, {bound.upper:.6g}]")
            return report
        except Exception as e:
            logger.error(f"Error in eigen: {str(e)}")
            raise
