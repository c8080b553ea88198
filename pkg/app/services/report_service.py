# app/services/report_service.py
import logging
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Any, List, Optional

from app.config import Settings, get_settings
from app.core.utils.serialization import dumps, field_rows, inputs_digest, write_csv, write_json
from app.schemas.report import Report

logger = logging.getLogger(__name__)


class ReportService:
    """
    Creates, times and writes command reports.
    """

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or get_settings()

    def new_report(self, command: str, inputs: Any, seed: Optional[int] = None) -> Report:
        """
        Starts a report for a command.

        Args:
            command (str): command line label, e.g. "wmp" or "reproduce ex1.8"
            inputs: parsed inputs (model or plain data) that determine the result
            seed (int): seed used by randomized parts, if any

        Returns:
            Report: empty report carrying the inputs digest and tool version
        """
        return Report(
            command=command,
            inputs_digest=inputs_digest(inputs),
            tool_version=self.settings.app_version,
            seed=seed,
        )

    @contextmanager
    def timed(self, report: Report, label: str):
        start = time.perf_counter()
        try:
            yield
        finally:
            report.timings[label] = time.perf_counter() - start

    def render(self, report: Report) -> str:
        return dumps(report)

    def write(self, report: Report, directory: Path, name: str) -> Path:
        """Writes <directory>/<name>.json and returns the path."""
        try:
            path = write_json(Path(directory) / f"{name}.json", report)
            logger.info(f"Report written to {path}")
            return path
        except OSError as e:
            logger.error(f"Error writing report {name}: {str(e)}")
            raise

    def write_witness_csv(self, report: Report, directory: Path, prefix: str) -> List[Path]:
        """
        Writes every discrete witness of the report as <prefix>_<name>.csv
        with columns x[, y], component, value.
        """
        paths = []
        for name, witness in report.witnesses.items():
            if witness.field is None:
                continue
            field = witness.field
            axes = ["x", "y"][: field.domain.ndim]
            try:
                path = write_csv(
                    Path(directory) / f"{prefix}_{name}.csv",
                    [*axes, "component", "value"],
                    field_rows(field.domain.coordinates, field.array()),
                )
            except OSError as e:
                logger.error(f"Error writing witness {name}: {str(e)}")
                raise
            paths.append(path)
        if paths:
            report.details["csv"] = sorted({*report.details.get("csv", []), *(p.name for p in paths)})
        return paths
