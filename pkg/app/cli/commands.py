# app/cli/commands.py
import argparse
import logging
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from app.config import get_settings
from app.core.utils.exceptions import ClaimMismatchError, InputError, SchemaError, UnknownIdError
from app.schemas.report import Report
from app.schemas.system import ProblemFile
from app.services.analysis_service import AnalysisService
from app.services.discrete_service import DiscreteService
from app.services.eigen_service import EigenService
from app.services.report_service import ReportService
from app.services.reproduce_service import ReproduceService

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INPUT = 2
EXIT_MISMATCH = 3


def load_problem(path: str) -> ProblemFile:
    """
    Reads and validates a problem file.

    Raises:
        SchemaError: unreadable file
        ValidationError: schema or dimension mismatch
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise SchemaError(f"cannot read problem file {path}: {e}")
    return ProblemFile.model_validate_json(text)


def build_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    parser = argparse.ArgumentParser(
        prog="elliptic-lab",
        description="Maximum principle and invariant cone analysis for linear elliptic systems.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=settings.output_dir, help="directory for reports and CSV files")
    common.add_argument("--csv", action="store_true", help="also write witness fields as CSV")
    commands = parser.add_subparsers(dest="command", required=True)

    analyze = commands.add_parser("analyze", parents=[common], help="algebraic checks and cone synthesis")
    analyze.add_argument("file")

    wmp = commands.add_parser("wmp", parents=[common], help="discrete weak maximum principle")
    wmp.add_argument("file")
    wmp.add_argument("--grid", type=float, default=None, help="grid step h")
    wmp.add_argument("--scheme", choices=["centered", "upwind"], default="centered")

    invariance = commands.add_parser("invariance", parents=[common], help="discrete cone invariance")
    invariance.add_argument("file")
    invariance.add_argument("--grid", type=float, default=None, help="grid step h")
    invariance.add_argument("--scheme", choices=["centered", "upwind"], default="centered")
    invariance.add_argument("--trials", type=int, default=None)
    invariance.add_argument("--seed", type=int, default=None)

    eigen = commands.add_parser("eigen", parents=[common], help="bounds on the principal eigenvalue of the Bellman operator")
    eigen.add_argument("file")

    reproduce = commands.add_parser("reproduce", parents=[common], help="rerun a worked example")
    reproduce.add_argument("scenario", help="ex1.1, ex1.3, ex1.8, ex1.10, remark1.8-matrices, figure1, prop1.4, prop1.6 or all")
    reproduce.add_argument("--trials", type=int, default=None)
    reproduce.add_argument("--seed", type=int, default=None)
    return parser


def _finish(args, report: Report, name: str) -> Report:
    reports = ReportService()
    out = Path(args.out)
    if args.csv:
        reports.write_witness_csv(report, out, name)
    reports.write(report, out, name)
    return report


def cmd_analyze(args) -> Report:
    problem = load_problem(args.file)
    return _finish(args, AnalysisService().analyze(problem), f"analyze_{Path(args.file).stem}")


def cmd_wmp(args) -> Report:
    problem = load_problem(args.file)
    report = DiscreteService().wmp(problem, h=args.grid, scheme=args.scheme)
    return _finish(args, report, f"wmp_{Path(args.file).stem}")


def cmd_invariance(args) -> Report:
    problem = load_problem(args.file)
    report = DiscreteService().invariance(
        problem, trials=args.trials, seed=args.seed, h=args.grid, scheme=args.scheme
    )
    return _finish(args, report, f"invariance_{Path(args.file).stem}")


def cmd_eigen(args) -> Report:
    problem = load_problem(args.file)
    return _finish(args, EigenService().eigen(problem), f"eigen_{Path(args.file).stem}")


def cmd_reproduce(args) -> List[Report]:
    """
    Runs one scenario or all of them, writes every report, then raises
    ClaimMismatchError if any asserted claim was not reproduced.
    """
    service = ReproduceService()
    options = {"seed": args.seed, "trials": args.trials, "out_dir": Path(args.out)}
    if args.scenario == "all":
        results = service.reproduce_all(**options)
    elif args.scenario in service.scenario_ids:
        results = {args.scenario: service.reproduce(args.scenario, **options)}
    else:
        raise UnknownIdError(f"unknown scenario {args.scenario!r}")
    reports = [_finish(args, report, f"reproduce_{scenario}") for scenario, report in results.items()]
    for report in reports:
        service.require_reproduced(report)
    return reports


COMMANDS = {
    "analyze": cmd_analyze,
    "wmp": cmd_wmp,
    "invariance": cmd_invariance,
    "eigen": cmd_eigen,
    "reproduce": cmd_reproduce,
}


def main(argv: Optional[List[str]] = None) -> int:
    """
    Parses the command line and runs one command.

    Returns:
        int: 0 ok (a failing maximum principle is a valid result), 1 internal
        error, 2 invalid input, 3 an asserted claim was not reproduced
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT if e.code else EXIT_OK

    try:
        COMMANDS[args.command](args)
        return EXIT_OK
    except (InputError, ValidationError) as e:
        logger.error(f"Invalid input: {str(e)}")
        return EXIT_INPUT
    except ClaimMismatchError as e:
        logger.error(f"Reproduction mismatch: {str(e)}")
        return EXIT_MISMATCH
    except Exception as e:
        logger.exception(f"Internal error in {args.command}: {str(e)}")
        return EXIT_INTERNAL
