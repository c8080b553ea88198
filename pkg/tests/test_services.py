# tests/test_services.py
import os

import numpy as np
import pytest

from app.cli.commands import load_problem
from app.core.utils.exceptions import ClaimMismatchError, UnknownIdError
from app.schemas.certificate import ConeCertificate, NotFound
from app.schemas.report import Report
from app.services.analysis_service import AnalysisService
from app.services.discrete_service import DiscreteService, problem_grid
from app.services.eigen_service import EigenService
from app.services.reproduce_service import ReproduceService, rows_match


def _load(problems_dir, name):
    return load_problem(os.path.join(problems_dir, name))


def test_resolve_prefers_given_cone(problems_dir):
    cert, missing = AnalysisService().resolve_certificate(_load(problems_dir, "remark_matrices.json"))
    assert missing is None
    assert cert.checks.passed
    np.testing.assert_allclose(cert.Q_array, [[2, -1], [-1, 2]], atol=1e-12)


def test_resolve_falls_back_to_partial(problems_dir):
    cert, missing = AnalysisService().resolve_certificate(_load(problems_dir, "ex1_3.json"))
    assert missing is None
    assert cert.k == 1
    _, missing = AnalysisService().resolve_certificate(_load(problems_dir, "ex1_3.json"), require_full=True)
    assert isinstance(missing, NotFound)


def test_analyze_records_search(problems_dir):
    report = AnalysisService().analyze(_load(problems_dir, "ex1_10.json"))
    assert isinstance(report.certificates["given"], ConeCertificate)
    assert isinstance(report.certificates["full"], NotFound)
    assert report.certificates["partial"].k == 1
    assert report.details["m_matrix"]["is_m_matrix"] is False
    assert set(report.timings) == {"algebra", "search"}


def test_eigen_service(problems_dir):
    report = EigenService().eigen(_load(problems_dir, "ex1_8.json"))
    bound = report.details["eigen_bound"]
    assert 0.1 < bound.lower <= bound.upper
    assert bound.verified


def test_eigen_service_without_full_cone(problems_dir):
    report = EigenService().eigen(_load(problems_dir, "ex1_10_orthant.json"))
    assert isinstance(report.certificates["cone"], NotFound)
    assert report.certificates["cone"].failed_condition == "diagonalized"
    assert "eigen_bound" not in report.details


def test_invariance_skips_exact_check_for_invalid_full_cone(problems_dir):
    report = DiscreteService().invariance(_load(problems_dir, "ex1_10_orthant.json"), trials=40, seed=0)
    assert "skipped" in report.details["cone_certificate"]
    assert report.verdicts["sampled_invariance"].fails
    assert "sampled_invariance" in report.witnesses


def test_wmp_with_grid_override(problems_dir):
    problem = _load(problems_dir, "prop1_4.json")
    assert problem_grid(problem, 0.01).resolution == [101]
    report = DiscreteService().wmp(problem, h=0.01)
    assert report.verdicts["wmp"].fails
    assert report.details["operator"]["resolution"] == [101]


def test_reproduce_rejects_unknown_scenario():
    with pytest.raises(UnknownIdError):
        ReproduceService().reproduce("ex2.1")


def test_require_reproduced():
    report = Report(command="reproduce x", inputs_digest="0" * 64, tool_version="test")
    report.add_claim("holds", True)
    ReproduceService.require_reproduced(report)
    report.add_claim("fails", False)
    with pytest.raises(ClaimMismatchError):
        ReproduceService.require_reproduced(report)


@pytest.mark.parametrize("scenario", ["ex1.10", "prop1.4", "prop1.6"])
def test_reproduce_claims(scenario, tmp_path):
    report = ReproduceService().reproduce(scenario, seed=0, trials=40, out_dir=tmp_path)
    failed = [c.claim for c in report.claims if not c.reproduced]
    assert not failed
    assert report.claims


def test_rows_match():
    assert rows_match(np.array([[4.0, 2.0], [4.0, 1.0]]), [[1.0, 0.5], [4.0, 1.0]])
    assert not rows_match(np.array([[4.0, 2.0]]), [[4.0, 1.0]])


def test_upwind_invariance_falls_back_to_sampling(problems_dir):
    report = DiscreteService().invariance(_load(problems_dir, "ex1_8.json"), trials=20, seed=0, scheme="upwind")
    assert "centered" in report.details["cone_certificate"]["skipped"]
    assert "cone_certificate" not in report.verdicts
    assert report.verdicts["sampled_invariance"].diagnostics["scheme"] == "upwind"
