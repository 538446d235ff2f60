import json
import logging
from typing import Any, Literal, Optional

import pytest
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter
from typer.testing import CliRunner

from nctv.cli import app
from nctv.config import Config, ConfigException
from nctv.ktheory import EXPECTED_MAXIMAL_ORDERS
from nctv.report import CheckRecord, Report, boolean_check, exact_check, residual_check
from nctv.suites import FindSuite, FindSuites, UnknownSuiteError, run_suite
from nctv.theta import ThetaParser, ThetaValue

runner = CliRunner()


class CheckModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str
    anchor: str
    status: Literal["pass", "fail"]
    measured: Any = None
    expected: Any = None
    tolerance: Optional[float] = None
    note: Optional[str] = None


class SummaryModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    total: int
    passed: int
    failed: int


class ReportModel(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    schema_: Literal[1] = Field(alias="schema")
    suite: str
    status: Literal["pass", "fail"]
    config: dict[str, Any]
    summary: SummaryModel
    checks: list[CheckModel]
    wall_clock_seconds: Optional[float] = None


REPORT_ADAPTER = TypeAdapter(ReportModel)


def validate(text: str) -> ReportModel:
    report = REPORT_ADAPTER.validate_python(json.loads(text))
    assert report.summary.total == len(report.checks)
    assert report.summary.passed + report.summary.failed == report.summary.total
    assert len({check.id for check in report.checks}) == len(report.checks)
    return report


def measured(report: Report, id: str):
    (check,) = [c for c in report.checks if c.id == id]
    return check.measured


######################
#  Registry          #
######################


def test_find_suites():
    suites = {suite.name: suite for suite in FindSuites()}
    assert set(suites) == {"symbolic", "ktheory", "walters", "fiber"}
    for suite in suites.values():
        assert suite.description
        assert "\n" not in suite.description
    assert FindSuite("ktheory") is suites["ktheory"]
    assert FindSuite("nope") is None


def test_unknown_suite():
    with pytest.raises(UnknownSuiteError, match="symbolic"):
        run_suite(Config(suite="nope"))


def test_invalid_config():
    with pytest.raises(ConfigException):
        run_suite(Config(suite="ktheory", grid_n=1000))


######################
#  Suites            #
######################


def test_symbolic_suite():
    report = run_suite(Config(suite="symbolic", groups=["Z6", "Z2"], samples=50))
    assert report.passed, [c.id for c in report.failures]
    assert measured(report, "Z6/formal/trace p0") == "1/6"
    assert measured(report, "Z6/formal/order ut^2") == 3
    assert measured(report, "Z2/formal/pairwise products of the order-two projections") == "1/4"
    (pairwise,) = [c for c in report.checks if c.id == "Z2/formal/pairwise products of the order-two projections"]
    assert pairwise.passed
    assert pairwise.expected == "<= 1/2"
    validate(report.dumps())


def test_symbolic_suite_z3_defect():
    report = run_suite(Config(suite="symbolic", groups=["Z3"], samples=20))
    assert report.passed
    (check,) = [c for c in report.checks if c.anchor == "uncorrected-unitary-defect"]
    assert check.passed


def test_symbolic_suite_flip():
    report = run_suite(Config(suite="symbolic", groups=["flip3"], samples=30))
    assert report.passed, [c.id for c in report.failures]
    assert all(c.id.startswith("flip3/skew/") for c in report.checks)


def test_symbolic_suite_specialized_theta():
    thetas = [ThetaParser.parse("1/3"), ThetaParser.parse("0.37")]
    report = run_suite(Config(suite="symbolic", groups=["Z4"], thetas=thetas, samples=30))
    assert report.passed, [c.id for c in report.failures]
    assert all(c.id.startswith(("Z4/1/3/", "Z4/0.37/")) for c in report.checks)
    assert any(c.id.startswith("Z4/1/3/") for c in report.checks)


def test_ktheory_suite(caplog):
    with caplog.at_level(logging.WARNING, logger="nctv.suites"):
        report = run_suite(Config(suite="ktheory", groups=["Z2", "Z3", "Z4", "Z6", "flip3"]))
    assert report.passed, [c.id for c in report.failures]
    assert "skipping flip3" in caplog.text
    assert measured(report, "Z6/K-theory ranks") == [10, 0]
    assert measured(report, "Z4/trace image") == "1/4Z + 1/4tZ"

    data = validate(report.dumps())
    assert data.suite == "ktheory"
    assert data.wall_clock_seconds is None
    assert sum(1 for c in data.checks if c.anchor == "isomorphism-criterion") == 20


def test_ktheory_suite_reports_subgroup_mismatch(monkeypatch, caplog):
    monkeypatch.setitem(EXPECTED_MAXIMAL_ORDERS, 4, (4, 2))
    with caplog.at_level(logging.WARNING, logger="nctv.ktheory"):
        report = run_suite(Config(suite="ktheory", groups=["Z4"]))
    (check,) = [c for c in report.checks if c.anchor == "maximal-subgroups"]
    assert not check.passed
    assert check.measured == [4, 4, 2]
    assert check.expected == [4, 2]
    assert "expected (4, 2)" in caplog.text
    assert report.status == "fail"


def test_fiber_suite():
    report = run_suite(Config(suite="fiber"))
    assert report.passed, [c.id for c in report.failures]
    assert {c.anchor for c in report.checks} == {"fiber-identification"}


def test_walters_suite():
    config = Config(suite="walters", groups=["Z2", "Z4"], thetas=[ThetaParser.parse("0.5")])
    report = run_suite(config)
    assert report.passed, [(c.id, c.measured) for c in report.failures]
    anchors = {c.anchor for c in report.checks}
    assert {"transform-order", "covariance", "imprimitivity", "module-action"} <= anchors
    assert "transform-square" in {c.anchor for c in report.checks if c.id.startswith("Z2/")}
    (distinct,) = [c for c in report.checks if c.id == "bimodule/0.5/imprimitivity, distinct functions"]
    assert distinct.passed
    assert distinct.note.startswith("window 14")
    validate(report.dumps())


def test_walters_suite_rejects_formal_theta():
    with pytest.raises(ConfigException):
        run_suite(Config(suite="walters", thetas=[ThetaValue.formal()]))


def test_reports_are_deterministic():
    settings = {"suite": "symbolic", "groups": ["Z3", "Z4"], "samples": 20, "seed": 5}
    serial = run_suite(Config(jobs=1, **settings)).dumps()
    parallel = run_suite(Config(jobs=2, **settings)).dumps()
    assert serial == parallel


def test_timing():
    report = run_suite(Config(suite="ktheory", groups=["Z2"], timing=True))
    data = report.to_json()
    assert data["wall_clock_seconds"] >= 0
    assert "Wall clock" in report.to_markdown()


######################
#  Report rendering  #
######################


def test_check_records():
    assert exact_check("a", "x", [1, 2], [1, 2]).passed
    assert not exact_check("a", "x", "1/3", "1/4").passed
    assert boolean_check("a", "x", False).to_json() == {
        "id": "a", "anchor": "x", "status": "fail", "measured": False, "expected": True,
    }

    check = residual_check("r", "x", 1.23456789e-9, 1e-8)
    assert check.passed
    assert check.measured == 1.235e-9
    assert "expected" not in check.to_json()

    assert residual_check("r", "x", 1e-9, 1e-8, override=1e-10).tolerance == 1e-10
    assert not residual_check("r", "x", 1e-9, 1e-8, override=1e-10).passed
    assert not residual_check("r", "x", float("nan"), 1.0).passed
    assert residual_check("r", "x", float("inf"), 1.0).measured == "inf"


def test_report_formats():
    checks = [
        boolean_check("relation |x| <= 2", "action-formula", True),
        residual_check("residual", "imprimitivity", 2e-3, 1e-4, note="window 6"),
    ]
    report = Report("demo", checks, {"seed": 0})
    assert report.status == "fail"
    assert report.failures == [checks[1]]

    markdown = report.render("md")
    assert markdown.startswith("# nctv report: demo")
    assert "relation \\|x\\| <= 2" in markdown
    assert "(1 of 2 checks passed)" in markdown

    rows = report.render("csv").splitlines()
    assert rows[0] == "id,anchor,status,measured,expected,tolerance,note"
    assert rows[2] == "residual,imprimitivity,fail,0.002,,0.0001,window 6"

    assert json.loads(report.render("json"))["summary"] == {"total": 2, "passed": 1, "failed": 1}
    with pytest.raises(ValueError):
        report.render("xml")


def test_empty_report():
    report = Report("empty", [], {})
    assert report.passed
    assert validate(report.dumps()).summary.total == 0


def test_record_is_frozen():
    check = CheckRecord("a", "x", True)
    with pytest.raises(AttributeError):
        check.passed = False  # type: ignore[misc]


######################
#  Command line      #
######################


def test_cli_run(tmp_path):
    out = tmp_path / "report.json"
    result = runner.invoke(app, ["run", "--suite", "ktheory", "--group", "Z4", "--out", str(out)])
    assert result.exit_code == 0, result.output
    data = validate(out.read_text(encoding="utf-8"))
    assert data.status == "pass"
    assert data.config["groups"] == ["Z4"]


def test_cli_run_markdown(tmp_path):
    out = tmp_path / "report.md"
    result = runner.invoke(app, ["run", "-s", "fiber", "-g", "Z2", "-f", "md", "-o", str(out)])
    assert result.exit_code == 0, result.output
    assert out.read_text(encoding="utf-8").startswith("# nctv report: fiber")


@pytest.mark.parametrize(
    "args",
    [
        ["run", "--suite", "nope"],
        ["run", "--suite", "symbolic", "--theta", "2"],
        ["run", "--suite", "symbolic", "--group", "Z5"],
        ["run", "--suite", "ktheory", "--grid-n", "1000"],
        ["run", "--suite", "ktheory", "--format", "xml"],
        ["run", "--suite", "walters", "--theta", "formal"],
    ],
)
def test_cli_usage_errors(args: list):
    result = runner.invoke(app, args)
    assert result.exit_code == 2


def test_cli_failing_checks(tmp_path):
    out = tmp_path / "report.json"
    result = runner.invoke(app, [
        "run", "--suite", "walters", "-g", "Z2", "-t", "0.5",
        "--grid-n", "256", "--grid-l", "8", "--tol", "1e-300", "--out", str(out),
    ])
    assert result.exit_code == 1
    data = validate(out.read_text(encoding="utf-8"))
    assert data.status == "fail"
    assert all(c.tolerance == 1e-300 for c in data.checks)


def test_cli_suites():
    result = runner.invoke(app, ["suites"])
    assert result.exit_code == 0
    for name in ("symbolic", "ktheory", "walters", "fiber"):
        assert name in result.stdout


def test_cli_trace_points():
    result = runner.invoke(app, ["trace-points", "--group", "Z6", "--theta", "0.618", "--bound", "1"])
    assert result.exit_code == 0
    lines = result.stdout.splitlines()
    assert lines[0] == "a,b,value"
    assert [line.split(",")[:2] for line in lines[1:]] == [["0", "0"], ["1", "-1"], ["0", "1"], ["1", "0"], ["1", "1"]]


def test_cli_trace_points_bad_theta():
    result = runner.invoke(app, ["trace-points", "--theta", "1.5"])
    assert result.exit_code == 2


def test_cli_samples(tmp_path):
    out = tmp_path / "samples.csv"
    result = runner.invoke(app, ["samples", "--grid-n", "256", "--grid-l", "8", "--out", str(out)])
    assert result.exit_code == 0
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "x,re,im"
    assert len(lines) == 257


def test_cli_version():
    result = runner.invoke(app, ["version"])
    assert result.exit_code == 0
    assert "nctv" in result.stdout
