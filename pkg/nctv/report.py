from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Optional

REPORT_SCHEMA = 1


@dataclass(frozen=True)
class CheckRecord:
    """
    Outcome of one verification.

    :param id: Stable identifier, unique within a report
    :param anchor: Name of the mathematical statement the check verifies
    :param passed: Whether the check succeeded
    :param measured: Computed value, JSON serializable
    :param expected: Value the computation is compared against
    :param tolerance: Bound a numeric residual must stay below
    :param note: Additional free-form information
    """

    id: str
    anchor: str
    passed: bool
    measured: Any = None
    expected: Any = None
    tolerance: Optional[float] = None
    note: Optional[str] = None

    @property
    def status(self) -> str:
        return "pass" if self.passed else "fail"

    def to_json(self) -> dict:
        fields = {
            "id": self.id,
            "anchor": self.anchor,
            "status": self.status,
            "measured": self.measured,
            "expected": self.expected,
            "tolerance": self.tolerance,
            "note": self.note,
        }
        return {f: v for f, v in fields.items() if v is not None}


def exact_check(id: str, anchor: str, measured: Any, expected: Any, note: Optional[str] = None) -> CheckRecord:
    """Compare an exactly computed value with its expected value."""
    return CheckRecord(id, anchor, measured == expected, measured, expected, note=note)


def boolean_check(id: str, anchor: str, passed: bool, note: Optional[str] = None) -> CheckRecord:
    return CheckRecord(id, anchor, bool(passed), bool(passed), True, note=note)


def residual_check(
    id: str,
    anchor: str,
    residual: float,
    tolerance: float,
    override: Optional[float] = None,
    note: Optional[str] = None,
) -> CheckRecord:
    """
    A numeric residual that must stay below a tolerance. The residual is kept
    to four significant digits so that reports do not depend on the last bits
    of floating point reductions.

    :param override: Global tolerance replacing the check's own
    """
    tolerance = override if override is not None else tolerance
    passed = math.isfinite(residual) and residual < tolerance
    measured = float(f"{residual:.3e}") if math.isfinite(residual) else str(residual)
    return CheckRecord(id, anchor, passed, measured, None, tolerance, note)


@dataclass
class Report:
    """
    Checks of one suite run together with the configuration they ran under.
    """

    suite: str
    checks: list[CheckRecord]
    config: dict
    wall_clock: Optional[float] = field(default=None, compare=False)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def status(self) -> str:
        return "pass" if self.passed else "fail"

    @property
    def failures(self) -> list[CheckRecord]:
        return [c for c in self.checks if not c.passed]

    def to_json(self) -> dict:
        report = {
            "schema": REPORT_SCHEMA,
            "suite": self.suite,
            "status": self.status,
            "config": self.config,
            "summary": {
                "total": len(self.checks),
                "passed": len(self.checks) - len(self.failures),
                "failed": len(self.failures),
            },
            "checks": [c.to_json() for c in self.checks],
        }
        if self.wall_clock is not None:
            report["wall_clock_seconds"] = round(self.wall_clock, 3)
        return report

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, ensure_ascii=False) + "\n"

    def to_markdown(self) -> str:
        """
        Markdown rendering, produced from the JSON form only.
        """
        data = self.to_json()
        summary = data["summary"]
        lines = [
            f"# nctv report: {data['suite']}",
            "",
            f"Status: **{data['status'].upper()}** "
            f"({summary['passed']} of {summary['total']} checks passed)",
            "",
        ]
        if "wall_clock_seconds" in data:
            lines += [f"Wall clock: {data['wall_clock_seconds']} s", ""]

        lines += ["| id | anchor | status | measured | expected | tolerance |", "|---|---|---|---|---|---|"]
        for check in data["checks"]:
            cells = [
                _cell(check["id"]),
                check["anchor"],
                check["status"],
                _cell(check.get("measured")),
                _cell(check.get("expected")),
                _cell(check.get("tolerance")),
            ]
            lines.append("| " + " | ".join(cells) + " |")

        lines += ["", "## Configuration", "", "```json", json.dumps(data["config"], indent=2), "```", ""]
        return "\n".join(lines)

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["id", "anchor", "status", "measured", "expected", "tolerance", "note"])
        for check in self.to_json()["checks"]:
            writer.writerow([
                check["id"],
                check["anchor"],
                check["status"],
                _cell(check.get("measured"), escape=False),
                _cell(check.get("expected"), escape=False),
                _cell(check.get("tolerance"), escape=False),
                check.get("note", ""),
            ])
        return buffer.getvalue()

    def render(self, format: str) -> str:
        """
        :param format: One of "json", "md", "csv"
        """
        if format == "json":
            return self.dumps()
        if format == "md":
            return self.to_markdown()
        if format == "csv":
            return self.to_csv()
        raise ValueError(f"Unknown report format '{format}'")


def _cell(value: Any, escape: bool = True) -> str:
    if value is None:
        return ""
    text = json.dumps(value) if isinstance(value, (list, dict, bool)) else str(value)
    return text.replace("|", "\\|") if escape else text
