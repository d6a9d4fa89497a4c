"""Campaign results: deduplicated defects, reproductions, and serialisation.

The JSON format is versioned (``report_version: 1``) and round-trips
losslessly through parse_report. The text format prints one copy-pasteable
reproduction per defect, Table-style: a defect is a (kind, operation,
detail-class) key with exactly one minimal reproduction no matter how often
it was observed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from typing import Optional

from .checks import DefectKey

REPORT_VERSION = 1


@dataclass
class RenderedStep:
    """Human-readable view of one request in a reproduction."""

    method: str
    path: str
    curl: str
    intent: str = "positive"


@dataclass
class Reproduction:
    mode: str  # "unit" | "sequence"
    operation_ref: str
    intent: str
    choice_bytes: bytes
    steps: list[RenderedStep] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "operation": self.operation_ref,
            "intent": self.intent,
            "choice_bytes_hex": self.choice_bytes.hex(),
            "steps": [asdict(step) for step in self.steps],
        }

    @classmethod
    def from_json(cls, data: dict) -> "Reproduction":
        return cls(
            mode=data["mode"],
            operation_ref=data["operation"],
            intent=data["intent"],
            choice_bytes=bytes.fromhex(data["choice_bytes_hex"]),
            steps=[RenderedStep(**step) for step in data["steps"]],
        )


@dataclass
class Defect:
    key: DefectKey
    detail: str
    first_seen: dict
    minimal_reproduction: Reproduction
    occurrences: int = 1
    flaky: bool = False

    def to_json(self) -> dict:
        return {
            "kind": self.key.kind,
            "operation": self.key.operation_ref,
            "detail_class": self.key.detail_class,
            "detail": self.detail,
            "first_seen": self.first_seen,
            "occurrences": self.occurrences,
            "flaky": self.flaky,
            "minimal_reproduction": self.minimal_reproduction.to_json(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "Defect":
        return cls(
            key=DefectKey(data["kind"], data["operation"], data["detail_class"]),
            detail=data["detail"],
            first_seen=dict(data["first_seen"]),
            minimal_reproduction=Reproduction.from_json(data["minimal_reproduction"]),
            occurrences=data["occurrences"],
            flaky=data["flaky"],
        )


@dataclass
class RunReport:
    target: str
    config: dict
    per_operation: dict[str, dict] = field(default_factory=dict)
    defects: list[Defect] = field(default_factory=list)
    infrastructure_errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    responses_received: int = 0
    wall_clock_seconds: float = 0.0
    report_version: int = REPORT_VERSION

    def defect_keys(self) -> set[DefectKey]:
        return {defect.key for defect in self.defects}

    def exit_code(self) -> int:
        if self.infrastructure_errors and self.responses_received == 0:
            return 2
        return 1 if self.defects else 0

    def to_json(self) -> dict:
        return {
            "report_version": self.report_version,
            "target": self.target,
            "config": self.config,
            "per_operation": self.per_operation,
            "defects": [defect.to_json() for defect in self.defects],
            "infrastructure_errors": list(self.infrastructure_errors),
            "warnings": list(self.warnings),
            "responses_received": self.responses_received,
            "wall_clock_seconds": self.wall_clock_seconds,
            "exit_code": self.exit_code(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "RunReport":
        return cls(
            target=data["target"],
            config=dict(data["config"]),
            per_operation={key: dict(value) for key, value in data["per_operation"].items()},
            defects=[Defect.from_json(entry) for entry in data["defects"]],
            infrastructure_errors=list(data["infrastructure_errors"]),
            warnings=list(data["warnings"]),
            responses_received=data["responses_received"],
            wall_clock_seconds=data["wall_clock_seconds"],
            report_version=data["report_version"],
        )


def emit_report(report: RunReport, format: str = "text") -> bytes:
    if format == "json":
        return json.dumps(report.to_json(), indent=2, sort_keys=True).encode("utf-8")
    if format != "text":
        raise ValueError(f"unknown report format {format!r}")
    return _emit_text(report).encode("utf-8")


def parse_report(data: bytes) -> RunReport:
    return RunReport.from_json(json.loads(data.decode("utf-8")))


def _emit_text(report: RunReport) -> str:
    lines = [
        f"schemafuzz report (v{report.report_version})",
        f"target: {report.target}",
        f"operations fuzzed: {len(report.per_operation)}  "
        f"responses: {report.responses_received}  "
        f"wall clock: {report.wall_clock_seconds:.2f}s",
        "",
    ]
    if report.warnings:
        lines.append(f"warnings ({len(report.warnings)}):")
        lines.extend(f"  - {w}" for w in report.warnings)
        lines.append("")
    if report.infrastructure_errors:
        lines.append(f"infrastructure errors ({len(report.infrastructure_errors)}):")
        lines.extend(f"  - {e}" for e in report.infrastructure_errors[:20])
        if len(report.infrastructure_errors) > 20:
            lines.append(f"  ... and {len(report.infrastructure_errors) - 20} more")
        lines.append("")
    if not report.defects:
        lines.append("no defects found")
        return "\n".join(lines) + "\n"

    lines.append(f"defects ({len(report.defects)} unique):")
    for index, defect in enumerate(report.defects, 1):
        flaky = " [flaky]" if defect.flaky else ""
        lines.append("")
        lines.append(f"[{index}] {defect.key.kind} @ {defect.key.operation_ref}{flaky}")
        lines.append(f"    {defect.detail}")
        lines.append(f"    seen {defect.occurrences}x; reproduction"
                     f" ({defect.minimal_reproduction.mode}):")
        for step in defect.minimal_reproduction.steps:
            lines.append(f"      {step.curl}")
    return "\n".join(lines) + "\n"
