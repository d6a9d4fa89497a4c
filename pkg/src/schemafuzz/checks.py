"""Semantic checks over (request, response) pairs, and defect identity.

Each check is an independent predicate derived from HTTP standards or the
operation's declared schema; running a set never short-circuits, so the
failing kinds are order-invariant. Failures map to stable DefectKeys of
(kind, operation, detail class) — with the special rule that undeclared 404
responses collapse to a single per-target key regardless of path, since
random paths would otherwise inflate one routing defect into thousands.

The 302-after-POST method-preservation rule from the catalogue is not
implemented: see CHECKS.md.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from .document import ApiOperation, ResponseSpec, match_response, status_matches
from .transport import HttpResponse, TestCase
from .validation import validate_instance


class CheckKind(str, enum.Enum):
    SERVER_ERROR = "server_error"
    STATUS_CODE_CONFORMANCE = "status_code_conformance"
    CONTENT_TYPE_CONFORMANCE = "content_type_conformance"
    RESPONSE_SCHEMA_CONFORMANCE = "response_schema_conformance"
    MISSING_REQUIRED_HEADER = "missing_required_header"
    EMPTY_BODY_ON_200 = "empty_body_on_200"
    NONEMPTY_BODY_ON_204_205 = "nonempty_body_on_204_205"
    ALLOW_HEADER_ON_405 = "allow_header_on_405"
    NEGATIVE_REQUEST_ACCEPTED = "negative_request_accepted"
    USE_AFTER_FREE = "use_after_free"
    RESOURCE_LEAK = "resource_leak"
    RESPONSE_TIME_EXCEEDED = "response_time_exceeded"
    AMPLIFICATION_EXCEEDED = "amplification_exceeded"


SEQUENCE_CHECKS = frozenset({CheckKind.USE_AFTER_FREE, CheckKind.RESOURCE_LEAK})

DEFAULT_CHECKS = frozenset({
    CheckKind.SERVER_ERROR,
    CheckKind.STATUS_CODE_CONFORMANCE,
    CheckKind.CONTENT_TYPE_CONFORMANCE,
    CheckKind.RESPONSE_SCHEMA_CONFORMANCE,
})

# "all" spans every non-performance check, including negative testing and
# the sequence rules; performance thresholds stay opt-in.
ALL_CHECKS = DEFAULT_CHECKS | {
    CheckKind.MISSING_REQUIRED_HEADER,
    CheckKind.EMPTY_BODY_ON_200,
    CheckKind.NONEMPTY_BODY_ON_204_205,
    CheckKind.ALLOW_HEADER_ON_405,
    CheckKind.NEGATIVE_REQUEST_ACCEPTED,
} | SEQUENCE_CHECKS

NEGATIVE_CHECKS = frozenset({CheckKind.NEGATIVE_REQUEST_ACCEPTED, CheckKind.SERVER_ERROR})

PERFORMANCE_CHECKS = frozenset({
    CheckKind.RESPONSE_TIME_EXCEEDED,
    CheckKind.AMPLIFICATION_EXCEEDED,
})

NAMED_SETS = {
    "default": DEFAULT_CHECKS,
    "all": ALL_CHECKS,
    "negative": NEGATIVE_CHECKS,
    "performance": PERFORMANCE_CHECKS,
}


@dataclass(frozen=True)
class Thresholds:
    max_response_seconds: float = 1.0
    max_amplification_ratio: float = 100.0


@dataclass
class CheckResult:
    kind: str  # CheckKind value, or a custom check's name
    passed: bool
    operation_ref: str
    detail: str = ""
    detail_class: str = ""  # stable dedup class; defaults to detail
    request_summary: str = ""
    response_summary: str = ""

    def __post_init__(self):
        if not self.passed and not self.detail:
            raise ValueError("failing checks need a non-empty detail")
        if not self.detail_class:
            self.detail_class = self.detail


@dataclass(frozen=True)
class DefectKey:
    kind: str
    operation_ref: str
    detail_class: str


@dataclass(frozen=True)
class CustomCheck:
    """User-defined oracle; returns a failure detail string or None to pass."""

    name: str
    predicate: Callable[[TestCase, HttpResponse, ApiOperation], Optional[str]]


def resolve_check_set(spec: str) -> frozenset[CheckKind]:
    """Parse ``default``/``all``/``negative`` or a comma-separated kind list."""
    if spec in NAMED_SETS:
        return frozenset(NAMED_SETS[spec])
    kinds = set()
    for name in spec.split(","):
        name = name.strip()
        if not name:
            continue
        try:
            kinds.add(CheckKind(name))
        except ValueError:
            raise ValueError(f"unknown check kind {name!r}") from None
    if not kinds:
        raise ValueError(f"empty check set {spec!r}")
    return frozenset(kinds)


def run_checks(case: TestCase, response: HttpResponse, op: ApiOperation,
               check_set: frozenset[CheckKind],
               thresholds: Thresholds = Thresholds(),
               custom: tuple[CustomCheck, ...] = ()) -> list[CheckResult]:
    """Evaluate every applicable check independently; one result per check."""
    results: list[CheckResult] = []
    matched = match_response(op.responses, response.status)
    context = _Context(case, response, op, matched, thresholds)

    for kind in sorted(check_set, key=lambda k: k.value):
        if kind in SEQUENCE_CHECKS:
            continue  # evaluated by the stateful runner over session history
        if kind is CheckKind.NEGATIVE_REQUEST_ACCEPTED and case.intent != "negative":
            continue
        checker = _CHECKERS[kind]
        results.append(checker(context))

    for check in custom:
        detail = check.predicate(case, response, op)
        results.append(_result(context, check.name, passed=detail is None,
                               detail=detail or ""))
    return results


@dataclass
class _Context:
    case: TestCase
    response: HttpResponse
    op: ApiOperation
    matched: Optional[ResponseSpec]
    thresholds: Thresholds


def _result(ctx: _Context, kind, passed: bool, detail: str = "",
            detail_class: str = "") -> CheckResult:
    value = kind.value if isinstance(kind, CheckKind) else kind
    return CheckResult(
        kind=value,
        passed=passed,
        operation_ref=ctx.case.operation_ref,
        detail=detail,
        detail_class=detail_class or detail,
        request_summary=f"{ctx.case.method.upper()} {ctx.case.resolved_path}",
        response_summary=f"{ctx.response.status} ({len(ctx.response.body)} bytes)",
    )


def _check_server_error(ctx: _Context) -> CheckResult:
    if 500 <= ctx.response.status <= 599:
        return _result(ctx, CheckKind.SERVER_ERROR, False,
                       detail=f"server error {ctx.response.status}",
                       detail_class=str(ctx.response.status))
    return _result(ctx, CheckKind.SERVER_ERROR, True)


def _check_status_code(ctx: _Context) -> CheckResult:
    declared = list(ctx.op.responses)
    if any(status_matches(ctx.response.status, pattern) for pattern in declared):
        return _result(ctx, CheckKind.STATUS_CODE_CONFORMANCE, True)
    return _result(ctx, CheckKind.STATUS_CODE_CONFORMANCE, False,
                   detail=f"undeclared status {ctx.response.status} "
                          f"(declared: {', '.join(declared)})",
                   detail_class=str(ctx.response.status))


def _check_content_type(ctx: _Context) -> CheckResult:
    kind = CheckKind.CONTENT_TYPE_CONFORMANCE
    if ctx.matched is None or not ctx.matched.content:
        return _result(ctx, kind, True)
    actual = ctx.response.content_type()
    if actual is None:
        if not ctx.response.body:
            return _result(ctx, kind, True)
        return _result(ctx, kind, False, detail="response body has no Content-Type",
                       detail_class="missing")
    declared = [mt.split(";")[0].strip().lower() for mt in ctx.matched.content]
    if actual in declared:
        return _result(ctx, kind, True)
    # structured-syntax +json suffixes count as JSON
    if actual.endswith("+json") and "application/json" in declared:
        return _result(ctx, kind, True)
    return _result(ctx, kind, False,
                   detail=f"undeclared content type {actual!r} "
                          f"(declared: {', '.join(sorted(declared))})",
                   detail_class=actual)


def _is_json_media(media_type: str) -> bool:
    return media_type == "application/json" or media_type.endswith("+json")


def _check_response_schema(ctx: _Context) -> CheckResult:
    kind = CheckKind.RESPONSE_SCHEMA_CONFORMANCE
    if ctx.matched is None or not ctx.matched.content:
        return _result(ctx, kind, True)
    actual = ctx.response.content_type()
    schema = None
    if actual is not None:
        for declared, declared_schema in ctx.matched.content.items():
            base = declared.split(";")[0].strip().lower()
            if base == actual or (actual.endswith("+json") and base == "application/json"):
                schema = declared_schema
                break
    if schema is None or not _is_json_media(actual or ""):
        return _result(ctx, kind, True)  # nothing applicable to validate against
    try:
        parsed = json.loads(ctx.response.body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        return _result(ctx, kind, False, detail="unparseable body",
                       detail_class="unparseable body")
    outcome = validate_instance(schema, parsed)
    if outcome.valid:
        return _result(ctx, kind, True)
    first = outcome.violations[0]
    return _result(ctx, kind, False,
                   detail=f"body violates schema at {first.path or '/'}: "
                          f"{first.keyword}: {first.message}",
                   detail_class=f"{first.keyword}@{first.path}")


def _check_missing_required_header(ctx: _Context) -> CheckResult:
    kind = CheckKind.MISSING_REQUIRED_HEADER
    if ctx.matched is None:
        return _result(ctx, kind, True)
    missing = sorted(
        name for name, spec in ctx.matched.required_headers.items()
        if spec.required and ctx.response.header(name) is None)
    if missing:
        return _result(ctx, kind, False,
                       detail=f"missing required response headers: {', '.join(missing)}",
                       detail_class=",".join(missing))
    return _result(ctx, kind, True)


def _check_empty_body_on_200(ctx: _Context) -> CheckResult:
    kind = CheckKind.EMPTY_BODY_ON_200
    if ctx.response.status == 200 and not ctx.response.body:
        return _result(ctx, kind, False, detail="200 OK with empty body",
                       detail_class="empty-200")
    return _result(ctx, kind, True)


def _check_nonempty_body_on_204_205(ctx: _Context) -> CheckResult:
    kind = CheckKind.NONEMPTY_BODY_ON_204_205
    if ctx.response.status in (204, 205) and ctx.response.body:
        return _result(ctx, kind, False,
                       detail=f"{ctx.response.status} response carries a body "
                              f"({len(ctx.response.body)} bytes)",
                       detail_class=str(ctx.response.status))
    return _result(ctx, kind, True)


def _check_allow_header_on_405(ctx: _Context) -> CheckResult:
    kind = CheckKind.ALLOW_HEADER_ON_405
    if ctx.response.status == 405 and ctx.response.header("Allow") is None:
        return _result(ctx, kind, False, detail="405 without an Allow header",
                       detail_class="missing-allow")
    return _result(ctx, kind, True)


def _check_negative_accepted(ctx: _Context) -> CheckResult:
    kind = CheckKind.NEGATIVE_REQUEST_ACCEPTED
    if 200 <= ctx.response.status <= 299:
        return _result(ctx, kind, False,
                       detail=f"schema-violating request accepted with "
                              f"{ctx.response.status} ({ctx.case.provenance})",
                       detail_class="accepted")
    return _result(ctx, kind, True)


def _check_response_time(ctx: _Context) -> CheckResult:
    kind = CheckKind.RESPONSE_TIME_EXCEEDED
    limit = ctx.thresholds.max_response_seconds
    if ctx.response.elapsed > limit:
        return _result(ctx, kind, False,
                       detail=f"response took {ctx.response.elapsed:.3f}s > {limit:.3f}s",
                       detail_class="slow")
    return _result(ctx, kind, True)


def _check_amplification(ctx: _Context) -> CheckResult:
    kind = CheckKind.AMPLIFICATION_EXCEEDED
    request_bytes = max(1, len(ctx.case.render("http://target")))
    ratio = len(ctx.response.body) / request_bytes
    if ratio > ctx.thresholds.max_amplification_ratio:
        return _result(ctx, kind, False,
                       detail=f"amplification {ratio:.1f}x > "
                              f"{ctx.thresholds.max_amplification_ratio:.1f}x",
                       detail_class="amplified")
    return _result(ctx, kind, True)


_CHECKERS = {
    CheckKind.SERVER_ERROR: _check_server_error,
    CheckKind.STATUS_CODE_CONFORMANCE: _check_status_code,
    CheckKind.CONTENT_TYPE_CONFORMANCE: _check_content_type,
    CheckKind.RESPONSE_SCHEMA_CONFORMANCE: _check_response_schema,
    CheckKind.MISSING_REQUIRED_HEADER: _check_missing_required_header,
    CheckKind.EMPTY_BODY_ON_200: _check_empty_body_on_200,
    CheckKind.NONEMPTY_BODY_ON_204_205: _check_nonempty_body_on_204_205,
    CheckKind.ALLOW_HEADER_ON_405: _check_allow_header_on_405,
    CheckKind.NEGATIVE_REQUEST_ACCEPTED: _check_negative_accepted,
    CheckKind.RESPONSE_TIME_EXCEEDED: _check_response_time,
    CheckKind.AMPLIFICATION_EXCEEDED: _check_amplification,
}

_UNEXPECTED_404 = "unexpected-404"


def defect_key(result: CheckResult) -> DefectKey:
    """Stable identity for a failing check; pure across processes.

    Undeclared-404 reports collapse to one per-target key ignoring the path
    and operation, so randomised paths cannot inflate the defect count.
    """
    if result.passed:
        raise ValueError("defect_key is defined for failing results only")
    if (result.kind == CheckKind.STATUS_CODE_CONFORMANCE.value
            and result.detail_class == "404"):
        return DefectKey(result.kind, "*", _UNEXPECTED_404)
    return DefectKey(result.kind, result.operation_ref, result.detail_class)
