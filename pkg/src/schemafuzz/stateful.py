"""Link-driven stateful testing over OpenAPI runtime expressions.

A state machine whose nodes are operations and whose transitions are the
document's links. Sequences draw every decision (start operation, follow a
link or start fresh, generated values) from one ChoiceSequence, so a stored
tape replays the whole sequence. Session history feeds the two sequence
rules: a 2xx GET of a resource after its successful DELETE (use-after-free)
and a 2xx GET of a resource whose creating POST failed (resource leak).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any, Optional

from .checks import CheckKind, CheckResult, CustomCheck, Thresholds, run_checks
from .choices import ChoiceSequence
from .document import ApiOperation, LinkGraph, LinkSpec, status_matches
from .errors import EvaluationError, InvalidExpression, NoEnabledTransition
from .jsontools import resolve_pointer
from .transport import DEFAULT_TIMEOUT, HttpResponse, TestCase, Transport

_NAME_RE = re.compile(r"[A-Za-z0-9_\-]+")

LINK_FOLLOW_BIAS = 0.8  # prefer an enabled link over a fresh start


@dataclass(frozen=True)
class RuntimeExpression:
    """Parsed form of the OpenAPI runtime expressions this engine evaluates."""

    source: str  # response.body | response.header | request.path | request.query | request.body
    name: Optional[str] = None  # header or parameter name
    pointer: Optional[str] = None  # JSON pointer fragment, or None when absent

    def render(self) -> str:
        scope, _, attribute = self.source.partition(".")
        text = f"${scope}.{attribute}"
        if self.name is not None:
            text += f".{self.name}"
        if self.pointer is not None:
            text += f"#{self.pointer}"
        return text


def parse_runtime_expression(expression: str) -> RuntimeExpression:
    """Parse ``$response.body#/id`` style expressions; InvalidExpression otherwise."""
    if not expression:
        raise InvalidExpression(expression, 0, "empty expression")
    if not expression.startswith("$"):
        raise InvalidExpression(expression, 0, "expected '$'")
    body, pointer = expression, None
    if "#" in expression:
        body, _, fragment = expression.partition("#")
        if fragment and not fragment.startswith("/"):
            raise InvalidExpression(expression, len(body) + 1,
                                    "fragment must be a JSON pointer")
        pointer = fragment

    if body == "$response.body" or body == "$request.body":
        return RuntimeExpression(source=body[1:], pointer=pointer)
    if pointer is not None:
        raise InvalidExpression(expression, len(body) + 1,
                                "only body expressions take a fragment")

    for prefix, source in (("$response.header.", "response.header"),
                           ("$request.path.", "request.path"),
                           ("$request.query.", "request.query")):
        if body.startswith(prefix):
            name = body[len(prefix):]
            if not name or not _NAME_RE.fullmatch(name):
                raise InvalidExpression(expression, len(prefix), "bad name")
            return RuntimeExpression(source=source, name=name)
    raise InvalidExpression(expression, 1, "unknown expression source")


def evaluate_expression(expr: RuntimeExpression, case: TestCase,
                        response: HttpResponse) -> Any:
    """Extract the referenced value from a captured (request, response) pair."""
    if expr.source == "response.body":
        return _pointer_into_body(expr, response.body, "response body")
    if expr.source == "request.body":
        if case.body_value is None and case.body is None:
            raise EvaluationError("request had no body")
        value = case.body_value
        return _apply_pointer(expr, value, "request body")
    if expr.source == "response.header":
        value = response.header(expr.name)
        if value is None:
            raise EvaluationError(f"response header {expr.name!r} absent")
        return value
    if expr.source in ("request.path", "request.query"):
        if expr.name not in case.parameter_values:
            raise EvaluationError(f"request parameter {expr.name!r} absent")
        return case.parameter_values[expr.name]
    raise EvaluationError(f"unsupported source {expr.source!r}")


def _pointer_into_body(expr: RuntimeExpression, body: bytes, what: str) -> Any:
    try:
        value = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise EvaluationError(f"{what} is not JSON: {exc}") from exc
    return _apply_pointer(expr, value, what)


def _apply_pointer(expr: RuntimeExpression, value: Any, what: str) -> Any:
    if expr.pointer in (None, ""):
        return value
    try:
        return resolve_pointer(value, expr.pointer)
    except KeyError:
        raise EvaluationError(f"pointer {expr.pointer!r} absent from {what}") from None


# --- state machine ----------------------------------------------------------------

@dataclass
class Transition:
    source: str
    status_pattern: str
    link: LinkSpec
    target: str
    parameter_expressions: dict[str, RuntimeExpression] = field(default_factory=dict)
    body_expression: Optional[RuntimeExpression] = None


@dataclass
class StateMachine:
    nodes: dict[str, ApiOperation]
    transitions: list[Transition] = field(default_factory=list)
    start: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def outgoing(self, key: str) -> list[Transition]:
        return [t for t in self.transitions if t.source == key]


def build_state_machine(graph: LinkGraph) -> StateMachine:
    """Compile a link graph into transitions with pre-parsed expressions."""
    machine = StateMachine(nodes=dict(graph.nodes), warnings=list(graph.warnings))
    machine.start = sorted(machine.nodes)
    for edge in graph.edges:
        expressions: dict[str, RuntimeExpression] = {}
        try:
            for target_param, raw in edge.link.parameter_bindings.items():
                # names may be location-qualified ("path.id")
                name = target_param.split(".", 1)[1] if "." in target_param else target_param
                expressions[name] = parse_runtime_expression(raw)
            body_expr = (parse_runtime_expression(edge.link.body_binding)
                         if edge.link.body_binding else None)
        except InvalidExpression as exc:
            machine.warnings.append(
                f"link {edge.link.name!r} on {edge.source}: {exc}; edge dropped")
            continue
        machine.transitions.append(Transition(
            source=edge.source,
            status_pattern=edge.status_pattern,
            link=edge.link,
            target=edge.target,
            parameter_expressions=expressions,
            body_expression=body_expr,
        ))
    return machine


# --- session state -----------------------------------------------------------------

ResourceId = tuple[str, tuple[tuple[str, str], ...]]


@dataclass
class SessionState:
    history: list[tuple[TestCase, HttpResponse]] = field(default_factory=list)
    created_resources: dict[str, set[ResourceId]] = field(default_factory=dict)
    deleted_resources: set[ResourceId] = field(default_factory=set)
    leaked_candidates: set[ResourceId] = field(default_factory=set)
    ended_early: bool = False  # no enabled transition before max_steps


def resource_identity(op: ApiOperation, values: dict[str, Any]) -> Optional[ResourceId]:
    """(path template, resolved path-parameter values); None if incomplete."""
    names = op.path_parameter_names()
    if not names:
        return None
    try:
        resolved = tuple(sorted((name, str(values[name])) for name in names))
    except KeyError:
        return None
    return (op.path_template, resolved)


# --- sequence execution --------------------------------------------------------------

def run_sequence(machine: StateMachine, cs: ChoiceSequence, max_steps: int,
                 check_set: frozenset, transport: Transport, base_url: str,
                 case_factory, *,
                 timeout: float = DEFAULT_TIMEOUT,
                 thresholds: Thresholds = Thresholds(),
                 custom_checks: tuple[CustomCheck, ...] = (),
                 track_unowned_resources: bool = True) -> tuple[SessionState, list[CheckResult]]:
    """Execute up to ``max_steps`` transitions chosen through ``cs``.

    ``case_factory(op, cs, bound_values, bound_body, body_bound)`` builds the
    TestCase for a step (the engine supplies one that runs the generator);
    ``body_bound`` distinguishes a bound null body from no binding. When no
    link transition is enabled after a step the sequence ends early; fresh
    starts happen only on the exploration side of the link-follow bias.

    ``track_unowned_resources`` enables the sequence rules for resources the
    session did not create itself; disable against live, non-reset targets.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    if not machine.start:
        raise NoEnabledTransition("state machine has no start operations")

    state = SessionState()
    results: list[CheckResult] = []
    op = machine.nodes[cs.choose(machine.start)]
    bound_values: dict[str, Any] = {}
    bound_body: Any = _UNBOUND

    for _step in range(max_steps):
        case = case_factory(op, cs, dict(bound_values),
                            None if bound_body is _UNBOUND else bound_body,
                            bound_body is not _UNBOUND)
        response = transport.send(case, base_url, timeout)
        results.extend(run_checks(case, response, op, check_set,
                                  thresholds=thresholds, custom=custom_checks))
        results.extend(_sequence_checks(state, op, case, response, check_set,
                                        track_unowned_resources))
        _track_resources(machine, state, op, case, response, track_unowned_resources)
        state.history.append((case, response))

        enabled = _enabled_transitions(machine, op, case, response)
        if not enabled:
            state.ended_early = True
            break
        if cs.draw_bool(LINK_FOLLOW_BIAS):
            transition, values, body = enabled[
                cs.draw_integer(0, len(enabled) - 1)]
            op = machine.nodes[transition.target]
            bound_values, bound_body = values, body
        else:
            op = machine.nodes[cs.choose(machine.start)]
            bound_values, bound_body = {}, _UNBOUND
    return state, results


_UNBOUND = object()


def _enabled_transitions(machine: StateMachine, op: ApiOperation,
                         case: TestCase, response: HttpResponse):
    """Transitions whose status matches and whose bindings all evaluate."""
    enabled = []
    for transition in machine.outgoing(op.key):
        if not status_matches(response.status, transition.status_pattern):
            continue
        try:
            values = {name: evaluate_expression(expr, case, response)
                      for name, expr in transition.parameter_expressions.items()}
            body = (evaluate_expression(transition.body_expression, case, response)
                    if transition.body_expression else _UNBOUND)
        except EvaluationError:
            continue  # skipped, not failed
        enabled.append((transition, values, body))
    enabled.sort(key=lambda item: (item[0].target, item[0].link.name))
    return enabled


def _track_resources(machine: StateMachine, state: SessionState, op: ApiOperation,
                     case: TestCase, response: HttpResponse,
                     track_unowned: bool) -> None:
    ok = 200 <= response.status < 300
    if op.method == "post":
        # ids flow through this operation's links to the resources they name
        for transition in machine.outgoing(op.key):
            if not status_matches(response.status, transition.status_pattern):
                continue
            try:
                values = {name: evaluate_expression(expr, case, response)
                          for name, expr in transition.parameter_expressions.items()}
            except EvaluationError:
                continue
            target = machine.nodes[transition.target]
            identity = resource_identity(target, values)
            if identity is None:
                continue
            if ok:
                state.created_resources.setdefault(op.key, set()).add(identity)
                state.deleted_resources.discard(identity)
                state.leaked_candidates.discard(identity)
            else:
                state.leaked_candidates.add(identity)
    elif op.method == "delete" and ok:
        identity = resource_identity(op, case.parameter_values)
        if identity is None:
            return
        owned = any(identity in created for created in state.created_resources.values())
        if owned or track_unowned:
            state.deleted_resources.add(identity)


def _sequence_checks(state: SessionState, op: ApiOperation, case: TestCase,
                     response: HttpResponse, check_set: frozenset,
                     track_unowned: bool) -> list[CheckResult]:
    results: list[CheckResult] = []
    if op.method != "get":
        return results
    identity = resource_identity(op, case.parameter_values)
    if identity is None:
        return results
    ok = 200 <= response.status < 300
    summary_req = f"{case.method.upper()} {case.resolved_path}"
    summary_resp = f"{response.status} ({len(response.body)} bytes)"

    if CheckKind.USE_AFTER_FREE in check_set:
        failed = ok and identity in state.deleted_resources
        results.append(CheckResult(
            kind=CheckKind.USE_AFTER_FREE.value,
            passed=not failed,
            operation_ref=op.key,
            detail=(f"GET of {identity[0]} succeeded after its successful DELETE"
                    if failed else ""),
            detail_class=identity[0] if failed else "",
            request_summary=summary_req,
            response_summary=summary_resp,
        ))
    if CheckKind.RESOURCE_LEAK in check_set:
        failed = ok and identity in state.leaked_candidates
        results.append(CheckResult(
            kind=CheckKind.RESOURCE_LEAK.value,
            passed=not failed,
            operation_ref=op.key,
            detail=(f"GET of {identity[0]} succeeded although its creating "
                    f"POST was rejected" if failed else ""),
            detail_class=identity[0] if failed else "",
            request_summary=summary_req,
            response_summary=summary_resp,
        ))
    return results
