"""Campaign orchestration: fuzz loops, shrinking, dedup, and reporting.

Every example gets its own deterministic choice tape, seeded from
(campaign seed, operation key, example index), so results are identical
across runs, worker counts, and stop policies — early stopping merely
truncates an operation's example stream, which is why exhaustive mode
always finds a superset of first-failure mode's defects.

A defect key's first failing tape is shrunk by replaying candidate tapes
against the target (in-process by default; suppressible for live targets
where replays have side effects) and deduplicated into one Defect with
exactly one minimal reproduction.
"""

from __future__ import annotations

import fnmatch
import hashlib
import json
import logging
import random
import threading
import time
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dataclass_field
from pathlib import Path
from typing import Any, Optional, Union

from .checks import (
    ALL_CHECKS,
    CheckKind,
    CheckResult,
    CustomCheck,
    DefectKey,
    PERFORMANCE_CHECKS,
    Thresholds,
    defect_key,
    resolve_check_set,
    run_checks,
)
from .choices import ChoiceSequence
from .document import (
    ApiDocument,
    ApiOperation,
    extract_link_graph,
    extract_operations,
    load_document,
    resolve_references,
)
from .errors import (
    ExhaustedRejectionBudget,
    FatalSchemaError,
    NoEnabledTransition,
    NothingToNegate,
    NotReproducible,
    SchemafuzzError,
    TransportError,
    UnknownMediaType,
    UnsatisfiableSchema,
)
from .generation import DEFAULT_BUDGET, FormatRegistry, GenerationBudget
from .opcases import OperationGenerator
from .report import Defect, RenderedStep, Reproduction, RunReport, emit_report
from .shrink import shrink_failure
from .stateful import build_state_machine, run_sequence
from .transport import DEFAULT_TIMEOUT, TestCase, Transport
from . import __version__

logger = logging.getLogger(__name__)

_TARGET_KEEP = 5        # best-of-K tapes kept for metric-guided re-mutation
_TARGET_MUTATE_P = 0.3  # chance a new example mutates a kept tape


@dataclass
class CampaignConfig:
    base_url: str = "http://127.0.0.1"
    check_set: Union[str, frozenset] = "default"
    max_examples_per_operation: int = 20
    seed: int = 0
    mode: str = "unit"  # unit | stateful | both
    stop_policy: str = "first_failure_per_operation"  # or "exhaustive"
    workers: int = 1
    include_paths: tuple[str, ...] = ()
    exclude_paths: tuple[str, ...] = ()
    headers: tuple[tuple[str, str], ...] = ()
    thresholds: Thresholds = Thresholds()
    timeout: float = DEFAULT_TIMEOUT
    max_recursion_depth: int = 3
    max_steps: int = 6
    stateful_sequences: Optional[int] = None  # defaults to max_examples
    shrink_enabled: Optional[bool] = None  # None: on in-process, off over the network
    shrink_budget: int = 2000
    reset_path: Optional[str] = None  # POSTed between sequences and replays
    target_is_reset_isolated: bool = False
    generation_budget: GenerationBudget = DEFAULT_BUDGET
    format_registry: Optional[FormatRegistry] = None
    custom_checks: tuple[CustomCheck, ...] = ()
    schema_patches: dict = dataclass_field(default_factory=dict)  # op key -> patch
    value_filters: dict = dataclass_field(default_factory=dict)   # op key -> callable

    def __post_init__(self):
        if self.max_examples_per_operation < 1:
            raise ValueError("max_examples_per_operation must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.mode not in ("unit", "stateful", "both"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.stop_policy not in ("first_failure_per_operation", "exhaustive"):
            raise ValueError(f"unknown stop policy {self.stop_policy!r}")

    def resolved_checks(self) -> frozenset:
        if isinstance(self.check_set, str):
            return resolve_check_set(self.check_set)
        return frozenset(self.check_set)

    def echo(self) -> dict:
        return {
            "schemafuzz_version": __version__,
            "base_url": self.base_url,
            "checks": sorted(k.value for k in self.resolved_checks()),
            "max_examples_per_operation": self.max_examples_per_operation,
            "seed": self.seed,
            "mode": self.mode,
            "stop_policy": self.stop_policy,
            "workers": self.workers,
            "include_paths": list(self.include_paths),
            "exclude_paths": list(self.exclude_paths),
            "max_steps": self.max_steps,
            "max_recursion_depth": self.max_recursion_depth,
        }


def _derive_seed(*parts) -> int:
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(digest[:8], "big")


def load_schema_bytes(source: Union[str, bytes, dict]) -> tuple[bytes, str, str]:
    """Fetch/serialise a schema source once; returns (bytes, format hint, label)."""
    if isinstance(source, dict):
        return json.dumps(source).encode("utf-8"), "json", "<dict>"
    if isinstance(source, bytes):
        return source, "auto", "<bytes>"
    if source.startswith(("http://", "https://")):
        with urllib.request.urlopen(source) as response:  # fetched once at startup
            return response.read(), "auto", source
    path = Path(source)
    hint = {"json": "json", "yaml": "yaml", "yml": "yaml"}.get(
        path.suffix.lstrip(".").lower(), "auto")
    return path.read_bytes(), hint, str(path)


class Engine:
    """One configured campaign against one target."""

    def __init__(self, schema_source: Union[str, bytes, dict],
                 config: CampaignConfig, transport: Transport):
        self.config = config
        self.transport = transport
        self.check_set = config.resolved_checks()
        self.formats = (config.format_registry if config.format_registry is not None
                        else FormatRegistry.with_builtins())
        self.warnings: list[str] = []

        data, hint, label = load_schema_bytes(schema_source)
        self.target_label = label
        document = load_document(data, hint)
        self.document: ApiDocument = resolve_references(
            document, config.max_recursion_depth)

        extraction = extract_operations(self.document)
        self.warnings.extend(extraction.warnings)
        self.warnings.extend(
            f"skipped {method.upper()} {path}: {reason}"
            for path, method, reason in extraction.skipped)
        if not extraction.operations:
            raise FatalSchemaError("no operations could be extracted from the schema")

        selected = [op for op in extraction.operations
                    if self._path_selected(op.path_template)]
        if not selected:
            raise FatalSchemaError("path filters excluded every operation")

        self.operations: dict[str, ApiOperation] = {}
        self.generators: dict[str, OperationGenerator] = {}
        for op in selected:
            try:
                generator = OperationGenerator(
                    op,
                    formats=self.formats,
                    budget=config.generation_budget,
                    extra_headers=tuple(config.headers),
                    schema_patch=config.schema_patches.get(op.key),
                    value_filter=config.value_filters.get(op.key),
                )
            except (UnsatisfiableSchema, UnknownMediaType, SchemafuzzError) as exc:
                self.warnings.append(f"cannot generate for {op.key}: {exc}")
                continue
            self.warnings.extend(generator.warnings)
            self.operations[op.key] = op
            self.generators[op.key] = generator
        if not self.operations:
            raise FatalSchemaError("no operation is generatable")

        self._lock = threading.Lock()
        self._defects: dict[DefectKey, Defect] = {}
        self._infra: list[str] = []
        self._stats: dict[str, dict] = {}
        self._responses = 0

    # --- public API ---

    def run(self) -> RunReport:
        started = time.monotonic()
        if self.config.mode in ("unit", "both"):
            self._run_unit_phase()
        if self.config.mode in ("stateful", "both"):
            self._run_stateful_phase()
        report = RunReport(
            target=f"{self.config.base_url} (schema: {self.target_label})",
            config=self.config.echo(),
            per_operation={key: dict(self._stats.get(key, {}))
                           for key in sorted(self.operations)},
            defects=sorted(self._defects.values(),
                           key=lambda d: (d.key.kind, d.key.operation_ref,
                                          d.key.detail_class)),
            infrastructure_errors=list(self._infra),
            warnings=list(self.warnings),
            responses_received=self._responses,
            wall_clock_seconds=time.monotonic() - started,
        )
        return report

    def replay_defect(self, defect: Defect) -> set[DefectKey]:
        """Re-execute a stored reproduction; returns the defect keys it triggers."""
        repro = defect.minimal_reproduction
        cs = ChoiceSequence.replay(repro.choice_bytes)
        if repro.mode == "unit":
            generator = self.generators[repro.operation_ref]
            case = generator.build(cs, repro.intent)
            response = self.transport.send(case, self.config.base_url,
                                           self.config.timeout)
            results = self._checks(case, response, generator.op)
            return {defect_key(r) for r in results if not r.passed}
        machine = self._machine()
        _state, results = run_sequence(
            machine, cs, self.config.max_steps, self.check_set,
            self.transport, self.config.base_url, self._sequence_case_factory,
            timeout=self.config.timeout, thresholds=self.config.thresholds,
            custom_checks=self.config.custom_checks,
            track_unowned_resources=self._track_unowned())
        return {defect_key(r) for r in results if not r.passed}

    # --- shared helpers ---

    def _path_selected(self, path: str) -> bool:
        if self.config.include_paths and not any(
                fnmatch.fnmatch(path, glob) for glob in self.config.include_paths):
            return False
        return not any(fnmatch.fnmatch(path, glob) for glob in self.config.exclude_paths)

    def _checks(self, case: TestCase, response, op: ApiOperation) -> list[CheckResult]:
        return run_checks(case, response, op, self.check_set,
                          thresholds=self.config.thresholds,
                          custom=self.config.custom_checks)

    def _shrink_allowed(self) -> bool:
        if self.config.shrink_enabled is not None:
            return self.config.shrink_enabled
        # heuristic: replays are safe in-process, side-effecting over the network
        return type(self.transport).__name__ != "NetworkTransport"

    def _track_unowned(self) -> bool:
        return self.config.target_is_reset_isolated

    def _negatives_enabled(self) -> bool:
        return CheckKind.NEGATIVE_REQUEST_ACCEPTED in self.check_set

    def _performance_enabled(self) -> bool:
        return bool(self.check_set & PERFORMANCE_CHECKS)

    def _bump(self, op_key: str, field_name: str, amount: int = 1) -> None:
        with self._lock:
            stats = self._stats.setdefault(
                op_key, {"examples": 0, "checks": 0, "failures": 0})
            stats[field_name] = stats.get(field_name, 0) + amount

    def _record_infra(self, message: str) -> None:
        with self._lock:
            self._infra.append(message)

    # --- unit phase ---

    def _run_unit_phase(self) -> None:
        keys = sorted(self.operations)
        if self.config.workers == 1:
            for key in keys:
                self._fuzz_operation(key)
            return
        with ThreadPoolExecutor(max_workers=self.config.workers) as pool:
            list(pool.map(self._fuzz_operation, keys))

    def _fuzz_operation(self, op_key: str) -> None:
        generator = self.generators[op_key]
        negatives = self._negatives_enabled() and generator.negatable
        best_tapes: list[tuple[float, bytes]] = []

        for index in range(self.config.max_examples_per_operation):
            rng = random.Random(_derive_seed(self.config.seed, op_key, index))
            intent = "negative" if negatives and index % 2 == 1 else "positive"
            cs = self._example_tape(rng, best_tapes)
            try:
                case = generator.build(cs, intent)
            except (ExhaustedRejectionBudget, NothingToNegate, UnsatisfiableSchema) as exc:
                self.warnings.append(f"{op_key} example {index}: {exc}")
                continue
            try:
                response = self.transport.send(case, self.config.base_url,
                                               self.config.timeout)
            except TransportError as exc:
                self._record_infra(f"{op_key} example {index}: {exc}")
                continue
            with self._lock:
                self._responses += 1
            self._bump(op_key, "examples")
            results = self._checks(case, response, generator.op)
            self._bump(op_key, "checks", len(results))
            self._note_metric(best_tapes, case, response)

            failures = [r for r in results if not r.passed]
            for result in failures:
                self._bump(op_key, "failures")
                self._record_unit_failure(generator, intent, index, case, result)
            if failures and self.config.stop_policy == "first_failure_per_operation":
                break

    def _example_tape(self, rng: random.Random,
                      best_tapes: list[tuple[float, bytes]]) -> ChoiceSequence:
        if (self._performance_enabled() and best_tapes
                and rng.random() < _TARGET_MUTATE_P):
            _, tape = best_tapes[rng.randrange(len(best_tapes))]
            return ChoiceSequence.replay(self._mutate_tape(rng, tape))
        return ChoiceSequence.from_rng(rng)

    @staticmethod
    def _mutate_tape(rng: random.Random, tape: bytes) -> bytes:
        data = bytearray(tape)
        if not data:
            return rng.randbytes(8)
        for _ in range(rng.randint(1, max(1, len(data) // 8))):
            data[rng.randrange(len(data))] = rng.randrange(256)
        if rng.random() < 0.3:
            data.extend(rng.randbytes(rng.randint(1, 8)))
        return bytes(data)

    def _note_metric(self, best_tapes: list, case: TestCase, response) -> None:
        if not self._performance_enabled() or case.choice_sequence is None:
            return
        metric = response.elapsed
        if CheckKind.AMPLIFICATION_EXCEEDED in self.check_set:
            metric = max(metric, len(response.body) / max(1, len(case.render("http://t"))))
        best_tapes.append((metric, case.choice_sequence.bytes))
        best_tapes.sort(key=lambda item: -item[0])
        del best_tapes[_TARGET_KEEP:]

    def _record_unit_failure(self, generator: OperationGenerator, intent: str,
                             index: int, case: TestCase, result: CheckResult) -> None:
        key = defect_key(result)
        with self._lock:
            existing = self._defects.get(key)
            if existing is not None:
                existing.occurrences += 1
                return
            # reserve the key so parallel workers do not shrink it twice
            placeholder = self._make_unit_defect(
                key, result, intent, index, case, case.choice_sequence.bytes,
                generator, flaky=False)
            self._defects[key] = placeholder
        if self._shrink_allowed():
            defect = self._shrink_unit_defect(generator, intent, index, key,
                                              result, case)
            with self._lock:
                defect.occurrences = self._defects[key].occurrences
                self._defects[key] = defect

    def _make_unit_defect(self, key, result, intent, index, case, tape,
                          generator, flaky) -> Defect:
        return Defect(
            key=key,
            detail=result.detail,
            first_seen={"mode": "unit", "operation": generator.op.key,
                        "example_index": index},
            minimal_reproduction=Reproduction(
                mode="unit",
                operation_ref=generator.op.key,
                intent=intent,
                choice_bytes=tape,
                steps=[self._render_step(case)],
            ),
            flaky=flaky,
        )

    def _render_step(self, case: TestCase) -> RenderedStep:
        return RenderedStep(
            method=case.method.upper(),
            path=case.resolved_path,
            curl=case.as_curl(self.config.base_url),
            intent=case.intent,
        )

    def _shrink_unit_defect(self, generator, intent, index, key, result,
                            original_case) -> Defect:
        def predicate(tape: bytes) -> bool:
            try:
                candidate = generator.build(ChoiceSequence.replay(tape), intent)
                response = self.transport.send(candidate, self.config.base_url,
                                               self.config.timeout)
            except SchemafuzzError:
                return False
            results = self._checks(candidate, response, generator.op)
            return any(defect_key(r) == key for r in results if not r.passed)

        original = original_case.choice_sequence.bytes
        try:
            minimal = shrink_failure(original, predicate, self.config.shrink_budget)
        except NotReproducible:
            return self._make_unit_defect(key, result, intent, index,
                                          original_case, original, generator,
                                          flaky=True)
        final_case = generator.build(ChoiceSequence.replay(minimal), intent)
        return self._make_unit_defect(key, result, intent, index, final_case,
                                      minimal, generator, flaky=False)

    # --- stateful phase ---

    def _machine(self):
        graph = extract_link_graph(self.document, list(self.operations.values()))
        machine = build_state_machine(graph)
        return machine

    def _sequence_case_factory(self, op: ApiOperation, cs: ChoiceSequence,
                               bound_values, bound_body, body_bound) -> TestCase:
        generator = self.generators[op.key]
        return generator.build(cs, "positive", bound_values=bound_values,
                               bound_body=bound_body, bound_body_set=body_bound)

    def _reset_target(self) -> None:
        if not self.config.reset_path:
            return
        case = TestCase(operation_ref="POST " + self.config.reset_path,
                        method="post", resolved_path=self.config.reset_path)
        try:
            self.transport.send(case, self.config.base_url, self.config.timeout)
        except TransportError as exc:
            self._record_infra(f"reset failed: {exc}")

    def _run_stateful_phase(self) -> None:
        machine = self._machine()
        self.warnings.extend(machine.warnings)
        sequences = (self.config.stateful_sequences
                     if self.config.stateful_sequences is not None
                     else self.config.max_examples_per_operation)
        for index in range(sequences):
            self._reset_target()
            seed = _derive_seed(self.config.seed, "stateful", index)
            cs = ChoiceSequence.from_rng(random.Random(seed))
            try:
                state, results = run_sequence(
                    machine, cs, self.config.max_steps, self.check_set,
                    self.transport, self.config.base_url,
                    self._sequence_case_factory,
                    timeout=self.config.timeout,
                    thresholds=self.config.thresholds,
                    custom_checks=self.config.custom_checks,
                    track_unowned_resources=self._track_unowned())
            except TransportError as exc:
                self._record_infra(f"sequence {index}: {exc}")
                continue
            except NoEnabledTransition as exc:
                self.warnings.append(f"sequence {index}: {exc}")
                continue
            except (ExhaustedRejectionBudget, UnsatisfiableSchema) as exc:
                self.warnings.append(f"sequence {index}: {exc}")
                continue
            with self._lock:
                self._responses += len(state.history)
            for case, _resp in state.history:
                self._bump(case.operation_ref, "examples")
            failures = [r for r in results if not r.passed]
            new_defect = False
            for result in failures:
                self._bump(result.operation_ref, "failures")
                if self._record_sequence_failure(machine, index, cs, state, result):
                    new_defect = True
            if (new_defect
                    and self.config.stop_policy == "first_failure_per_operation"):
                break

    def _record_sequence_failure(self, machine, index: int, cs: ChoiceSequence,
                                 state, result: CheckResult) -> bool:
        key = defect_key(result)
        with self._lock:
            existing = self._defects.get(key)
            if existing is not None:
                existing.occurrences += 1
                return False
            placeholder = Defect(
                key=key,
                detail=result.detail,
                first_seen={"mode": "sequence", "operation": result.operation_ref,
                            "sequence_index": index},
                minimal_reproduction=Reproduction(
                    mode="sequence",
                    operation_ref=result.operation_ref,
                    intent="positive",
                    choice_bytes=cs.bytes,
                    steps=[self._render_step(c) for c, _ in state.history],
                ),
            )
            self._defects[key] = placeholder
        if self._shrink_allowed():
            defect = self._shrink_sequence_defect(machine, index, key, result,
                                                  cs.bytes)
            with self._lock:
                defect.occurrences = self._defects[key].occurrences
                self._defects[key] = defect
        return True

    def _replay_sequence(self, machine, tape: bytes):
        self._reset_target()
        return run_sequence(
            machine, ChoiceSequence.replay(tape), self.config.max_steps,
            self.check_set, self.transport, self.config.base_url,
            self._sequence_case_factory,
            timeout=self.config.timeout, thresholds=self.config.thresholds,
            custom_checks=self.config.custom_checks,
            track_unowned_resources=self._track_unowned())

    def _shrink_sequence_defect(self, machine, index, key, result,
                                original: bytes) -> Defect:
        def predicate(tape: bytes) -> bool:
            try:
                _state, results = self._replay_sequence(machine, tape)
            except SchemafuzzError:
                return False
            return any(defect_key(r) == key for r in results if not r.passed)

        flaky = False
        try:
            minimal = shrink_failure(original, predicate, self.config.shrink_budget)
        except NotReproducible:
            minimal, flaky = original, True
        try:
            state, _results = self._replay_sequence(machine, minimal)
            steps = [self._render_step(case) for case, _ in state.history]
        except SchemafuzzError:
            steps = []
        return Defect(
            key=key,
            detail=result.detail,
            first_seen={"mode": "sequence", "operation": result.operation_ref,
                        "sequence_index": index},
            minimal_reproduction=Reproduction(
                mode="sequence",
                operation_ref=result.operation_ref,
                intent="positive",
                choice_bytes=minimal,
                steps=steps,
            ),
            flaky=flaky,
        )


def run_campaign(schema_source: Union[str, bytes, dict], config: CampaignConfig,
                 transport: Transport) -> RunReport:
    """Load, fuzz, shrink, dedup, report."""
    return Engine(schema_source, config, transport).run()


__all__ = [
    "CampaignConfig",
    "Engine",
    "run_campaign",
    "emit_report",
]
