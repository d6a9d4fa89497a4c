"""Turns one ApiOperation into concrete positive or negative test cases.

Schemas are canonicalised once per operation; a schema that blows the
rewrite budget falls back to generate-then-filter against its raw form.
Negative cases negate exactly one component (a parameter or the body),
recorded in the case's provenance note; components whose schemas admit no
invalid instances of their type are simply not negatable.
"""

from __future__ import annotations

import copy
import logging
from dataclasses import dataclass
from typing import Any, Optional

from .canonical import canonicalise, declared_types, is_false, negate_for_testing
from .choices import ChoiceSequence
from .document import ApiOperation, ParameterSpec
from .errors import (
    ComplexityBudgetExceeded,
    ExhaustedRejectionBudget,
    NothingToNegate,
    UnknownMediaType,
    UnsatisfiableSchema,
)
from .generation import (
    DEFAULT_BUDGET,
    FormatRegistry,
    GenerationBudget,
    GenerationSession,
    generate_negative_instance,
)
from .transport import TestCase, build_test_case, multipart_content_type, serialisable
from .validation import validate_instance

logger = logging.getLogger(__name__)


def deep_merge(base: Any, patch: Any) -> Any:
    """RFC 7386-style merge: dicts merge recursively, null deletes, rest replaces."""
    if not isinstance(patch, dict) or not isinstance(base, dict):
        return copy.deepcopy(patch)
    out = dict(base)
    for key, value in patch.items():
        if value is None:
            out.pop(key, None)
        else:
            out[key] = deep_merge(out.get(key), value)
    return out


@dataclass
class _SchemaEntry:
    raw: Any
    canonical: Optional[dict]  # None means the rewrite budget was exceeded
    negatable: bool

    def generate(self, session: GenerationSession) -> Any:
        if self.canonical is not None:
            return session.generate(self.canonical)
        # raw fallback: unconstrained draw of a declared type, filtered
        probe = {"type": declared_types(self.raw if isinstance(self.raw, dict) else {})}
        for _ in range(session.budget.rejection_budget):
            candidate = session.generate(probe)
            if validate_instance(self.raw, candidate).valid:
                return candidate
        raise ExhaustedRejectionBudget(
            "raw-schema fallback found no valid instance", schema=self.raw)


def _entry(raw_schema: Any) -> _SchemaEntry:
    try:
        canonical = canonicalise(raw_schema).schema
    except ComplexityBudgetExceeded:
        canonical = None
    negatable = True
    try:
        negate_for_testing(raw_schema if raw_schema is not None else {})
    except (NothingToNegate, ComplexityBudgetExceeded):
        negatable = False
    if canonical is not None and is_false(canonical):
        negatable = False
    return _SchemaEntry(raw=raw_schema, canonical=canonical, negatable=negatable)


class OperationGenerator:
    """Positive/negative TestCase factory for a single operation."""

    def __init__(self, op: ApiOperation, *,
                 formats: Optional[FormatRegistry] = None,
                 budget: GenerationBudget = DEFAULT_BUDGET,
                 extra_headers: tuple[tuple[str, str], ...] = (),
                 schema_patch: Optional[dict] = None,
                 value_filter=None):
        self.op = op
        self.formats = formats if formats is not None else FormatRegistry.with_builtins()
        self.budget = budget
        self.extra_headers = list(extra_headers)
        self.value_filter = value_filter
        self.warnings: list[str] = []

        patch = schema_patch or {}
        param_patches = patch.get("parameters", {})
        body_patches = patch.get("request_body", {})

        self.parameters: list[tuple[ParameterSpec, _SchemaEntry]] = []
        for param in op.parameters:
            raw = param.schema if param.schema not in (None,) else {}
            if param.name in param_patches:
                raw = deep_merge(raw, param_patches[param.name])
            entry = _entry(raw)
            if entry.canonical is not None and is_false(entry.canonical) and param.required:
                raise UnsatisfiableSchema(
                    f"{op.key}: required parameter {param.name!r} is unsatisfiable")
            self.parameters.append((param, entry))

        self.body_entries: dict[str, _SchemaEntry] = {}
        if op.request_body:
            for media_type, schema in op.request_body.items():
                if not serialisable(media_type):
                    self.warnings.append(
                        f"{op.key}: unsupported media type {media_type!r}; skipped")
                    continue
                raw = schema if schema is not None else {}
                if media_type in body_patches:
                    raw = deep_merge(raw, body_patches[media_type])
                self.body_entries[media_type] = _entry(raw)
            if op.request_body and not self.body_entries and op.body_required:
                raise UnknownMediaType(next(iter(op.request_body)))

    @property
    def negatable_components(self) -> list[str]:
        out = [f"parameter:{p.name}" for p, entry in self.parameters if entry.negatable]
        out.extend(f"body:{mt}" for mt, entry in sorted(self.body_entries.items())
                   if entry.negatable)
        return out

    @property
    def negatable(self) -> bool:
        return bool(self.negatable_components)

    def build(self, cs: ChoiceSequence, intent: str = "positive",
              bound_values: Optional[dict[str, Any]] = None,
              bound_body: Any = None, bound_body_set: bool = False) -> TestCase:
        """One concrete TestCase; every unbound decision drawn through ``cs``."""
        if intent == "negative":
            return self._build_negative(cs)
        session = GenerationSession(cs, self.budget, self.formats)
        for _ in range(self.budget.rejection_budget):
            values = self._draw_values(session, bound_values or {})
            include_body, media, body_value = self._draw_body(
                session, bound_body, bound_body_set)
            if self.value_filter is not None and not self.value_filter(values, body_value):
                continue
            return self._assemble(values, include_body, media, body_value, cs,
                                  "positive", None)
        raise ExhaustedRejectionBudget(
            f"{self.op.key}: value filter rejected every candidate", schema=None)

    def _draw_values(self, session: GenerationSession,
                     bound: dict[str, Any]) -> dict[str, Any]:
        values: dict[str, Any] = {}
        for param, entry in self.parameters:
            if param.name in bound:
                values[param.name] = bound[param.name]
                continue
            if not param.required and not session.cs.draw_bool(session.mask_probability):
                continue
            values[param.name] = entry.generate(session)
        return values

    def _draw_body(self, session: GenerationSession, bound_body: Any,
                   bound_body_set: bool):
        if bound_body_set:
            media = self._choose_media(session.cs) or "application/json"
            return True, media, bound_body
        if not self.body_entries:
            return False, None, None
        if not self.op.body_required and not session.cs.draw_bool(0.85):
            return False, None, None
        media = self._choose_media(session.cs)
        entry = self.body_entries[media]
        return True, media, entry.generate(session)

    def _choose_media(self, cs: ChoiceSequence) -> Optional[str]:
        if not self.body_entries:
            return None
        return cs.choose(sorted(self.body_entries))

    def _build_negative(self, cs: ChoiceSequence) -> TestCase:
        components = self.negatable_components
        if not components:
            raise NothingToNegate(f"{self.op.key}: no component supports negative testing")
        target = cs.choose(components)
        session = GenerationSession(cs, self.budget, self.formats)

        values: dict[str, Any] = {}
        for param, entry in self.parameters:
            name = f"parameter:{param.name}"
            if name == target:
                values[param.name] = generate_negative_instance(
                    entry.raw, cs, self.budget, self.formats)
            elif param.required or session.cs.draw_bool(session.mask_probability):
                values[param.name] = entry.generate(session)

        include_body, media, body_value = False, None, None
        if target.startswith("body:"):
            media = target.split(":", 1)[1]
            body_value = generate_negative_instance(
                self.body_entries[media].raw, cs, self.budget, self.formats)
            include_body = True
        elif self.body_entries and self.op.body_required:
            media = self._choose_media(session.cs)
            body_value = self.body_entries[media].generate(session)
            include_body = True

        return self._assemble(values, include_body, media, body_value, cs,
                              "negative", f"negated {target}")

    def _assemble(self, values, include_body, media, body_value, cs,
                  intent, provenance) -> TestCase:
        wire_media = media
        if media is not None and media.split(";")[0].strip() == "multipart/form-data":
            wire_media = multipart_content_type()
        return build_test_case(
            self.op,
            values,
            body_value=body_value,
            media_type=wire_media,
            intent=intent,
            extra_headers=list(self.extra_headers),
            choice_sequence=cs,
            provenance=provenance,
            include_body=include_body,
        )
