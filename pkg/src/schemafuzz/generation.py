"""Choice-sequence-driven generation of JSON instances from canonical schemas.

Positive generation walks the canonical schema, drawing every decision
through a ChoiceSequence so instances replay and shrink. Negative generation
builds instances that are *invalid under the schema but of a declared type*,
using the negation construct from the canonical module plus a set of
targeted violation plans, with bounded rejection sampling as the safety net.

Value-distribution heuristics (documented in GENERATION.md): boundary
values (minimum, maximum, 0, 1, -1, powers of two, empty string, empty
collection) are drawn with elevated probability; optional object properties
are gated by a per-case swarm inclusion mask; anyOf branches are chosen
uniformly.
"""

from __future__ import annotations

import logging
import re
import string as _string
from dataclasses import dataclass
from fractions import Fraction
from math import ceil, floor
from typing import Any, Callable, Optional

from . import patterns
from .canonical import (
    CanonicalSchema,
    canonicalise,
    declared_types,
    is_false,
    merge_values,
    negate_for_testing,
)
from .choices import ChoiceSequence
from .errors import (
    ComplexityBudgetExceeded,
    ExhaustedRejectionBudget,
    UnsatisfiableSchema,
    UnsupportedPattern,
)
from .jsontools import contains_equal, json_type_of, matches_type
from .validation import validate_instance

logger = logging.getLogger(__name__)

_ALPHABET = _string.ascii_lowercase + _string.ascii_uppercase + _string.digits + " _-."
_SPECIAL_INTEGERS = (
    0, 1, -1, 2, 10, 100, 255, 256, 65535, 65536,
    2**31 - 1, 2**31, 2**32, 2**63 - 1, -2**31, -2**63,
)
_SPECIAL_NUMBERS = (0.0, 1.0, -1.0, 0.5, -0.5, 1.5, 0.001, 1000.0)
_SPECIAL_PROBABILITY_BYTE = 112  # bytes below this take the boundary-value path
_DEFAULT_INT_LO = -(2**63)
_DEFAULT_INT_HI = 2**63 - 1
_MASK_CHOICES = (0.15, 0.5, 0.9)


@dataclass(frozen=True)
class GenerationBudget:
    """Size caps so unconstrained schemas still terminate."""

    max_depth: int = 8
    max_array_length: int = 16
    max_object_properties: int = 16
    max_string_length: int = 256
    rejection_budget: int = 100


DEFAULT_BUDGET = GenerationBudget()


class FormatRegistry:
    """Named string-format generators, each an (generator, optional filter) pair.

    Generators take a ChoiceSequence and return a string. Re-registering a
    built-in logs a warning but takes effect; unknown formats in schemas are
    simply ignored.
    """

    def __init__(self):
        self._entries: dict[str, tuple[Callable, Optional[Callable]]] = {}
        self._builtins: frozenset[str] = frozenset()

    @classmethod
    def with_builtins(cls) -> "FormatRegistry":
        reg = cls()
        for name, gen in _BUILTIN_FORMATS.items():
            reg._entries[name] = (gen, None)
        reg._builtins = frozenset(_BUILTIN_FORMATS)
        return reg

    def lookup(self, name: str):
        return self._entries.get(name)

    def names(self):
        return sorted(self._entries)


def register_format(registry: FormatRegistry, name: str,
                    generator: Callable[[ChoiceSequence], str],
                    filter_predicate: Optional[Callable[[str], bool]] = None) -> FormatRegistry:
    if not name:
        raise ValueError("format name must be non-empty")
    if name in registry._entries:
        kind = "built-in" if name in registry._builtins else "registered"
        logger.warning("overriding %s string format %r", kind, name)
    registry._entries[name] = (generator, filter_predicate)
    return registry


# --- built-in formats ----------------------------------------------------------

def _format_date(cs: ChoiceSequence) -> str:
    return f"{1970 + cs.draw_integer(0, 130):04d}-{cs.draw_integer(1, 12):02d}-{cs.draw_integer(1, 28):02d}"


def _format_date_time(cs: ChoiceSequence) -> str:
    return (f"{_format_date(cs)}T{cs.draw_integer(0, 23):02d}:"
            f"{cs.draw_integer(0, 59):02d}:{cs.draw_integer(0, 59):02d}Z")


def _format_uuid(cs: ChoiceSequence) -> str:
    hexits = "0123456789abcdef"
    chunk = lambda n: "".join(cs.choose(hexits) for _ in range(n))
    return f"{chunk(8)}-{chunk(4)}-4{chunk(3)}-{cs.choose('89ab')}{chunk(3)}-{chunk(12)}"


def _format_email(cs: ChoiceSequence) -> str:
    local = "".join(cs.choose(_string.ascii_lowercase) for _ in range(cs.draw_integer(1, 10)))
    return f"{local}@example.{cs.choose(['com', 'org', 'net'])}"


def _format_uri(cs: ChoiceSequence) -> str:
    host = "".join(cs.choose(_string.ascii_lowercase) for _ in range(cs.draw_integer(1, 8)))
    path = "".join(cs.choose(_string.ascii_lowercase + "/") for _ in range(cs.draw_integer(0, 12)))
    return f"https://{host}.example.com/{path}"


def _format_ipv4(cs: ChoiceSequence) -> str:
    return ".".join(str(cs.draw_integer(0, 255)) for _ in range(4))


def _format_ipv6(cs: ChoiceSequence) -> str:
    return ":".join(f"{cs.draw_integer(0, 0xFFFF):x}" for _ in range(8))


_BUILTIN_FORMATS = {
    "date": _format_date,
    "date-time": _format_date_time,
    "uuid": _format_uuid,
    "email": _format_email,
    "uri": _format_uri,
    "ipv4": _format_ipv4,
    "ipv6": _format_ipv6,
}


# --- generation session ---------------------------------------------------------

class GenerationSession:
    """One test case's worth of generation: shared choices, budget, swarm mask."""

    def __init__(self, cs: ChoiceSequence, budget: GenerationBudget = DEFAULT_BUDGET,
                 formats: Optional[FormatRegistry] = None):
        self.cs = cs
        self.budget = budget
        self.formats = formats if formats is not None else FormatRegistry.with_builtins()
        # swarm-style feature mask: one inclusion bias for all optional parts
        self.mask_probability = cs.choose(_MASK_CHOICES)

    # -- helpers --

    def _exhausted(self, what: str, schema) -> ExhaustedRejectionBudget:
        return ExhaustedRejectionBudget(
            f"gave up after {self.budget.rejection_budget} filtered attempts: {what}",
            schema=schema)

    def _special_or(self, specials: list, free: Callable[[], Any]):
        if specials and self.cs.draw_byte() < _SPECIAL_PROBABILITY_BYTE:
            return specials[self.cs.draw_integer(0, len(specials) - 1)]
        return free()

    # -- top-level --

    def generate(self, schema_value: dict, depth: int = 0) -> Any:
        if is_false(schema_value):
            raise UnsatisfiableSchema("cannot generate from the FALSE schema")
        for _ in range(self.budget.rejection_budget):
            candidate = self._generate_once(schema_value, depth)
            if validate_instance(schema_value, candidate).valid:
                return candidate
        raise self._exhausted("instance kept failing its own schema", schema_value)

    def _generate_once(self, s: dict, depth: int) -> Any:
        if "enum" in s:
            return self.cs.choose(s["enum"])

        if "anyOf" in s:
            baseline = {k: v for k, v in s.items() if k != "anyOf"}
            branch = self.cs.choose(s["anyOf"])
            return self._generate_merged(baseline, branch, depth)

        if "oneOf" in s:
            return self._generate_one_of(s, depth)

        if "not" in s:
            return self._generate_filtered(s, depth)

        return self._generate_typed(s, depth)

    def _generate_merged(self, baseline: dict, branch: dict, depth: int) -> Any:
        try:
            merged = merge_values(baseline, branch)
        except ComplexityBudgetExceeded:
            merged = None
        if merged is not None and not is_false(merged):
            return self._generate_once(merged, depth)
        # fall back: draw from the branch alone and let the caller's filter reject
        return self._generate_once(branch, depth)

    def _generate_one_of(self, s: dict, depth: int) -> Any:
        baseline = {k: v for k, v in s.items() if k != "oneOf"}
        branches = s["oneOf"]
        for _ in range(self.budget.rejection_budget):
            index = self.cs.draw_integer(0, len(branches) - 1)
            candidate = self._generate_merged(baseline, branches[index], depth)
            others = [b for i, b in enumerate(branches) if i != index]
            if not any(validate_instance(b, candidate).valid for b in others):
                return candidate
        raise self._exhausted("oneOf candidate kept matching sibling branches", s)

    def _generate_filtered(self, s: dict, depth: int) -> Any:
        baseline = {k: v for k, v in s.items() if k != "not"}
        rejected = s["not"]
        for _ in range(self.budget.rejection_budget):
            candidate = self._generate_once(baseline, depth)
            if not validate_instance(rejected, candidate).valid:
                return candidate
        raise self._exhausted("candidate kept matching the negated subschema", s)

    def _generate_typed(self, s: dict, depth: int) -> Any:
        types = declared_types(s)
        if depth >= self.budget.max_depth:
            scalars = [t for t in types if t not in ("array", "object")]
            if scalars:
                types = scalars
        type_name = self.cs.choose(types)
        if type_name == "null":
            return None
        if type_name == "boolean":
            return self.cs.draw_bool()
        if type_name == "integer":
            return self._generate_integer(s)
        if type_name == "number":
            return self._generate_number(s)
        if type_name == "string":
            return self._generate_string(s)
        if type_name == "array":
            return self._generate_array(s, depth)
        return self._generate_object(s, depth)

    # -- scalars --

    def _generate_integer(self, s: dict) -> int:
        lo = s.get("minimum")
        hi = s.get("maximum")
        lo_int = ceil(lo) if lo is not None else _DEFAULT_INT_LO
        hi_int = floor(hi) if hi is not None else _DEFAULT_INT_HI
        if s.get("exclusiveMinimum") is not None:
            lo_int = max(lo_int, floor(s["exclusiveMinimum"]) + 1)
        if s.get("exclusiveMaximum") is not None:
            hi_int = min(hi_int, ceil(s["exclusiveMaximum"]) - 1)
        step = s.get("multipleOf")
        if isinstance(step, float) and step.is_integer():
            step = int(step)
        if isinstance(step, int) and step > 0:
            k_lo, k_hi = ceil(Fraction(lo_int, step)), floor(Fraction(hi_int, step))
            if k_hi < k_lo:  # infeasible input slipped past canonicalisation
                return lo_int
            specials = [k * step for k in (k_lo, k_hi, 0, 1, -1) if k_lo <= k <= k_hi]
            specials += [v for v in _SPECIAL_INTEGERS
                         if lo_int <= v <= hi_int and v % step == 0 and v not in specials]
            specials.sort(key=lambda v: (abs(v), v < 0))
            return self._special_or(
                specials, lambda: self._free_integer(k_lo, k_hi) * step)
        if hi_int < lo_int:
            return lo_int
        specials = [v for v in (lo_int, hi_int, 0, 1, -1) if lo_int <= v <= hi_int]
        specials += [v for v in _SPECIAL_INTEGERS if lo_int <= v <= hi_int and v not in specials]
        specials.sort(key=lambda v: (abs(v), v < 0))
        return self._special_or(specials, lambda: self._free_integer(lo_int, hi_int))

    def _free_integer(self, lo: int, hi: int) -> int:
        """Magnitude-biased draw: small values common, the whole range reachable."""
        if hi - lo < (1 << 24):
            return self.cs.draw_integer(lo, hi)
        negative = self.cs.draw_bool(0.4)  # zero bytes give a non-negative 0
        value = -self.cs.draw_magnitude() if negative else self.cs.draw_magnitude()
        return min(max(value, lo), hi)

    def _generate_number(self, s: dict) -> float:
        lo = s.get("minimum", s.get("exclusiveMinimum"))
        hi = s.get("maximum", s.get("exclusiveMaximum"))
        specials = [float(v) for v in (lo, hi, *_SPECIAL_NUMBERS) if v is not None]
        specials = [v for v in dict.fromkeys(specials) if validate_instance(
            {k: s[k] for k in ("minimum", "maximum", "exclusiveMinimum",
                               "exclusiveMaximum", "multipleOf") if k in s}, v).valid]

        def free() -> float:
            a = lo if lo is not None else -1e9
            b = hi if hi is not None else 1e9
            return a + self.cs.draw_unit_float() * (b - a)

        return self._special_or(specials, free)

    def _generate_string(self, s: dict) -> str:
        format_name = s.get("format")
        if isinstance(format_name, str):
            entry = self.formats.lookup(format_name)
            if entry is not None:
                generator, predicate = entry
                for _ in range(self.budget.rejection_budget):
                    value = generator(self.cs)
                    if predicate is None or predicate(value):
                        return value
                raise self._exhausted(f"format {format_name!r} filter kept rejecting", s)
        pattern = s.get("pattern")
        if isinstance(pattern, str):
            try:
                return patterns.generate_from_pattern(pattern, self.cs)
            except UnsupportedPattern:
                try:
                    matcher = re.compile(pattern)
                except re.error:
                    matcher = None
                for _ in range(self.budget.rejection_budget):
                    value = self._plain_string(s)
                    if matcher is None or matcher.search(value):
                        return value
                raise self._exhausted(f"no string matched pattern {pattern!r}", s)
        return self._plain_string(s)

    def _plain_string(self, s: dict) -> str:
        min_len = s.get("minLength", 0)
        max_len = min(s.get("maxLength", self.budget.max_string_length),
                      max(min_len, self.budget.max_string_length))
        max_len = max(max_len, min_len)
        length = self.cs.draw_integer(min_len, max_len) if max_len > min_len else min_len
        return "".join(_ALPHABET[self.cs.draw_integer(0, len(_ALPHABET) - 1)]
                       for _ in range(length))

    # -- collections --

    def _generate_array(self, s: dict, depth: int) -> list:
        min_items = s.get("minItems", 0)
        max_items = min(s.get("maxItems", self.budget.max_array_length),
                        max(min_items, self.budget.max_array_length))
        if depth + 1 >= self.budget.max_depth:
            max_items = min_items
        length = self.cs.draw_integer(min_items, max(min_items, max_items))
        item_schema = s.get("items", {})
        unique = s.get("uniqueItems") is True
        out: list = []
        for _ in range(length):
            for _attempt in range(self.budget.rejection_budget):
                item = self.generate(item_schema, depth + 1)
                if not unique or not contains_equal(out, item):
                    out.append(item)
                    break
            else:
                raise self._exhausted("could not draw another distinct array item", s)
        return out

    def _generate_object(self, s: dict, depth: int) -> dict:
        properties: dict = s.get("properties", {})
        required = s.get("required", [])
        additional = s.get("additionalProperties", {})
        min_props = s.get("minProperties", 0)
        max_props = min(s.get("maxProperties", self.budget.max_object_properties),
                        max(len(required), self.budget.max_object_properties))

        out: dict = {}
        for name in required:
            out[name] = self.generate(properties.get(name, {}), depth + 1)

        optional = [name for name in properties if name not in out]
        if depth + 1 < self.budget.max_depth:
            for name in optional:
                if len(out) >= max_props:
                    break
                if self.cs.draw_bool(self.mask_probability):
                    prop_schema = properties[name]
                    if not is_false(prop_schema):
                        out[name] = self.generate(prop_schema, depth + 1)

        while len(out) < min_props:
            name = self._fresh_key(out)
            if not is_false(additional):
                out[name] = self.generate(additional if isinstance(additional, dict) else {},
                                          depth + 1)
            else:  # canonicaliser caps maxProperties in this case; defensive only
                remaining = [n for n in properties if n not in out and not is_false(properties[n])]
                if not remaining:
                    raise self._exhausted("cannot reach minProperties", s)
                pick = remaining[0]
                out[pick] = self.generate(properties[pick], depth + 1)

        if (not is_false(additional) and len(out) < max_props
                and depth + 1 < self.budget.max_depth and self.cs.draw_bool(0.2)):
            name = self._fresh_key(out)
            out[name] = self.generate(additional if isinstance(additional, dict) else {},
                                      depth + 1)
        return out

    def _fresh_key(self, existing: dict) -> str:
        for _ in range(self.budget.rejection_budget):
            name = "x" + "".join(
                _ALPHABET[self.cs.draw_integer(0, 25)] for _ in range(self.cs.draw_integer(1, 6)))
            if name not in existing:
                return name
        raise self._exhausted("could not invent a fresh object key", existing)


# --- public entry points ---------------------------------------------------------

def generate_instance(schema: CanonicalSchema | dict, cs: ChoiceSequence,
                      budget: GenerationBudget = DEFAULT_BUDGET,
                      formats: Optional[FormatRegistry] = None) -> Any:
    """A single instance valid under ``schema``; all randomness drawn via ``cs``."""
    value = schema.schema if isinstance(schema, CanonicalSchema) else schema
    if is_false(value):
        raise UnsatisfiableSchema("schema is unsatisfiable")
    session = GenerationSession(cs, budget, formats)
    return session.generate(value)


def generate_negative_instance(schema: Any, cs: ChoiceSequence,
                               budget: GenerationBudget = DEFAULT_BUDGET,
                               formats: Optional[FormatRegistry] = None) -> Any:
    """An instance that is *invalid* under ``schema`` but of a type it declares.

    Raises NothingToNegate (via negate_for_testing) when every instance of
    the declared type is valid, and ExhaustedRejectionBudget when no violation
    plan produced a confirmed-invalid instance within the budget.
    """
    negated = negate_for_testing(schema)  # raises NothingToNegate when hopeless
    canonical = canonicalise(schema).schema
    types = declared_types(canonical)
    session = GenerationSession(cs, budget, formats)
    plans = _violation_plans(canonical)

    for _ in range(budget.rejection_budget):
        plan = session.cs.choose(plans)
        try:
            candidate = plan(canonical, session)
        except (ExhaustedRejectionBudget, UnsatisfiableSchema, ComplexityBudgetExceeded):
            continue
        if candidate is _SKIP:
            continue
        if not any(matches_type(candidate, t) for t in types):
            continue
        if not validate_instance(schema, candidate).valid:
            assert validate_instance(negated, candidate).valid
            return candidate
    raise ExhaustedRejectionBudget(
        f"no violation plan produced an invalid instance of type {types}", schema=schema)


_SKIP = object()


# --- violation plans: each takes (canonical schema, session) -> candidate -------

def _plan_below_minimum(s, session):
    lo = s.get("minimum", s.get("exclusiveMinimum"))
    if lo is None:
        return _SKIP
    return (lo if isinstance(lo, int) else int(floor(lo))) - 1 - session.cs.draw_integer(0, 9)


def _plan_above_maximum(s, session):
    hi = s.get("maximum", s.get("exclusiveMaximum"))
    if hi is None:
        return _SKIP
    return (hi if isinstance(hi, int) else int(ceil(hi))) + 1 + session.cs.draw_integer(0, 9)


def _plan_not_multiple(s, session):
    step = s.get("multipleOf")
    if not isinstance(step, int) or step < 2:
        return _SKIP
    base = session._generate_integer(s)
    return base + session.cs.draw_integer(1, step - 1)


def _plan_too_short(s, session):
    min_len = s.get("minLength", 0)
    if min_len < 1:
        return _SKIP
    return "".join(_ALPHABET[session.cs.draw_integer(0, 25)] for _ in range(min_len - 1))


def _plan_too_long(s, session):
    max_len = s.get("maxLength")
    if max_len is None:
        return _SKIP
    return "".join(_ALPHABET[session.cs.draw_integer(0, 25)]
                   for _ in range(max_len + 1 + session.cs.draw_integer(0, 4)))


def _plan_break_pattern(s, session):
    pattern = s.get("pattern")
    if pattern is None:
        return _SKIP
    try:
        matcher = patterns.compile_checked(pattern)
    except UnsupportedPattern:
        return _SKIP
    for _ in range(session.budget.rejection_budget):
        candidate = session._plain_string({k: v for k, v in s.items() if k != "pattern"})
        if matcher.search(candidate) is None:
            return candidate
    return _SKIP


def _plan_outside_enum(s, session):
    members = s.get("enum")
    if members is None:
        return _SKIP
    member_types = declared_types(s)
    for _ in range(session.budget.rejection_budget):
        candidate = session.generate({"type": member_types}, depth=0)
        if not contains_equal(members, candidate):
            return candidate
    return _SKIP


def _plan_drop_required(s, session):
    required = s.get("required")
    if not required:
        return _SKIP
    base = session.generate(s, depth=0)
    victim = session.cs.choose(sorted(required))
    return {k: v for k, v in base.items() if k != victim}


def _plan_violate_property(s, session):
    candidates = [(name, sub) for name, sub in sorted(s.get("properties", {}).items())
                  if isinstance(sub, dict) and not is_false(sub)]
    if not candidates:
        return _SKIP
    name, sub = session.cs.choose(candidates)
    try:
        bad_value = generate_negative_instance(sub, session.cs, session.budget, session.formats)
    except Exception:
        return _SKIP
    base = session.generate(s, depth=0)
    base[name] = bad_value
    return base


def _plan_extra_property(s, session):
    if not is_false(s.get("additionalProperties", {})):
        max_props = s.get("maxProperties")
        if max_props is None:
            return _SKIP
        base = session.generate(s, depth=0)
        while len(base) <= max_props:
            base[session._fresh_key(base)] = session.cs.draw_integer(0, 9)
        return base
    base = session.generate(s, depth=0)
    base[session._fresh_key(base)] = session.cs.draw_integer(0, 9)
    return base


def _plan_too_few_properties(s, session):
    min_props = s.get("minProperties", 0)
    if min_props < 1 or "object" not in declared_types(s):
        return _SKIP
    return {}


def _plan_wrong_length_array(s, session):
    if "array" not in declared_types(s):
        return _SKIP
    min_items = s.get("minItems", 0)
    max_items = s.get("maxItems")
    item_schema = s.get("items", {})
    if min_items > 0:
        return []
    if max_items is not None and not is_false(item_schema):
        return [session.generate(item_schema, depth=1) for _ in range(max_items + 1)]
    return _SKIP


def _plan_violate_items(s, session):
    item_schema = s.get("items")
    if not isinstance(item_schema, dict) or is_false(item_schema):
        return _SKIP
    if s.get("maxItems") == 0:
        return _SKIP
    try:
        bad_item = generate_negative_instance(item_schema, session.cs,
                                              session.budget, session.formats)
    except Exception:
        return _SKIP
    base = session.generate(s, depth=0)
    length = max(len(base), s.get("minItems", 0), 1)
    while len(base) < length:
        base.append(bad_item)
    base[session.cs.draw_integer(0, len(base) - 1)] = bad_item
    return base


def _plan_duplicate_items(s, session):
    if s.get("uniqueItems") is not True:
        return _SKIP
    max_items = s.get("maxItems")
    if max_items is not None and max_items < 2:
        return _SKIP
    item = session.generate(s.get("items", {}), depth=1)
    length = max(2, s.get("minItems", 0))
    return [item] * length


def _plan_brute_force(s, session):
    types = declared_types(s)
    return session.generate({"type": types} if types else {}, depth=0)


_ALL_PLANS = (
    _plan_below_minimum,
    _plan_above_maximum,
    _plan_not_multiple,
    _plan_too_short,
    _plan_too_long,
    _plan_break_pattern,
    _plan_outside_enum,
    _plan_drop_required,
    _plan_violate_property,
    _plan_extra_property,
    _plan_too_few_properties,
    _plan_wrong_length_array,
    _plan_violate_items,
    _plan_duplicate_items,
    _plan_brute_force,
)

_PLAN_TRIGGERS = {
    _plan_below_minimum: ("minimum", "exclusiveMinimum"),
    _plan_above_maximum: ("maximum", "exclusiveMaximum"),
    _plan_not_multiple: ("multipleOf",),
    _plan_too_short: ("minLength",),
    _plan_too_long: ("maxLength",),
    _plan_break_pattern: ("pattern",),
    _plan_outside_enum: ("enum",),
    _plan_drop_required: ("required",),
    _plan_violate_property: ("properties",),
    _plan_extra_property: ("additionalProperties", "maxProperties"),
    _plan_too_few_properties: ("minProperties",),
    _plan_wrong_length_array: ("minItems", "maxItems"),
    _plan_violate_items: ("items",),
    _plan_duplicate_items: ("uniqueItems",),
}


def _violation_plans(canonical: dict) -> list:
    plans = [plan for plan, keys in _PLAN_TRIGGERS.items()
             if any(key in canonical for key in keys)]
    plans.append(_plan_brute_force)
    return plans
