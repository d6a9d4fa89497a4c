"""Fixpoint rewriting of JSON Schemas into a generator-friendly normal form.

The rewrite suite (inventoried in RULES.md) preserves validation semantics
exactly while eliminating the constructs that force rejection sampling:
``allOf`` is merged away, ``const`` becomes ``enum``, enums are pre-filtered
against their sibling constraints, impossible type/bound combinations are
pruned, and contradictions collapse to the canonical FALSE schema.

TRUE is the empty object ``{}``; FALSE is ``{"not": {}}``. ``anyOf`` and
``oneOf`` survive canonicalisation (branches canonical, pairwise distinct);
``not`` survives as a generate-then-filter marker. Unknown annotation
keywords ride along untouched.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

from .errors import (
    ComplexityBudgetExceeded,
    NothingToNegate,
    SchemaStructureError,
    UnsupportedKeyword,
)
from .jsontools import canonical_sort_key, deep_equal, json_type_of, node_count
from .validation import validate_instance

TYPE_ORDER = ("null", "boolean", "integer", "number", "string", "array", "object")
ALL_TYPE_NAMES = frozenset(TYPE_ORDER)

DEFAULT_NODE_BUDGET = 10_000
_MAX_PASSES = 20

_NUMERIC_KEYWORDS = ("minimum", "maximum", "exclusiveMinimum", "exclusiveMaximum", "multipleOf")
_STRING_KEYWORDS = ("minLength", "maxLength", "pattern", "format")
_ARRAY_KEYWORDS = ("items", "minItems", "maxItems", "uniqueItems")
_OBJECT_KEYWORDS = ("properties", "additionalProperties", "required",
                    "minProperties", "maxProperties")

CONSTRAINING_KEYWORDS = frozenset(
    {"enum", "const", "anyOf", "oneOf", "not"}
    | set(_NUMERIC_KEYWORDS) | set(_STRING_KEYWORDS[:3])  # format is an annotation
    | set(_ARRAY_KEYWORDS) | set(_OBJECT_KEYWORDS)
)


def true_schema() -> dict:
    return {}

def false_schema() -> dict:
    return {"not": {}}

def is_true(value: Any) -> bool:
    return value is True or value == {}

def is_false(value: Any) -> bool:
    return value is False or value == {"not": {}}


@dataclass
class CanonicalSchema:
    """A schema value in normal form, plus the emptiness verdict."""

    schema: dict
    is_unsatisfiable: bool

    def __post_init__(self):
        assert self.is_unsatisfiable == is_false(self.schema)


class _Budget:
    def __init__(self, limit: int):
        self.limit = limit

    def check(self, value: Any):
        if node_count(value) > self.limit:
            raise ComplexityBudgetExceeded(
                f"rewritten schema exceeds {self.limit} nodes")


def canonicalise(schema: Any, *, node_budget: int = DEFAULT_NODE_BUDGET) -> CanonicalSchema:
    """Rewrite ``schema`` to normal form. Idempotent and semantics-preserving."""
    budget = _Budget(node_budget)
    value = _canon(schema, budget)
    return CanonicalSchema(value, is_unsatisfiable=is_false(value))


def merge_constraints(a: CanonicalSchema, b: CanonicalSchema,
                      *, node_budget: int = DEFAULT_NODE_BUDGET) -> CanonicalSchema:
    """Conjunction: the result accepts exactly instances accepted by both."""
    budget = _Budget(node_budget)
    merged = _merge_values(a.schema, b.schema, budget)
    value = _canon(merged, budget)
    return CanonicalSchema(value, is_unsatisfiable=is_false(value))


def merge_values(a: dict, b: dict, *, node_budget: int = DEFAULT_NODE_BUDGET) -> dict:
    """Value-level merge for internal callers holding canonical dicts."""
    budget = _Budget(node_budget)
    return _canon(_merge_values(a, b, budget), budget)


def declared_types(value: Any) -> list[str]:
    """Type names a canonical schema admits; the full set when undeclared.

    Enum-only schemas report the types of their members.
    """
    if isinstance(value, dict):
        if "type" in value:
            names = value["type"]
            return list(names) if isinstance(names, list) else [names]
        if "enum" in value:
            names = []
            for member in value["enum"]:
                name = json_type_of(member)
                if name not in names:
                    names.append(name)
            return sorted(names, key=TYPE_ORDER.index)
    return list(TYPE_ORDER)


def negate_for_testing(schema: Any, *, node_budget: int = DEFAULT_NODE_BUDGET) -> dict:
    """Schema accepting exactly the *invalid instances of a valid type* of ``schema``."""
    canonical = canonicalise(schema, node_budget=node_budget)
    value = canonical.schema
    if not canonical.is_unsatisfiable:
        constrained = set(value) & CONSTRAINING_KEYWORDS
        if not constrained:
            raise NothingToNegate(
                f"every instance of type {declared_types(value)} satisfies the schema")
    types = declared_types(value)
    negated = {"type": types if len(types) > 1 else types[0], "not": copy.deepcopy(schema)}
    try:
        return canonicalise(negated, node_budget=node_budget).schema
    except ComplexityBudgetExceeded:
        return negated


# --- canonicalisation core ----------------------------------------------------

def _canon(schema: Any, budget: _Budget) -> dict:
    if schema is True:
        return true_schema()
    if schema is False:
        return false_schema()
    if not isinstance(schema, dict):
        raise SchemaStructureError(
            f"schema must be a boolean or object, got {json_type_of(schema)}")
    current = copy.deepcopy(schema)
    for _ in range(_MAX_PASSES):
        rewritten = _rewrite(current, budget)
        budget.check(rewritten)
        if rewritten == current:
            return rewritten
        current = rewritten
    raise ComplexityBudgetExceeded(f"no fixpoint within {_MAX_PASSES} passes")


def _check_structure(s: dict) -> None:
    def num(key):
        v = s.get(key)
        if v is not None and (isinstance(v, bool) or not isinstance(v, (int, float))):
            raise SchemaStructureError(f"{key} must be a number, got {v!r}")

    def count(key):
        v = s.get(key)
        if v is not None and (isinstance(v, bool) or not isinstance(v, int) or v < 0):
            raise SchemaStructureError(f"{key} must be a non-negative integer, got {v!r}")

    for key in ("minimum", "maximum", "multipleOf"):
        num(key)
    if s.get("multipleOf") is not None and s["multipleOf"] <= 0:
        raise SchemaStructureError("multipleOf must be positive")
    for key in ("minLength", "maxLength", "minItems", "maxItems",
                "minProperties", "maxProperties"):
        count(key)
    if "required" in s:
        req = s["required"]
        if not isinstance(req, list) or not all(isinstance(k, str) for k in req):
            raise SchemaStructureError("required must be an array of strings")
    if "enum" in s and not isinstance(s["enum"], list):
        raise SchemaStructureError("enum must be an array")
    for key in ("allOf", "anyOf", "oneOf"):
        if key in s and (not isinstance(s[key], list) or not s[key]):
            raise SchemaStructureError(f"{key} must be a non-empty array")
    if "type" in s:
        names = s["type"] if isinstance(s["type"], list) else [s["type"]]
        for name in names:
            if name not in ALL_TYPE_NAMES:
                raise SchemaStructureError(f"unknown type name {name!r}")
    if "properties" in s and not isinstance(s["properties"], dict):
        raise SchemaStructureError("properties must be an object")
    if "items" in s and isinstance(s["items"], list):
        raise UnsupportedKeyword("items", "array-form items is outside the supported subset")


def _rewrite(schema: dict, budget: _Budget) -> dict:
    s = dict(schema)
    if is_false(s):
        return false_schema()
    _check_structure(s)

    _normalise_draft4_bounds(s)

    # const is just a one-element enum; with a sibling enum, intersect
    if "const" in s:
        const = s.pop("const")
        if "enum" in s:
            s["enum"] = [m for m in s["enum"] if deep_equal(m, const)]
        else:
            s["enum"] = [const]

    # canonicalise children first
    for key in ("items", "additionalProperties", "not"):
        if key in s:
            s[key] = _canon(s[key], budget)
    if "properties" in s:
        s["properties"] = {name: _canon(sub, budget)
                           for name, sub in s["properties"].items()}
    for key in ("allOf", "anyOf", "oneOf"):
        if key in s:
            s[key] = [_canon(sub, budget) for sub in s[key]]

    # R: allOf merges away
    if "allOf" in s:
        branches = s.pop("allOf")
        merged = s
        for branch in branches:
            merged = _merge_values(merged, branch, budget)
            if is_false(merged):
                return false_schema()
        s = merged

    if (result := _rewrite_not(s, budget)) is not None:
        return result
    if (result := _rewrite_any_of(s, budget)) is not None:
        return result
    if (result := _rewrite_one_of(s, budget)) is not None:
        return result
    if (result := _rewrite_enum(s)) is not None:
        return result
    if (result := _rewrite_types(s)) is not None:
        return result
    return dict(sorted(s.items()))


def _normalise_draft4_bounds(s: dict) -> None:
    """OpenAPI 2 carries draft-04 boolean exclusive bounds; rewrite to draft-07."""
    if isinstance(s.get("exclusiveMinimum"), bool):
        flag = s.pop("exclusiveMinimum")
        if flag and "minimum" in s:
            s["exclusiveMinimum"] = s.pop("minimum")
    if isinstance(s.get("exclusiveMaximum"), bool):
        flag = s.pop("exclusiveMaximum")
        if flag and "maximum" in s:
            s["exclusiveMaximum"] = s.pop("maximum")


def _rewrite_not(s: dict, budget: _Budget):
    if "not" not in s:
        return None
    inner = s["not"]
    if is_true(inner):
        return false_schema()
    if is_false(inner):
        s.pop("not")
        return None
    # double negation folds back into the parent as a conjunction
    if set(inner) == {"not"}:
        grand = s.pop("not")["not"]
        merged = _merge_values(s, grand, budget)
        s.clear()
        s.update(merged)
        return None
    # a pure type constraint subtracts from the parent's type set
    if set(inner) == {"type"}:
        banned = set(inner["type"] if isinstance(inner["type"], list) else [inner["type"]])
        if "number" in banned:
            banned.add("integer")  # every integer is a number
        parent_types = _type_list(s)
        if "integer" in banned and "number" not in banned and "number" in parent_types:
            return None  # cannot carve the integers out of the continuum by type alone
        remaining = [name for name in parent_types if name not in banned]
        if not remaining:
            return false_schema()
        s.pop("not")
        s["type"] = remaining if len(remaining) > 1 else remaining[0]
        return None
    return None


def _rewrite_any_of(s: dict, budget: _Budget):
    if "anyOf" not in s:
        return None
    branches = [b for b in s["anyOf"] if not is_false(b)]
    if not branches:
        return false_schema()
    if any(is_true(b) for b in branches):
        s.pop("anyOf")
        return None
    branches = _dedup_sorted(branches)
    if len(branches) == 1:
        branch = branches[0]
        s.pop("anyOf")
        merged = _merge_values(s, branch, budget)
        s.clear()
        s.update(merged)
        return None
    s["anyOf"] = branches
    return None


def _rewrite_one_of(s: dict, budget: _Budget):
    if "oneOf" not in s:
        return None
    branches = [b for b in s["oneOf"] if not is_false(b)]
    if not branches:
        return false_schema()
    if len(branches) == 1:
        branch = branches[0]
        s.pop("oneOf")
        merged = _merge_values(s, branch, budget)
        s.clear()
        s.update(merged)
        return None
    s["oneOf"] = branches  # order preserved: oneOf is not order-free for dedup
    return None


def _rewrite_enum(s: dict):
    if "enum" not in s:
        return None
    rest = {k: v for k, v in s.items() if k != "enum"}
    kept = []
    for member in s["enum"]:
        try:
            ok = validate_instance(rest, member).valid
        except (UnsupportedKeyword, SchemaStructureError):
            return None  # cannot prove membership; leave the schema unrewritten
        if ok and not any(deep_equal(member, existing) for existing in kept):
            kept.append(member)
    if not kept:
        return false_schema()
    enum_only = {"enum": sorted(kept, key=canonical_sort_key)}
    if s == enum_only:
        return None
    s.clear()
    s.update(enum_only)
    return None


_FULL_TYPE_LIST = [name for name in TYPE_ORDER if name != "integer"]  # number subsumes


def _type_list(s: dict) -> list[str]:
    if "type" not in s:
        return list(_FULL_TYPE_LIST)
    names = s["type"] if isinstance(s["type"], list) else [s["type"]]
    ordered = []
    for name in TYPE_ORDER:
        if name in names and name not in ordered:
            ordered.append(name)
    if "number" in ordered and "integer" in ordered:
        ordered.remove("integer")
    return ordered


def _rewrite_types(s: dict):
    """Per-type feasibility pruning, bound normalisation, and keyword dropping."""
    types = _type_list(s)

    _tighten_numeric_bounds(s)

    if "number" in types and not _number_feasible(s):
        types.remove("number")
    if "integer" in types and not _integer_feasible(s):
        types.remove("integer")
    if "integer" in types and "number" not in types:
        _integerise_bounds(s)
        if not _integer_feasible(s):
            types.remove("integer")
    if "string" in types and s.get("minLength", 0) > s.get("maxLength", math.inf):
        types.remove("string")
    if "array" in types and not _array_feasible(s):
        types.remove("array")
    if "object" in types and not _object_feasible(s):
        types.remove("object")

    if not types:
        return false_schema()

    _simplify_array_keywords(s)
    _simplify_object_keywords(s)
    _drop_vacuous_bounds(s)
    _drop_inapplicable(s, types)

    if types == _FULL_TYPE_LIST:
        s.pop("type", None)
    else:
        s["type"] = types if len(types) > 1 else types[0]

    # a fully pinned integer collapses to its enum
    if types == ["integer"] and "minimum" in s and s.get("maximum") == s["minimum"]:
        value = s["minimum"]
        if _multiple_ok(value, s.get("multipleOf")):
            keep = {"enum": [value]}
            s.clear()
            s.update(keep)
    return None


def _bound(s, key):
    return s.get(key)


def _tighten_numeric_bounds(s: dict) -> None:
    """Keep only the binding lower and upper bound keyword."""
    m, em = s.get("minimum"), s.get("exclusiveMinimum")
    if m is not None and em is not None:
        if em >= m:
            s.pop("minimum")
        else:
            s.pop("exclusiveMinimum")
    M, eM = s.get("maximum"), s.get("exclusiveMaximum")
    if M is not None and eM is not None:
        if eM <= M:
            s.pop("maximum")
        else:
            s.pop("exclusiveMaximum")


def _interval(s: dict):
    """(lo, lo_exclusive, hi, hi_exclusive) with None for unbounded ends."""
    if "minimum" in s:
        lo, lo_ex = s["minimum"], False
    elif "exclusiveMinimum" in s:
        lo, lo_ex = s["exclusiveMinimum"], True
    else:
        lo, lo_ex = None, False
    if "maximum" in s:
        hi, hi_ex = s["maximum"], False
    elif "exclusiveMaximum" in s:
        hi, hi_ex = s["exclusiveMaximum"], True
    else:
        hi, hi_ex = None, False
    return lo, lo_ex, hi, hi_ex


def _integral_multiple_of(s: dict):
    mo = s.get("multipleOf")
    if mo is None:
        return None
    if isinstance(mo, bool):
        raise SchemaStructureError("multipleOf must be a number")
    if isinstance(mo, int):
        return mo
    if isinstance(mo, float) and mo.is_integer():
        return int(mo)
    return None  # non-integral: no exact reasoning, leave to filtering


def _number_feasible(s: dict) -> bool:
    lo, lo_ex, hi, hi_ex = _interval(s)
    if lo is not None and hi is not None:
        if lo > hi or (lo == hi and (lo_ex or hi_ex)):
            return False
    step = _integral_multiple_of(s)
    if step is not None:
        return _multiple_in_interval(step, lo, lo_ex, hi, hi_ex)
    return True


def _integer_feasible(s: dict) -> bool:
    lo, lo_ex, hi, hi_ex = _interval(s)
    lo_int = _int_lower(lo, lo_ex)
    hi_int = _int_upper(hi, hi_ex)
    if lo_int is not None and hi_int is not None and lo_int > hi_int:
        return False
    step = _integral_multiple_of(s)
    if step is not None:
        return _multiple_in_interval(step, lo_int, False, hi_int, False)
    return True


def _int_lower(lo, exclusive):
    if lo is None:
        return None
    frac = Fraction(lo)
    if frac.denominator == 1:
        return int(frac) + 1 if exclusive else int(frac)
    return math.ceil(frac)


def _int_upper(hi, exclusive):
    if hi is None:
        return None
    frac = Fraction(hi)
    if frac.denominator == 1:
        return int(frac) - 1 if exclusive else int(frac)
    return math.floor(frac)


def _multiple_in_interval(step, lo, lo_ex, hi, hi_ex) -> bool:
    if lo is None and hi is None:
        return True
    if lo is None:
        return True  # arbitrarily small multiples exist
    if hi is None:
        return True
    first = math.ceil(Fraction(lo) / step) * step
    if lo_ex and first == lo:
        first += step
    if hi_ex:
        return first < hi
    return first <= hi


def _integerise_bounds(s: dict) -> None:
    """Integer-only schemas: exclusive bounds become inclusive integer bounds."""
    lo, lo_ex, hi, hi_ex = _interval(s)
    for key in ("minimum", "exclusiveMinimum", "maximum", "exclusiveMaximum"):
        s.pop(key, None)
    lo_int = _int_lower(lo, lo_ex)
    hi_int = _int_upper(hi, hi_ex)
    if lo_int is not None:
        s["minimum"] = lo_int
    if hi_int is not None:
        s["maximum"] = hi_int
    step = _integral_multiple_of(s)
    if step == 1:
        s.pop("multipleOf")
    elif step is not None:
        s["multipleOf"] = step


def _multiple_ok(value, mo) -> bool:
    if mo is None:
        return True
    return Fraction(value) % Fraction(mo) == 0


def _array_feasible(s: dict) -> bool:
    min_items = s.get("minItems", 0)
    max_items = s.get("maxItems")
    if max_items is not None and min_items > max_items:
        return False
    items = s.get("items")
    if items is not None and is_false(items) and min_items > 0:
        return False
    if s.get("uniqueItems") is True and min_items > 1:
        capacity = _domain_capacity(items)
        if capacity is not None and capacity < min_items:
            return False
    return True


def _domain_capacity(items):
    """Number of distinct instances the items schema admits, if tiny and known."""
    if not isinstance(items, dict):
        return None
    if "enum" in items and set(items) == {"enum"}:
        return len(items["enum"])
    if set(items) == {"type"}:
        names = items["type"] if isinstance(items["type"], list) else [items["type"]]
        sizes = {"null": 1, "boolean": 2}
        if all(name in sizes for name in names):
            return sum(sizes[name] for name in names)
    return None


def _object_feasible(s: dict) -> bool:
    required = s.get("required", [])
    max_props = s.get("maxProperties")
    if max_props is not None:
        if s.get("minProperties", 0) > max_props:
            return False
        if len(set(required)) > max_props:
            return False
    props = s.get("properties", {})
    additional = s.get("additionalProperties")
    for name in required:
        effective = props.get(name, additional)
        if effective is not None and is_false(effective):
            return False
    return True


def _simplify_array_keywords(s: dict) -> None:
    items = s.get("items")
    if items is not None and is_true(items):
        s.pop("items")
    elif items is not None and is_false(items):
        s.pop("items")
        s["maxItems"] = 0
    if s.get("maxItems") == 0:
        s.pop("items", None)
        s.pop("uniqueItems", None)
    if s.get("minItems") == 0:
        s.pop("minItems")
    if s.get("uniqueItems") is False:
        s.pop("uniqueItems")
    if s.get("uniqueItems") is True and s.get("maxItems") is not None and s["maxItems"] <= 1:
        s.pop("uniqueItems")


def _simplify_object_keywords(s: dict) -> None:
    props = s.get("properties")
    additional = s.get("additionalProperties")
    required = s.get("required")

    if required is not None:
        required = sorted(set(required))
        if required:
            s["required"] = required
        else:
            s.pop("required")
            required = None

    if additional is not None and is_true(additional):
        s.pop("additionalProperties")
        additional = None

    if props is not None:
        cleaned = {}
        for name, sub in props.items():
            if is_true(sub) and additional is None:
                continue  # unconstrained either way
            if is_false(sub) and additional is not None and is_false(additional):
                continue  # banned either way
            cleaned[name] = sub
        props = cleaned
        if props:
            s["properties"] = dict(sorted(props.items()))
        else:
            s.pop("properties")
            props = None

    if additional is not None and is_false(additional):
        cap = len(props) if props else 0
        if s.get("maxProperties", math.inf) > cap:
            s["maxProperties"] = cap
        if cap == 0:
            s.pop("additionalProperties")

    if s.get("maxProperties") == 0:
        s.pop("properties", None)
        s.pop("additionalProperties", None)
    if s.get("minProperties") == 0:
        s.pop("minProperties")


def _drop_vacuous_bounds(s: dict) -> None:
    if s.get("minLength") == 0:
        s.pop("minLength")


def _drop_inapplicable(s: dict, types: list[str]) -> None:
    if "number" not in types and "integer" not in types:
        for key in _NUMERIC_KEYWORDS:
            s.pop(key, None)
    if "string" not in types:
        for key in _STRING_KEYWORDS:
            s.pop(key, None)
    if "array" not in types:
        for key in _ARRAY_KEYWORDS:
            s.pop(key, None)
    if "object" not in types:
        for key in _OBJECT_KEYWORDS:
            s.pop(key, None)


def _dedup_sorted(branches: list[dict]) -> list[dict]:
    seen = {}
    for branch in branches:
        key = json.dumps(branch, sort_keys=True, ensure_ascii=False)
        seen.setdefault(key, branch)
    return [seen[key] for key in sorted(seen)]


# --- conjunction of two canonical values ---------------------------------------

_MIN_KEYS = ("minimum", "exclusiveMinimum", "minLength", "minItems", "minProperties")
_MAX_KEYS = ("maximum", "exclusiveMaximum", "maxLength", "maxItems", "maxProperties")
_HANDLED = (set(_MIN_KEYS) | set(_MAX_KEYS)
            | {"type", "enum", "multipleOf", "pattern", "format", "items", "uniqueItems",
               "properties", "additionalProperties", "required", "not", "anyOf", "oneOf"})


def _as_value(schema) -> dict:
    if schema is True:
        return true_schema()
    if schema is False:
        return false_schema()
    return schema


def _merge_values(a: dict, b: dict, budget: _Budget) -> dict:
    a, b = _as_value(a), _as_value(b)
    if is_false(a) or is_false(b):
        return false_schema()
    if is_true(a):
        return copy.deepcopy(b)
    if is_true(b):
        return copy.deepcopy(a)

    if "enum" in a or "enum" in b:
        source, other = (a, b) if "enum" in a else (b, a)
        rest = {k: v for k, v in source.items() if k != "enum"}
        kept = []
        for member in source["enum"]:
            if (validate_instance(other, member).valid
                    and validate_instance(rest, member).valid
                    and not any(deep_equal(member, m) for m in kept)):
                kept.append(member)
        if not kept:
            return false_schema()
        return {"enum": sorted(kept, key=canonical_sort_key)}

    out: dict = {}

    merged_types = _intersect_types(_type_list(a), _type_list(b))
    if not merged_types:
        return false_schema()
    if merged_types != list(TYPE_ORDER):
        out["type"] = merged_types if len(merged_types) > 1 else merged_types[0]

    for key in _MIN_KEYS:
        if key in a or key in b:
            out[key] = max(v for v in (a.get(key), b.get(key)) if v is not None)
    for key in _MAX_KEYS:
        if key in a or key in b:
            out[key] = min(v for v in (a.get(key), b.get(key)) if v is not None)

    _merge_multiple_of(a, b, out)
    _merge_pattern(a, b, out)

    if "format" in a or "format" in b:
        out["format"] = a.get("format", b.get("format"))

    if "items" in a or "items" in b:
        if "items" in a and "items" in b:
            out["items"] = _merge_values(a["items"], b["items"], budget)
        else:
            out["items"] = copy.deepcopy(a.get("items", b.get("items")))
    if a.get("uniqueItems") is True or b.get("uniqueItems") is True:
        out["uniqueItems"] = True

    _merge_object_keywords(a, b, out, budget)

    if "required" in a or "required" in b:
        out["required"] = sorted(set(a.get("required", [])) | set(b.get("required", [])))

    for side in (a, b):
        if "not" in side:
            _add_not_filter(out, side["not"])

    if not _merge_any_of(a, b, out, budget):
        return false_schema()

    if "oneOf" in a and "oneOf" in b:
        raise ComplexityBudgetExceeded(
            "merging two oneOf constraints has no linear-size conjunction")
    if "oneOf" in a or "oneOf" in b:
        out["oneOf"] = copy.deepcopy(a.get("oneOf", b.get("oneOf")))

    for side in (a, b):  # annotations ride along, first writer wins
        for key, value in side.items():
            if key not in _HANDLED and key not in out:
                out[key] = copy.deepcopy(value)

    budget.check(out)
    return out


def _intersect_types(names_a: list[str], names_b: list[str]) -> list[str]:
    def atoms(names):
        out = set()
        for name in names:
            out.update({"int", "float"} if name == "number"
                       else {"int"} if name == "integer" else {name})
        return out

    common = atoms(names_a) & atoms(names_b)
    ordered = []
    for name in TYPE_ORDER:
        if name == "integer":
            if "int" in common and "float" not in common:
                ordered.append("integer")
        elif name == "number":
            if "float" in common:
                ordered.append("number")
        elif name in common:
            ordered.append(name)
    return ordered


def _merge_multiple_of(a: dict, b: dict, out: dict) -> None:
    mo_a, mo_b = a.get("multipleOf"), b.get("multipleOf")
    if mo_a is None and mo_b is None:
        return
    if mo_a is None or mo_b is None or mo_a == mo_b:
        out["multipleOf"] = mo_a if mo_a is not None else mo_b
        return
    fa, fb = Fraction(mo_a), Fraction(mo_b)
    if fa.denominator == 1 and fb.denominator == 1:
        out["multipleOf"] = math.lcm(int(fa), int(fb))
        return
    # non-integral pair: keep one exactly, enforce the other by filtering
    out["multipleOf"] = mo_a
    _add_not_filter(out, {"not": {"multipleOf": mo_b}})


def _merge_pattern(a: dict, b: dict, out: dict) -> None:
    pa, pb = a.get("pattern"), b.get("pattern")
    if pa is None and pb is None:
        return
    if pa is None or pb is None or pa == pb:
        out["pattern"] = pa if pa is not None else pb
        return
    # conjoined patterns are not intersected symbolically: filter the second
    out["pattern"] = pa
    _add_not_filter(out, {"not": {"pattern": pb}})


def _merge_object_keywords(a: dict, b: dict, out: dict, budget: _Budget) -> None:
    involved = ("properties" in a or "properties" in b
                or "additionalProperties" in a or "additionalProperties" in b)
    if not involved:
        return
    ap_a = a.get("additionalProperties", True)
    ap_b = b.get("additionalProperties", True)
    names = set(a.get("properties", {})) | set(b.get("properties", {}))
    merged_props = {}
    for name in sorted(names):
        effective_a = a.get("properties", {}).get(name, ap_a)
        effective_b = b.get("properties", {}).get(name, ap_b)
        merged_props[name] = _merge_values(_as_value(effective_a),
                                           _as_value(effective_b), budget)
    merged_ap = _merge_values(_as_value(ap_a), _as_value(ap_b), budget)
    if merged_props:
        out["properties"] = merged_props
    if not is_true(merged_ap):
        out["additionalProperties"] = merged_ap


def _add_not_filter(out: dict, branch: dict) -> None:
    """Conjunction of negations: ¬x ∧ ¬y ≡ ¬(x ∨ y)."""
    branch = copy.deepcopy(branch)
    existing = out.get("not")
    if existing is None:
        out["not"] = branch
        return
    existing_branches = (existing["anyOf"] if set(existing) == {"anyOf"}
                         else [existing])
    new_branches = (branch["anyOf"] if set(branch) == {"anyOf"} else [branch])
    combined = _dedup_sorted(existing_branches + new_branches)
    out["not"] = combined[0] if len(combined) == 1 else {"anyOf": combined}


def _merge_any_of(a: dict, b: dict, out: dict, budget: _Budget) -> bool:
    """Returns False when the conjunction is unsatisfiable."""
    any_a, any_b = a.get("anyOf"), b.get("anyOf")
    if any_a is None and any_b is None:
        return True
    if any_a is not None and any_b is not None:
        pairs = []
        for x in any_a:
            for y in any_b:
                merged = _merge_values(x, y, budget)
                if not is_false(merged):
                    pairs.append(merged)
                budget.check(pairs)
        if not pairs:
            return False
        out["anyOf"] = _dedup_sorted(pairs)
        return True
    out["anyOf"] = copy.deepcopy(any_a if any_a is not None else any_b)
    return True
