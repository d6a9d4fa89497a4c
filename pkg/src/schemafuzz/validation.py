"""Independent draft-07 validator for the supported keyword subset.

This is the oracle the rest of the system is judged against: it works on
raw or canonical schemas alike and never consults the canonicaliser or
generator. Violations are reported in document order with JSON-pointer
paths into the *instance*.

Keywords outside the subset that would change validity (``$ref``,
``patternProperties``, conditional applicators, array-form ``items``, ...)
raise UnsupportedKeyword instead of silently mis-validating. Annotations
like ``format``, ``title`` or ``x-*`` extensions are ignored, as draft-07
requires.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from . import patterns
from .errors import SchemaStructureError, UnsupportedKeyword, UnsupportedPattern
from .jsontools import (
    contains_equal,
    deep_equal,
    json_type_of,
    matches_type,
    pointer_escape,
)

SUPPORTED_KEYWORDS = frozenset({
    "type", "enum", "const",
    "minimum", "maximum", "exclusiveMinimum", "exclusiveMaximum", "multipleOf",
    "minLength", "maxLength", "pattern", "format",
    "items", "minItems", "maxItems", "uniqueItems",
    "properties", "additionalProperties", "required",
    "minProperties", "maxProperties",
    "allOf", "anyOf", "oneOf", "not",
})

# Outside the declared subset *and* validity-affecting: must not be ignored.
REJECTED_KEYWORDS = frozenset({
    "$ref", "$dynamicRef", "$recursiveRef",
    "patternProperties", "propertyNames", "dependencies",
    "dependentSchemas", "dependentRequired",
    "additionalItems", "prefixItems", "contains", "minContains", "maxContains",
    "if", "then", "else",
    "unevaluatedProperties", "unevaluatedItems",
})


@dataclass(frozen=True)
class Violation:
    path: str  # JSON pointer into the instance
    keyword: str
    message: str


@dataclass
class ValidationResult:
    valid: bool
    violations: list[Violation] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.valid


def validate_instance(schema: Any, instance: Any) -> ValidationResult:
    """Draft-07 validation of ``instance`` against ``schema``."""
    violations: list[Violation] = []
    _validate(schema, instance, "", violations)
    return ValidationResult(valid=not violations, violations=violations)


def is_valid(schema: Any, instance: Any) -> bool:
    return validate_instance(schema, instance).valid


def _is_multiple(value, divisor) -> bool:
    # Exact via rationals; Fraction(float) uses the IEEE value, matching how
    # mainstream draft-07 validators behave on float divisors.
    if isinstance(value, int) and isinstance(divisor, int):
        return value % divisor == 0
    try:
        quotient = Fraction(value) / Fraction(divisor)
    except (OverflowError, ZeroDivisionError, ValueError):
        return False
    return quotient.denominator == 1


def _numeric(instance) -> bool:
    return isinstance(instance, (int, float)) and not isinstance(instance, bool)


def _fail(violations, path, keyword, message):
    violations.append(Violation(path, keyword, message))


def _validate(schema: Any, instance: Any, path: str, violations: list) -> None:
    if schema is True:
        return
    if schema is False:
        _fail(violations, path, "false", "false schema allows nothing")
        return
    if not isinstance(schema, dict):
        raise SchemaStructureError(
            f"schema must be a boolean or object, got {json_type_of(schema)}")

    for keyword in schema:
        if keyword in REJECTED_KEYWORDS:
            raise UnsupportedKeyword(keyword)

    for keyword, arg in schema.items():
        if keyword == "additionalProperties":
            _check_additional_properties(schema, instance, path, violations)
            continue
        checker = _CHECKERS.get(keyword)
        if checker is not None:
            checker(arg, instance, path, violations)
        # anything else (format, title, x-*, ...) is an annotation: ignored


# --- individual keyword checkers ---------------------------------------------

def _check_type(arg, instance, path, violations):
    names = arg if isinstance(arg, list) else [arg]
    for name in names:
        if name not in ("null", "boolean", "integer", "number", "string", "array", "object"):
            raise SchemaStructureError(f"unknown type name {name!r}")
    if not any(matches_type(instance, name) for name in names):
        _fail(violations, path, "type", f"{json_type_of(instance)} is not one of {names}")


def _check_enum(arg, instance, path, violations):
    if not isinstance(arg, list):
        raise SchemaStructureError("enum must be an array")
    if not contains_equal(arg, instance):
        _fail(violations, path, "enum", f"{instance!r} not in enum")


def _check_const(arg, instance, path, violations):
    if not deep_equal(arg, instance):
        _fail(violations, path, "const", f"{instance!r} != const value")


def _check_minimum(arg, instance, path, violations):
    if _numeric(instance) and instance < arg:
        _fail(violations, path, "minimum", f"{instance} < {arg}")


def _check_maximum(arg, instance, path, violations):
    if _numeric(instance) and instance > arg:
        _fail(violations, path, "maximum", f"{instance} > {arg}")


def _check_exclusive_minimum(arg, instance, path, violations):
    if isinstance(arg, bool):
        raise SchemaStructureError("boolean exclusiveMinimum is draft-04; normalise first")
    if _numeric(instance) and instance <= arg:
        _fail(violations, path, "exclusiveMinimum", f"{instance} <= {arg}")


def _check_exclusive_maximum(arg, instance, path, violations):
    if isinstance(arg, bool):
        raise SchemaStructureError("boolean exclusiveMaximum is draft-04; normalise first")
    if _numeric(instance) and instance >= arg:
        _fail(violations, path, "exclusiveMaximum", f"{instance} >= {arg}")


def _check_multiple_of(arg, instance, path, violations):
    if _numeric(instance) and not _is_multiple(instance, arg):
        _fail(violations, path, "multipleOf", f"{instance} not a multiple of {arg}")


def _check_min_length(arg, instance, path, violations):
    if isinstance(instance, str) and len(instance) < arg:
        _fail(violations, path, "minLength", f"length {len(instance)} < {arg}")


def _check_max_length(arg, instance, path, violations):
    if isinstance(instance, str) and len(instance) > arg:
        _fail(violations, path, "maxLength", f"length {len(instance)} > {arg}")


def _check_pattern(arg, instance, path, violations):
    if not isinstance(instance, str):
        return
    try:
        matcher = patterns.compile_checked(arg)
    except UnsupportedPattern as exc:
        raise UnsupportedKeyword("pattern", str(exc)) from exc
    if matcher.search(instance) is None:
        _fail(violations, path, "pattern", f"{instance!r} does not match {arg!r}")


def _check_items(arg, instance, path, violations):
    if isinstance(arg, list):
        raise UnsupportedKeyword("items", "array-form items is outside the supported subset")
    if not isinstance(instance, list):
        return
    for index, item in enumerate(instance):
        _validate(arg, item, f"{path}/{index}", violations)


def _check_min_items(arg, instance, path, violations):
    if isinstance(instance, list) and len(instance) < arg:
        _fail(violations, path, "minItems", f"{len(instance)} items < {arg}")


def _check_max_items(arg, instance, path, violations):
    if isinstance(instance, list) and len(instance) > arg:
        _fail(violations, path, "maxItems", f"{len(instance)} items > {arg}")


def _check_unique_items(arg, instance, path, violations):
    if arg is not True or not isinstance(instance, list):
        return
    for i in range(len(instance)):
        for j in range(i + 1, len(instance)):
            if deep_equal(instance[i], instance[j]):
                _fail(violations, path, "uniqueItems", f"items {i} and {j} are equal")
                return


def _check_properties(arg, instance, path, violations):
    if not isinstance(arg, dict):
        raise SchemaStructureError("properties must be an object")
    if not isinstance(instance, dict):
        return
    for name, subschema in arg.items():
        if name in instance:
            _validate(subschema, instance[name], f"{path}/{pointer_escape(name)}", violations)


def _check_additional_properties(schema, instance, path, violations):
    """Needs the sibling ``properties`` keyword, so it takes the whole schema."""
    arg = schema["additionalProperties"]
    if not isinstance(instance, dict):
        return
    declared = schema.get("properties", {})
    for name, value in instance.items():
        if name in declared:
            continue
        if arg is False:
            _fail(violations, path, "additionalProperties",
                  f"additional property {name!r} not allowed")
        elif arg is not True:
            _validate(arg, value, f"{path}/{pointer_escape(name)}", violations)


def _check_required(arg, instance, path, violations):
    if not isinstance(arg, list) or not all(isinstance(k, str) for k in arg):
        raise SchemaStructureError("required must be an array of strings")
    if not isinstance(instance, dict):
        return
    for name in arg:
        if name not in instance:
            _fail(violations, path, "required", f"missing required property {name!r}")


def _check_min_properties(arg, instance, path, violations):
    if isinstance(instance, dict) and len(instance) < arg:
        _fail(violations, path, "minProperties", f"{len(instance)} properties < {arg}")


def _check_max_properties(arg, instance, path, violations):
    if isinstance(instance, dict) and len(instance) > arg:
        _fail(violations, path, "maxProperties", f"{len(instance)} properties > {arg}")


def _check_all_of(arg, instance, path, violations):
    for subschema in arg:
        _validate(subschema, instance, path, violations)


def _check_any_of(arg, instance, path, violations):
    for subschema in arg:
        if validate_instance(subschema, instance).valid:
            return
    _fail(violations, path, "anyOf", "instance matches no anyOf branch")


def _check_one_of(arg, instance, path, violations):
    matched = sum(1 for subschema in arg if validate_instance(subschema, instance).valid)
    if matched != 1:
        _fail(violations, path, "oneOf",
              f"instance matches {matched} oneOf branches, not exactly 1")


def _check_not(arg, instance, path, violations):
    if validate_instance(arg, instance).valid:
        _fail(violations, path, "not", "instance matches the negated schema")


_CHECKERS = {
    "type": _check_type,
    "enum": _check_enum,
    "const": _check_const,
    "minimum": _check_minimum,
    "maximum": _check_maximum,
    "exclusiveMinimum": _check_exclusive_minimum,
    "exclusiveMaximum": _check_exclusive_maximum,
    "multipleOf": _check_multiple_of,
    "minLength": _check_min_length,
    "maxLength": _check_max_length,
    "pattern": _check_pattern,
    "items": _check_items,
    "minItems": _check_min_items,
    "maxItems": _check_max_items,
    "uniqueItems": _check_unique_items,
    "properties": _check_properties,
    "required": _check_required,
    "minProperties": _check_min_properties,
    "maxProperties": _check_max_properties,
    "allOf": _check_all_of,
    "anyOf": _check_any_of,
    "oneOf": _check_one_of,
    "not": _check_not,
}
