"""Validator tests: vendored suite fixtures, cross-checks, and spec cases.

Every suite fixture expectation is verified against python-jsonschema's
Draft7Validator first, so the fixtures themselves cannot drift from
draft-07 semantics.
"""

import random

import jsonschema
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from schemafuzz.errors import UnsupportedKeyword
from schemafuzz.validation import validate_instance

from .conftest import suite_cases
from .grammar import random_instance, random_schema

SUITE = list(suite_cases())


def _case_id(case):
    file, group, _schema, description, _data, _valid = case
    return f"{file}: {group}: {description}"


@pytest.mark.parametrize("case", SUITE, ids=[_case_id(c) for c in SUITE])
def test_official_suite_subset(case):
    _file, _group, schema, _description, data, valid = case
    reference = jsonschema.Draft7Validator(schema)
    assert reference.is_valid(data) == valid, "fixture disagrees with draft-07"
    assert validate_instance(schema, data).valid == valid


def test_suite_has_meaningful_size():
    assert len(SUITE) >= 120


@pytest.mark.parametrize("schema,instance,valid", [
    ({"type": "integer", "minimum": 0, "maximum": 10}, 5, True),
    ({"type": "integer", "minimum": 0, "maximum": 10}, 11, False),
    ({"type": "object", "maxProperties": 0}, {}, True),
    ({"type": "object", "maxProperties": 0}, {"a": 1}, False),
])
def test_interface_examples(schema, instance, valid):
    assert validate_instance(schema, instance).valid is valid


def test_violation_location_and_keyword():
    result = validate_instance({"type": "integer", "minimum": 0, "maximum": 10}, 11)
    assert not result.valid
    violation = result.violations[0]
    assert violation.path == ""
    assert violation.keyword == "maximum"


def test_violations_in_document_order():
    schema = {"maximum": 5, "minimum": 10, "multipleOf": 7}
    result = validate_instance(schema, 6)
    assert [v.keyword for v in result.violations] == ["maximum", "minimum", "multipleOf"]


def test_nested_violation_pointer():
    schema = {"type": "object",
              "properties": {"xs": {"type": "array", "items": {"type": "integer"}}}}
    result = validate_instance(schema, {"xs": [1, "two"]})
    assert result.violations[0].path == "/xs/1"


@pytest.mark.parametrize("schema", [
    {"$ref": "#/nope"},
    {"patternProperties": {"^a": {}}},
    {"if": {"type": "string"}},
    {"dependencies": {"a": ["b"]}},
    {"contains": {"type": "integer"}},
    {"items": [{"type": "string"}]},
    {"pattern": "(?=x)"},
])
def test_unsupported_validity_keywords_raise(schema):
    with pytest.raises(UnsupportedKeyword):
        validate_instance(schema, {"a": "x"})


def test_unknown_annotations_are_ignored():
    schema = {"type": "integer", "title": "t", "x-vendor": {"strange": True},
              "format": "int64", "example": 3}
    assert validate_instance(schema, 7).valid


small_schemas = st.sampled_from([
    {"type": "integer", "minimum": 0},
    {"type": "string", "maxLength": 3},
    {"enum": [1, "a", None]},
    {"type": "array", "items": {"type": "boolean"}},
    {"type": "object", "required": ["k"]},
    {},
])
small_instances = st.recursive(
    st.none() | st.booleans() | st.integers(-20, 20)
    | st.floats(allow_nan=False, allow_infinity=False, width=32) | st.text(max_size=4),
    lambda inner: st.lists(inner, max_size=3)
    | st.dictionaries(st.sampled_from("abk"), inner, max_size=3),
    max_leaves=8,
)


@given(schema=small_schemas, instance=small_instances)
@settings(max_examples=300)
def test_not_involution(schema, instance):
    double = {"not": {"not": schema}}
    assert validate_instance(double, instance).valid == validate_instance(schema, instance).valid


def test_random_agreement_with_reference_validator():
    rng = random.Random(2024)
    checked = 0
    for _ in range(400):
        schema = random_schema(rng)
        try:
            jsonschema.Draft7Validator.check_schema(schema)
        except jsonschema.SchemaError:
            continue
        reference = jsonschema.Draft7Validator(schema)
        for _ in range(10):
            instance = random_instance(rng)
            assert validate_instance(schema, instance).valid == reference.is_valid(instance), \
                (schema, instance)
            checked += 1
    assert checked > 2000
