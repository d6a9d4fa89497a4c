import pytest

from schemafuzz.jsontools import (
    deep_equal,
    json_type_of,
    matches_type,
    node_count,
    resolve_pointer,
    stringify_primitive,
)


@pytest.mark.parametrize("value,expected", [
    (None, "null"), (True, "boolean"), (3, "integer"), (3.5, "number"),
    ("x", "string"), ([1], "array"), ({"a": 1}, "object"),
])
def test_json_type_of(value, expected):
    assert json_type_of(value) == expected


def test_integral_floats_match_integer():
    assert matches_type(1.0, "integer")
    assert not matches_type(1.5, "integer")
    assert matches_type(1, "number")
    assert not matches_type(True, "integer")
    assert not matches_type(True, "number")


def test_deep_equal_numeric_vs_boolean():
    assert deep_equal(1, 1.0)
    assert not deep_equal(1, True)
    assert not deep_equal(0, False)
    assert deep_equal({"a": [1, 2.0]}, {"a": [1.0, 2]})
    assert not deep_equal({"a": 1}, {"a": 1, "b": 2})


def test_node_count():
    assert node_count(1) == 1
    assert node_count({"a": [1, 2], "b": {"c": 3}}) == 6


def test_resolve_pointer():
    doc = {"a": {"b": [10, {"c~d": 1, "e/f": 2}]}}
    assert resolve_pointer(doc, "") is doc
    assert resolve_pointer(doc, "/a/b/0") == 10
    assert resolve_pointer(doc, "/a/b/1/c~0d") == 1
    assert resolve_pointer(doc, "/a/b/1/e~1f") == 2
    with pytest.raises(KeyError):
        resolve_pointer(doc, "/a/x")
    with pytest.raises(KeyError):
        resolve_pointer(doc, "/a/b/9")


def test_stringify_primitive():
    assert stringify_primitive(True) == "true"
    assert stringify_primitive(None) == "null"
    assert stringify_primitive(7) == "7"
    assert stringify_primitive(2.5) == "2.5"
    assert stringify_primitive("x y") == "x y"
