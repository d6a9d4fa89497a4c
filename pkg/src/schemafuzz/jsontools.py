"""Small helpers over plain JSON value trees.

JSON draft-07 semantics need two things Python does not give directly:
booleans must not compare equal to 0/1, and ``1 == 1.0`` must hold for
``enum``/``uniqueItems``. Everything in this module is pure.
"""

from __future__ import annotations

import json
from typing import Any

JSON_TYPE_NAMES = ("null", "boolean", "integer", "number", "string", "array", "object")


def json_type_of(value: Any) -> str:
    """The draft-07 primitive type name of a Python JSON value."""
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "boolean"
    if isinstance(value, int):
        return "integer"
    if isinstance(value, float):
        return "number"
    if isinstance(value, str):
        return "string"
    if isinstance(value, list):
        return "array"
    if isinstance(value, dict):
        return "object"
    raise TypeError(f"not a JSON value: {value!r}")


def matches_type(value: Any, type_name: str) -> bool:
    """Draft-07 type check: numbers with zero fraction count as integers."""
    actual = json_type_of(value)
    if type_name == actual:
        return True
    if type_name == "number" and actual == "integer":
        return True
    if type_name == "integer" and actual == "number":
        return isinstance(value, float) and value == int(value)
    return False


def deep_equal(a: Any, b: Any) -> bool:
    """JSON equality: 1 == 1.0 but True != 1, recursively."""
    if isinstance(a, bool) or isinstance(b, bool):
        return isinstance(a, bool) and isinstance(b, bool) and a is b
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        return a == b
    if isinstance(a, list) and isinstance(b, list):
        return len(a) == len(b) and all(deep_equal(x, y) for x, y in zip(a, b))
    if isinstance(a, dict) and isinstance(b, dict):
        return a.keys() == b.keys() and all(deep_equal(v, b[k]) for k, v in a.items())
    return type(a) is type(b) and a == b


def contains_equal(items: list, candidate: Any) -> bool:
    return any(deep_equal(item, candidate) for item in items)


def node_count(value: Any) -> int:
    """Number of nodes in a JSON tree; the canonicaliser's budget unit."""
    if isinstance(value, dict):
        return 1 + sum(node_count(v) for v in value.values())
    if isinstance(value, list):
        return 1 + sum(node_count(v) for v in value)
    return 1


def canonical_sort_key(value: Any):
    """Total order over JSON values, used to give enums a stable order."""
    rank = JSON_TYPE_NAMES.index(json_type_of(value))
    return (rank, json.dumps(value, sort_keys=True, ensure_ascii=False))


def pointer_escape(token: str) -> str:
    return token.replace("~", "~0").replace("/", "~1")


def pointer_unescape(token: str) -> str:
    return token.replace("~1", "/").replace("~0", "~")


def resolve_pointer(document: Any, pointer: str) -> Any:
    """Evaluate an RFC 6901 JSON pointer; raises KeyError if absent."""
    if pointer == "":
        return document
    if not pointer.startswith("/"):
        raise KeyError(f"pointer must start with '/': {pointer!r}")
    node = document
    for raw in pointer[1:].split("/"):
        token = pointer_unescape(raw)
        if isinstance(node, dict):
            if token not in node:
                raise KeyError(pointer)
            node = node[token]
        elif isinstance(node, list):
            if not token.isdigit() or int(token) >= len(node):
                raise KeyError(pointer)
            node = node[int(token)]
        else:
            raise KeyError(pointer)
    return node


def stringify_primitive(value: Any) -> str:
    """JSON-style textual form of a primitive, for path/query/header slots."""
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return json.dumps(value)
    return str(value)
