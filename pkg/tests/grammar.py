"""Bounded random grammar over the supported schema subset, plus instances.

Deterministic given a seed; used by the canonicalisation property tests and
the acceptance suite. The grammar stays inside the keyword subset and the
supported regex dialect so that the independent validator is always
applicable.
"""

import random

PATTERNS = ["^a+$", "b|c", "^[0-9]{2}$", "x[yz]*", "^(foo|ba[rz])$"]


def random_schema(rng: random.Random, depth: int = 0) -> dict:
    kind = rng.choice([
        "true", "integer", "number", "string", "enum",
        "array", "object", "combo", "typed",
    ])
    if kind == "true" or (depth >= 2 and kind in ("array", "object", "combo")):
        return {}
    if kind == "integer":
        schema = {"type": "integer"}
        if rng.random() < 0.7:
            schema["minimum"] = rng.randint(-5, 5)
        if rng.random() < 0.7:
            schema["maximum"] = rng.randint(-5, 8)
        if rng.random() < 0.3:
            schema["multipleOf"] = rng.randint(1, 3)
        if rng.random() < 0.2:
            schema["exclusiveMinimum"] = rng.randint(-5, 5)
        return schema
    if kind == "number":
        schema = {"type": "number"}
        if rng.random() < 0.6:
            schema["minimum"] = round(rng.uniform(-3, 3), 2)
        if rng.random() < 0.6:
            schema["maximum"] = round(rng.uniform(-3, 5), 2)
        if rng.random() < 0.2:
            schema["exclusiveMaximum"] = round(rng.uniform(-1, 6), 2)
        return schema
    if kind == "string":
        schema = {"type": "string"}
        if rng.random() < 0.5:
            schema["minLength"] = rng.randint(0, 4)
        if rng.random() < 0.5:
            schema["maxLength"] = rng.randint(0, 6)
        if rng.random() < 0.25:
            schema["pattern"] = rng.choice(PATTERNS)
        return schema
    if kind == "enum":
        pool = [None, True, False, 0, 1, -1, 2.5, "x", "y", "zz", [1], {"k": 1}]
        return {"enum": rng.sample(pool, rng.randint(1, 4))}
    if kind == "array":
        schema = {"type": "array", "items": random_schema(rng, depth + 1)}
        if rng.random() < 0.5:
            schema["minItems"] = rng.randint(0, 2)
        if rng.random() < 0.5:
            schema["maxItems"] = rng.randint(0, 4)
        if rng.random() < 0.3:
            schema["uniqueItems"] = True
        return schema
    if kind == "object":
        names = rng.sample(["a", "b", "c"], rng.randint(0, 3))
        schema = {"type": "object"}
        if names:
            schema["properties"] = {n: random_schema(rng, depth + 1) for n in names}
            if rng.random() < 0.5:
                schema["required"] = sorted(rng.sample(names, rng.randint(0, len(names))))
        if rng.random() < 0.3:
            schema["additionalProperties"] = rng.choice([False, {"type": "integer"}])
        if rng.random() < 0.2:
            schema["maxProperties"] = rng.randint(0, 3)
        if rng.random() < 0.2:
            schema["minProperties"] = rng.randint(0, 2)
        return schema
    if kind == "combo":
        op = rng.choice(["allOf", "anyOf", "oneOf", "not"])
        if op == "not":
            return {"not": random_schema(rng, depth + 1)}
        return {op: [random_schema(rng, depth + 1) for _ in range(rng.randint(1, 3))]}
    return {"type": rng.choice(["null", "boolean", "integer", "string"])}


def random_instance(rng: random.Random, depth: int = 0):
    kind = rng.choice(["null", "bool", "int", "float", "str", "arr", "obj"])
    if kind == "null":
        return None
    if kind == "bool":
        return rng.choice([True, False])
    if kind == "int":
        return rng.randint(-8, 12)
    if kind == "float":
        return rng.choice([0.0, 1.0, 2.5, -1.5, 3.0, round(rng.uniform(-4, 4), 2)])
    if kind == "str":
        return "".join(rng.choice("abcxyz019") for _ in range(rng.randint(0, 5)))
    if kind == "arr" and depth < 2:
        return [random_instance(rng, depth + 1) for _ in range(rng.randint(0, 3))]
    if kind == "obj" and depth < 2:
        return {rng.choice("abcz"): random_instance(rng, depth + 1)
                for _ in range(rng.randint(0, 3))}
    return 0
