"""Published JSON schemas for configs and reports."""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

import jsonschema

SCHEMA_NAMES = ("config", "construct_args", "catalog", "discrimination", "simulation")


def _inline(node, load):
    if isinstance(node, dict):
        ref = node.get("$ref")
        if isinstance(ref, str) and ref.endswith(".schema.json"):
            sub = dict(load(ref[: -len(".schema.json")]))
            sub.pop("$id", None)
            sub.pop("$schema", None)
            return sub
        return {k: _inline(v, load) for k, v in node.items()}
    if isinstance(node, list):
        return [_inline(v, load) for v in node]
    return node


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    if name not in SCHEMA_NAMES:
        raise KeyError(name)
    text = resources.files(__package__).joinpath(f"{name}.schema.json").read_text()
    return _inline(json.loads(text), load_schema)


def schema_errors(instance, name: str) -> list[str]:
    validator = jsonschema.Draft202012Validator(load_schema(name))
    errors = sorted(validator.iter_errors(instance), key=lambda e: list(e.absolute_path))
    return [f"{'/'.join(map(str, e.absolute_path)) or '<root>'}: {e.message}" for e in errors]


def validate(instance, name: str) -> None:
    jsonschema.Draft202012Validator(load_schema(name)).validate(instance)
