"""Mini-spec grammar shared by the CLI and the service.

Graphs:    ``torus:m=2,n=4``, ``hypercube:n=4`` (alias for torus with m=2),
           ``johnson:n=5,m=2``, ``sym:n=4``, or a path to a custom-graph
           JSON file.
Functions: ``parity``, ``majority``, ``dictator:i=1``, ``slice:m=3``,
           ``tribes:l=2,k=2``, or a path to a function JSON file.
"""

from __future__ import annotations

import json
import os

from .boolfn import BooleanFunction, function_from_json, make_named
from .errors import ValidationError
from .graphs import (
    SchreierGraph,
    build_johnson,
    build_torus,
    build_transposition_cayley,
    graph_from_json,
)

__all__ = [
    "parse_graph_spec",
    "parse_function_spec",
    "canonical_graph_key",
    "looks_like_path",
]

_NAMED_FUNCTIONS = {"parity", "majority", "dictator", "slice", "tribes"}


def _parse_args(spec: str, argstr: str) -> dict[str, int]:
    args: dict[str, int] = {}
    if not argstr:
        return args
    for piece in argstr.split(","):
        key, sep, value = piece.partition("=")
        if not sep:
            raise ValidationError(f"expected key=value in spec {spec!r}, got {piece!r}")
        try:
            args[key.strip()] = int(value)
        except ValueError as exc:
            raise ValidationError(f"non-integer value in spec {spec!r}: {piece!r}") from exc
    return args


def looks_like_path(text: str) -> bool:
    """Heuristic split between mini-spec strings and file paths."""
    return text.endswith(".json") or os.path.sep in text or os.path.exists(text)


_looks_like_path = looks_like_path


def parse_graph_spec(spec: str) -> SchreierGraph:
    """Build a graph from a mini-spec string or a JSON file path."""
    if _looks_like_path(spec):
        if not os.path.exists(spec):
            raise ValidationError(f"graph file not found: {spec}")
        return graph_from_json(spec)
    family, _, argstr = spec.partition(":")
    args = _parse_args(spec, argstr)
    if family == "torus":
        if set(args) != {"m", "n"}:
            raise ValidationError(f"torus spec needs m and n, got {spec!r}")
        return build_torus(args["m"], args["n"])
    if family == "hypercube":
        if set(args) != {"n"}:
            raise ValidationError(f"hypercube spec needs n, got {spec!r}")
        return build_torus(2, args["n"])
    if family == "johnson":
        if set(args) != {"n", "m"}:
            raise ValidationError(f"johnson spec needs n and m, got {spec!r}")
        return build_johnson(args["n"], args["m"])
    if family == "sym":
        if set(args) != {"n"}:
            raise ValidationError(f"sym spec needs n, got {spec!r}")
        return build_transposition_cayley(args["n"])
    raise ValidationError(
        f"unknown graph spec {spec!r} (expected torus/hypercube/johnson/sym or a JSON path)"
    )


def parse_function_spec(g: SchreierGraph, spec: str) -> BooleanFunction:
    """Build a function from a mini-spec string or a JSON file path."""
    name = spec.partition(":")[0]
    if name in _NAMED_FUNCTIONS:
        return make_named(g, spec)
    if _looks_like_path(spec):
        if not os.path.exists(spec):
            raise ValidationError(f"function file not found: {spec}")
        return function_from_json(spec, expected_size=g.size)
    raise ValidationError(
        f"unknown function spec {spec!r} (expected a named family or a JSON path)"
    )


def canonical_graph_key(spec_or_obj) -> str:
    """Stable cache key for a graph input: spec string or custom JSON object."""
    if isinstance(spec_or_obj, str):
        if _looks_like_path(spec_or_obj):
            with open(spec_or_obj, "r", encoding="utf-8") as fh:
                return "custom:" + json.dumps(json.load(fh), sort_keys=True)
        return "spec:" + spec_or_obj
    return "custom:" + json.dumps(spec_or_obj, sort_keys=True)
