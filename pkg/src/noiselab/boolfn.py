"""Boolean functions on a graph's state set: named families, influences, Fourier.

The influence of generator u is I_u(f) = P(f(X_0) != f((X_0)_u)) with X_0
uniform; it is computed by exact enumeration (a count divided by |S|), never
by sampling, so downstream bound comparisons carry no statistical noise.

Named families (dictator/parity/majority/tribes/slice indicator) need a
{0,1}^n state set, i.e. a torus graph with m = 2.  Tribes with l tribes of
k members puts tribe t on coordinates (t-1)k+1 .. tk and takes the OR over
tribes of the AND over members.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import ValidationError
from .graphs import SchreierGraph
from .spectral import Spectrum, coefficients

__all__ = [
    "BooleanFunction",
    "TribesSpec",
    "InfluenceProfile",
    "FourierExpansion",
    "make_named",
    "make_tribes",
    "influence",
    "influence_profile",
    "fourier",
    "mean_variance",
    "function_from_json",
    "function_to_json",
]


@dataclass(frozen=True, eq=False)
class BooleanFunction:
    """A {0,1}-valued function given by its value on every state."""

    values: np.ndarray
    name: str = ""

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.int8)
        if arr.ndim != 1 or arr.size == 0:
            raise ValidationError("function values must be a nonempty 1-d array")
        if not np.isin(arr, (0, 1)).all():
            raise ValidationError("function values must all be 0 or 1")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def size(self) -> int:
        return int(self.values.shape[0])


@dataclass(frozen=True)
class TribesSpec:
    """l tribes of k members on n = l*k coordinates."""

    tribes: int
    members: int

    def __post_init__(self):
        if self.tribes < 1 or self.members < 1:
            raise ValidationError(
                f"tribes spec needs l, k >= 1, got l={self.tribes}, k={self.members}"
            )

    @property
    def n(self) -> int:
        return self.tribes * self.members


def _cube_dimension(g: SchreierGraph) -> int:
    if g.family == "torus" and g.params.get("m") == 2:
        return int(g.params["n"])
    raise ValidationError(
        f"named Boolean families need a {{0,1}}^n state set "
        f"(torus with m=2); got family {g.family!r} with params {dict(g.params)}"
    )


def _bit(idx: np.ndarray, k: int) -> np.ndarray:
    """Coordinate w_k (1-based) of each mixed-radix index for m = 2."""
    return (idx >> (k - 1)) & 1


def make_tribes(g: SchreierGraph, spec: TribesSpec) -> BooleanFunction:
    n = _cube_dimension(g)
    if spec.n != n:
        raise ValidationError(f"tribes l*k = {spec.n} does not match graph dimension {n}")
    idx = np.arange(g.size)
    out = np.zeros(g.size, dtype=np.int8)
    for t in range(spec.tribes):
        band = np.ones(g.size, dtype=bool)
        for j in range(1, spec.members + 1):
            band &= _bit(idx, t * spec.members + j).astype(bool)
        out |= band
    return BooleanFunction(out, name=f"tribes:l={spec.tribes},k={spec.members}")


def make_named(g: SchreierGraph, spec) -> BooleanFunction:
    """Build a named function from a ``TribesSpec`` or a spec string.

    Spec strings: ``parity``, ``majority``, ``dictator:i=1``, ``slice:m=2``,
    ``tribes:l=2,k=2``.
    """
    if isinstance(spec, TribesSpec):
        return make_tribes(g, spec)
    if not isinstance(spec, str):
        raise ValidationError(f"unsupported function spec of type {type(spec).__name__}")

    name, _, argstr = spec.partition(":")
    args: dict[str, int] = {}
    if argstr:
        for piece in argstr.split(","):
            key, _, value = piece.partition("=")
            try:
                args[key.strip()] = int(value)
            except ValueError as exc:
                raise ValidationError(f"bad argument {piece!r} in spec {spec!r}") from exc

    n = _cube_dimension(g)
    idx = np.arange(g.size)
    weight = np.zeros(g.size, dtype=np.int64)
    for k in range(1, n + 1):
        weight += _bit(idx, k)

    if name == "parity":
        return BooleanFunction((weight % 2).astype(np.int8), name="parity")
    if name == "majority":
        # ties (even n, weight exactly n/2) go to 0
        return BooleanFunction((2 * weight > n).astype(np.int8), name="majority")
    if name == "dictator":
        i = args.get("i")
        if i is None or not 1 <= i <= n:
            raise ValidationError(f"dictator needs i in [1, {n}], got {args}")
        return BooleanFunction(_bit(idx, i).astype(np.int8), name=f"dictator:i={i}")
    if name == "slice":
        m = args.get("m")
        if m is None or not 0 <= m <= n:
            raise ValidationError(f"slice needs m in [0, {n}], got {args}")
        return BooleanFunction((weight == m).astype(np.int8), name=f"slice:m={m}")
    if name == "tribes":
        if set(args) != {"l", "k"}:
            raise ValidationError(f"tribes needs l and k, got {args}")
        return make_tribes(g, TribesSpec(tribes=args["l"], members=args["k"]))
    raise ValidationError(f"unknown named function {name!r}")


def _check_sizes(g: SchreierGraph, f: BooleanFunction) -> None:
    if f.size != g.size:
        raise ValidationError(
            f"function is on {f.size} states but the graph has {g.size}"
        )


def influence(g: SchreierGraph, f: BooleanFunction, u: int) -> float:
    """I_u(f) = P(f(X_0) != f((X_0)_u)), an exact count over all states."""
    _check_sizes(g, f)
    if not 0 <= u < g.degree:
        raise ValidationError(f"generator index {u} out of range [0, {g.degree})")
    return float(np.count_nonzero(f.values != f.values[g.images[u]])) / g.size


@dataclass(frozen=True, eq=False)
class InfluenceProfile:
    per_generator: np.ndarray
    labels: tuple[str, ...]
    total: float
    sum_of_squares: float


def influence_profile(g: SchreierGraph, f: BooleanFunction) -> InfluenceProfile:
    _check_sizes(g, f)
    flips = f.values[np.newaxis, :] != f.values[g.images]
    per = flips.sum(axis=1).astype(float) / g.size
    per.setflags(write=False)
    return InfluenceProfile(
        per_generator=per,
        labels=g.generator_labels,
        total=float(per.sum()),
        sum_of_squares=float(np.dot(per, per)),
    )


@dataclass(frozen=True, eq=False)
class FourierExpansion:
    """Coefficients <f, psi_j> against a spectrum's eigenbasis."""

    coefficients: np.ndarray
    eigenvalues: np.ndarray

    @property
    def mean(self) -> float:
        return float(self.coefficients[0])

    @property
    def total_weight(self) -> float:
        return float(np.dot(self.coefficients, self.coefficients))

    @property
    def variance_weight(self) -> float:
        """Sum of squared coefficients away from the zero eigenvalue."""
        mask = self.eigenvalues > 0
        c = self.coefficients[mask]
        return float(np.dot(c, c))


def fourier(s: Spectrum, f: BooleanFunction) -> FourierExpansion:
    c = coefficients(s, f.values.astype(float))
    c.setflags(write=False)
    return FourierExpansion(coefficients=c, eigenvalues=s.eigenvalues)


def mean_variance(f: BooleanFunction) -> tuple[float, float]:
    """(mean, variance) with variance = mean * (1 - mean) for a 0/1 function."""
    mean = float(np.count_nonzero(f.values)) / f.size
    return mean, mean * (1.0 - mean)


def function_from_json(source, expected_size: int | None = None) -> BooleanFunction:
    """Load ``{"size": N, "values": [...]}`` from an object, string, or path."""
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    elif isinstance(source, Mapping):
        obj = source
    else:
        raise ValidationError(f"cannot load a function from {type(source).__name__}")
    try:
        size = int(obj["size"])
        values = obj["values"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed function JSON: {exc}") from exc
    if len(values) != size:
        raise ValidationError(f"function JSON: size {size} but {len(values)} values")
    if expected_size is not None and size != expected_size:
        raise ValidationError(
            f"function is on {size} states but the graph has {expected_size}"
        )
    return BooleanFunction(np.asarray(values), name="custom")


def function_to_json(f: BooleanFunction) -> dict:
    return {"size": f.size, "values": [int(v) for v in f.values]}
