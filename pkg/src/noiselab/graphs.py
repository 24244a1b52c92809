"""Finite Schreier graphs: a state set acted on by a symmetric generator set.

A graph here is a finite set S of states together with generators
u: S -> S, each a permutation, with the set closed under inverses
(u in U implies u^-1 in U).  The continuous-time random walk jumps at
rate 1 and applies a uniformly chosen generator at each jump.

Canonical state orderings (tests and file formats rely on these):

* ``build_torus(m, n)``: states are Z_m^n, indexed in mixed radix with
  coordinate 1 least significant: index = sum_k w_k * m^(k-1).
* ``build_johnson(n, m)``: weight-m words in {0,1}^n, sorted by ascending
  lexicographic order of the word string w_1 w_2 ... w_n (coordinate 1
  is the leftmost character).
* ``build_transposition_cayley(n)``: permutations of {1..n} in
  lexicographic order of one-line notation.
"""

from __future__ import annotations

import itertools
import json
import math
import os
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import SizeCapError, ValidationError

__all__ = [
    "DEFAULT_STATE_CAP",
    "StateSpace",
    "Generator",
    "GeneratorSet",
    "SchreierGraph",
    "ValidationReport",
    "build_torus",
    "build_hypercube",
    "build_johnson",
    "build_transposition_cayley",
    "build_custom",
    "graph_from_json",
    "graph_to_json",
    "apply_generator",
    "validate",
]

#: Builders refuse to enumerate more states than this unless overridden.
DEFAULT_STATE_CAP = 20_000


@dataclass(frozen=True)
class StateSpace:
    """The finite set S with display labels and family metadata."""

    size: int
    family: str
    params: Mapping[str, int]
    labels: tuple[str, ...]


@dataclass(frozen=True, eq=False)
class Generator:
    """One generator u: its label and its image array (u applied to each state)."""

    label: str
    image: np.ndarray


@dataclass(frozen=True, eq=False)
class GeneratorSet:
    """The symmetric generator set U with the involution/inverse pairing."""

    generators: tuple[Generator, ...]
    inverse_index: tuple[int, ...]

    @property
    def degree(self) -> int:
        return len(self.generators)


class SchreierGraph:
    """Immutable bundle of a state space and its generator set.

    ``images`` is the (|U|, |S|) array with ``images[u, w]`` the state
    reached from ``w`` by generator ``u``.
    """

    def __init__(self, states: StateSpace, generator_set: GeneratorSet):
        self.states = states
        self.generator_set = generator_set
        imgs = np.stack([g.image for g in generator_set.generators])
        imgs = imgs.astype(np.int64, copy=True)
        imgs.setflags(write=False)
        self.images = imgs

    @property
    def size(self) -> int:
        return self.states.size

    @property
    def degree(self) -> int:
        return self.generator_set.degree

    @property
    def family(self) -> str:
        return self.states.family

    @property
    def params(self) -> Mapping[str, int]:
        return self.states.params

    @property
    def generator_labels(self) -> tuple[str, ...]:
        return tuple(g.label for g in self.generator_set.generators)

    def __repr__(self) -> str:  # pragma: no cover - debug convenience
        return (
            f"SchreierGraph(family={self.states.family!r}, size={self.size}, "
            f"degree={self.degree})"
        )


@dataclass(frozen=True)
class ValidationReport:
    """Structural checks for a graph; ``ok`` requires the walk to be well posed."""

    size: int
    degree: int
    is_permutation_action: bool
    inverse_closed: bool
    identity_free: bool
    connected: bool
    messages: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return self.is_permutation_action and self.inverse_closed and self.connected


def _check_cap(size: int, cap: int | None) -> None:
    if cap is not None and size > cap:
        raise SizeCapError(
            f"state space of size {size} exceeds the cap {cap}; "
            "pass a larger cap explicitly to build it anyway"
        )


def _inverse_index(images: Sequence[np.ndarray]) -> tuple[int, ...]:
    """For each generator find the generator acting as its inverse."""
    n = len(images)
    size = len(images[0]) if n else 0
    ident = np.arange(size)
    inv = [-1] * n
    for a in range(n):
        if inv[a] >= 0:
            continue
        for b in range(n):
            if np.array_equal(images[a][images[b]], ident):
                inv[a] = b
                if inv[b] < 0:
                    inv[b] = a
                break
    missing = [a for a in range(n) if inv[a] < 0]
    if missing:
        raise ValidationError(
            f"generator set is not inverse-closed (no inverse for index {missing[0]})"
        )
    return tuple(inv)


def build_torus(m: int, n: int, cap: int | None = DEFAULT_STATE_CAP) -> SchreierGraph:
    """Discrete torus Z_m^n with +-e_k moves.

    For m = 2 the two moves along a coordinate coincide and are stored once
    (degree n); for m >= 3 both are kept (degree 2n).
    """
    if m < 2:
        raise ValidationError(f"torus needs m >= 2, got m={m}")
    if n < 1:
        raise ValidationError(f"torus needs n >= 1, got n={n}")
    size = m**n
    _check_cap(size, cap)

    idx = np.arange(size)
    gens: list[Generator] = []
    for k in range(1, n + 1):
        stride = m ** (k - 1)
        coord = (idx // stride) % m
        up = idx + ((coord + 1) % m - coord) * stride
        if m == 2:
            gens.append(Generator(label=f"e{k}", image=up))
        else:
            down = idx + ((coord - 1) % m - coord) * stride
            gens.append(Generator(label=f"+e{k}", image=up))
            gens.append(Generator(label=f"-e{k}", image=down))

    if m == 2:
        inverse = tuple(range(n))
    else:
        # +e_k and -e_k are adjacent in the list
        inverse = tuple(i + 1 if i % 2 == 0 else i - 1 for i in range(2 * n))

    if m <= 9:
        labels = tuple(
            "".join(str((s // m**k) % m) for k in range(n)) for s in range(size)
        )
    else:
        labels = tuple(
            ",".join(str((s // m**k) % m) for k in range(n)) for s in range(size)
        )
    states = StateSpace(size=size, family="torus", params={"m": m, "n": n}, labels=labels)
    return SchreierGraph(states, GeneratorSet(tuple(gens), inverse))


def build_hypercube(n: int, cap: int | None = DEFAULT_STATE_CAP) -> SchreierGraph:
    """The Hamming cube {0,1}^n; same object as ``build_torus(2, n)``."""
    return build_torus(2, n, cap=cap)


def _transpositions(n: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]


def build_johnson(n: int, m: int, cap: int | None = DEFAULT_STATE_CAP) -> SchreierGraph:
    """Johnson graph J(n, m): weight-m words in {0,1}^n under transpositions.

    All C(n,2) transposition generators are kept even when they act trivially
    (m = 0, m = n), so that influence averages across slices share the same
    denominator.
    """
    if n < 2:
        raise ValidationError(f"johnson needs n >= 2, got n={n}")
    if not 0 <= m <= n:
        raise ValidationError(f"johnson needs 0 <= m <= n, got m={m}, n={n}")
    size = math.comb(n, m)
    _check_cap(size, cap)

    def word(subset: frozenset[int]) -> str:
        return "".join("1" if k in subset else "0" for k in range(1, n + 1))

    subsets = sorted(
        (frozenset(c) for c in itertools.combinations(range(1, n + 1), m)), key=word
    )
    index = {s: i for i, s in enumerate(subsets)}

    gens = []
    for i, j in _transpositions(n):
        image = np.empty(size, dtype=np.int64)
        for s_idx, s in enumerate(subsets):
            if (i in s) != (j in s):
                image[s_idx] = index[s ^ {i, j}]
            else:
                image[s_idx] = s_idx
        gens.append(Generator(label=f"({i} {j})", image=image))

    labels = tuple(word(s) for s in subsets)
    states = StateSpace(size=size, family="johnson", params={"n": n, "m": m}, labels=labels)
    inverse = tuple(range(len(gens)))  # transpositions are involutions
    return SchreierGraph(states, GeneratorSet(tuple(gens), inverse))


def build_transposition_cayley(n: int, cap: int | None = DEFAULT_STATE_CAP) -> SchreierGraph:
    """Cayley graph of S_n with all transpositions as generators.

    A generator (i j) swaps the entries in *positions* i and j of the
    one-line notation (right multiplication), so the walk permutes which
    position holds which value.
    """
    if not 2 <= n <= 8:
        raise ValidationError(f"transposition Cayley graph needs 2 <= n <= 8, got n={n}")
    size = math.factorial(n)
    _check_cap(size, cap)

    perms = list(itertools.permutations(range(1, n + 1)))
    index = {p: i for i, p in enumerate(perms)}

    gens = []
    for i, j in _transpositions(n):
        image = np.empty(size, dtype=np.int64)
        for p_idx, p in enumerate(perms):
            q = list(p)
            q[i - 1], q[j - 1] = p[j - 1], p[i - 1]
            image[p_idx] = index[tuple(q)]
        gens.append(Generator(label=f"({i} {j})", image=image))

    labels = tuple("".join(map(str, p)) for p in perms)
    states = StateSpace(size=size, family="sym", params={"n": n}, labels=labels)
    inverse = tuple(range(len(gens)))
    return SchreierGraph(states, GeneratorSet(tuple(gens), inverse))


def build_custom(
    size: int,
    generators: Sequence[Sequence[int]],
    labels: Sequence[str] | None = None,
    auto_close_inverses: bool = False,
    cap: int | None = DEFAULT_STATE_CAP,
) -> SchreierGraph:
    """Build a graph from explicit permutation images.

    Each generator must be a permutation of range(size); the identity is
    rejected, as are duplicate images (U is a set).  With
    ``auto_close_inverses`` the missing inverse permutations are appended,
    labeled ``<label>^-1``; otherwise a non-inverse-closed set is an error.
    """
    if size < 1:
        raise ValidationError(f"custom graph needs size >= 1, got {size}")
    _check_cap(size, cap)
    if not generators:
        raise ValidationError("custom graph needs at least one generator")
    if labels is not None and len(labels) != len(generators):
        raise ValidationError(
            f"got {len(labels)} labels for {len(generators)} generators"
        )

    ident = np.arange(size)
    images: list[np.ndarray] = []
    names: list[str] = []
    seen: set[tuple[int, ...]] = set()
    for g_idx, gen in enumerate(generators):
        arr = np.asarray(gen, dtype=np.int64)
        if arr.shape != (size,):
            raise ValidationError(
                f"generator {g_idx} has wrong length {arr.shape} for size {size}"
            )
        if arr.min(initial=0) < 0 or arr.max(initial=0) >= size or (
            np.bincount(arr, minlength=size).max() != 1
        ):
            raise ValidationError(f"generator {g_idx} is not a permutation of the states")
        if np.array_equal(arr, ident):
            raise ValidationError(f"generator {g_idx} is the identity; not allowed")
        key = tuple(arr.tolist())
        if key in seen:
            raise ValidationError(f"generator {g_idx} duplicates an earlier one")
        seen.add(key)
        images.append(arr)
        names.append(labels[g_idx] if labels is not None else f"g{g_idx}")

    if auto_close_inverses:
        for arr, name in list(zip(images, names)):
            inv = np.argsort(arr)
            key = tuple(inv.tolist())
            if key not in seen:
                seen.add(key)
                images.append(inv)
                names.append(f"{name}^-1")

    inverse = _inverse_index(images)
    gens = tuple(Generator(label=nm, image=im) for nm, im in zip(names, images))
    state_labels = tuple(str(i) for i in range(size))
    states = StateSpace(size=size, family="custom", params={"size": size}, labels=state_labels)
    return SchreierGraph(states, GeneratorSet(gens, inverse))


def graph_from_json(source) -> SchreierGraph:
    """Load a custom graph from a JSON object, string, or file path.

    Schema: ``{"size": N, "generators": [[...], ...], "labels": [...],
    "auto_close_inverses": false}`` with ``labels`` and
    ``auto_close_inverses`` optional.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    elif isinstance(source, Mapping):
        obj = source
    else:
        raise ValidationError(f"cannot load a graph from {type(source).__name__}")
    try:
        size = int(obj["size"])
        generators = obj["generators"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed graph JSON: {exc}") from exc
    labels = obj.get("labels")
    auto = bool(obj.get("auto_close_inverses", False))
    return build_custom(size, generators, labels=labels, auto_close_inverses=auto)


def graph_to_json(g: SchreierGraph) -> dict:
    """Serialize any graph in the custom-graph JSON schema."""
    return {
        "size": g.size,
        "generators": [gen.image.tolist() for gen in g.generator_set.generators],
        "labels": list(g.generator_labels),
        "auto_close_inverses": False,
    }


def apply_generator(g: SchreierGraph, state: int, u: int) -> int:
    """Apply generator ``u`` to ``state``; both are indices."""
    if not 0 <= state < g.size:
        raise ValidationError(f"state index {state} out of range [0, {g.size})")
    if not 0 <= u < g.degree:
        raise ValidationError(f"generator index {u} out of range [0, {g.degree})")
    return int(g.images[u, state])


def _connected(images: np.ndarray, size: int) -> bool:
    if size == 0:
        return True
    seen = np.zeros(size, dtype=bool)
    frontier = np.array([0])
    seen[0] = True
    while frontier.size:
        nxt = images[:, frontier].ravel()
        nxt = nxt[~seen[nxt]]
        if nxt.size:
            nxt = np.unique(nxt)
            seen[nxt] = True
        frontier = nxt
    return bool(seen.all())


def validate(g: SchreierGraph) -> ValidationReport:
    """Structural validation: permutations, inverse closure, connectivity."""
    size, deg = g.size, g.degree
    msgs: list[str] = []

    perm_ok = True
    for u in range(deg):
        counts = np.bincount(g.images[u], minlength=size)
        if counts.max(initial=0) != 1 or g.images[u].min(initial=0) < 0:
            perm_ok = False
            msgs.append(f"generator {u} is not a permutation")

    ident = np.arange(size)
    identity_free = True
    for u in range(deg):
        if np.array_equal(g.images[u], ident):
            identity_free = False
            msgs.append(f"generator {u} acts as the identity")
            break

    inverse_closed = True
    if perm_ok:
        try:
            _inverse_index([g.images[u] for u in range(deg)])
        except ValidationError as exc:
            inverse_closed = False
            msgs.append(str(exc))

    connected = _connected(g.images, size) if perm_ok else False
    if not connected:
        msgs.append("action is not transitive (graph disconnected)")

    return ValidationReport(
        size=size,
        degree=deg,
        is_permutation_action=perm_ok,
        inverse_closed=inverse_closed,
        identity_free=identity_free,
        connected=connected,
        messages=tuple(msgs),
    )
