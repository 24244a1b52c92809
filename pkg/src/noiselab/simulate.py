"""Monte Carlo simulation of the continuous-time walks.

Jump counts over [0, t] are Poisson(t) (equivalently: count the unit-rate
exponential gaps that fit); each jump applies a uniformly chosen generator.

Determinism contract
--------------------
Samples are processed in fixed-size chunks of ``CHUNK``.  Chunk ``c`` of a
run with seed ``s`` draws from ``Philox(key = (s mod 2^64) * 2^64 + c)``, a
counter-based substream, with a branch-free draw schedule inside the chunk
(generator choices are drawn for every chunk row at every step, whether or
not that row still has jumps pending).  Partial sums are reduced in chunk
order after all chunks finish.  Results are therefore bit-identical for a
fixed seed regardless of thread count.

The estimator is mean(f(X_0) f(X_t)) - mean(f(X_0))^2.  The reported
stderr is the sample standard deviation of the product terms divided by
sqrt(#terms); it ignores the variance reduction from subtracting the
squared empirical mean and is therefore conservative.

With ``antithetic=True`` samples are drawn in pairs sharing all jump draws,
the second start being the index-mirrored state N-1-x0; the estimator and
stderr are then computed over pair averages (#terms = samples/2).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .boolfn import BooleanFunction
from .errors import ValidationError
from .graphs import SchreierGraph

__all__ = [
    "CHUNK",
    "SimConfig",
    "CovEstimate",
    "simulate_walk",
    "empirical_covariance",
    "empirical_exclusion_covariance",
]

#: Samples per RNG substream; fixed, because changing it changes the stream.
CHUNK = 4096


@dataclass(frozen=True)
class SimConfig:
    samples: int
    t: float
    seed: int
    antithetic: bool = False

    def __post_init__(self):
        if self.samples < 1:
            raise ValidationError(f"samples must be >= 1, got {self.samples}")
        if self.t < 0:
            raise ValidationError(f"time must be nonnegative, got {self.t}")
        if self.antithetic and self.samples % 2:
            raise ValidationError("antithetic pairing needs an even sample count")


@dataclass(frozen=True)
class CovEstimate:
    mean: float
    stderr: float
    samples: int  # number of product terms entering the average


def _substream(seed: int, chunk: int) -> np.random.Generator:
    key = (seed & 0xFFFFFFFFFFFFFFFF) * 2**64 + chunk
    return np.random.Generator(np.random.Philox(key=key))


def _jump_counts(rng: np.random.Generator, t: float, count: int, use_exp_gaps: bool) -> np.ndarray:
    if not use_exp_gaps:
        return rng.poisson(t, size=count)
    k = np.zeros(count, dtype=np.int64)
    cum = rng.exponential(1.0, size=count)
    while True:
        alive = cum <= t
        if not alive.any():
            return k
        k[alive] += 1
        cum += rng.exponential(1.0, size=count)


def simulate_walk(
    g: SchreierGraph,
    x0: int,
    t: float,
    rng: np.random.Generator,
    use_exp_gaps: bool = False,
) -> int:
    """Run one walk from ``x0`` for time ``t``; returns the end state."""
    if t < 0:
        raise ValidationError(f"time must be nonnegative, got t={t}")
    if not 0 <= x0 < g.size:
        raise ValidationError(f"state index {x0} out of range [0, {g.size})")
    k = int(_jump_counts(rng, t, 1, use_exp_gaps)[0])
    x = x0
    for _ in range(k):
        u = int(rng.integers(g.degree))
        x = int(g.images[u, x])
    return x


def _graph_chunk(
    images: np.ndarray,
    fvals: np.ndarray,
    n_states: int,
    deg: int,
    t: float,
    seed: int,
    chunk: int,
    count: int,
    antithetic: bool,
    use_exp_gaps: bool,
) -> tuple[float, float, float, int]:
    rng = _substream(seed, chunk)
    x0 = rng.integers(0, n_states, size=count)
    k = _jump_counts(rng, t, count, use_exp_gaps)
    x = x0.copy()
    xm = (n_states - 1 - x0) if antithetic else None
    kmax = int(k.max()) if count else 0
    for step in range(kmax):
        u = rng.integers(0, deg, size=count)
        active = step < k
        x[active] = images[u[active], x[active]]
        if xm is not None:
            xm[active] = images[u[active], xm[active]]
    f0 = fvals[x0].astype(float)
    prod = f0 * fvals[x]
    if xm is not None:
        f0m = fvals[n_states - 1 - x0].astype(float)
        prod = 0.5 * (prod + f0m * fvals[xm])
        f0 = 0.5 * (f0 + f0m)
    return float(prod.sum()), float(np.dot(prod, prod)), float(f0.sum()), count


def _reduce_chunks(parts: list[tuple[float, float, float, int]]) -> CovEstimate:
    sum_p = 0.0
    sum_p2 = 0.0
    sum_f0 = 0.0
    n = 0
    for sp, sp2, sf0, cnt in parts:
        sum_p += sp
        sum_p2 += sp2
        sum_f0 += sf0
        n += cnt
    mean = sum_p / n - (sum_f0 / n) ** 2
    if n >= 2:
        var = max(sum_p2 - sum_p * sum_p / n, 0.0) / (n - 1)
        stderr = math.sqrt(var / n)
    else:
        stderr = 0.0
    return CovEstimate(mean=mean, stderr=stderr, samples=n)


def _run_chunks(worker, n_terms: int, threads: int) -> CovEstimate:
    chunks = [
        (c, min(CHUNK, n_terms - c * CHUNK)) for c in range((n_terms + CHUNK - 1) // CHUNK)
    ]
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda args: worker(*args), chunks))
    else:
        parts = [worker(*args) for args in chunks]
    return _reduce_chunks(parts)


def empirical_covariance(
    g: SchreierGraph,
    f: BooleanFunction,
    cfg: SimConfig,
    threads: int = 1,
    use_exp_gaps: bool = False,
) -> CovEstimate:
    """Monte Carlo estimate of Cov(f(X_0), f(X_t)) for the generator walk."""
    if f.size != g.size:
        raise ValidationError(f"function is on {f.size} states but the graph has {g.size}")
    n_terms = cfg.samples // 2 if cfg.antithetic else cfg.samples
    fvals = f.values.astype(np.int8)

    def worker(chunk: int, count: int):
        return _graph_chunk(
            g.images,
            fvals,
            g.size,
            g.degree,
            cfg.t,
            cfg.seed,
            chunk,
            count,
            cfg.antithetic,
            use_exp_gaps,
        )

    return _run_chunks(worker, n_terms, threads)


def _exclusion_chunk(
    fvals: np.ndarray,
    n: int,
    pair_i: np.ndarray,
    pair_j: np.ndarray,
    xor_mask: np.ndarray,
    t: float,
    seed: int,
    chunk: int,
    count: int,
    antithetic: bool,
    use_exp_gaps: bool,
) -> tuple[float, float, float, int]:
    rng = _substream(seed, chunk)
    size = 1 << n
    n_pairs = pair_i.shape[0]
    x0 = rng.integers(0, size, size=count, dtype=np.int64)
    k = _jump_counts(rng, t, count, use_exp_gaps)
    x = x0.copy()
    xm = (size - 1 - x0) if antithetic else None
    kmax = int(k.max()) if count else 0
    for step in range(kmax):
        p = rng.integers(0, n_pairs, size=count)
        active = step < k
        for arr in (x,) if xm is None else (x, xm):
            bi = (arr >> pair_i[p]) & 1
            bj = (arr >> pair_j[p]) & 1
            move = active & (bi != bj)
            arr[move] ^= xor_mask[p[move]]
    f0 = fvals[x0].astype(float)
    prod = f0 * fvals[x]
    if xm is not None:
        f0m = fvals[size - 1 - x0].astype(float)
        prod = 0.5 * (prod + f0m * fvals[xm])
        f0 = 0.5 * (f0 + f0m)
    return float(prod.sum()), float(np.dot(prod, prod)), float(f0.sum()), count


def empirical_exclusion_covariance(
    n: int,
    f: BooleanFunction,
    cfg: SimConfig,
    threads: int = 1,
    use_exp_gaps: bool = False,
) -> CovEstimate:
    """Monte Carlo covariance for the transposition (exclusion) walk on {0,1}^n."""
    if not 1 <= n <= 62:
        raise ValidationError(f"exclusion walk needs 1 <= n <= 62, got n={n}")
    if f.size != 1 << n:
        raise ValidationError(f"function is on {f.size} states, expected {1 << n}")
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    if not pairs:
        raise ValidationError("exclusion walk needs n >= 2 for any move to exist")
    pair_i = np.array([p[0] for p in pairs], dtype=np.int64)
    pair_j = np.array([p[1] for p in pairs], dtype=np.int64)
    xor_mask = (np.int64(1) << pair_i) | (np.int64(1) << pair_j)
    n_terms = cfg.samples // 2 if cfg.antithetic else cfg.samples
    fvals = f.values.astype(np.int8)

    def worker(chunk: int, count: int):
        return _exclusion_chunk(
            fvals,
            n,
            pair_i,
            pair_j,
            xor_mask,
            cfg.t,
            cfg.seed,
            chunk,
            count,
            cfg.antithetic,
            use_exp_gaps,
        )

    return _run_chunks(worker, n_terms, threads)
