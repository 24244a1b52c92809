"""Exclusion dynamics on {0,1}^n: transpositions conserve the number of ones.

The transposition walk on the cube splits into independent walks on the
weight slices J(n, m); the stationary start makes the level ||X_0|| a
Binomial(n, 1/2) random variable with p_m = C(n,m)/2^n.  Everything here is
built on that layered picture:

* law-of-total-covariance split:  Cov = E[Cov | level] + Var(E[f | level]),
* slice-conditional influences I^(m)_(ij) and their binomial mixture,
* "good" slice sets where the squared-influence sum stays small,
* per-slice low-frequency bounds with the slice's own gap and log-Sobolev
  estimate.

Within-slice covariances are computed from slice-centered functions, so a
function that is constant on every slice (e.g. parity) gets an exact 0.0
within-term with no rounding residue.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .boolfn import BooleanFunction
from .errors import ValidationError
from .graphs import SchreierGraph, build_johnson
from .noise import DEFAULT_R_GRID, exact_covariance, low_frequency_weight
from .spectral import Spectrum, apply_semigroup, decompose, estimate_log_sobolev

__all__ = [
    "LayeredWalk",
    "SliceInfluenceTable",
    "CovarianceSplit",
    "GoodSliceSet",
    "SliceBoundReport",
    "ExclusionSensitivityReport",
    "build_layered",
    "coordinate_influences",
    "transposition_influences",
    "slice_influences",
    "covariance_split",
    "exclusion_covariance",
    "good_slice_set",
    "level_mean_variance",
    "slice_bound_check",
    "exclusion_sensitivity_report",
]

DEFAULT_WORK_BUDGET = 1e10


@dataclass(frozen=True, eq=False)
class LayeredWalk:
    """All weight slices of {0,1}^n with their spectra and level law."""

    n: int
    slices: tuple[SchreierGraph, ...]
    spectra: tuple[Spectrum, ...]
    level_distribution: np.ndarray  # p_m = C(n,m)/2^n
    cube_index: tuple[np.ndarray, ...]  # slice state -> integer word in [0, 2^n)

    @property
    def transpositions(self) -> tuple[tuple[int, int], ...]:
        n = self.n
        return tuple((i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1))

    def slice_values(self, f: BooleanFunction) -> list[np.ndarray]:
        """Restrict a cube function to each slice, in slice state order."""
        if f.size != 2**self.n:
            raise ValidationError(
                f"function is on {f.size} states but the cube has {2 ** self.n}"
            )
        return [f.values[idx] for idx in self.cube_index]


def build_layered(n: int, work_budget: float = DEFAULT_WORK_BUDGET) -> LayeredWalk:
    """Build and decompose every slice J(n, m), m = 0..n."""
    if not 2 <= n <= 16:
        raise ValidationError(f"layered walk needs 2 <= n <= 16, got n={n}")
    work = sum(math.comb(n, m) ** 3 for m in range(n + 1))
    if work > work_budget:
        raise ValidationError(
            f"eigendecomposition work {work:.2e} exceeds the budget {work_budget:.2e}"
        )
    slices = []
    spectra = []
    cube_index = []
    for m in range(n + 1):
        g = build_johnson(n, m, cap=None)
        slices.append(g)
        spectra.append(decompose(g))
        # state labels are words w_1 w_2 ... w_n with coordinate 1 leftmost;
        # the cube integer uses coordinate 1 as the least significant bit
        cube_index.append(
            np.array([int(label[::-1], 2) for label in g.states.labels], dtype=np.int64)
        )
    p = np.array([math.comb(n, m) for m in range(n + 1)], dtype=float) / 2.0**n
    p.setflags(write=False)
    return LayeredWalk(
        n=n,
        slices=tuple(slices),
        spectra=tuple(spectra),
        level_distribution=p,
        cube_index=tuple(cube_index),
    )


def coordinate_influences(f: BooleanFunction, n: int) -> np.ndarray:
    """Single-bit influences I_i(f) on {0,1}^n (the cube dynamics)."""
    if f.size != 2**n:
        raise ValidationError(f"function is on {f.size} states, expected {2 ** n}")
    x = np.arange(2**n, dtype=np.int64)
    out = np.empty(n)
    for i in range(1, n + 1):
        out[i - 1] = np.count_nonzero(f.values[x] != f.values[x ^ (1 << (i - 1))]) / f.size
    return out


def transposition_influences(f: BooleanFunction, n: int) -> np.ndarray:
    """Influences I_(ij)(f) of the exclusion moves, enumerated over the cube."""
    if f.size != 2**n:
        raise ValidationError(f"function is on {f.size} states, expected {2 ** n}")
    x = np.arange(2**n, dtype=np.int64)
    out = []
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            differ = ((x >> (i - 1)) & 1) != ((x >> (j - 1)) & 1)
            y = np.where(differ, x ^ ((1 << (i - 1)) | (1 << (j - 1))), x)
            out.append(np.count_nonzero(f.values[x] != f.values[y]) / f.size)
    return np.array(out)


@dataclass(frozen=True, eq=False)
class SliceInfluenceTable:
    """I^(m)_(ij) per slice plus their binomial mixture I_(ij)."""

    per_slice: np.ndarray  # shape (n+1, n(n-1)/2)
    transpositions: tuple[tuple[int, int], ...]
    mixture: np.ndarray  # sum_m p_m I^(m)_(ij)
    level_distribution: np.ndarray


def slice_influences(lw: LayeredWalk, f: BooleanFunction) -> SliceInfluenceTable:
    """Exact conditional influences on every slice."""
    values = lw.slice_values(f)
    n_pairs = len(lw.transpositions)
    per = np.zeros((lw.n + 1, n_pairs))
    for m, (g, v) in enumerate(zip(lw.slices, values)):
        flips = v[np.newaxis, :] != v[g.images]
        per[m] = flips.sum(axis=1) / g.size
    mixture = lw.level_distribution @ per
    per.setflags(write=False)
    mixture.setflags(write=False)
    return SliceInfluenceTable(
        per_slice=per,
        transpositions=lw.transpositions,
        mixture=mixture,
        level_distribution=lw.level_distribution,
    )


@dataclass(frozen=True, eq=False)
class CovarianceSplit:
    """Law-of-total-covariance decomposition at one time t."""

    within_term: float
    between_term: float
    total: float
    slice_means: np.ndarray


def covariance_split(lw: LayeredWalk, f: BooleanFunction, t: float) -> CovarianceSplit:
    """within = sum_m p_m Cov_m(f(X_0), f(X_t)); between = Var of slice means."""
    if t < 0:
        raise ValidationError(f"time must be nonnegative, got t={t}")
    values = lw.slice_values(f)
    p = lw.level_distribution
    means = np.array([float(v.mean()) if v.size else 0.0 for v in values])
    within = 0.0
    for m, (spec, v) in enumerate(zip(lw.spectra, values)):
        if v.size < 2 or not v.any() or v.all():
            continue  # constant on the slice: exact zero contribution
        within += p[m] * exact_covariance(spec, BooleanFunction(v), t)
    mean_sq = float(np.dot(p, means * means))
    mean = float(np.dot(p, means))
    between = mean_sq - mean * mean
    means.setflags(write=False)
    return CovarianceSplit(
        within_term=within,
        between_term=between,
        total=within + between,
        slice_means=means,
    )


def exclusion_covariance(lw: LayeredWalk, f: BooleanFunction, t: float) -> float:
    """Direct Cov(f(X_0), f(X_t)) for the layered walk, without the split.

    Uses each slice's semigroup on the *uncentered* restriction, so it is an
    independent cross-check of ``covariance_split``.
    """
    if t < 0:
        raise ValidationError(f"time must be nonnegative, got t={t}")
    values = lw.slice_values(f)
    p = lw.level_distribution
    second_moment = 0.0
    mean = 0.0
    for m, (spec, v) in enumerate(zip(lw.spectra, values)):
        fv = v.astype(float)
        ht = apply_semigroup(spec, fv, t)
        second_moment += p[m] * float(np.mean(fv * ht))
        mean += p[m] * float(fv.mean())
    return second_moment - mean * mean


@dataclass(frozen=True)
class GoodSliceSet:
    """Levels where the slice's squared transposition influences stay small."""

    alpha: float
    member_levels: tuple[int, ...]
    probability: float
    sum_sq_coordinate_influences: float
    threshold: float  # n * (sum_i I_i^2)^(1 - 2 alpha)


def good_slice_set(lw: LayeredWalk, f: BooleanFunction, alpha: float) -> GoodSliceSet:
    """Levels m with sum_(ij) I^(m)_(ij)^2 < n (sum_i I_i^2)^(1-2 alpha).

    When all coordinate influences vanish (constant f) every level is good
    with probability 1.
    """
    if not 0.0 < alpha < 0.5:
        raise ValidationError(f"alpha must lie in (0, 1/2), got {alpha}")
    coord = coordinate_influences(f, lw.n)
    ssq = float(np.dot(coord, coord))
    if ssq == 0.0:
        return GoodSliceSet(
            alpha=alpha,
            member_levels=tuple(range(lw.n + 1)),
            probability=1.0,
            sum_sq_coordinate_influences=0.0,
            threshold=0.0,
        )
    threshold = lw.n * ssq ** (1.0 - 2.0 * alpha)
    table = slice_influences(lw, f)
    slice_ssq = np.sum(table.per_slice**2, axis=1)
    members = tuple(int(m) for m in np.flatnonzero(slice_ssq < threshold))
    prob = float(lw.level_distribution[list(members)].sum()) if members else 0.0
    return GoodSliceSet(
        alpha=alpha,
        member_levels=members,
        probability=prob,
        sum_sq_coordinate_influences=ssq,
        threshold=threshold,
    )


def level_mean_variance(lw: LayeredWalk, f: BooleanFunction) -> float:
    """Var(E[f(X_0) | level]) under the binomial level distribution."""
    values = lw.slice_values(f)
    p = lw.level_distribution
    means = np.array([float(v.mean()) if v.size else 0.0 for v in values])
    mean = float(np.dot(p, means))
    return float(np.dot(p, means * means)) - mean * mean


@dataclass(frozen=True)
class SliceBoundReport:
    """Low-frequency bound and covariance chain on a single slice.

    ``low_freq_weight`` (the weight strictly below C * lambda_1 on slice m)
    is compared against the correlation-bound right side evaluated with the
    slice's numerical gap and log-Sobolev estimate, once at r = delta and
    once minimized over a default r grid.  ``rho_order_expression`` is the
    closed-form order 1/(n log(n(n-1)/(2m(n-m)))) reported for reference; it
    carries no sharp constant and is not used in the comparisons.  The
    chain fields evaluate Cov(f(X_0), f(X_(alpha/lambda_1))) against
    low_freq_weight + e^(-alpha C).
    """

    applicable: bool
    m: int
    C: float
    epsilon: float
    delta: float
    precondition_lhs: float
    precondition_rhs: float
    lambda1: float | None = None
    rho_estimated: float | None = None
    rho_order_expression: float | None = None
    influence_sq_sum: float | None = None
    low_freq_weight: float | None = None
    rhs_at_delta: float | None = None
    rhs_min: float | None = None
    r_min: float | None = None
    thm1_holds: bool | None = None
    alpha: float | None = None
    cov_at_relaxation_scale: float | None = None
    chain_tail_crude: float | None = None
    chain_tail_refined: float | None = None
    chain_rhs: float | None = None
    chain_holds: bool | None = None


def slice_bound_check(
    lw: LayeredWalk,
    f: BooleanFunction,
    m: int,
    C: float,
    epsilon: float,
    delta: float,
    alpha: float = 1.0,
    r_grid: Sequence[float] | None = None,
    seed: int = 0,
) -> SliceBoundReport:
    """Evaluate the per-slice low-frequency bound with numerical constants.

    Applicable when 2 m (n - m) >= epsilon n (n - 1); otherwise only the
    precondition arithmetic is reported.
    """
    if not 0 <= m <= lw.n:
        raise ValidationError(f"slice index m={m} out of range [0, {lw.n}]")
    if not C > 0:
        raise ValidationError(f"C must be positive, got {C}")
    if not 0.0 < delta < 1.0:
        raise ValidationError(f"delta must lie in (0,1), got {delta}")
    if not epsilon > 0:
        raise ValidationError(f"epsilon must be positive, got {epsilon}")
    n = lw.n
    pre_lhs = 2.0 * m * (n - m)
    pre_rhs = epsilon * n * (n - 1)
    base = SliceBoundReport(
        applicable=False,
        m=m,
        C=C,
        epsilon=epsilon,
        delta=delta,
        precondition_lhs=pre_lhs,
        precondition_rhs=pre_rhs,
    )
    if pre_lhs < pre_rhs:
        return base

    g = lw.slices[m]
    spec = lw.spectra[m]
    v = BooleanFunction(lw.slice_values(f)[m])
    lam1 = spec.gap
    rho = estimate_log_sobolev(g, seed=seed).rho_hat
    Lambda = C * lam1

    ratio = n * (n - 1) / (2.0 * m * (n - m))
    log_ratio = math.log(ratio)
    rho_order = 1.0 / (n * log_ratio) if log_ratio > 1e-12 else None

    flips = v.values[np.newaxis, :] != v.values[g.images]
    per = flips.sum(axis=1) / g.size
    ssq = float(np.dot(per, per))
    ism = ssq / g.degree

    def rhs_at(r: float) -> float:
        return (
            math.exp(-Lambda * math.log(r) / rho)
            / (2.0 * lam1)
            * ism ** (1.0 / (1.0 + r))
        )

    grid = tuple(r_grid) if r_grid is not None else DEFAULT_R_GRID
    rhs_vals = [(rhs_at(r), r) for r in grid]
    rhs_min, r_min = min(rhs_vals)
    lhs = low_frequency_weight(spec, v, Lambda)

    mean = float(v.values.mean())
    var = mean * (1.0 - mean)
    cov_scale = exact_covariance(spec, v, alpha / lam1)
    tail_crude = math.exp(-alpha * C)
    chain_rhs = lhs + tail_crude

    return SliceBoundReport(
        applicable=True,
        m=m,
        C=C,
        epsilon=epsilon,
        delta=delta,
        precondition_lhs=pre_lhs,
        precondition_rhs=pre_rhs,
        lambda1=lam1,
        rho_estimated=rho,
        rho_order_expression=rho_order,
        influence_sq_sum=ssq,
        low_freq_weight=lhs,
        rhs_at_delta=rhs_at(delta),
        rhs_min=rhs_min,
        r_min=r_min,
        thm1_holds=lhs <= rhs_min + 1e-12,
        alpha=alpha,
        cov_at_relaxation_scale=cov_scale,
        chain_tail_crude=tail_crude,
        chain_tail_refined=var * tail_crude,
        chain_rhs=chain_rhs,
        chain_holds=cov_scale <= chain_rhs + 1e-12,
    )


@dataclass(frozen=True, eq=False)
class ExclusionSensitivityReport:
    """Finite-n exclusion-sensitivity ingredients over a time grid."""

    rows: tuple[tuple[float, float, float, float], ...]  # (t, within, between, total)
    sum_sq_coordinate_influences: float
    thresholds: tuple[tuple[float, float], ...]  # (delta, n^-delta)
    good_slices: GoodSliceSet


def exclusion_sensitivity_report(
    lw: LayeredWalk,
    f: BooleanFunction,
    t_grid: Sequence[float],
    deltas: Sequence[float] = (0.1, 0.2, 0.3),
    alpha: float = 0.25,
) -> ExclusionSensitivityReport:
    rows = []
    for t in t_grid:
        split = covariance_split(lw, f, float(t))
        rows.append((float(t), split.within_term, split.between_term, split.total))
    coord = coordinate_influences(f, lw.n)
    ssq = float(np.dot(coord, coord))
    thresholds = tuple((float(d), float(lw.n) ** (-float(d))) for d in deltas)
    good = good_slice_set(lw, f, alpha)
    return ExclusionSensitivityReport(
        rows=tuple(rows),
        sum_sq_coordinate_influences=ssq,
        thresholds=thresholds,
        good_slices=good,
    )
