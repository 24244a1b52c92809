"""Exact noise covariance and the spectral correlation bound.

Central quantity: Cov(f(X_0), f(X_t)) = sum_{j>=1} e^(-lambda_j t) fhat(j)^2
for the stationary walk.  The bound dominating it, for any r in (0,1),
Lambda > 0, T > 0 and a log-Sobolev constant rho:

    Cov(f(X_0), f(X_T)) <= (e^(-Lambda log(r)/rho) / (2 lambda_1))
                           * (sum_u I_u(f)^2 / |U|)^(1/(1+r))
                           + Var(f) e^(-Lambda T)

(log r < 0, so the exponential factor is >= 1).  The low-frequency cutoff
is strict throughout: eigenvalues with lambda_j < Lambda count as low
frequency, boundary eigenvalues go to the tail term.

The eigenspace identity states, for each eigenspace Psi_lam of -Q,

    sum_{i in Psi_lam} 2 lam |U| fhat(i)^2
        = sum_{i in Psi_lam} sum_u <L_u f, psi_i>^2,

with L_u f = f - f o u.  It holds per eigenspace; per single eigenvector it
can fail off the Hamming cube (see ``per_vector_identity`` for the probe
that exhibits this).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .boolfn import BooleanFunction, influence_profile, mean_variance
from .errors import ValidationError
from .graphs import SchreierGraph
from .spectral import (
    Spectrum,
    coefficients,
    eigenspaces,
    estimate_log_sobolev,
    generator_matrix,
)

__all__ = [
    "BoundParams",
    "BoundReport",
    "EigenspaceIdentityRow",
    "PerVectorIdentity",
    "SensitivityProfile",
    "DEFAULT_R_GRID",
    "default_lambda_grid",
    "default_t_grid",
    "exact_covariance",
    "low_frequency_weight",
    "bks_bound",
    "evaluate_theorem1",
    "optimize_bound",
    "resolve_rho",
    "torus_family_rho",
    "check_eigenspace_identity",
    "per_vector_identity",
    "sensitivity_profile",
]

#: Default (r, Lambda, T) grids for bound optimization; Lambda and T scale
#: with the spectral gap.
DEFAULT_R_GRID: tuple[float, ...] = (0.1, 0.3, 0.5, 0.7, 0.9)


def default_lambda_grid(gap: float) -> tuple[float, ...]:
    return tuple(gap * c for c in (0.5, 1.0, 2.0, 4.0, 8.0))


def default_t_grid(gap: float) -> tuple[float, ...]:
    return tuple(c / gap for c in (0.5, 1.0, 2.0))


@dataclass(frozen=True)
class BoundParams:
    """Free parameters of the correlation bound."""

    r: float
    Lambda: float
    T: float

    def __post_init__(self):
        if not 0.0 < self.r < 1.0:
            raise ValidationError(f"r must lie strictly in (0,1), got {self.r}")
        if not self.Lambda > 0:
            raise ValidationError(f"Lambda must be positive, got {self.Lambda}")
        if not self.T > 0:
            raise ValidationError(f"T must be positive, got {self.T}")


@dataclass(frozen=True)
class BoundReport:
    """Evaluated bound.  ``lhs``/``slack`` are None when only the right side
    was computed (no function supplied)."""

    lhs: float | None
    rhs_low_freq_term: float
    rhs_tail_term: float
    rhs: float
    slack: float | None
    params: BoundParams | None = None
    rho: float | None = None
    rho_source: str | None = None


def _centered_coefficients(s: Spectrum, f: BooleanFunction) -> np.ndarray:
    fv = f.values.astype(float)
    return coefficients(s, fv - fv.mean())


def exact_covariance(s: Spectrum, f: BooleanFunction, t: float) -> float:
    """Cov(f(X_0), f(X_t)) = sum over nonzero eigenvalues of e^(-lambda t) fhat^2."""
    if t < 0:
        raise ValidationError(f"time must be nonnegative, got t={t}")
    c = _centered_coefficients(s, f)
    mask = s.eigenvalues > 0
    terms = np.exp(-s.eigenvalues[mask] * t) * c[mask] ** 2
    return float(terms.sum())


def low_frequency_weight(s: Spectrum, f: BooleanFunction, Lambda: float) -> float:
    """Fourier weight strictly below the cutoff: sum over 0 < lambda_j < Lambda."""
    if not Lambda > 0:
        raise ValidationError(f"Lambda must be positive, got {Lambda}")
    c = _centered_coefficients(s, f)
    mask = (s.eigenvalues > 0) & (s.eigenvalues < Lambda)
    return float(np.dot(c[mask], c[mask]))


def bks_bound(
    lambda1: float,
    rho: float,
    influence_sq_mean: float,
    variance: float,
    p: BoundParams,
) -> BoundReport:
    """Right-hand side of the correlation bound from summary statistics.

    ``influence_sq_mean`` is sum_u I_u(f)^2 / |U|.
    """
    if not lambda1 > 0:
        raise ValidationError(f"lambda1 must be positive, got {lambda1}")
    if not rho > 0:
        raise ValidationError(f"rho must be positive, got {rho}")
    if not 0.0 <= influence_sq_mean <= 1.0:
        raise ValidationError(f"influence_sq_mean must be in [0,1], got {influence_sq_mean}")
    if not 0.0 <= variance <= 0.25 + 1e-12:
        raise ValidationError(f"variance of a Boolean function must be in [0,1/4], got {variance}")
    low = (
        math.exp(-p.Lambda * math.log(p.r) / rho)
        / (2.0 * lambda1)
        * influence_sq_mean ** (1.0 / (1.0 + p.r))
    )
    tail = variance * math.exp(-p.Lambda * p.T)
    return BoundReport(
        lhs=None,
        rhs_low_freq_term=low,
        rhs_tail_term=tail,
        rhs=low + tail,
        slack=None,
        params=p,
        rho=rho,
    )


def torus_family_rho(m: int, n: int) -> float:
    """Closed-form log-Sobolev lower bound for the torus family: 4 pi^2 / (5 m^2 n)."""
    return 4.0 * math.pi**2 / (5.0 * m * m * n)


def resolve_rho(
    g: SchreierGraph, user_rho: float | None = None, seed: int = 0
) -> tuple[float, str]:
    """Pick the log-Sobolev constant: user value > family bound > estimator."""
    if user_rho is not None:
        if not user_rho > 0:
            raise ValidationError(f"rho must be positive, got {user_rho}")
        return float(user_rho), "user"
    if g.family == "torus":
        return torus_family_rho(g.params["m"], g.params["n"]), "family_bound"
    return estimate_log_sobolev(g, seed=seed).rho_hat, "estimated"


def evaluate_theorem1(
    s: Spectrum,
    g: SchreierGraph,
    f: BooleanFunction,
    rho: float,
    p: BoundParams,
    rho_source: str | None = None,
) -> BoundReport:
    """Exact covariance at time T against the bound's right-hand side."""
    profile = influence_profile(g, f)
    _, variance = mean_variance(f)
    partial = bks_bound(
        lambda1=s.gap,
        rho=rho,
        influence_sq_mean=profile.sum_of_squares / g.degree,
        variance=variance,
        p=p,
    )
    lhs = exact_covariance(s, f, p.T)
    return BoundReport(
        lhs=lhs,
        rhs_low_freq_term=partial.rhs_low_freq_term,
        rhs_tail_term=partial.rhs_tail_term,
        rhs=partial.rhs,
        slack=partial.rhs - lhs,
        params=p,
        rho=rho,
        rho_source=rho_source,
    )


def optimize_bound(
    s: Spectrum,
    g: SchreierGraph,
    f: BooleanFunction,
    rho: float,
    r_grid: Sequence[float] | None = None,
    lambda_grid: Sequence[float] | None = None,
    t_grid: Sequence[float] | None = None,
    rho_source: str | None = None,
) -> tuple[BoundParams, BoundReport]:
    """Grid argmin of the bound's right side; ties break to the smallest
    (r, Lambda, T)."""
    rs = tuple(r_grid) if r_grid is not None else DEFAULT_R_GRID
    lams = tuple(lambda_grid) if lambda_grid is not None else default_lambda_grid(s.gap)
    ts = tuple(t_grid) if t_grid is not None else default_t_grid(s.gap)
    if not rs or not lams or not ts:
        raise ValidationError("bound optimization needs nonempty parameter grids")

    profile = influence_profile(g, f)
    ism = profile.sum_of_squares / g.degree
    _, variance = mean_variance(f)
    lhs_by_t = {t: exact_covariance(s, f, t) for t in ts}

    best_key = None
    best: tuple[BoundParams, BoundReport] | None = None
    for r in rs:
        for lam in lams:
            for t in ts:
                p = BoundParams(r=r, Lambda=lam, T=t)
                partial = bks_bound(s.gap, rho, ism, variance, p)
                key = (partial.rhs, r, lam, t)
                if best_key is None or key < best_key:
                    lhs = lhs_by_t[t]
                    best_key = key
                    best = (
                        p,
                        BoundReport(
                            lhs=lhs,
                            rhs_low_freq_term=partial.rhs_low_freq_term,
                            rhs_tail_term=partial.rhs_tail_term,
                            rhs=partial.rhs,
                            slack=partial.rhs - lhs,
                            params=p,
                            rho=rho,
                            rho_source=rho_source,
                        ),
                    )
    assert best is not None
    return best


@dataclass(frozen=True)
class EigenspaceIdentityRow:
    eigenvalue: float
    dimension: int
    lhs: float
    rhs: float
    abs_error: float
    rel_error: float
    passed: bool


def check_eigenspace_identity(
    s: Spectrum,
    g: SchreierGraph,
    f: BooleanFunction,
    rel_tol: float = 1e-8,
    abs_floor: float = 1e-12,
) -> tuple[EigenspaceIdentityRow, ...]:
    """Check sum 2 lam |U| fhat^2 == sum_u sum <L_u f, psi>^2 per eigenspace.

    A row passes when the relative error is below ``rel_tol`` or both sides
    are below ``abs_floor`` (eigenspaces where f has exactly no weight).
    """
    fv = f.values.astype(float)
    c = coefficients(s, fv)
    diffs = fv[np.newaxis, :] - fv[g.images]  # (|U|, N), row u = L_u f
    proj = diffs @ s.eigenvectors / g.size  # (|U|, N), <L_u f, psi_j>
    rows = []
    for space in eigenspaces(s):
        idx = list(space.indices)
        lhs = float(np.sum(2.0 * s.eigenvalues[idx] * g.degree * c[idx] ** 2))
        rhs = float(np.sum(proj[:, idx] ** 2))
        abs_err = abs(lhs - rhs)
        scale = max(abs(lhs), abs(rhs))
        rel_err = abs_err / scale if scale > 0 else 0.0
        passed = rel_err <= rel_tol or scale < abs_floor
        rows.append(
            EigenspaceIdentityRow(
                eigenvalue=space.eigenvalue,
                dimension=space.dimension,
                lhs=lhs,
                rhs=rhs,
                abs_error=abs_err,
                rel_error=rel_err,
                passed=passed,
            )
        )
    return tuple(rows)


@dataclass(frozen=True, eq=False)
class PerVectorIdentity:
    """Single-eigenvector diagnostic for the identity above.

    ``lhs`` = 2 lam |U| <f,psi>^2 for the supplied unit vector psi;
    ``per_generator_terms`` are <L_u f, psi> for each generator;
    ``rhs_full`` is the sum of their squares.  On general graphs
    lhs == rhs_full can fail for a single vector even though the eigenspace
    sums agree.
    """

    eigenvalue: float
    rayleigh_residual: float
    coefficient: float
    lhs: float
    per_generator_terms: np.ndarray
    labels: tuple[str, ...]
    rhs_full: float


def per_vector_identity(
    g: SchreierGraph, f: BooleanFunction, psi: np.ndarray
) -> PerVectorIdentity:
    """Evaluate both sides of the identity for one (approximate) eigenvector."""
    fv = f.values.astype(float)
    psi = np.asarray(psi, dtype=float)
    if psi.shape != (g.size,):
        raise ValidationError(f"psi has shape {psi.shape}, need ({g.size},)")
    nrm2 = float(np.dot(psi, psi) / g.size)
    if nrm2 <= 0:
        raise ValidationError("psi must be nonzero")
    psi = psi / math.sqrt(nrm2)
    A = generator_matrix(g)
    Apsi = A @ psi
    lam = float(np.dot(psi, Apsi) / g.size)
    resid = float(np.abs(Apsi - lam * psi).max())
    coeff = float(np.dot(fv, psi) / g.size)
    diffs = fv[np.newaxis, :] - fv[g.images]
    terms = diffs @ psi / g.size
    terms.setflags(write=False)
    return PerVectorIdentity(
        eigenvalue=lam,
        rayleigh_residual=resid,
        coefficient=coeff,
        lhs=2.0 * lam * g.degree * coeff**2,
        per_generator_terms=terms,
        labels=g.generator_labels,
        rhs_full=float(np.dot(terms, terms)),
    )


@dataclass(frozen=True)
class SensitivityProfile:
    """Covariance decay along epsilon * T plus low-frequency diagnostics."""

    rows: tuple[tuple[float, float, float], ...]  # (epsilon, t, cov)
    diagnostics: tuple[tuple[float, float], ...]  # (k, weight below k/T)


def sensitivity_profile(
    s: Spectrum,
    f: BooleanFunction,
    T: float,
    epsilons: Sequence[float],
    k_values: Sequence[float] = (),
) -> SensitivityProfile:
    if not T > 0:
        raise ValidationError(f"T must be positive, got {T}")
    eps = tuple(float(e) for e in epsilons)
    if any(e < 0 for e in eps):
        raise ValidationError("epsilons must be nonnegative")
    rows = tuple((e, e * T, exact_covariance(s, f, e * T)) for e in eps)
    diag = tuple(
        (float(k), low_frequency_weight(s, f, k / T)) for k in k_values if k > 0
    )
    return SensitivityProfile(rows=rows, diagnostics=diag)
