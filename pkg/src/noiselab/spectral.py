"""Spectral decomposition of the walk generator and derived operators.

The generator matrix is A = -Q = (1/|U|) sum_u (I - P_u) with
(P_u f)(w) = f(w_u).  It is symmetric (inverse closure) and positive
semidefinite, with lambda_0 = 0 and constant eigenvector psi_0 == 1.

Conventions, pinned for reproducibility:

* Eigenvectors are orthonormal in the *uniform* inner product
  <f, g> = E[f g] = (1/|S|) sum_x f(x) g(x), i.e. the returned columns
  satisfy (1/N) Psi^T Psi = I.
* psi_0 is exactly the all-ones vector (for connected graphs).
* Each eigenvector's sign is fixed so its first significantly nonzero
  entry is positive.
* Near-zero eigenvalues are snapped to exactly 0.0.
* Eigenvalues within ``grouping_tolerance`` of each other are treated as
  one eigenspace; downstream identities are eigenspace sums, which are
  basis-independent, so solver arbitrariness inside a degenerate
  eigenspace is harmless.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError, ValidationError
from .graphs import SchreierGraph

__all__ = [
    "Spectrum",
    "Eigenspace",
    "RotationReport",
    "LogSobolevEstimate",
    "generator_matrix",
    "decompose",
    "eigenspaces",
    "apply_semigroup",
    "synthesize",
    "coefficients",
    "uniform_inner",
    "uniform_norm",
    "dirichlet_form",
    "check_rotation_invariance",
    "estimate_log_sobolev",
]


def generator_matrix(g: SchreierGraph) -> np.ndarray:
    """Dense generator matrix A = -Q; A[w, v] = (deg(w->v) count)/|U| off-diagonal."""
    n, deg = g.size, g.degree
    M = np.zeros((n, n))
    rows = np.arange(n)
    for u in range(deg):
        np.add.at(M, (rows, g.images[u]), 1.0)
    A = np.eye(n) - M / deg
    return A


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigendecomposition of A = -Q in the uniform inner product."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns; (1/N) Psi^T Psi = I
    gap: float
    relaxation_time: float
    grouping_tolerance: float

    @property
    def size(self) -> int:
        return self.eigenvalues.shape[0]


@dataclass(frozen=True)
class Eigenspace:
    eigenvalue: float
    indices: tuple[int, ...]

    @property
    def dimension(self) -> int:
        return len(self.indices)


def decompose(g: SchreierGraph, grouping_tolerance: float | None = None) -> Spectrum:
    """Full symmetric eigendecomposition with the module's conventions.

    Raises NumericError if the solver's residual or orthonormality drift
    exceeds tolerance (residual 1e-8 * lambda_max, orthonormality 1e-10).
    """
    n = g.size
    A = generator_matrix(g)
    vals, vecs = np.linalg.eigh(A)

    lam_max = float(max(vals[-1], 0.0))
    snap = 1e-12 * max(1.0, lam_max)
    vals = np.where(np.abs(vals) <= snap, 0.0, vals)
    if vals[0] < 0:
        # A is PSD; anything below -snap is a solver failure
        if vals[0] < -snap:
            raise NumericError(f"negative eigenvalue {vals[0]} from PSD generator")
        vals[vals < 0] = 0.0

    psi = vecs * np.sqrt(n)

    # exact constant eigenvector on the zero eigenspace
    zero = np.flatnonzero(vals == 0.0)
    if zero.size >= 1:
        psi[:, zero[0]] = 1.0
        ones = psi[:, zero[0]]
        for pos, j in enumerate(zero[1:], start=1):
            v = psi[:, j].copy()
            v -= ones * (v.mean())
            for prev in zero[1:pos]:
                w = psi[:, prev]
                v -= w * (np.dot(w, v) / n)
            norm = np.sqrt(np.dot(v, v) / n)
            if norm < 1e-12:
                raise NumericError("degenerate zero eigenspace basis")
            psi[:, j] = v / norm

    # deterministic sign: first significantly nonzero entry positive
    absmax = np.abs(psi).max(axis=0)
    for j in range(n):
        col = psi[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-8 * absmax[j])
        if nz.size and col[nz[0]] < 0:
            psi[:, j] = -col

    resid = np.abs(A @ psi - psi * vals).max()
    resid_tol = 1e-8 * (lam_max if lam_max > 0 else 1.0)
    if resid > resid_tol:
        raise NumericError(f"eigensolver residual {resid:.3e} exceeds {resid_tol:.3e}")
    gram_err = np.abs(psi.T @ psi / n - np.eye(n)).max()
    if gram_err > 1e-10:
        raise NumericError(f"eigenvector orthonormality drift {gram_err:.3e} > 1e-10")

    tol = grouping_tolerance if grouping_tolerance is not None else 1e-8 * max(1.0, lam_max)
    positive = vals[vals > tol]
    gap = float(positive[0]) if positive.size else 0.0
    relax = 1.0 / gap if gap > 0 else float("inf")

    vals.setflags(write=False)
    psi.setflags(write=False)
    return Spectrum(
        eigenvalues=vals,
        eigenvectors=psi,
        gap=gap,
        relaxation_time=relax,
        grouping_tolerance=float(tol),
    )


def eigenspaces(s: Spectrum) -> tuple[Eigenspace, ...]:
    """Group eigenvalue indices into eigenspaces by the grouping tolerance."""
    vals = s.eigenvalues
    groups: list[Eigenspace] = []
    start = 0
    for j in range(1, len(vals) + 1):
        if j == len(vals) or vals[j] - vals[j - 1] > s.grouping_tolerance:
            groups.append(
                Eigenspace(eigenvalue=float(vals[start]), indices=tuple(range(start, j)))
            )
            start = j
    return tuple(groups)


def uniform_inner(f: np.ndarray, g: np.ndarray) -> float:
    """<f, g> = E[f g] under the uniform measure."""
    return float(np.mean(np.asarray(f, dtype=float) * np.asarray(g, dtype=float)))


def uniform_norm(f: np.ndarray, p: float) -> float:
    """||f||_p = (E |f|^p)^(1/p) under the uniform measure."""
    if p <= 0:
        raise ValidationError(f"norm order must be positive, got {p}")
    return float(np.mean(np.abs(np.asarray(f, dtype=float)) ** p) ** (1.0 / p))


def coefficients(s: Spectrum, f: np.ndarray) -> np.ndarray:
    """All inner products <f, psi_j>, j = 0..N-1."""
    fv = np.asarray(f, dtype=float)
    if fv.shape != (s.size,):
        raise ValidationError(f"function has shape {fv.shape}, graph has {s.size} states")
    return s.eigenvectors.T @ fv / s.size


def synthesize(s: Spectrum, coeffs: np.ndarray) -> np.ndarray:
    """Rebuild a function from its coefficient vector: sum_j c_j psi_j."""
    c = np.asarray(coeffs, dtype=float)
    if c.shape != (s.size,):
        raise ValidationError(f"coefficient vector has shape {c.shape}, need ({s.size},)")
    return s.eigenvectors @ c


def apply_semigroup(s: Spectrum, f: np.ndarray, t: float) -> np.ndarray:
    """H_t f = sum_j e^(-lambda_j t) <f, psi_j> psi_j; H_t f(x) = E[f(X_t) | X_0 = x]."""
    if t < 0:
        raise ValidationError(f"time must be nonnegative, got t={t}")
    c = coefficients(s, f)
    return s.eigenvectors @ (np.exp(-s.eigenvalues * t) * c)


def dirichlet_form(g: SchreierGraph, f: np.ndarray) -> float:
    """<f, -Q f> = (1/(2|U|)) sum_u E[(f - f o u)^2]."""
    fv = np.asarray(f, dtype=float)
    diffs = fv[np.newaxis, :] - fv[g.images]
    return float(np.sum(diffs * diffs) / (2 * g.degree * g.size))


@dataclass(frozen=True)
class RotationReport:
    """Per-eigenspace check that w -> psi(w_u) stays an orthonormal basis.

    For each eigenspace with basis Psi and each requested generator u, the
    rotated family R[:, i] = psi_i(images[u]) must have uniform Gram matrix
    equal to the identity and must lie in the span of Psi.
    """

    rows: tuple[tuple[float, int, float, float], ...]  # (eigenvalue, u, gram_dev, resid)
    max_gram_deviation: float
    max_projection_residual: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return (
            self.max_gram_deviation <= self.tolerance
            and self.max_projection_residual <= self.tolerance
        )


def check_rotation_invariance(
    s: Spectrum, g: SchreierGraph, u: int | None = None, tol: float = 1e-8
) -> RotationReport:
    """Verify eigenspace invariance under state rotation by generator(s) u."""
    n = s.size
    us = range(g.degree) if u is None else [u]
    rows = []
    worst_gram = 0.0
    worst_resid = 0.0
    for space in eigenspaces(s):
        P = s.eigenvectors[:, list(space.indices)]
        eye = np.eye(P.shape[1])
        for uu in us:
            R = P[g.images[uu], :]
            gram_dev = float(np.abs(R.T @ R / n - eye).max())
            C = P.T @ R / n
            resid = float(np.abs(R - P @ C).max())
            rows.append((space.eigenvalue, int(uu), gram_dev, resid))
            worst_gram = max(worst_gram, gram_dev)
            worst_resid = max(worst_resid, resid)
    return RotationReport(
        rows=tuple(rows),
        max_gram_deviation=worst_gram,
        max_projection_residual=worst_resid,
        tolerance=tol,
    )


@dataclass(frozen=True, eq=False)
class LogSobolevEstimate:
    """Result of the log-Sobolev constant search.

    ``rho_hat`` is calibrated so that hypercontractivity
    ||H_t f||_2 <= ||f||_(1 + e^(-2 rho_hat t)) holds: it is the minimum of
    2 * <f, -Q f> / Ent(f^2) over nonconstant f, including the limit value
    lambda_1 along near-constant perturbations f = 1 + eps * psi_1.
    ``rho_hat_cov`` is the covariance-functional variant, with
    Cov(f^2, log f^2) in place of 2 Ent(f^2); the two agree near constants.
    """

    rho_hat: float
    rho_hat_cov: float
    minimizer: np.ndarray
    restarts_used: int
    converged: bool


def _entropy(h: np.ndarray) -> float:
    """Ent(h) = E[h log(h / E h)] for h >= 0, with 0 log 0 = 0."""
    mean = h.mean()
    if mean <= 0:
        return 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(h > 0, h * np.log(h / mean), 0.0)
    ent = float(terms.mean())
    return max(ent, 0.0)


def _cov_log(h: np.ndarray) -> float:
    """Cov(h, log h) for h > 0 entrywise; +inf if h touches 0."""
    if h.min() <= 0:
        return float("inf")
    logs = np.log(h)
    return float(np.mean(h * logs) - h.mean() * logs.mean())


class _Ratios:
    """Safe evaluation of the two log-Sobolev objectives on the unit sphere."""

    def __init__(self, g: SchreierGraph):
        self.A = generator_matrix(g)
        self.n = g.size

    def normalize(self, f: np.ndarray) -> np.ndarray | None:
        norm = np.sqrt(np.dot(f, f) / self.n)
        if not np.isfinite(norm) or norm < 1e-300:
            return None
        return f / norm

    def energy(self, f: np.ndarray) -> float:
        return float(np.dot(f, self.A @ f) / self.n)

    def ent_ratio(self, f: np.ndarray) -> float:
        """2 <f, -Qf> / Ent(f^2) for unit-norm f; +inf when degenerate."""
        ent = _entropy(f * f)
        if not np.isfinite(ent) or ent < 1e-13:
            return float("inf")
        val = 2.0 * self.energy(f) / ent
        return val if np.isfinite(val) and val > 0 else float("inf")

    def cov_ratio(self, f: np.ndarray) -> float:
        """4 <f, -Qf> / Cov(f^2, log f^2) for unit-norm f."""
        cov = _cov_log(f * f)
        if not np.isfinite(cov) or cov < 1e-13:
            return float("inf")
        val = 4.0 * self.energy(f) / cov
        return val if np.isfinite(val) and val > 0 else float("inf")

    def gradient(self, f: np.ndarray) -> np.ndarray:
        """Euclidean gradient of the entropy ratio, tangentially projected."""
        n = self.n
        h = f * f
        mean = h.mean()
        ent = _entropy(h)
        energy = self.energy(f)
        if ent < 1e-13 or mean <= 0:
            return np.zeros_like(f)
        grad_e = 2.0 / n * (self.A @ f)
        with np.errstate(divide="ignore", invalid="ignore"):
            logpart = np.where(h > 0, np.log(h / mean), 0.0)
        grad_d = 2.0 / n * f * logpart
        grad = (2.0 * grad_e * ent - 2.0 * energy * grad_d) / (ent * ent)
        # project out the radial component (sphere mean(f^2) = 1)
        grad -= f * (np.dot(grad, f) / n)
        return grad


def estimate_log_sobolev(
    g: SchreierGraph,
    restarts: int = 32,
    max_iters: int = 500,
    tol: float = 1e-10,
    seed: int = 0,
) -> LogSobolevEstimate:
    """Multi-start projected-gradient search for the log-Sobolev constant.

    Minimizes 2 <f,-Qf> / Ent(f^2) over the unit sphere, from ``restarts``
    random starts plus deterministic starts at psi_1 and at a near-constant
    perturbation 1 + 0.01 psi_1.  The analytic directional-limit value
    lambda_1 (the ratio's limit along 1 + eps psi_1) always participates in
    the final minimum, so rho_hat <= lambda_1 <= 2 lambda_1 by construction.
    """
    if g.size < 2:
        raise ValidationError("log-Sobolev estimation needs at least 2 states")
    s = decompose(g)
    lam1 = s.gap
    if lam1 <= 0:
        raise ValidationError("graph is disconnected; log-Sobolev constant is 0")
    ratios = _Ratios(g)
    rng = np.random.default_rng(seed)
    psi1 = s.eigenvectors[:, 1].copy()

    starts: list[np.ndarray] = [psi1, 1.0 + 0.01 * psi1]
    starts += [rng.standard_normal(g.size) for _ in range(restarts)]

    best_val = float("inf")
    best_f: np.ndarray | None = None
    best_cov = float("inf")
    any_converged = False

    for f0 in starts:
        f = ratios.normalize(f0)
        if f is None:
            continue
        val = ratios.ent_ratio(f)
        stall = 0
        for _ in range(max_iters):
            prev_val = val
            grad = ratios.gradient(f)
            gnorm = np.sqrt(np.dot(grad, grad) / ratios.n)
            if not np.isfinite(gnorm) or gnorm < 1e-14:
                any_converged = True
                break
            step = 1.0
            improved = False
            while step > 1e-12:
                cand = ratios.normalize(f - step * grad)
                if cand is not None:
                    cval = ratios.ent_ratio(cand)
                    if cval < val - 1e-15:
                        f, val = cand, cval
                        improved = True
                        break
                step *= 0.5
            if not improved:
                any_converged = True
                break
            if abs(prev_val - val) < tol * max(1.0, abs(val)):
                stall += 1
                if stall >= 3:
                    any_converged = True
                    break
            else:
                stall = 0
        cval = ratios.cov_ratio(f)
        if cval < best_cov:
            best_cov = cval
        if val < best_val:
            best_val, best_f = val, f

    # analytic directional limit along 1 + eps psi_1 (same for both ratios)
    rho_hat = min(best_val, lam1)
    rho_hat_cov = min(best_cov, lam1)
    if best_f is None or best_val > lam1:
        witness = ratios.normalize(1.0 + 1e-4 * psi1)
        best_f = witness if witness is not None else psi1
    if not np.isfinite(rho_hat):
        raise NumericError("log-Sobolev search failed to produce a finite value")
    return LogSobolevEstimate(
        rho_hat=float(rho_hat),
        rho_hat_cov=float(rho_hat_cov),
        minimizer=best_f,
        restarts_used=len(starts),
        converged=any_converged,
    )
