"""Pure request -> response handlers, shared by the HTTP app and the CLI.

Graphs, spectra, and log-Sobolev estimates are cached (small LRU keyed by
the canonical graph input), since eigendecompositions dominate the cost of
most requests and are pure functions of the graph.
"""

from __future__ import annotations

import threading
from collections import OrderedDict

import numpy as np

from .. import boolfn, exclusion, noise, simulate, spectral
from ..errors import ValidationError
from ..graphs import SchreierGraph, build_custom, validate
from ..specs import canonical_graph_key, parse_function_spec, parse_graph_spec
from . import models

_LOCK = threading.Lock()
_CACHE_MAX = 32
_GRAPHS: OrderedDict[str, SchreierGraph] = OrderedDict()
_SPECTRA: OrderedDict[str, spectral.Spectrum] = OrderedDict()
_RHO: OrderedDict[tuple[str, int], tuple[float, str]] = OrderedDict()


def _lru_get(cache: OrderedDict, key):
    with _LOCK:
        if key in cache:
            cache.move_to_end(key)
            return cache[key]
    return None


def _lru_put(cache: OrderedDict, key, value):
    with _LOCK:
        cache[key] = value
        cache.move_to_end(key)
        while len(cache) > _CACHE_MAX:
            cache.popitem(last=False)


def resolve_graph(gi: models.GraphInput) -> tuple[SchreierGraph, str]:
    if gi.spec is not None:
        key = canonical_graph_key(gi.spec)
    else:
        key = canonical_graph_key(gi.custom.model_dump())
    g = _lru_get(_GRAPHS, key)
    if g is None:
        if gi.spec is not None:
            g = parse_graph_spec(gi.spec)
        else:
            g = build_custom(
                gi.custom.size,
                gi.custom.generators,
                labels=gi.custom.labels,
                auto_close_inverses=gi.custom.auto_close_inverses,
            )
        _lru_put(_GRAPHS, key, g)
    return g, key


def spectrum_for(g: SchreierGraph, key: str) -> spectral.Spectrum:
    s = _lru_get(_SPECTRA, key)
    if s is None:
        s = spectral.decompose(g)
        _lru_put(_SPECTRA, key, s)
    return s


def _rho_for(g: SchreierGraph, key: str, user_rho: float | None, seed: int) -> tuple[float, str]:
    if user_rho is not None:
        return noise.resolve_rho(g, user_rho)
    cached = _lru_get(_RHO, (key, seed))
    if cached is None:
        cached = noise.resolve_rho(g, None, seed=seed)
        _lru_put(_RHO, (key, seed), cached)
    return cached


def resolve_function(g: SchreierGraph, fi: models.FunctionInput) -> boolfn.BooleanFunction:
    if fi.spec is not None:
        return parse_function_spec(g, fi.spec)
    if len(fi.values) != g.size:
        raise ValidationError(
            f"function has {len(fi.values)} values but the graph has {g.size} states"
        )
    return boolfn.BooleanFunction(np.asarray(fi.values), name="custom")


def handle_graph(req: models.GraphRequest) -> models.GraphResponse:
    g, _ = resolve_graph(req.graph)
    report = validate(g)
    return models.GraphResponse(
        family=g.family,
        size=g.size,
        degree=g.degree,
        generator_labels=list(g.generator_labels),
        is_permutation_action=report.is_permutation_action,
        inverse_closed=report.inverse_closed,
        identity_free=report.identity_free,
        connected=report.connected,
        ok=report.ok,
        messages=list(report.messages),
    )


def handle_spectrum(req: models.SpectrumRequest) -> models.SpectrumResponse:
    g, key = resolve_graph(req.graph)
    s = spectrum_for(g, key)
    groups = spectral.eigenspaces(s)
    group_of = np.empty(s.size, dtype=int)
    for gi_idx, space in enumerate(groups):
        for j in space.indices:
            group_of[j] = gi_idx
    vecs = None
    if req.include_eigenvectors:
        vecs = [s.eigenvectors[:, j].tolist() for j in range(s.size)]
    relax = s.relaxation_time if np.isfinite(s.relaxation_time) else None
    return models.SpectrumResponse(
        eigenvalues=s.eigenvalues.tolist(),
        multiplicity_group=group_of.tolist(),
        gap=s.gap,
        relaxation_time=relax,
        grouping_tolerance=s.grouping_tolerance,
        eigenvectors=vecs,
    )


def handle_influence(req: models.FunctionRequest) -> models.InfluenceResponse:
    g, _ = resolve_graph(req.graph)
    f = resolve_function(g, req.fn)
    profile = boolfn.influence_profile(g, f)
    return models.InfluenceResponse(
        labels=list(profile.labels),
        per_generator=profile.per_generator.tolist(),
        total=profile.total,
        sum_of_squares=profile.sum_of_squares,
    )


def handle_fourier(req: models.FunctionRequest) -> models.FourierResponse:
    g, key = resolve_graph(req.graph)
    f = resolve_function(g, req.fn)
    s = spectrum_for(g, key)
    fx = boolfn.fourier(s, f)
    return models.FourierResponse(
        coefficients=fx.coefficients.tolist(),
        eigenvalues=fx.eigenvalues.tolist(),
        mean=fx.mean,
        variance_weight=fx.variance_weight,
    )


def handle_cov(req: models.CovRequest) -> models.CovResponse:
    g, key = resolve_graph(req.graph)
    f = resolve_function(g, req.fn)
    s = spectrum_for(g, key)
    rows: list[models.CovRow] = []
    diagnostics: list[models.DiagnosticRow] = []
    if req.t is not None:
        for t in req.t:
            rows.append(
                models.CovRow(epsilon=None, t=float(t), cov=noise.exact_covariance(s, f, float(t)))
            )
        if req.k_values:
            if req.T is None:
                raise ValidationError("k_values diagnostics need 'T'")
    if req.T is not None and req.epsilons is not None:
        profile = noise.sensitivity_profile(s, f, req.T, req.epsilons, req.k_values)
        for eps, t, cov in profile.rows:
            rows.append(models.CovRow(epsilon=eps, t=t, cov=cov))
        diagnostics = [
            models.DiagnosticRow(k=k, low_freq_weight=w) for k, w in profile.diagnostics
        ]
    elif req.k_values and req.T is not None:
        profile = noise.sensitivity_profile(s, f, req.T, (), req.k_values)
        diagnostics = [
            models.DiagnosticRow(k=k, low_freq_weight=w) for k, w in profile.diagnostics
        ]
    return models.CovResponse(rows=rows, diagnostics=diagnostics)


def handle_bound(req: models.BoundRequest) -> models.BoundResponse:
    g, key = resolve_graph(req.graph)
    f = resolve_function(g, req.fn)
    s = spectrum_for(g, key)
    rho, rho_source = _rho_for(g, key, req.rho, req.seed)
    if req.optimize:
        params, report = noise.optimize_bound(
            s,
            g,
            f,
            rho,
            r_grid=req.r_grid,
            lambda_grid=req.lambda_grid,
            t_grid=req.t_grid if req.t_grid is not None else ([req.T] if req.T else None),
            rho_source=rho_source,
        )
        optimized = True
    else:
        lam = req.Lambda if req.Lambda is not None else s.gap
        params = noise.BoundParams(r=req.r, Lambda=lam, T=req.T)
        report = noise.evaluate_theorem1(s, g, f, rho, params, rho_source=rho_source)
        optimized = False
    return models.BoundResponse(
        lhs=report.lhs,
        rhs_low_freq_term=report.rhs_low_freq_term,
        rhs_tail_term=report.rhs_tail_term,
        rhs=report.rhs,
        slack=report.slack,
        r=params.r,
        Lambda=params.Lambda,
        T=params.T,
        rho=rho,
        rho_source=rho_source,
        lambda1=s.gap,
        optimized=optimized,
    )


def handle_logsobolev(req: models.LogSobolevRequest) -> models.LogSobolevResponse:
    g, key = resolve_graph(req.graph)
    s = spectrum_for(g, key)
    est = spectral.estimate_log_sobolev(
        g, restarts=req.restarts, max_iters=req.max_iters, tol=req.tol, seed=req.seed
    )
    return models.LogSobolevResponse(
        rho_hat=est.rho_hat,
        rho_hat_cov=est.rho_hat_cov,
        lambda1=s.gap,
        restarts_used=est.restarts_used,
        converged=est.converged,
    )


def _position_probe(g: SchreierGraph, f: boolfn.BooleanFunction) -> models.PerVectorProbe:
    """Indicator eigenvector psi = -1 + 2*1[value at position 1 is 1 or 2]."""
    first = np.array([int(label[0]) for label in g.states.labels])
    psi = -1.0 + 2.0 * np.isin(first, (1, 2)).astype(float)
    probe = noise.per_vector_identity(g, f, psi)
    partial = sum(
        float(v) ** 2
        for lbl, v in zip(probe.labels, probe.per_generator_terms)
        if lbl.startswith("(1 ")
    )
    return models.PerVectorProbe(
        description=(
            "single eigenvector psi = -1 + 2*1[position 1 holds 1 or 2]; "
            "lhs = 2*lambda*|U|*<f,psi>^2 vs per-generator projections"
        ),
        eigenvalue=probe.eigenvalue,
        coefficient=probe.coefficient,
        lhs=probe.lhs,
        terms=[
            models.ProbeTerm(label=lbl, value=float(v))
            for lbl, v in zip(probe.labels, probe.per_generator_terms)
        ],
        rhs_partial_first_position=partial,
        rhs_full=probe.rhs_full,
    )


def handle_eigenspace_check(req: models.EigenspaceCheckRequest) -> models.EigenspaceCheckResponse:
    g, key = resolve_graph(req.graph)
    f = resolve_function(g, req.fn)
    s = spectrum_for(g, key)
    rows = noise.check_eigenspace_identity(s, g, f)
    out_rows = [
        models.EigenspaceRow(
            eigenvalue=r.eigenvalue,
            dimension=r.dimension,
            lhs=r.lhs,
            rhs=r.rhs,
            abs_error=r.abs_error,
            rel_error=r.rel_error,
            passed=r.passed,
        )
        for r in rows
    ]
    probe = None
    if g.family == "sym" and g.params.get("n") == 4:
        probe = _position_probe(g, f)
    return models.EigenspaceCheckResponse(
        rows=out_rows, all_passed=all(r.passed for r in rows), probe=probe
    )


def handle_exclusion(req: models.ExclusionRequest) -> models.ExclusionResponse:
    lw = exclusion.build_layered(req.n)
    f = resolve_function_on_cube(req.n, req.fn)
    report = exclusion.exclusion_sensitivity_report(
        lw, f, req.t_grid, deltas=req.deltas, alpha=req.alpha
    )
    values = lw.slice_values(f)
    levels = []
    for m, v in enumerate(values):
        mean = float(v.mean())
        levels.append(
            models.LevelRow(
                m=m,
                p_m=float(lw.level_distribution[m]),
                slice_mean=mean,
                slice_var=mean * (1.0 - mean),
            )
        )
    table = exclusion.slice_influences(lw, f)
    infl = [
        models.SliceInfluenceRow(m=m, i=i, j=j, influence=float(table.per_slice[m, col]))
        for m in range(lw.n + 1)
        for col, (i, j) in enumerate(table.transpositions)
    ]
    split = [
        models.SplitRow(t=t, within=w, between=b, total=tot) for t, w, b, tot in report.rows
    ]
    good = report.good_slices
    return models.ExclusionResponse(
        n=req.n,
        levels=levels,
        influences=infl,
        split=split,
        sum_sq_coordinate_influences=report.sum_sq_coordinate_influences,
        thresholds=list(report.thresholds),
        good_slices=models.GoodSliceModel(
            alpha=good.alpha,
            member_levels=list(good.member_levels),
            probability=good.probability,
            sum_sq_coordinate_influences=good.sum_sq_coordinate_influences,
            threshold=good.threshold,
        ),
    )


def resolve_function_on_cube(n: int, fi: models.FunctionInput) -> boolfn.BooleanFunction:
    """Resolve a function on {0,1}^n, reusing the cached cube graph."""
    from ..graphs import build_torus

    key = canonical_graph_key(f"torus:m=2,n={n}")
    cube = _lru_get(_GRAPHS, key)
    if cube is None:
        cube = build_torus(2, n)
        _lru_put(_GRAPHS, key, cube)
    return resolve_function(cube, fi)


def handle_slice_bound(req: models.SliceBoundRequest) -> models.SliceBoundResponse:
    lw = exclusion.build_layered(req.n)
    f = resolve_function_on_cube(req.n, req.fn)
    r = exclusion.slice_bound_check(
        lw, f, req.m, req.C, req.epsilon, req.delta, alpha=req.alpha, seed=req.seed
    )
    return models.SliceBoundResponse(**{k: getattr(r, k) for k in models.SliceBoundResponse.model_fields})


def handle_simulate(req: models.SimulateRequest) -> models.SimulateResponse:
    cfg = simulate.SimConfig(
        samples=req.samples, t=req.t, seed=req.seed, antithetic=req.antithetic
    )
    if req.graph is not None:
        g, _ = resolve_graph(req.graph)
        f = resolve_function(g, req.fn)
        est = simulate.empirical_covariance(
            g, f, cfg, threads=req.threads, use_exp_gaps=req.use_exp_gaps
        )
    else:
        f = resolve_function_on_cube(req.exclusion_n, req.fn)
        est = simulate.empirical_exclusion_covariance(
            req.exclusion_n, f, cfg, threads=req.threads, use_exp_gaps=req.use_exp_gaps
        )
    return models.SimulateResponse(
        mean=est.mean, stderr=est.stderr, samples=est.samples, seed=req.seed
    )
