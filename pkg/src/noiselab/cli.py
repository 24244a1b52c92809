"""Command-line interface.

Each subcommand maps one-to-one onto a service endpoint.  By default the
request is handled in process; with ``--server URL`` the identical request
is POSTed to a running service instead, and the response is rendered by the
same code, so outputs are byte-for-byte interchangeable between the two
paths (the manifest timestamp is the only field that varies between runs).

Exit codes: 0 success, 1 validation error, 2 numeric failure,
64 usage error (unknown flags, malformed values, bad flag combinations).

Floats are printed with 17 significant digits so that every value
round-trips exactly through the text output.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import shlex
import sys
from datetime import datetime, timezone

from . import __version__
from .errors import NumericError, ValidationError
from .specs import looks_like_path

__all__ = ["main"]


class _UsageError(Exception):
    """Bad command line; mapped to exit code 64."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # noqa: D102 - argparse hook
        raise _UsageError(message)


# ------------------------------------------------------------- formatting

#: Numeric tolerances baked into the pipeline, recorded in every manifest.
_TOLERANCES = {
    "eigenvalue_grouping_rel": 1e-8,
    "eigensolver_residual_rel": 1e-8,
    "eigenvector_orthonormality": 1e-10,
    "identity_check_rel": 1e-8,
}


def _fmt_float(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise NumericError(f"non-finite value in output: {x!r}")
    return format(x, ".17g")


def _fmt_cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return _fmt_float(v)
    if v is None:
        return ""
    text = str(v)
    if any(ch in text for ch in ',"\n'):
        return '"' + text.replace('"', '""') + '"'
    return text


def _json_render(obj, indent: int | None = 2, level: int = 0) -> str:
    """Deterministic JSON: sorted keys, 17-significant-digit floats."""
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, float):
        return _fmt_float(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (list, tuple)):
        parts = [_json_render(v, indent, level + 1) for v in obj]
        return _wrap("[", "]", parts, indent, level)
    if isinstance(obj, dict):
        parts = []
        for key in sorted(obj):
            if not isinstance(key, str):
                raise TypeError(f"non-string JSON key: {key!r}")
            sep = ": " if indent is not None else ":"
            parts.append(json.dumps(key) + sep + _json_render(obj[key], indent, level + 1))
        return _wrap("{", "}", parts, indent, level)
    raise TypeError(f"cannot render {type(obj).__name__} as JSON")


def _wrap(opener: str, closer: str, parts: list[str], indent: int | None, level: int) -> str:
    if not parts:
        return opener + closer
    if indent is None:
        return opener + ",".join(parts) + closer
    inner = " " * (indent * (level + 1))
    outer = " " * (indent * level)
    return opener + "\n" + inner + (",\n" + inner).join(parts) + "\n" + outer + closer


def _strip_thread_flags(argv: list[str]) -> list[str]:
    """Drop --threads from the recorded command: concurrency must not change output bytes."""
    out: list[str] = []
    skip = False
    for arg in argv:
        if skip:
            skip = False
            continue
        if arg == "--threads":
            skip = True
            continue
        if arg.startswith("--threads="):
            continue
        out.append(arg)
    return out


def _manifest(argv: list[str], graph: str | None, fn: str | None, seed: int | None) -> dict:
    return {
        "command": shlex.join(["noiselab", *_strip_thread_flags(argv)]),
        "graph": graph,
        "fn": fn,
        "seed": seed,
        "tolerances": dict(_TOLERANCES),
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
    }


def _csv_doc(manifest: dict, header: list[str], rows) -> str:
    lines = ["# manifest: " + _json_render(manifest, indent=None), ",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt_cell(v) for v in row))
    return "\n".join(lines) + "\n"


def _json_doc(manifest: dict, payload: dict) -> str:
    doc = {"manifest": manifest}
    doc.update(payload)
    return _json_render(doc, indent=2) + "\n"


def _emit(text: str, out: str) -> None:
    if out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


# ---------------------------------------------------------------- dispatch


def _load_json_file(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON in {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValidationError(f"expected a JSON object in {path}")
    return doc


def _pydantic_messages(exc) -> str:
    try:
        return "; ".join(str(e.get("msg", e)) for e in exc.errors())
    except Exception:  # noqa: BLE001 - fall back to the raw repr
        return str(exc)


def _request(model_cls, **kwargs):
    """Build a request model; shape errors are command-line usage errors."""
    import pydantic

    try:
        return model_cls(**kwargs)
    except pydantic.ValidationError as exc:
        raise _UsageError(_pydantic_messages(exc)) from exc


def _graph_input(spec: str):
    """Resolve --graph into a request payload (file contents travel inline)."""
    import pydantic

    from .service import models

    if looks_like_path(spec):
        doc = _load_json_file(spec)
        if "size" not in doc or "generators" not in doc:
            raise ValidationError(f"graph file {spec} needs 'size' and 'generators'")
        try:
            return models.GraphInput(
                custom=models.CustomGraph(
                    size=doc["size"],
                    generators=doc["generators"],
                    labels=doc.get("labels"),
                    auto_close_inverses=bool(doc.get("auto_close_inverses", False)),
                )
            )
        except pydantic.ValidationError as exc:
            raise ValidationError(f"graph file {spec}: {_pydantic_messages(exc)}") from exc
    return models.GraphInput(spec=spec)


def _function_input(spec: str):
    import pydantic

    from .service import models

    if looks_like_path(spec):
        doc = _load_json_file(spec)
        if "values" not in doc:
            raise ValidationError(f"function file {spec} needs a 'values' array")
        values = doc["values"]
        if "size" in doc and doc["size"] != len(values):
            raise ValidationError(f"function file {spec}: size does not match values")
        try:
            return models.FunctionInput(values=values)
        except pydantic.ValidationError as exc:
            raise ValidationError(f"function file {spec}: {_pydantic_messages(exc)}") from exc
    return models.FunctionInput(spec=spec)


def _call(server: str | None, path: str, req) -> dict:
    """Run a request in process, or POST it to ``server`` when given."""
    if server is not None:
        import httpx

        url = server.rstrip("/") + path
        try:
            resp = httpx.post(url, json=req.model_dump(mode="json"), timeout=600.0)
        except httpx.HTTPError as exc:
            raise NumericError(f"server request failed: {exc}") from exc
        if resp.status_code in (400, 422):
            raise ValidationError(_detail(resp))
        if resp.status_code >= 500:
            raise NumericError(_detail(resp))
        return resp.json()

    from .service import handlers

    handler = {
        "/graph": handlers.handle_graph,
        "/spectrum": handlers.handle_spectrum,
        "/influence": handlers.handle_influence,
        "/fourier": handlers.handle_fourier,
        "/cov": handlers.handle_cov,
        "/bound": handlers.handle_bound,
        "/logsobolev": handlers.handle_logsobolev,
        "/eigenspace-check": handlers.handle_eigenspace_check,
        "/exclusion": handlers.handle_exclusion,
        "/slice-bound": handlers.handle_slice_bound,
        "/simulate": handlers.handle_simulate,
    }[path]
    return handler(req).model_dump()


def _detail(resp) -> str:
    try:
        doc = resp.json()
    except ValueError:
        return resp.text.strip() or f"HTTP {resp.status_code}"
    if isinstance(doc, dict):
        for key in ("error", "detail"):
            if key in doc:
                return str(doc[key])
    return json.dumps(doc)


# ------------------------------------------------------------ subcommands


def _float_list(text: str) -> list[float]:
    values = [float(piece) for piece in text.split(",") if piece.strip() != ""]
    if not values:
        raise ValueError("empty list")
    return values


def _auto_or_float(text: str):
    if text.strip().lower() == "auto":
        return None
    return float(text)


def _add_common(sp) -> None:
    sp.add_argument("--out", default="-", metavar="PATH", help="output path ('-' = stdout)")
    sp.add_argument(
        "--server",
        default=None,
        metavar="URL",
        help="base URL of a running service; default handles the request in process",
    )


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="noiselab",
        description="Random-walk noise sensitivity toolkit: spectra, influences, "
        "covariance decay bounds, and exclusion-process diagnostics.",
    )
    parser.add_argument("--version", action="version", version=f"noiselab {__version__}")
    sub = parser.add_subparsers(dest="cmd", required=True, metavar="COMMAND")

    sp = sub.add_parser("graph", help="build & validate a graph, report its summary (JSON)")
    sp.add_argument("--graph", required=True, help="graph mini-spec or JSON path")
    _add_common(sp)

    sp = sub.add_parser("spectrum", help="eigenvalues with multiplicity grouping (CSV)")
    sp.add_argument("--graph", required=True)
    _add_common(sp)

    sp = sub.add_parser("influence", help="per-generator influences of a function (CSV)")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--fn", required=True, help="function mini-spec or JSON path")
    _add_common(sp)

    sp = sub.add_parser("fourier", help="spectral coefficients of a function (CSV)")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--fn", required=True)
    _add_common(sp)

    sp = sub.add_parser("cov", help="exact semigroup covariance along a time grid (CSV)")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--fn", required=True)
    sp.add_argument("--t", type=_float_list, metavar="T1,T2,...", help="time grid")
    sp.add_argument("--T", type=float, default=None, help="horizon for the epsilon grid mode")
    sp.add_argument(
        "--epsilons", type=_float_list, default=None, metavar="E1,E2,...",
        help="noise levels; rows are (epsilon, t=epsilon*T, cov)",
    )
    sp.add_argument(
        "--k-values", dest="k_values", type=_float_list, default=None, metavar="K1,K2,...",
        help="low-frequency weight diagnostics at Lambda=k/T (needs --T and --diagnostics-out)",
    )
    sp.add_argument("--diagnostics-out", default=None, metavar="PATH")
    _add_common(sp)

    sp = sub.add_parser("bound", help="covariance upper bound vs the exact value (JSON)")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--fn", required=True)
    sp.add_argument("--r", type=float, default=None, help="exponent parameter in (0,1)")
    sp.add_argument(
        "--lambda", dest="lam", type=_auto_or_float, default=None, metavar="VALUE",
        help="frequency cutoff ('auto' = spectral gap)",
    )
    sp.add_argument("--T", type=float, default=None, help="evaluation time")
    sp.add_argument(
        "--rho", type=_auto_or_float, default=None, metavar="VALUE",
        help="log-Sobolev constant ('auto' = family bound or estimator)",
    )
    sp.add_argument("--optimize", action="store_true", help="grid-search (r, Lambda, T)")
    sp.add_argument("--r-grid", dest="r_grid", type=_float_list, default=None)
    sp.add_argument("--lambda-grid", dest="lambda_grid", type=_float_list, default=None)
    sp.add_argument("--T-grid", dest="t_grid", type=_float_list, default=None)
    sp.add_argument("--seed", type=int, default=0, help="seed for the rho estimator")
    _add_common(sp)

    sp = sub.add_parser("logsobolev", help="log-Sobolev constant estimate (JSON)")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--restarts", type=int, default=32)
    sp.add_argument("--max-iters", dest="max_iters", type=int, default=500)
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--seed", type=int, default=0)
    _add_common(sp)

    sp = sub.add_parser(
        "eigenspace-check",
        help="per-eigenspace energy identity audit for a function (JSON)",
    )
    sp.add_argument("--graph", required=True)
    sp.add_argument("--fn", required=True)
    _add_common(sp)

    sp = sub.add_parser(
        "exclusion", help="layered slice decomposition reports for the n-site process"
    )
    sp.add_argument("--n", type=int, required=True, help="number of sites (2..16)")
    sp.add_argument("--fn", required=True, help="function on the 2^n cube")
    sp.add_argument(
        "--report",
        choices=("levels", "influences", "split", "summary"),
        default="summary",
        help="levels/influences/split are CSV; summary is JSON",
    )
    sp.add_argument("--t", type=_float_list, default=[0.0, 0.5, 2.0], metavar="T1,T2,...")
    sp.add_argument("--alpha", type=float, default=0.25, help="good-slice exponent")
    sp.add_argument(
        "--deltas", type=_float_list, default=[0.1, 0.2, 0.3], metavar="D1,D2,...",
        help="influence-threshold exponents reported as n^-delta",
    )
    _add_common(sp)

    sp = sub.add_parser(
        "slice-bound", help="single-slice sensitivity bound chain for the exclusion process"
    )
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--fn", required=True)
    sp.add_argument("--m", type=int, required=True, help="slice level")
    sp.add_argument("--C", type=float, required=True, help="time-scale constant")
    sp.add_argument("--epsilon", type=float, required=True, help="density floor")
    sp.add_argument("--delta", type=float, required=True, help="target exponent")
    sp.add_argument("--alpha", type=float, default=1.0)
    sp.add_argument("--seed", type=int, default=0)
    _add_common(sp)

    sp = sub.add_parser("simulate", help="Monte Carlo covariance estimate (JSON)")
    group = sp.add_mutually_exclusive_group(required=True)
    group.add_argument("--graph", default=None)
    group.add_argument(
        "--exclusion-n", dest="exclusion_n", type=int, default=None,
        help="simulate the n-site exclusion process instead of a graph walk",
    )
    sp.add_argument("--fn", required=True)
    sp.add_argument("--samples", type=int, default=100_000)
    sp.add_argument("--t", type=float, default=1.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--antithetic", action="store_true")
    sp.add_argument(
        "--threads", type=int, default=None,
        help="worker threads (default: NOISE_LAB_THREADS env var, else 1)",
    )
    sp.add_argument(
        "--exp-gaps", dest="use_exp_gaps", action="store_true",
        help="draw jump times as exponential gaps instead of a Poisson count",
    )
    _add_common(sp)

    sp = sub.add_parser("serve", help="run the HTTP service")
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8000)

    return parser


# ------------------------------------------------------------------- run


def _run(args, argv: list[str]) -> None:
    from .service import models

    cmd = args.cmd

    if cmd == "serve":
        import uvicorn

        from .service.app import create_app

        uvicorn.run(create_app(), host=args.host, port=args.port)
        return

    if cmd == "graph":
        req = _request(models.GraphRequest, graph=_graph_input(args.graph))
        resp = _call(args.server, "/graph", req)
        man = _manifest(argv, args.graph, None, None)
        _emit(_json_doc(man, resp), args.out)
        return

    if cmd == "spectrum":
        req = _request(models.SpectrumRequest, graph=_graph_input(args.graph))
        resp = _call(args.server, "/spectrum", req)
        man = _manifest(argv, args.graph, None, None)
        rows = [
            (i, ev, grp)
            for i, (ev, grp) in enumerate(
                zip(resp["eigenvalues"], resp["multiplicity_group"])
            )
        ]
        _emit(_csv_doc(man, ["index", "eigenvalue", "multiplicity_group"], rows), args.out)
        return

    if cmd == "influence":
        req = _request(
            models.FunctionRequest, graph=_graph_input(args.graph), fn=_function_input(args.fn)
        )
        resp = _call(args.server, "/influence", req)
        man = _manifest(argv, args.graph, args.fn, None)
        rows = [
            (u + 1, label, val)
            for u, (label, val) in enumerate(zip(resp["labels"], resp["per_generator"]))
        ]
        _emit(_csv_doc(man, ["u", "label", "influence"], rows), args.out)
        return

    if cmd == "fourier":
        req = _request(
            models.FunctionRequest, graph=_graph_input(args.graph), fn=_function_input(args.fn)
        )
        resp = _call(args.server, "/fourier", req)
        man = _manifest(argv, args.graph, args.fn, None)
        rows = [
            (i, ev, c)
            for i, (ev, c) in enumerate(zip(resp["eigenvalues"], resp["coefficients"]))
        ]
        _emit(_csv_doc(man, ["index", "eigenvalue", "coefficient"], rows), args.out)
        return

    if cmd == "cov":
        if args.k_values is not None and (args.T is None or args.diagnostics_out is None):
            raise _UsageError("--k-values requires --T and --diagnostics-out")
        req = _request(
            models.CovRequest,
            graph=_graph_input(args.graph),
            fn=_function_input(args.fn),
            t=args.t,
            T=args.T,
            epsilons=args.epsilons,
            k_values=args.k_values or [],
        )
        resp = _call(args.server, "/cov", req)
        man = _manifest(argv, args.graph, args.fn, None)
        rows = resp["rows"]
        if rows and rows[0]["epsilon"] is not None:
            table = [(r["epsilon"], r["t"], r["cov"]) for r in rows]
            text = _csv_doc(man, ["epsilon", "t", "cov"], table)
        else:
            table = [(r["t"], r["cov"]) for r in rows]
            text = _csv_doc(man, ["t", "cov"], table)
        _emit(text, args.out)
        if args.diagnostics_out is not None:
            diag = [(d["k"], d["low_freq_weight"]) for d in resp["diagnostics"]]
            _emit(_csv_doc(man, ["k", "low_freq_weight"], diag), args.diagnostics_out)
        return

    if cmd == "bound":
        req = _request(
            models.BoundRequest,
            graph=_graph_input(args.graph),
            fn=_function_input(args.fn),
            r=args.r,
            Lambda=args.lam,
            T=args.T,
            rho=args.rho,
            optimize=args.optimize,
            r_grid=args.r_grid,
            lambda_grid=args.lambda_grid,
            t_grid=args.t_grid,
            seed=args.seed,
        )
        resp = _call(args.server, "/bound", req)
        man = _manifest(argv, args.graph, args.fn, args.seed)
        _emit(_json_doc(man, resp), args.out)
        return

    if cmd == "logsobolev":
        req = _request(
            models.LogSobolevRequest,
            graph=_graph_input(args.graph),
            restarts=args.restarts,
            max_iters=args.max_iters,
            tol=args.tol,
            seed=args.seed,
        )
        resp = _call(args.server, "/logsobolev", req)
        man = _manifest(argv, args.graph, None, args.seed)
        _emit(_json_doc(man, resp), args.out)
        return

    if cmd == "eigenspace-check":
        req = _request(
            models.EigenspaceCheckRequest,
            graph=_graph_input(args.graph), fn=_function_input(args.fn)
        )
        resp = _call(args.server, "/eigenspace-check", req)
        man = _manifest(argv, args.graph, args.fn, None)
        _emit(_json_doc(man, resp), args.out)
        return

    if cmd == "exclusion":
        req = _request(
            models.ExclusionRequest,
            n=args.n,
            fn=_function_input(args.fn),
            t_grid=args.t,
            alpha=args.alpha,
            deltas=args.deltas,
        )
        resp = _call(args.server, "/exclusion", req)
        man = _manifest(argv, f"exclusion:n={args.n}", args.fn, None)
        if args.report == "levels":
            rows = [(r["m"], r["p_m"], r["slice_mean"], r["slice_var"]) for r in resp["levels"]]
            _emit(_csv_doc(man, ["m", "p_m", "slice_mean", "slice_var"], rows), args.out)
        elif args.report == "influences":
            rows = [(r["m"], r["i"], r["j"], r["influence"]) for r in resp["influences"]]
            _emit(_csv_doc(man, ["m", "i", "j", "influence"], rows), args.out)
        elif args.report == "split":
            rows = [(r["t"], r["within"], r["between"], r["total"]) for r in resp["split"]]
            _emit(_csv_doc(man, ["t", "within", "between", "total"], rows), args.out)
        else:
            payload = {
                "n": resp["n"],
                "sum_sq_coordinate_influences": resp["sum_sq_coordinate_influences"],
                "thresholds": [
                    {"delta": pair[0], "n_pow_minus_delta": pair[1]}
                    for pair in resp["thresholds"]
                ],
                "good_slices": resp["good_slices"],
                "split": resp["split"],
            }
            _emit(_json_doc(man, payload), args.out)
        return

    if cmd == "slice-bound":
        req = _request(
            models.SliceBoundRequest,
            n=args.n,
            fn=_function_input(args.fn),
            m=args.m,
            C=args.C,
            epsilon=args.epsilon,
            delta=args.delta,
            alpha=args.alpha,
            seed=args.seed,
        )
        resp = _call(args.server, "/slice-bound", req)
        man = _manifest(argv, f"exclusion:n={args.n}", args.fn, args.seed)
        _emit(_json_doc(man, resp), args.out)
        return

    if cmd == "simulate":
        threads = args.threads
        if threads is None:
            raw = os.environ.get("NOISE_LAB_THREADS", "1") or "1"
            try:
                threads = int(raw)
            except ValueError as exc:
                raise _UsageError(f"NOISE_LAB_THREADS must be an integer, got {raw!r}") from exc
        req = _request(
            models.SimulateRequest,
            graph=_graph_input(args.graph) if args.graph is not None else None,
            exclusion_n=args.exclusion_n,
            fn=_function_input(args.fn),
            samples=args.samples,
            t=args.t,
            seed=args.seed,
            antithetic=args.antithetic,
            threads=threads,
            use_exp_gaps=args.use_exp_gaps,
        )
        resp = _call(args.server, "/simulate", req)
        graph_desc = args.graph if args.graph is not None else f"exclusion:n={args.exclusion_n}"
        man = _manifest(argv, graph_desc, args.fn, args.seed)
        _emit(_json_doc(man, resp), args.out)
        return

    raise _UsageError(f"unknown command {cmd!r}")


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else [str(a) for a in argv]
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return 64
    except SystemExit as exc:  # --help / --version
        code = exc.code
        return code if isinstance(code, int) else 0

    try:
        _run(args, argv)
        return 0
    except _UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return 64
    except ValidationError as exc:
        sys.stderr.write(f"validation error: {exc}\n")
        return 1
    except NumericError as exc:
        sys.stderr.write(f"numeric error: {exc}\n")
        return 2
    except Exception as exc:  # noqa: BLE001 - stable exit codes at the boundary
        sys.stderr.write(f"internal error: {type(exc).__name__}: {exc}\n")
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
