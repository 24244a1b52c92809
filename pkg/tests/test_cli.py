"""Exit codes, output formats, manifests, and determinism of the CLI."""

import json
import re
from pathlib import Path

import numpy as np
import pytest

from noiselab import cli
from noiselab.errors import NumericError

_TS = re.compile(r'"timestamp":\s?"[^"]*"')


def masked(path) -> str:
    return _TS.sub('"timestamp":"T"', Path(path).read_text())


def read_manifest(path) -> dict:
    first = Path(path).read_text().splitlines()[0]
    assert first.startswith("# manifest: ")
    return json.loads(first[len("# manifest: "):])


def test_spectrum_csv_layout(tmp_path):
    out = tmp_path / "spec.csv"
    assert cli.main(["spectrum", "--graph", "torus:m=2,n=2", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[1] == "index,eigenvalue,multiplicity_group"
    assert lines[2] == "0,0,0"
    assert len(lines) == 6
    man = read_manifest(out)
    assert man["graph"] == "torus:m=2,n=2"
    assert man["version"]
    assert "timestamp" in man
    assert man["tolerances"]["eigenvector_orthonormality"] == 1e-10


def test_seventeen_digit_floats(tmp_path):
    out = tmp_path / "spec.csv"
    cli.main(["spectrum", "--graph", "sym:n=3", "--out", str(out)])
    body = out.read_text()
    # sym(3) spectrum is {0, 1, 1, 1.5, 1.5, 3}; eigh noise keeps full precision
    assert "0.99999999999999" in body or ",1," in body


def test_influence_csv(tmp_path):
    out = tmp_path / "inf.csv"
    code = cli.main(
        ["influence", "--graph", "torus:m=2,n=4", "--fn", "tribes:l=2,k=2", "--out", str(out)]
    )
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[1] == "u,label,influence"
    assert lines[2] == "1,e1,0.375"
    assert len(lines) == 6


def test_cov_csv_and_documented_row_count(tmp_path):
    out = tmp_path / "cov.csv"
    code = cli.main(
        [
            "cov", "--graph", "torus:m=2,n=4", "--fn", "tribes:l=2,k=2",
            "--t", "0,0.5,1,2", "--out", str(out),
        ]
    )
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[1] == "t,cov"
    assert len(lines) == 6  # manifest + header + 4 rows
    assert lines[2] == "0,0.24609375"


def test_cov_epsilon_mode_with_diagnostics(tmp_path):
    out = tmp_path / "cov.csv"
    diag = tmp_path / "diag.csv"
    code = cli.main(
        [
            "cov", "--graph", "torus:m=2,n=4", "--fn", "parity",
            "--T", "4", "--epsilons", "0,0.25,1", "--k-values", "1,2",
            "--diagnostics-out", str(diag), "--out", str(out),
        ]
    )
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[1] == "epsilon,t,cov"
    assert len(lines) == 5
    dlines = diag.read_text().splitlines()
    assert dlines[1] == "k,low_freq_weight"
    assert len(dlines) == 4


def test_bound_documented_example_has_nonnegative_slack(tmp_path, capsys):
    code = cli.main(
        [
            "bound", "--graph", "torus:m=2,n=4", "--fn", "tribes:l=2,k=2",
            "--r", "0.5", "--lambda", "auto", "--T", "4",
        ]
    )
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["slack"] >= 0
    assert doc["rho_source"] == "family_bound"
    np.testing.assert_allclose(doc["rho"], np.pi**2 / 20, rtol=1e-12)
    assert doc["manifest"]["seed"] == 0


def test_eigenspace_check_documented_example(tmp_path, capsys):
    import itertools

    fn = tmp_path / "first_pos.json"
    vals = [1 if p[0] == 1 else 0 for p in itertools.permutations(range(1, 5))]
    fn.write_text(json.dumps({"size": 24, "values": vals}))
    code = cli.main(["eigenspace-check", "--graph", "sym:n=4", "--fn", str(fn)])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["all_passed"]
    np.testing.assert_allclose(doc["probe"]["lhs"], 0.5, rtol=1e-10)
    np.testing.assert_allclose(doc["probe"]["rhs_partial_first_position"], 1 / 3, rtol=1e-10)


def test_exclusion_reports(tmp_path):
    levels = tmp_path / "levels.csv"
    cli.main(["exclusion", "--n", "4", "--fn", "parity", "--report", "levels",
              "--out", str(levels)])
    lines = levels.read_text().splitlines()
    assert lines[1] == "m,p_m,slice_mean,slice_var"
    assert len(lines) == 7

    infl = tmp_path / "infl.csv"
    cli.main(["exclusion", "--n", "4", "--fn", "parity", "--report", "influences",
              "--out", str(infl)])
    lines = infl.read_text().splitlines()
    assert lines[1] == "m,i,j,influence"
    assert len(lines) == 2 + 5 * 6

    split = tmp_path / "split.csv"
    cli.main(["exclusion", "--n", "4", "--fn", "parity", "--report", "split",
              "--out", str(split)])
    lines = split.read_text().splitlines()
    assert lines[1] == "t,within,between,total"
    assert lines[2] == "0,0,0.25,0.25"

    summary = tmp_path / "summary.json"
    cli.main(["exclusion", "--n", "4", "--fn", "parity", "--out", str(summary)])
    doc = json.loads(summary.read_text())
    assert doc["n"] == 4
    assert {"manifest", "good_slices", "split", "thresholds"} <= set(doc)


def test_graph_custom_json_input(tmp_path, capsys):
    gfile = tmp_path / "rot.json"
    gfile.write_text(
        json.dumps({"size": 3, "generators": [[1, 2, 0]], "labels": ["r"],
                    "auto_close_inverses": True})
    )
    code = cli.main(["graph", "--graph", str(gfile)])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["degree"] == 2
    assert doc["ok"]


def test_exit_code_validation_error(capsys):
    assert cli.main(["spectrum", "--graph", "torus:m=9"]) == 1
    assert "validation error" in capsys.readouterr().err


def test_exit_code_usage_errors(capsys):
    assert cli.main(["bogus"]) == 64
    assert cli.main(["spectrum", "--graph", "torus:m=2,n=2", "--frobnicate"]) == 64
    assert cli.main(["cov", "--graph", "torus:m=2,n=2", "--fn", "parity"]) == 64
    assert cli.main(["cov", "--graph", "torus:m=2,n=2", "--fn", "parity",
                     "--t", "1", "--k-values", "1"]) == 64
    assert cli.main([]) == 64
    capsys.readouterr()


def test_exit_code_numeric_error(monkeypatch, capsys):
    from noiselab.service import handlers

    def boom(req):
        raise NumericError("synthetic numeric failure")

    monkeypatch.setattr(handlers, "handle_graph", boom)
    assert cli.main(["graph", "--graph", "torus:m=2,n=2"]) == 2
    assert "numeric error" in capsys.readouterr().err


def test_help_exits_zero(capsys):
    assert cli.main(["--help"]) == 0
    assert "noiselab" in capsys.readouterr().out


def test_repeat_runs_byte_identical_modulo_timestamp(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["simulate", "--graph", "torus:m=2,n=3", "--fn", "parity",
            "--samples", "20000", "--t", "0.5", "--seed", "9"]
    assert cli.main(args + ["--out", str(a)]) == 0
    assert cli.main(args + ["--out", str(b)]) == 0
    outs = []
    for p in (a, b):
        text = masked(p)
        # the recorded command includes --out; normalize it away for comparison
        outs.append(text.replace(str(p), "OUT"))
    assert outs[0] == outs[1]


def test_thread_count_does_not_change_bytes(tmp_path):
    one, eight = tmp_path / "one.json", tmp_path / "eight.json"
    base = ["simulate", "--graph", "torus:m=2,n=3", "--fn", "parity",
            "--samples", "30000", "--t", "0.5", "--seed", "4"]
    assert cli.main(base + ["--threads", "1", "--out", str(one)]) == 0
    assert cli.main(base + ["--threads", "8", "--out", str(eight)]) == 0
    a = masked(one).replace(str(one), "OUT")
    b = masked(eight).replace(str(eight), "OUT")
    assert a == b


def test_threads_env_fallback(tmp_path, monkeypatch):
    flagged, env = tmp_path / "flag.json", tmp_path / "env.json"
    base = ["simulate", "--exclusion-n", "4", "--fn", "parity",
            "--samples", "10000", "--t", "0.5", "--seed", "2"]
    assert cli.main(base + ["--threads", "2", "--out", str(flagged)]) == 0
    monkeypatch.setenv("NOISE_LAB_THREADS", "2")
    assert cli.main(base + ["--out", str(env)]) == 0
    a = masked(flagged).replace(str(flagged), "OUT")
    b = masked(env).replace(str(env), "OUT")
    assert a == b
    monkeypatch.setenv("NOISE_LAB_THREADS", "nope")
    assert cli.main(base + ["--out", str(env)]) == 64


def test_logsobolev_json(capsys):
    assert cli.main(["logsobolev", "--graph", "torus:m=2,n=2"]) == 0
    doc = json.loads(capsys.readouterr().out)
    np.testing.assert_allclose(doc["rho_hat"], 1.0, rtol=1e-9)
    assert doc["manifest"]["seed"] == 0


def test_slice_bound_json(capsys):
    code = cli.main(["slice-bound", "--n", "6", "--fn", "majority", "--m", "3",
                     "--C", "1", "--epsilon", "0.5", "--delta", "0.3"])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["applicable"] is True
    np.testing.assert_allclose(doc["lambda1"], 0.4, rtol=1e-9)
