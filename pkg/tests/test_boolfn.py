"""Named Boolean families, influences, and spectral expansions."""

import json
from fractions import Fraction

import numpy as np
import pytest

from noiselab import boolfn, graphs, spectral
from noiselab.errors import ValidationError


def test_boolean_function_validation():
    with pytest.raises(ValidationError):
        boolfn.BooleanFunction(values=np.array([0, 1, 2], dtype=np.int8))
    f = boolfn.BooleanFunction(values=np.array([0, 1], dtype=np.int8))
    assert f.size == 2
    with pytest.raises(ValueError):
        f.values[0] = 1


def test_parity_values(torus24):
    f = boolfn.make_named(torus24, "parity")
    for idx, label in enumerate(torus24.states.labels):
        assert f.values[idx] == sum(int(ch) for ch in label) % 2


def test_majority_breaks_ties_to_zero():
    g = graphs.build_torus(2, 2)
    f = boolfn.make_named(g, "majority")
    # labels 00,10,01,11 -> only 11 has a strict majority of ones
    np.testing.assert_array_equal(f.values, [0, 0, 0, 1])


def test_dictator_reads_one_coordinate(torus24):
    f = boolfn.make_named(torus24, "dictator:i=3")
    for idx, label in enumerate(torus24.states.labels):
        assert f.values[idx] == int(label[2])


def test_slice_indicator():
    g = graphs.build_torus(2, 3)
    f = boolfn.make_named(g, "slice:m=2")
    for idx, label in enumerate(g.states.labels):
        assert f.values[idx] == (label.count("1") == 2)


def test_tribes_layout_anchor(torus24):
    """tribes:l=2,k=2 on n=4: OR of AND(w1,w2) and AND(w3,w4)."""
    f = boolfn.make_named(torus24, "tribes:l=2,k=2")
    lbl = dict(zip(torus24.states.labels, f.values))
    assert lbl["1100"] == 1
    assert lbl["0011"] == 1
    assert lbl["1010"] == 0
    assert lbl["0000"] == 0
    assert lbl["1111"] == 1


def test_named_families_require_binary_torus():
    g = graphs.build_johnson(5, 2)
    with pytest.raises(ValidationError):
        boolfn.make_named(g, "parity")
    # slice is fine on the cube but needs a valid level
    h = graphs.build_torus(2, 3)
    with pytest.raises(ValidationError):
        boolfn.make_named(h, "slice:m=9")


def test_tribes_mean_exact_rationals():
    # mean of tribes(l,k) = 1 - (1 - 2^-k)^l, dyadic so exact in float
    cases = {(2, 2): Fraction(7, 16), (2, 3): Fraction(15, 64), (3, 2): Fraction(37, 64)}
    for (tribes, members), want in cases.items():
        g = graphs.build_torus(2, tribes * members)
        f = boolfn.make_named(g, f"tribes:l={tribes},k={members}")
        mean, var = boolfn.mean_variance(f)
        assert Fraction(mean) == want
        assert Fraction(var) == want * (1 - want)


def test_influence_parity_is_one(torus24):
    f = boolfn.make_named(torus24, "parity")
    for u in range(torus24.degree):
        assert boolfn.influence(torus24, f, u) == 1.0


def test_influence_profile_tribes(torus24):
    f = boolfn.make_named(torus24, "tribes:l=2,k=2")
    prof = boolfn.influence_profile(torus24, f)
    np.testing.assert_array_equal(prof.per_generator, [0.375] * 4)
    assert prof.total == 1.5
    assert Fraction(prof.sum_of_squares) == Fraction(9, 16)
    assert prof.labels == torus24.generator_labels


def test_influence_index_bounds(torus24):
    f = boolfn.make_named(torus24, "parity")
    with pytest.raises(ValidationError):
        boolfn.influence(torus24, f, -1)
    with pytest.raises(ValidationError):
        boolfn.influence(torus24, f, 4)


def test_influence_on_johnson_graph():
    """Influences are defined for any generator set, not just cube flips."""
    g = graphs.build_johnson(3, 1)
    # f = 1 exactly when coordinate 1 carries the one
    vals = np.array([int(lbl[0]) for lbl in g.states.labels], dtype=np.int8)
    f = boolfn.BooleanFunction(values=vals)
    prof = boolfn.influence_profile(g, f)
    want = {"(1 2)": 2 / 3, "(1 3)": 2 / 3, "(2 3)": 0.0}
    got = dict(zip(prof.labels, prof.per_generator))
    assert got == want


def test_fourier_expansion_parseval(graph_suite, spectrum_suite):
    rng = np.random.default_rng(23)
    for name, g in graph_suite.items():
        s = spectrum_suite[name]
        f = boolfn.BooleanFunction(values=rng.integers(0, 2, size=g.size).astype(np.int8))
        fx = boolfn.fourier(s, f)
        mean, var = boolfn.mean_variance(f)
        np.testing.assert_allclose(fx.mean, mean, atol=1e-12, err_msg=name)
        np.testing.assert_allclose(fx.variance_weight, var, atol=1e-10, err_msg=name)
        np.testing.assert_allclose(fx.total_weight, mean, atol=1e-10, err_msg=name)


def test_fourier_parity_concentrates_on_top_eigenvalue():
    g = graphs.build_torus(2, 2)
    s = spectral.decompose(g)
    f = boolfn.make_named(g, "parity")
    fx = boolfn.fourier(s, f)
    np.testing.assert_allclose(np.abs(fx.coefficients), [0.5, 0.0, 0.0, 0.5], atol=1e-12)
    assert fx.eigenvalues[3] == pytest.approx(2.0)


def test_function_json_round_trip(tmp_path, torus24):
    f = boolfn.make_named(torus24, "majority")
    doc = boolfn.function_to_json(f)
    path = tmp_path / "fn.json"
    path.write_text(json.dumps(doc))
    g = boolfn.function_from_json(str(path), expected_size=16)
    np.testing.assert_array_equal(g.values, f.values)
    with pytest.raises(ValidationError):
        boolfn.function_from_json(str(path), expected_size=8)
