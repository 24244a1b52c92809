"""Layered slice decomposition of the interchange walk on n sites."""

from math import comb

import numpy as np
import pytest

from noiselab import boolfn, exclusion
from noiselab.errors import ValidationError
from conftest import random_boolean


@pytest.fixture(scope="module")
def lw4():
    return exclusion.build_layered(4)


@pytest.fixture(scope="module")
def lw3():
    return exclusion.build_layered(3)


def parity_fn(n: int) -> boolfn.BooleanFunction:
    vals = np.array([bin(x).count("1") % 2 for x in range(2**n)], dtype=np.int8)
    return boolfn.BooleanFunction(values=vals, name="parity")


def dictator_fn(n: int) -> boolfn.BooleanFunction:
    vals = np.array([x & 1 for x in range(2**n)], dtype=np.int8)
    return boolfn.BooleanFunction(values=vals, name="dictator1")


def test_layered_structure(lw4):
    assert lw4.n == 4
    assert len(lw4.slices) == 5
    assert [g.size for g in lw4.slices] == [comb(4, m) for m in range(5)]
    np.testing.assert_allclose(
        lw4.level_distribution, [comb(4, m) / 16 for m in range(5)], rtol=1e-15
    )
    assert lw4.transpositions == tuple(
        (i, j) for i in range(1, 5) for j in range(i + 1, 5)
    )


def test_cube_index_mapping(lw4):
    """Slice state labels match the bits of their cube indices (coord 1 = bit 0)."""
    for m, g in enumerate(lw4.slices):
        for k, label in enumerate(g.states.labels):
            idx = int(lw4.cube_index[m][k])
            assert bin(idx).count("1") == m
            want = "".join("1" if (idx >> b) & 1 else "0" for b in range(4))
            assert label == want


def test_slice_values_match_cube(lw4):
    rng = np.random.default_rng(12)
    f = random_boolean(rng, 16)
    vals = lw4.slice_values(f)
    for m in range(5):
        np.testing.assert_array_equal(vals[m], f.values[lw4.cube_index[m]])


def test_parity_split_is_exact(lw4):
    f = parity_fn(4)
    for t in (0.0, 0.5, 2.0, 7.3):
        split = exclusion.covariance_split(lw4, f, t)
        assert split.within_term == 0.0
        assert split.between_term == 0.25
        assert split.total == 0.25


def test_split_equals_direct_covariance():
    lw = exclusion.build_layered(5)
    rng = np.random.default_rng(44)
    for _ in range(30):
        f = random_boolean(rng, 32)
        for t in (0.0, 0.4, 1.7):
            split = exclusion.covariance_split(lw, f, t)
            direct = exclusion.exclusion_covariance(lw, f, t)
            np.testing.assert_allclose(split.total, direct, atol=1e-10)


def test_total_at_zero_is_level_conditioned_variance(lw4):
    rng = np.random.default_rng(9)
    f = random_boolean(rng, 16)
    split = exclusion.covariance_split(lw4, f, 0.0)
    # E[Var(f | level)] + Var(E[f | level]) with binomial level weights
    vals = lw4.slice_values(f)
    p = lw4.level_distribution
    means = np.array([v.mean() for v in vals])
    within = float(np.dot(p, [v.var() for v in vals]))
    between = float(np.dot(p, means**2) - np.dot(p, means) ** 2)
    np.testing.assert_allclose(split.within_term, within, atol=1e-12)
    np.testing.assert_allclose(split.between_term, between, atol=1e-12)


def test_between_term_is_constant_in_t(lw4):
    rng = np.random.default_rng(10)
    f = random_boolean(rng, 16)
    splits = [exclusion.covariance_split(lw4, f, t) for t in (0.0, 0.5, 1.0, 3.0)]
    for s in splits[1:]:
        np.testing.assert_allclose(s.between_term, splits[0].between_term, atol=1e-12)
    # within decays monotonically
    w = [s.within_term for s in splits]
    assert all(a >= b - 1e-12 for a, b in zip(w, w[1:]))


def test_dictator_level_means_and_between_variance(lw3):
    f = dictator_fn(3)
    vals = lw3.slice_values(f)
    np.testing.assert_allclose([v.mean() for v in vals], [0, 1 / 3, 2 / 3, 1], atol=1e-15)
    np.testing.assert_allclose(exclusion.level_mean_variance(lw3, f), 1 / 12, rtol=1e-12)
    split = exclusion.covariance_split(lw3, f, 0.3)
    np.testing.assert_allclose(split.between_term, 1 / 12, rtol=1e-12)


def test_slice_influence_table_dictator(lw3):
    f = dictator_fn(3)
    tbl = exclusion.slice_influences(lw3, f)
    assert tbl.per_slice.shape == (4, 3)
    by_pair = dict(zip(tbl.transpositions, tbl.per_slice[1]))
    np.testing.assert_allclose(by_pair[(1, 2)], 2 / 3, rtol=1e-12)
    np.testing.assert_allclose(by_pair[(1, 3)], 2 / 3, rtol=1e-12)
    assert by_pair[(2, 3)] == 0.0
    np.testing.assert_allclose(tbl.mixture, lw3.level_distribution @ tbl.per_slice, rtol=1e-15)


def test_coordinate_and_transposition_influences():
    f = dictator_fn(3)
    np.testing.assert_allclose(exclusion.coordinate_influences(f, 3), [1, 0, 0], atol=1e-15)
    ti = exclusion.transposition_influences(f, 3)
    # I_(1j) = P(w_1 != w_j) = 1/2; I_(23) = 0
    np.testing.assert_allclose(ti, [0.5, 0.5, 0.0], atol=1e-15)


def test_transposition_influence_bound_sample():
    rng = np.random.default_rng(77)
    for n in (4, 6):
        for _ in range(40):
            f = random_boolean(rng, 2**n)
            ti = exclusion.transposition_influences(f, n)
            ci = exclusion.coordinate_influences(f, n)
            assert np.sum(ti**2) <= 4 * n * np.sum(ci**2) + 1e-12


def test_good_slice_set_probability_bound(lw4):
    rng = np.random.default_rng(21)
    for _ in range(25):
        f = random_boolean(rng, 16)
        for alpha in (0.1, 0.25, 0.4):
            gs = exclusion.good_slice_set(lw4, f, alpha)
            bound = 1.0 - 4.0 * gs.sum_sq_coordinate_influences**alpha
            assert gs.probability >= bound - 1e-12
            mass = sum(lw4.level_distribution[m] for m in gs.member_levels)
            np.testing.assert_allclose(gs.probability, mass, rtol=1e-12)


def test_good_slice_set_constant_function(lw4):
    f = boolfn.BooleanFunction(values=np.zeros(16, dtype=np.int8))
    gs = exclusion.good_slice_set(lw4, f, 0.25)
    assert gs.member_levels == (0, 1, 2, 3, 4)
    assert gs.probability == 1.0
    assert gs.sum_sq_coordinate_influences == 0.0


def test_good_slice_alpha_range(lw4):
    f = parity_fn(4)
    with pytest.raises(ValidationError):
        exclusion.good_slice_set(lw4, f, 0.0)
    with pytest.raises(ValidationError):
        exclusion.good_slice_set(lw4, f, 0.5)


def test_layered_size_and_budget_limits():
    for bad in (1, 17):
        with pytest.raises(ValidationError):
            exclusion.build_layered(bad)
    with pytest.raises(ValidationError):
        exclusion.build_layered(13)  # within [2,16] but over the work budget
    lw = exclusion.build_layered(2)
    assert [g.size for g in lw.slices] == [1, 2, 1]


def test_slice_bound_check_applicability():
    lw = exclusion.build_layered(8)
    rng = np.random.default_rng(0)
    f = random_boolean(rng, 256)
    rep = exclusion.slice_bound_check(lw, f, m=4, C=1.0, epsilon=0.5, delta=0.3)
    assert rep.applicable
    assert rep.precondition_lhs == 2 * 4 * 4
    np.testing.assert_allclose(rep.precondition_rhs, 0.5 * 8 * 7, rtol=1e-15)
    np.testing.assert_allclose(rep.lambda1, 2 / 7, rtol=1e-9)
    assert rep.thm1_holds and rep.chain_holds
    assert rep.rhs_min <= rep.rhs_at_delta + 1e-15
    # density floor too high for the slice level: the bound chain does not apply
    rep2 = exclusion.slice_bound_check(lw, f, m=1, C=1.0, epsilon=0.9, delta=0.3)
    assert not rep2.applicable
    assert rep2.lambda1 is None


def test_exclusion_sensitivity_report(lw4):
    f = parity_fn(4)
    rep = exclusion.exclusion_sensitivity_report(lw4, f, t_grid=[0.0, 0.5, 2.0])
    assert len(rep.rows) == 3
    for t, within, between, total in rep.rows:
        assert within == 0.0 and between == 0.25 and total == 0.25
    for delta, thr in rep.thresholds:
        np.testing.assert_allclose(thr, 4.0 ** (-delta), rtol=1e-12)
    assert rep.good_slices.alpha == 0.25
