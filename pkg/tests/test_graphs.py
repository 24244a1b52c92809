"""Graph construction, labeling conventions, and validation."""

import json

import numpy as np
import pytest

from noiselab import graphs
from noiselab.errors import SizeCapError, ValidationError


def test_torus_binary_sizes_and_labels():
    g = graphs.build_torus(2, 2)
    assert g.size == 4
    assert g.degree == 2
    # coordinate 1 is the leftmost label character and the least significant index digit
    assert g.states.labels == ("00", "10", "01", "11")
    assert g.generator_labels == ("e1", "e2")
    rep = graphs.validate(g)
    assert rep.ok
    assert rep.inverse_closed and rep.identity_free and rep.connected


def test_torus_binary_generators_are_involutions():
    g = graphs.build_torus(2, 3)
    for u in range(g.degree):
        img = g.images[u]
        np.testing.assert_array_equal(img[img], np.arange(g.size))
        assert g.generator_set.inverse_index[u] == u


def test_torus_m3_has_directional_generator_pairs():
    g = graphs.build_torus(3, 2)
    assert g.size == 9
    assert g.degree == 4
    assert g.generator_labels == ("+e1", "-e1", "+e2", "-e2")
    assert g.generator_set.inverse_index == (1, 0, 3, 2)
    # +e1 then -e1 is the identity
    fwd, bwd = g.images[0], g.images[1]
    np.testing.assert_array_equal(bwd[fwd], np.arange(9))


def test_torus_indexing_is_mixed_radix_coordinate1_least_significant():
    g = graphs.build_torus(3, 2)
    # state index 5 = 2 + 3*1 -> coordinates (2, 1) -> label "21"
    assert g.states.labels[5] == "21"
    # +e1 from (2,1) wraps to (0,1) = index 3
    assert graphs.apply_generator(g, 5, 0) == 3


def test_hypercube_alias():
    g = graphs.build_hypercube(3)
    h = graphs.build_torus(2, 3)
    assert g.states.labels == h.states.labels
    np.testing.assert_array_equal(g.images, h.images)


def test_johnson_states_and_action():
    g = graphs.build_johnson(4, 2)
    assert g.size == 6
    assert g.degree == 6
    # word labels ascend lexicographically with coordinate 1 leftmost
    assert g.states.labels[0] == "0011"
    labels = [lbl for lbl in g.states.labels]
    assert labels == sorted(labels)
    rep = graphs.validate(g)
    assert rep.ok
    # transposition (1 2) swaps the first two letters of the word
    u = g.generator_labels.index("(1 2)")
    idx = g.states.labels.index("1010")
    assert g.states.labels[g.images[u][idx]] == "0110"


def test_johnson_generators_are_involutions_and_include_fixed_points():
    g = graphs.build_johnson(5, 2)
    assert g.degree == 10
    for u in range(g.degree):
        img = g.images[u]
        np.testing.assert_array_equal(img[img], np.arange(g.size))
    # (4 5) fixes the word 11000
    u = g.generator_labels.index("(4 5)")
    idx = g.states.labels.index("11000")
    assert g.images[u][idx] == idx


def test_sym_lexicographic_states_and_right_action():
    g = graphs.build_transposition_cayley(4)
    assert g.size == 24
    assert g.degree == 6
    assert g.states.labels[0] == "1234"
    assert g.states.labels[-1] == "4321"
    # right multiplication by (1 2) swaps the entries in positions 1 and 2
    u = g.generator_labels.index("(1 2)")
    idx = g.states.labels.index("3142")
    assert g.states.labels[g.images[u][idx]] == "1342"
    assert graphs.validate(g).ok


def test_sym_size_validation():
    with pytest.raises(ValidationError):
        graphs.build_transposition_cayley(1)
    with pytest.raises(ValidationError):
        graphs.build_transposition_cayley(9)


def test_state_cap_enforced():
    with pytest.raises(SizeCapError):
        graphs.build_torus(2, 20, cap=1000)
    # explicit None lifts the cap decision to the caller
    g = graphs.build_torus(2, 11, cap=None)
    assert g.size == 2048


def test_custom_graph_build_and_auto_close():
    # 3-cycle: one rotation, auto-closed with its inverse
    rot = [1, 2, 0]
    g = graphs.build_custom(3, [rot], labels=["r"], auto_close_inverses=True)
    assert g.degree == 2
    assert g.generator_labels == ("r", "r^-1")
    assert g.generator_set.inverse_index == (1, 0)
    assert graphs.validate(g).ok


def test_custom_graph_rejects_identity_and_duplicates_and_non_permutations():
    with pytest.raises(ValidationError):
        graphs.build_custom(3, [[0, 1, 2]])
    with pytest.raises(ValidationError):
        graphs.build_custom(3, [[1, 0, 2], [1, 0, 2]])
    with pytest.raises(ValidationError):
        graphs.build_custom(3, [[0, 0, 2]])


def test_custom_graph_missing_inverse_detected():
    rot = [1, 2, 0]
    with pytest.raises(ValidationError):
        graphs.build_custom(3, [rot])


def test_validate_flags_disconnected_graph():
    # two 2-cycles on 4 states: involution (0 1)(2 3) alone is not transitive
    g = graphs.build_custom(4, [[1, 0, 3, 2]])
    rep = graphs.validate(g)
    assert not rep.connected
    assert not rep.ok
    assert any("connect" in msg.lower() for msg in rep.messages)


def test_graph_json_round_trip(tmp_path):
    g = graphs.build_custom(3, [[1, 2, 0]], labels=["r"], auto_close_inverses=True)
    doc = graphs.graph_to_json(g)
    path = tmp_path / "rot.json"
    path.write_text(json.dumps(doc))
    h = graphs.graph_from_json(str(path))
    assert h.size == g.size
    assert h.generator_labels == g.generator_labels
    np.testing.assert_array_equal(h.images, g.images)


def test_images_are_read_only():
    g = graphs.build_torus(2, 2)
    with pytest.raises(ValueError):
        g.images[0, 0] = 3
