import itertools

import numpy as np
import pytest

from dbm import (
    ClampedHamiltonian,
    DbmTopology,
    DbmWeights,
    DimensionError,
    HamiltonianMismatchError,
    clamp,
    clamp_map,
    energy,
    hidden_energy,
    init_weights,
    mean_hamiltonian,
)
from dbm.energy_model import as_assignment


def test_topology_sizes_and_slices():
    topo = DbmTopology(n_state=3, n_action=2, hidden_layers=(4, 2))
    assert topo.n_hidden == 6
    assert topo.n_visible == 5
    assert topo.n_units == 11
    assert topo.layer_slices == [slice(3, 7), slice(7, 9)]
    assert topo.action_slice == slice(9, 11)
    np.testing.assert_array_equal(topo.visible_indices, [0, 1, 2, 9, 10])
    np.testing.assert_array_equal(topo.hidden_indices, np.arange(3, 9))


def test_edge_mask_connects_only_adjacent_layers():
    topo = DbmTopology(n_state=2, n_action=1, hidden_layers=(2, 2))
    mask = topo.edge_mask()
    assert not np.any(np.tril(mask))
    allowed = set(topo.edges())
    expected = {(i, j) for i in (0, 1) for j in (2, 3)}
    expected |= {(i, j) for i in (2, 3) for j in (4, 5)}
    expected |= {(i, 6) for i in (4, 5)}
    assert allowed == expected


def test_value_topology_has_no_action_edges():
    topo = DbmTopology(n_state=2, n_action=0, hidden_layers=(3,))
    assert topo.n_units == 5
    assert all(j < 5 for _, j in topo.edges())


@pytest.mark.parametrize("kwargs", [
    {"n_state": 0, "n_action": 1, "hidden_layers": (2,)},
    {"n_state": 2, "n_action": -1, "hidden_layers": (2,)},
    {"n_state": 2, "n_action": 1, "hidden_layers": ()},
    {"n_state": 2, "n_action": 1, "hidden_layers": (2, 0)},
])
def test_invalid_topology(kwargs):
    with pytest.raises(ValueError):
        DbmTopology(**kwargs)


def test_energy_matches_hand_computation():
    topo = DbmTopology(n_state=1, n_action=1, hidden_layers=(1,))
    couplings = np.zeros((3, 3))
    couplings[0, 1] = 0.5
    couplings[1, 2] = -2.0
    weights = DbmWeights(offset=0.25, biases=np.array([1.0, -1.0, 3.0]), couplings=couplings)
    assert energy(weights, topo, [1, 1, 1]) == pytest.approx(0.25 + 1.0 - 1.0 + 3.0 + 0.5 - 2.0)
    assert energy(weights, topo, [0, 0, 0]) == pytest.approx(0.25)
    assert energy(weights, topo, [1, 0, 1]) == pytest.approx(0.25 + 1.0 + 3.0)


def test_batched_energy_matches_single(make_dbm, rng):
    topo, weights = make_dbm(n_state=3, n_action=2, hidden=(2, 3), seed=5)
    stack = rng.integers(0, 2, size=(16, topo.n_units))
    batched = energy(weights, topo, stack)
    assert batched.shape == (16,)
    np.testing.assert_allclose(batched, [energy(weights, topo, u) for u in stack], rtol=0, atol=1e-12)


def test_energy_rejects_bad_assignments(make_dbm):
    topo, weights = make_dbm()
    with pytest.raises(DimensionError):
        energy(weights, topo, np.zeros(topo.n_units + 1))
    with pytest.raises(ValueError):
        energy(weights, topo, np.full(topo.n_units, 0.5))


def test_as_assignment_accepts_bool_and_int():
    out = as_assignment(np.array([True, False, True]), 3)
    assert out.dtype == np.int8
    np.testing.assert_array_equal(out, [1, 0, 1])


def test_validate_rejects_disallowed_coupling(make_dbm):
    topo, weights = make_dbm(n_state=2, n_action=1, hidden=(2,))
    couplings = weights.couplings.copy()
    couplings[0, 1] = 0.3  # state-state
    bad = DbmWeights(weights.offset, weights.biases, couplings, weights.beta)
    with pytest.raises(ValueError, match="edges"):
        bad.validate(topo)
    with pytest.raises(ValueError, match="beta"):
        DbmWeights(0.0, weights.biases, weights.couplings, beta=0.0).validate(topo)
    with pytest.raises(DimensionError):
        DbmWeights(0.0, weights.biases[:-1], weights.couplings).validate(topo)


def test_clamped_energy_equals_full_energy(make_dbm, rng):
    topo, weights = make_dbm(n_state=3, n_action=2, hidden=(2, 2), seed=11, scale=1.0)
    visible = rng.integers(0, 2, size=topo.n_visible)
    ch = clamp(weights, topo, visible)
    assert ch.layers == (2, 2)
    for h in itertools.product((0, 1), repeat=topo.n_hidden):
        u = np.empty(topo.n_units, dtype=np.int8)
        u[topo.visible_indices] = visible
        u[topo.hidden_indices] = h
        assert hidden_energy(ch, np.array(h)) == pytest.approx(energy(weights, topo, u), abs=1e-12)


def test_clamp_map_records_indices(make_dbm):
    topo, _ = make_dbm(n_state=2, n_action=2, hidden=(3,))
    cmap = clamp_map(topo, [1, 0, 0, 1])
    np.testing.assert_array_equal(cmap.visible_indices, [0, 1, 5, 6])
    np.testing.assert_array_equal(cmap.hidden_indices, [2, 3, 4])
    np.testing.assert_array_equal(cmap.values, [1, 0, 0, 1])
    with pytest.raises(DimensionError):
        clamp_map(topo, [1, 0, 0])


def test_mean_hamiltonian_is_fieldwise_mean(make_dbm):
    topo, weights = make_dbm(n_state=2, n_action=3, hidden=(2,), seed=3)
    hams = [clamp(weights, topo, [1, 0, *np.eye(3, dtype=int)[i]]) for i in range(3)]
    mean = mean_hamiltonian(hams)
    assert mean.constant == pytest.approx(np.mean([h.constant for h in hams]))
    np.testing.assert_allclose(mean.eff_bias, np.mean([h.eff_bias for h in hams], axis=0))
    np.testing.assert_allclose(mean.hidden_couplings, hams[0].hidden_couplings)
    h = np.array([1, 1])
    assert hidden_energy(mean, h) == pytest.approx(np.mean([hidden_energy(c, h) for c in hams]))


def test_mean_hamiltonian_rejects_mismatch():
    a = ClampedHamiltonian(0.0, np.zeros(2), np.zeros((2, 2)))
    b = ClampedHamiltonian(0.0, np.zeros(3), np.zeros((3, 3)))
    c = ClampedHamiltonian(0.0, np.zeros(2), np.zeros((2, 2)), beta=2.0)
    with pytest.raises(HamiltonianMismatchError):
        mean_hamiltonian([a, b])
    with pytest.raises(HamiltonianMismatchError):
        mean_hamiltonian([a, c])
    with pytest.raises(ValueError):
        mean_hamiltonian([])


def test_init_weights_is_deterministic_and_masked():
    topo = DbmTopology(n_state=4, n_action=2, hidden_layers=(3, 3))
    a = init_weights(topo, 42, scale=0.2)
    b = init_weights(topo, 42, scale=0.2)
    c = init_weights(topo, 43, scale=0.2)
    np.testing.assert_array_equal(a.couplings, b.couplings)
    np.testing.assert_array_equal(a.biases, b.biases)
    assert not np.array_equal(a.couplings, c.couplings)
    assert np.all(a.couplings[~topo.edge_mask()] == 0.0)
    assert np.all(np.abs(a.biases) <= 0.2)
    with pytest.raises(ValueError):
        init_weights(topo, 0, scale=0.0)
