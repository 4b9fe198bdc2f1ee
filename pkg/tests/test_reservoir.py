from __future__ import annotations

import numpy as np
import pytest
from pydantic import ValidationError

from tmfwc_bench.dsp.features import FeatureMatrix
from tmfwc_bench.errors import DimensionMismatch, EmptyTrajectory, SingularRescale
from tmfwc_bench.reservoir.esn import (
    DENSE_EIG_LIMIT,
    Reservoir,
    ReservoirParams,
    init_reservoir,
    power_iteration_radius,
    run_sequence,
    spectral_radius,
    update_state,
)


def test_same_seed_same_matrices():
    params = ReservoirParams(n_nodes=50)
    a = init_reservoir(params, 10)
    b = init_reservoir(params, 10)
    assert a.w.tobytes() == b.w.tobytes()
    assert a.w_in.tobytes() == b.w_in.tobytes()
    assert a.checksum() == b.checksum()
    assert init_reservoir(params.model_copy(update={"seed": 43}), 10).checksum() != a.checksum()


def test_matrices_are_read_only():
    r = init_reservoir(ReservoirParams(n_nodes=10, recurrent_density=1.0), 3)
    with pytest.raises(ValueError):
        r.w[0, 0] = 1.0


def test_single_node_reservoir():
    r = init_reservoir(ReservoirParams(n_nodes=1, recurrent_density=1.0, input_density=1.0), 2)
    assert abs(r.w[0, 0]) == pytest.approx(0.9, abs=1e-12)


def test_default_reservoir_radius_by_power_iteration():
    r = init_reservoir(ReservoirParams(n_nodes=200, seed=42), 10)
    assert r.w.shape == (200, 200)
    assert r.w_in.shape == (200, 10)
    assert power_iteration_radius(r.w) == pytest.approx(0.9, abs=1e-6)
    assert spectral_radius(r.w) == pytest.approx(0.9, abs=1e-9)


def test_large_reservoir_uses_sparse_eigensolver():
    r = init_reservoir(ReservoirParams(n_nodes=DENSE_EIG_LIMIT + 20, recurrent_density=0.02), 4)
    assert float(np.max(np.abs(np.linalg.eigvals(r.w)))) == pytest.approx(0.9, abs=1e-6)


def test_power_iteration_handles_complex_pairs():
    theta = 0.3
    rot = 0.7 * np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    assert power_iteration_radius(rot) == pytest.approx(0.7, abs=1e-7)
    assert power_iteration_radius(np.zeros((3, 3))) == 0.0


def test_all_zero_recurrent_matrix():
    with pytest.raises(SingularRescale):
        init_reservoir(ReservoirParams(n_nodes=2, recurrent_density=1e-9), 1)


@pytest.mark.parametrize(
    "update",
    [{"spectral_radius": 1.0}, {"spectral_radius": 0.0}, {"leak_rate": 0.0}, {"n_nodes": 0}],
)
def test_params_validation(update):
    with pytest.raises(ValidationError):
        ReservoirParams(**update)


def test_update_fixed_point_and_range():
    r = init_reservoir(ReservoirParams(n_nodes=30, leak_rate=1.0), 4)
    np.testing.assert_array_equal(update_state(r, np.zeros(30), np.zeros(4)), np.zeros(30))
    x = update_state(r, np.zeros(30), np.full(4, 100.0))
    assert np.all(np.abs(x) <= 1.0)


def test_full_leak_with_zero_recurrence_is_memoryless():
    base = init_reservoir(ReservoirParams(n_nodes=20, leak_rate=1.0, input_density=1.0), 3)
    r = Reservoir(w=np.zeros((20, 20)), w_in=base.w_in, params=base.params)
    u = np.array([0.2, -0.4, 0.9])
    x = update_state(r, np.random.default_rng(0).uniform(-1, 1, 20), u)
    np.testing.assert_allclose(x, np.tanh(base.w_in @ u))


def test_update_dimension_checks():
    r = init_reservoir(ReservoirParams(n_nodes=10), 3)
    with pytest.raises(DimensionMismatch):
        update_state(r, np.zeros(9), np.zeros(3))
    with pytest.raises(DimensionMismatch):
        update_state(r, np.zeros(10), np.zeros(2))


def test_run_sequence_single_row():
    r = init_reservoir(ReservoirParams(n_nodes=15), 2)
    s = run_sequence(r, np.array([[0.3, -0.1]]))
    np.testing.assert_array_equal(s.mean_state, s.final_state)
    assert s.dim == 30


def test_run_sequence_matches_update_law():
    r = init_reservoir(ReservoirParams(n_nodes=12), 2)
    feats = np.random.default_rng(1).uniform(0, 1, (7, 2))
    x = np.zeros(12)
    states = []
    for u in feats:
        x = update_state(r, x, u)
        states.append(x)
    s = run_sequence(r, FeatureMatrix(values=feats, column_names=("a", "b")))
    np.testing.assert_allclose(s.final_state, states[-1])
    np.testing.assert_allclose(s.mean_state, np.mean(states, axis=0))


def test_zero_features_give_zero_summary():
    r = init_reservoir(ReservoirParams(n_nodes=25), 5)
    s = run_sequence(r, np.zeros((40, 5)))
    assert not np.any(s.concatenated)


@pytest.mark.parametrize("radius", [0.5, 0.9, 0.95])
@pytest.mark.parametrize("seed", range(10))
def test_echo_state_forgets_initial_state(seed, radius):
    params = ReservoirParams(n_nodes=100, seed=seed, leak_rate=1.0, spectral_radius=radius)
    r = init_reservoir(params, 3)
    feats = np.random.default_rng(seed).uniform(0, 1, (500, 3))
    x0 = np.random.default_rng(seed + 100).uniform(-1, 1, 100)
    a = run_sequence(r, feats)
    b = run_sequence(r, feats, x0=x0)
    assert np.max(np.abs(a.final_state - b.final_state)) < 1e-6


def test_run_sequence_errors():
    r = init_reservoir(ReservoirParams(n_nodes=8), 3)
    with pytest.raises(DimensionMismatch):
        run_sequence(r, np.zeros((4, 2)))
    with pytest.raises(EmptyTrajectory):
        run_sequence(r, np.zeros((0, 3)))
    with pytest.raises(DimensionMismatch):
        run_sequence(r, np.zeros((4, 3)), x0=np.zeros(7))
