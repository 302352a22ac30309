"""
Tests for the energy network, its InfoNCE trainer and the sampling argmin.
"""

import json
import math

import numpy as np
import pytest

from src.models import (
    MatchConfig,
    MissingArtifactError,
    SamplerConfig,
    SchemaVersionError,
    TrainConfig,
)
from src.planning import plan_shot_records
from src.policy import (
    EnergyModelParams,
    Layer,
    TrainingError,
    batch_energy,
    dfo_argmin,
    ebm_energy,
    ebm_grad,
    ebm_infer,
    ebm_train,
    evaluate_policy,
    info_nce_loss,
    lipschitz_bound,
    load_ebm,
    save_ebm,
)

STATE = np.array([-0.4, 0.1, 0.2, -0.1])


def _random_params(hidden=8, seed=0):
    return EnergyModelParams.initialize(np.random.default_rng(seed), hidden)


def test_zero_network_has_zero_energy():
    params = EnergyModelParams.zeros(hidden=16)
    assert ebm_energy(params, STATE, 0.3) == 0.0
    np.testing.assert_array_equal(batch_energy(params, STATE, [-1.0, 0.0, 1.0]), 0.0)


def test_energy_is_deterministic_and_lipschitz():
    params = _random_params()
    assert ebm_energy(params, STATE, 0.2) == ebm_energy(params, STATE, 0.2)
    bound = lipschitz_bound(params)
    for a in np.linspace(-1.5, 1.5, 7):
        delta = abs(ebm_energy(params, STATE, a + 1e-6) - ebm_energy(params, STATE, a))
        assert delta <= bound * 1e-6 + 1e-12


def test_params_validate_shapes():
    with pytest.raises(ValueError):
        EnergyModelParams([Layer(np.zeros((5, 4)), np.zeros(4))], EnergyModelParams.zeros().normalization)
    bad = EnergyModelParams.zeros(hidden=4).layers
    bad[1] = Layer(bad[1].W, np.zeros(3))
    with pytest.raises(ValueError):
        EnergyModelParams(bad, EnergyModelParams.zeros().normalization)


def test_constant_energy_loss_counts_candidates():
    params = EnergyModelParams.zeros(hidden=4)
    states = np.tile(STATE, (3, 1))
    positives = np.zeros(3)
    n = 10
    negatives = np.random.default_rng(1).uniform(-1, 1, (3, n))
    loss = info_nce_loss(params, states, positives, negatives)
    assert loss == pytest.approx(math.log(n + 1), abs=1e-12)

    doubled = info_nce_loss(params, states, positives, np.concatenate([negatives, negatives], axis=1))
    assert doubled - loss == pytest.approx(math.log((2 * n + 1) / (n + 1)), abs=1e-12)

    grad_loss, _ = ebm_grad(params, states, positives, negatives)
    assert grad_loss == pytest.approx(loss)


def test_gradient_matches_finite_differences():
    params = _random_params(hidden=4, seed=2)
    rng = np.random.default_rng(3)
    states = rng.normal(size=(3, 4)) * 0.3
    positives = rng.uniform(-1.5, 1.5, 3)
    negatives = rng.uniform(-1.5, 1.5, (3, 5))
    _, grads = ebm_grad(params, states, positives, negatives)

    h = 1e-5
    for array, grad in zip(params.arrays(), grads):
        numeric = np.zeros_like(array)
        for idx in np.ndindex(array.shape):
            orig = array[idx]
            array[idx] = orig + h
            up = info_nce_loss(params, states, positives, negatives)
            array[idx] = orig - h
            down = info_nce_loss(params, states, positives, negatives)
            array[idx] = orig
            numeric[idx] = (up - down) / (2 * h)
        np.testing.assert_allclose(grad, numeric, rtol=1e-4, atol=1e-8)


def test_empty_negatives_rejected():
    params = _random_params()
    with pytest.raises(ValueError):
        ebm_grad(params, STATE[None], [0.0], np.zeros((1, 0)))


def test_training_lowers_loss_and_is_deterministic():
    rng = np.random.default_rng(5)
    states = np.column_stack([
        rng.uniform(-0.9, -0.2, 40),
        rng.uniform(-0.4, 0.4, 40),
        rng.normal(0, 0.1, 40),
        rng.normal(0, 0.1, 40),
    ])
    angles = -0.5 * states[:, 1]
    config = TrainConfig(hidden=16, steps=300, batch_size=16, n_negatives=32, learning_rate=3e-3)
    a = ebm_train(states, angles, config)
    b = ebm_train(states, angles, config)
    assert len(a.loss_curve) == 300
    assert np.mean(a.loss_curve[-20:]) < np.mean(a.loss_curve[:20])
    for x, y in zip(a.arrays(), b.arrays()):
        np.testing.assert_array_equal(x, y)


def test_training_rejects_bad_datasets():
    with pytest.raises(TrainingError, match="empty"):
        ebm_train(np.zeros((0, 4)), np.zeros(0))
    with pytest.raises(TrainingError):
        ebm_train(np.zeros((3, 4)), np.zeros(2))


@pytest.mark.slow
def test_training_recovers_single_demonstration():
    config = TrainConfig(steps=2000)
    params = ebm_train(STATE[None], [0.3], config)
    assert ebm_infer(params, STATE) == pytest.approx(0.3, abs=0.05)


def test_sampler_finds_quadratic_minimum():
    a = dfo_argmin(lambda x: (x - 0.4) ** 2, SamplerConfig(), np.random.default_rng(0))
    assert a == pytest.approx(0.4, abs=0.01)


def test_sampler_is_seed_determined_and_bounded():
    config = SamplerConfig()
    flat = lambda x: np.zeros_like(x)  # noqa: E731
    a = dfo_argmin(flat, config, np.random.default_rng(8))
    b = dfo_argmin(flat, config, np.random.default_rng(8))
    assert a == b
    lo, hi = config.angle_bounds
    params = _random_params(seed=4)
    for seed in range(5):
        assert lo <= ebm_infer(params, STATE, config, np.random.default_rng(seed)) <= hi


def test_output_bias_shift_keeps_argmin():
    params = _random_params(seed=6)
    shifted = params.copy()
    shifted.layers[2].b[0] += 4.0
    a = ebm_infer(params, STATE, rng=np.random.default_rng(1))
    b = ebm_infer(shifted, STATE, rng=np.random.default_rng(1))
    assert a == b


def test_save_and_load_are_bit_identical(tmp_path):
    params = _random_params(hidden=12, seed=7)
    path = save_ebm(params, tmp_path / "ebm.json")
    loaded = load_ebm(path)
    for a in np.linspace(-1.5, 1.5, 9):
        assert ebm_energy(loaded, STATE, a) == ebm_energy(params, STATE, a)
    assert loaded.normalization == params.normalization


def test_load_errors(tmp_path):
    with pytest.raises(MissingArtifactError, match="train-ebm"):
        load_ebm(tmp_path / "ebm.json")
    path = save_ebm(_random_params(), tmp_path / "ebm.json")
    data = json.loads(path.read_text())
    data["version"] = 0
    path.write_text(json.dumps(data))
    with pytest.raises(SchemaVersionError):
        load_ebm(path)


def test_evaluate_policy_reports_errors():
    params = _random_params(seed=9)
    states = np.tile(STATE, (4, 1))
    report = evaluate_policy(params, states, np.zeros(4))
    assert report["n"] == 4
    assert 0.0 <= report["median_error"] <= report["p95_error"] <= math.pi
    assert evaluate_policy(params, np.zeros((0, 4)), np.zeros(0))["n"] == 0


@pytest.mark.slow
def test_trained_policy_clones_the_planner(model):
    config = MatchConfig()
    records = plan_shot_records(5500, np.random.default_rng(21), model, config)
    states = np.array([r["puck_state"] for r in records])
    angles = np.array([r["angle"] for r in records])
    held_out = 500
    params = ebm_train(states[:-held_out], angles[:-held_out], config.train, config.sim.geometry)
    report = evaluate_policy(params, states[-held_out:], angles[-held_out:], config.sampler)
    assert report["n"] == held_out
    assert report["median_error"] < 0.05
