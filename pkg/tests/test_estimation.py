"""Exponential-weights oracle, error accounting and online-to-batch."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from declab.divergence import hellinger_rows
from declab.e2d import Environment
from declab.estimation import (
    EstimationError,
    ExpWeightsOracle,
    batch_error_check,
    est_error,
    online_to_batch,
    oracle_init,
    oracle_predict,
    oracle_update,
    trace_rows,
)
from declab.models import MixtureModel, make_mab, make_mab_class, make_random_class, make_revealing_class
from declab.rng import stream


def test_initial_prediction_is_uniform():
    cls = make_mab_class(0.2, 3)
    mix = oracle_predict(oracle_init(cls))
    np.testing.assert_allclose(mix.weights, 1 / 3)


def test_posterior_after_one_observation():
    cls = make_mab_class(0.2, 2)
    state = oracle_update(oracle_init(cls), 0, 1.0, 0)
    # Likelihoods 0.7 and 0.5 of reward 1 on arm 0.
    np.testing.assert_allclose(state.weights, [0.7 / 1.2, 0.5 / 1.2])
    assert trace_rows(state) == [(1, 0, 1, 0, 0, 0.0)]


def test_constraint_subset_keeps_zero_weight():
    cls = make_mab_class(0.2, 3)
    state = oracle_init(cls, [2, 0])
    assert state.subset == (0, 2)
    np.testing.assert_allclose(state.weights, [0.5, 0.0, 0.5])
    state.update(1, 1.0, 0)
    assert state.weights[1] == 0.0
    with pytest.raises(ValueError):
        oracle_init(cls, [])
    with pytest.raises(ValueError):
        oracle_init(cls, [5])


def test_impossible_outcome_and_bad_inputs():
    cls = make_revealing_class(0.5, 0.25, 2, include_uninformative=False)
    state = oracle_init(cls)
    with pytest.raises(EstimationError):
        state.update(0, 0.3, 0)
    with pytest.raises(EstimationError):
        state.update(9, 0.5, 0)
    with pytest.raises(EstimationError):
        state.update(0, 0.5, 7)
    # Reward 1/2 + alpha on arm 0 rules out the model rewarding arm 1 ...
    state.update(0, 1.0, 0)
    assert state.weights[1] == 0.0
    # ... and reward 1/2 on arm 0 is impossible under the model rewarding arm 0.
    with pytest.raises(EstimationError):
        state.update(0, 0.5, 0)


def test_deterministic_classes_identify_truth():
    cls = make_revealing_class(0.5, 0.5, 3, include_uninformative=False)
    state = oracle_init(cls)
    state.update(2, 1.0, 0)
    np.testing.assert_allclose(state.weights, [0, 0, 1])


def _run(cls, truth_index, horizon, seed):
    truth = cls[truth_index]
    state = ExpWeightsOracle(cls, truth=truth)
    env = Environment(truth)
    rng = stream(seed, 99)
    dist = np.full(cls.decision_count, 1 / cls.decision_count)
    preds = []
    for _ in range(horizon):
        preds.append(state.predict())
        decision, outcome, reward, obs = env.step(dist, rng)
        state.update(decision, reward, obs, dist)
    return state, preds, dist


def test_running_error_matches_recomputation():
    cls = make_random_class(5, 3, 4, obs_count=2)
    state, preds, dist = _run(cls, 1, 60, 0)
    assert state.est_running == pytest.approx(est_error(preds, cls[1], [dist] * 60), rel=1e-12)
    assert state.trace[-1].est_running == state.est_running


def test_mean_error_below_log_class_size():
    cls = make_random_class(2, 2, 5)
    errors = [_run(cls, s % 5, 200, s)[0].est_running for s in range(40)]
    # Expected cumulative squared Hellinger error is at most the expected
    # cumulative log loss regret, which is at most log |M|.
    assert np.mean(errors) <= math.log(5)


@given(st.integers(0, 10**6), st.integers(1, 20))
def test_online_to_batch_convexity(seed, count):
    cls = make_random_class(seed, 3, 4)
    rng = np.random.default_rng(seed)
    ests = [MixtureModel(cls, rng.dirichlet(np.ones(4))) for _ in range(count)]
    dist = rng.dirichlet(np.ones(3))
    averaged, mean = batch_error_check(ests, cls[0], dist)
    assert averaged <= mean + 1e-12
    avg = online_to_batch(ests)
    np.testing.assert_allclose(avg.weights, np.mean([e.weights for e in ests], axis=0))
    direct = float(hellinger_rows(cls[0].flat(), avg.materialize().flat()) @ dist)
    assert averaged == pytest.approx(direct, abs=1e-12)


def test_online_to_batch_errors():
    with pytest.raises(ValueError):
        online_to_batch([])
    a = MixtureModel(make_mab_class(0.2, 2), np.array([0.5, 0.5]))
    b = MixtureModel(make_mab_class(0.3, 2), np.array([0.5, 0.5]))
    with pytest.raises(ValueError):
        online_to_batch([a, b])
    with pytest.raises(ValueError):
        est_error([a], make_mab([0.5, 0.5]), [])
