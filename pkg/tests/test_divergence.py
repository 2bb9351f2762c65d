"""Hellinger and total-variation distances and the transcript comparison."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import load_frozen

from declab.divergence import (
    DivergenceValue,
    all_histories,
    decision_divergences,
    divergence_matrix,
    expected_hellinger_sq,
    hellinger_sq,
    in_ball,
    randomized_divergence_matrix,
    tv,
    tv_ub_check,
)
from declab.models import DecisionDistribution, make_mab, make_mab_class, make_random_class

FROZEN = load_frozen()

pmf_pairs = st.integers(2, 6).flatmap(
    lambda k: st.tuples(
        st.lists(st.floats(0, 1), min_size=k, max_size=k).filter(lambda v: sum(v) > 1e-3),
        st.lists(st.floats(0, 1), min_size=k, max_size=k).filter(lambda v: sum(v) > 1e-3),
    )
)


def _normalize(v):
    v = np.asarray(v, dtype=float)
    return v / v.sum()


def test_bernoulli_value_matches_frozen():
    assert hellinger_sq([0.5, 0.5], [0.4, 0.6]) == pytest.approx(FROZEN["hellinger_ber05_ber06"], abs=1e-15)
    assert hellinger_sq([0.5, 0.5], [0.4, 0.6]) == pytest.approx(0.0101277, abs=1e-7)


def test_mab2_expected_value_matches_frozen():
    a, b = make_mab([0.7, 0.5]), make_mab([0.5, 0.5])
    value = expected_hellinger_sq(a, b, DecisionDistribution.uniform(2))
    assert value == pytest.approx(FROZEN["mab2_uniform_expected_hellinger"], abs=1e-15)


def test_extremes():
    assert hellinger_sq([1, 0], [0, 1]) == 2.0
    assert tv([1, 0], [0, 1]) == 1.0
    assert hellinger_sq([0.3, 0.7], [0.3, 0.7]) == 0.0


def test_invalid_inputs():
    with pytest.raises(ValueError):
        hellinger_sq([0.5, 0.5], [0.5, 0.25, 0.25])
    with pytest.raises(ValueError):
        tv([0.5, 0.6], [0.5, 0.5])
    with pytest.raises(ValueError):
        DivergenceValue(2.5, "hellinger_sq")
    with pytest.raises(ValueError):
        DivergenceValue(0.1, "kl")


@given(pmf_pairs)
def test_tv_bounded_by_hellinger(pair):
    a, b = map(_normalize, pair)
    h = hellinger_sq(a, b)
    t = tv(a, b)
    assert 0.0 <= h <= 2.0 and 0.0 <= t <= 1.0
    assert h / 2 <= t + 1e-12
    assert t <= math.sqrt(h) + 1e-12
    assert hellinger_sq(a, b) == pytest.approx(hellinger_sq(b, a), abs=1e-15)


@given(pmf_pairs, st.integers(0, 10**6))
def test_hellinger_triangle(pair, seed):
    a, b = map(_normalize, pair)
    c = np.random.default_rng(seed).dirichlet(np.ones(a.size))
    assert math.sqrt(hellinger_sq(a, c)) <= math.sqrt(hellinger_sq(a, b)) + math.sqrt(hellinger_sq(b, c)) + 1e-12


@given(pmf_pairs, st.integers(0, 10**6), st.floats(0, 1))
def test_hellinger_jointly_convex(pair, seed, w):
    a, b = map(_normalize, pair)
    rng = np.random.default_rng(seed)
    c, d = rng.dirichlet(np.ones(a.size), size=2)
    left = hellinger_sq(w * a + (1 - w) * c, w * b + (1 - w) * d)
    assert left <= w * hellinger_sq(a, b) + (1 - w) * hellinger_sq(c, d) + 1e-12


def test_matrix_builders_agree_with_scalar():
    cls = make_random_class(3, 4, 5, obs_count=2)
    ref = cls[2]
    H = divergence_matrix(cls, ref)
    for m, model in enumerate(cls):
        for pi in range(cls.decision_count):
            assert H[m, pi] == pytest.approx(hellinger_sq(model.flat()[pi], ref.flat()[pi]), abs=1e-14)
        np.testing.assert_array_equal(H[m], decision_divergences(model, ref))
    assert np.all(H[2] == 0)


def test_randomized_matrix_is_weighted_average():
    cls = make_random_class(4, 3, 4)
    nu = np.array([0.1, 0.2, 0.3, 0.4])
    R = randomized_divergence_matrix(cls, nu)
    expected = sum(w * divergence_matrix(cls, cls[j]) for j, w in enumerate(nu))
    np.testing.assert_allclose(R, expected, atol=1e-14)
    with pytest.raises(ValueError):
        randomized_divergence_matrix(cls, nu[:3])


def test_in_ball_boundary():
    a, b = make_mab([0.7, 0.5]), make_mab([0.5, 0.5])
    p = DecisionDistribution.uniform(2)
    r = math.sqrt(expected_hellinger_sq(a, b, p))
    assert in_ball(a, b, p, r)
    assert not in_ball(a, b, p, r * (1 - 1e-6))


def test_transcript_divergence_matches_frozen_enumeration():
    a, b = make_mab([0.7, 0.5]), make_mab([0.5, 0.5])
    report = tv_ub_check(lambda h: np.array([0.5, 0.5]), a, b, 3)
    assert report.transcript_hellinger_sq == pytest.approx(FROZEN["transcript_hellinger_mab2_T3_uniform"], abs=1e-13)
    assert report.per_round_hellinger_sq == pytest.approx(FROZEN["per_round_hellinger_mab2_uniform"], abs=1e-15)
    assert report.holds
    assert report.log_factor_proof == 256 * report.log_factor_statement


def _greedy_policy(history):
    # Adaptive: after a reward of 1 on an arm keep playing it, else switch.
    if not history:
        return np.array([0.5, 0.5])
    pi, outcome = history[-1]
    p = np.full(2, 0.1)
    p[pi if outcome == 1 else 1 - pi] = 0.9
    return p


@pytest.mark.parametrize("horizon", [1, 2, 4])
@pytest.mark.parametrize("means", [(0.9, 0.5), (0.5, 0.1), (0.3, 0.6)])
def test_chain_rule_adaptive_policy(horizon, means):
    ref = make_mab([0.5, 0.5])
    report = tv_ub_check(_greedy_policy, make_mab(means), ref, horizon, ratio_class=make_mab_class(0.4, 2))
    assert report.holds
    assert report.transcript_hellinger_sq <= 2.0


def test_statement_factor_alone_can_fail():
    # Without a constant the log factor is too small for this adaptive policy.
    report = tv_ub_check(_greedy_policy, make_mab((0.9, 0.5)), make_mab([0.5, 0.5]), 2)
    assert report.holds
    assert not report.holds_statement
    assert report.slack_statement == pytest.approx(-0.0133126, abs=1e-6)


def test_chain_rule_brute_force_transcript():
    a, b = make_mab([0.9, 0.2]), make_mab([0.4, 0.5])
    horizon = 3
    total = 0.0
    for hist in all_histories(2, 2, horizon):
        pa = pb = 1.0
        for t, (pi, o) in enumerate(hist):
            dist = _greedy_policy(tuple(hist[:t]))
            pa *= dist[pi] * a.flat()[pi, o]
            pb *= dist[pi] * b.flat()[pi, o]
        total += (math.sqrt(pa) - math.sqrt(pb)) ** 2
    report = tv_ub_check(_greedy_policy, a, b, horizon)
    assert report.transcript_hellinger_sq == pytest.approx(total, abs=1e-13)


def test_enumeration_limit():
    cls = make_random_class(0, 5, 2, obs_count=4)
    with pytest.raises(ValueError):
        tv_ub_check(lambda h: np.full(5, 0.2), cls[0], cls[1], 8)
    assert sum(1 for _ in all_histories(2, 2, 2)) == 16
    assert list(itertools.islice(all_histories(1, 1, 1), 2)) == [((0, 0),)]


def test_documented_simple_values():
    assert tv([0.5, 0.5], [0.3, 0.7]) == pytest.approx(0.2)
    assert hellinger_sq([0.5, 0.5], [0.5, 0.5]) == 0.0
    point = DecisionDistribution.point_mass(2, 0)
    a, b = make_mab([0.7, 0.5]), make_mab([0.5, 0.5])
    assert expected_hellinger_sq(a, b, point) == pytest.approx(hellinger_sq([0.3, 0.7], [0.5, 0.5]), abs=1e-15)
