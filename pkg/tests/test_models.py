"""Model types, generators and localization."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from declab.models import (
    UNBOUNDED,
    DecisionDistribution,
    FiniteModel,
    MixtureModel,
    ModelClass,
    best_decision,
    density_ratio_bound,
    flat_bandit,
    gap_vector,
    localize,
    make_mab,
    make_mab_class,
    make_random_class,
    make_revealing_class,
    make_revealing_model,
    mixture_of,
    suboptimality,
)


def test_decision_distribution_validation():
    with pytest.raises(ValueError):
        DecisionDistribution(np.array([0.5, 0.6]))
    with pytest.raises(ValueError):
        DecisionDistribution(np.array([1.5, -0.5]))
    d = DecisionDistribution.uniform(4)
    assert d.support() == (0, 1, 2, 3)
    assert DecisionDistribution.point_mass(3, 1) == DecisionDistribution(np.array([0.0, 1.0, 0.0]))


def test_finite_model_validation():
    with pytest.raises(ValueError):
        FiniteModel((0.0, 1.0), 0, np.array([[[0.5], [0.6]]]))
    with pytest.raises(ValueError):
        FiniteModel((1.0, 0.0), 0, np.array([[[0.5], [0.5]]]))
    with pytest.raises(ValueError):
        FiniteModel((0.0, 2.0), 0, np.array([[[0.5], [0.5]]]))
    with pytest.raises(ValueError):
        FiniteModel((0.0, 1.0), 0, np.ones((1, 3, 1)) / 3)


def test_kernel_is_read_only():
    m = make_mab([0.3, 0.7])
    with pytest.raises(ValueError):
        m.kernel[0, 0, 0] = 1.0


def test_mab_class_layout():
    cls = make_mab_class(0.2, 3)
    assert len(cls) == 3 and cls.decision_count == 3
    np.testing.assert_allclose(cls.means(), 0.5 + 0.2 * np.eye(3))
    assert cls.labels == ("arm0", "arm1", "arm2")
    assert best_decision(cls[1]) == (1, pytest.approx(0.7))
    np.testing.assert_allclose(gap_vector(cls[1]), [0.2, 0.0, 0.2])
    assert suboptimality(cls[1], DecisionDistribution.uniform(3)) == pytest.approx(0.4 / 3)


def test_class_requires_shared_spaces():
    with pytest.raises(ValueError):
        ModelClass((make_mab([0.5, 0.5]), make_mab([0.5])))
    with pytest.raises(ValueError):
        ModelClass(())


def test_revealing_model_observation_law():
    m = make_revealing_model(0.25, 0.5, 2, 0)
    reveal = m.kernel[2]
    support = m.reward_support
    zero = support.index(0.0)
    assert reveal[zero, 1] == pytest.approx(0.5)
    assert reveal[zero, 0] == pytest.approx(0.5)
    assert reveal.sum() == pytest.approx(1.0)
    np.testing.assert_allclose(m.means, [0.75, 0.5, 0.0])


def test_revealing_class_uninformative_member():
    cls = make_revealing_class(0.5, 0.25, 4)
    assert len(cls) == 5
    last = cls[4]
    np.testing.assert_allclose(last.means[:4], 0.5)
    np.testing.assert_allclose(last.kernel[4].sum(axis=0)[1:], 0.25 / 4)
    assert len(make_revealing_class(0.5, 0.25, 4, include_uninformative=False)) == 4


def test_mixture_materialize():
    cls = make_mab_class(0.2, 2)
    mix = mixture_of(cls, [0.25, 0.75])
    np.testing.assert_allclose(mix.means, [0.55, 0.65])
    assert mixture_of(cls, [0.0, 1.0]) is cls[1]
    with pytest.raises(ValueError):
        MixtureModel(cls, np.array([0.5, 0.6]))


def test_density_ratio():
    assert density_ratio_bound(make_mab_class(0.2, 2)) == pytest.approx(max(0.7 / 0.5, math.e))
    assert density_ratio_bound(make_mab_class(0.25, 2)) == pytest.approx(math.e)
    assert density_ratio_bound(make_revealing_class(0.5, 0.25, 3)) is UNBOUNDED
    cls = ModelClass((make_mab([0.01]), make_mab([0.5])))
    assert density_ratio_bound(cls) == pytest.approx(50.0)


@pytest.mark.parametrize(
    "mode, alpha, expected",
    [
        ("one_sided", 0.0, (1, 2)),
        ("one_sided", 0.05, (0, 1, 2)),
        ("ref_gap", 0.0, (0, 2)),
        ("ref_gap", 0.05, (0, 1, 2)),
        ("two_sided", 0.0, (2,)),
        ("two_sided", 0.05, (0, 1, 2)),
    ],
)
def test_localize_modes(mode, alpha, expected):
    # The reference's best arm is 0 with value 0.55.
    cls = ModelClass((make_mab([0.6, 0.5]), make_mab([0.5, 0.55]), make_mab([0.55, 0.5])))
    ref = make_mab([0.55, 0.5])
    sub, idx = localize(cls, ref, alpha, mode)
    assert idx == expected
    assert len(sub) == len(expected)


def test_localize_one_sided_threshold():
    cls = ModelClass((make_mab([0.6, 0.5]), make_mab([0.5, 0.5])))
    ref = make_mab([0.55, 0.5])
    assert localize(cls, ref, 0.0)[1] == (1,)
    assert localize(cls, ref, 0.05)[1] == (0, 1)
    assert localize(cls, make_mab([0.3, 0.3]), 0.0) == (None, ())
    with pytest.raises(ValueError):
        localize(cls, ref, 0.1, "sideways")


def test_random_class_deterministic():
    a = make_random_class(7, 3, 4, obs_count=2)
    b = make_random_class(7, 3, 4, obs_count=2)
    c = make_random_class(8, 3, 4, obs_count=2)
    assert np.array_equal(a.kernels, b.kernels)
    assert not np.array_equal(a.kernels, c.kernels)


@given(st.integers(0, 10**6), st.integers(1, 5), st.integers(1, 6))
def test_random_class_kernels_are_pmfs(seed, decisions, models):
    cls = make_random_class(seed, decisions, models)
    np.testing.assert_allclose(cls.flat_kernels().sum(axis=2), 1.0)
    gaps = np.array([gap_vector(m) for m in cls])
    assert np.all(gaps >= 0) and np.allclose(gaps.min(axis=1), 0.0)


def test_flat_bandit():
    np.testing.assert_allclose(flat_bandit(3, 0.4).means, [0.4] * 3)
