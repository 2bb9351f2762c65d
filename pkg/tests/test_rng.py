"""Addressed random streams."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from declab.rng import PAC, REGRET, draw_index, stream


def test_streams_are_reproducible_and_distinct():
    a = stream(3, PAC, 0).random(5)
    assert np.array_equal(a, stream(3, PAC, 0).random(5))
    assert not np.array_equal(a, stream(3, PAC, 1).random(5))
    assert not np.array_equal(a, stream(3, REGRET, 0).random(5))
    assert not np.array_equal(a, stream(4, PAC, 0).random(5))


def test_negative_components_rejected():
    with pytest.raises(ValueError):
        stream(-1)
    with pytest.raises(ValueError):
        stream(1, -2)


@given(st.integers(0, 10**6))
def test_draw_index_skips_zero_mass(seed):
    probs = np.array([0.0, 0.3, 0.0, 0.7, 0.0])
    rng = stream(seed)
    for _ in range(20):
        assert draw_index(rng, probs) in (1, 3)


def test_draw_index_frequencies():
    from scipy.stats import chisquare

    probs = np.array([0.1, 0.2, 0.3, 0.4])
    rng = stream(0, 7)
    counts = np.bincount([draw_index(rng, probs) for _ in range(4000)], minlength=4)
    assert chisquare(counts, probs * 4000).pvalue > 1e-3
