"""DEC solvers against brute-force grid oracles and structural properties."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import (
    grid_constrained_pac,
    grid_constrained_regret,
    grid_game_value,
    grid_offset_pac,
    grid_offset_regret,
    load_frozen,
)

from declab.dec import (
    GAMMA_GRID,
    MARGIN,
    DecProfile,
    DecValue,
    HullGrid,
    adversary_matrices,
    bayesian_offset_dec,
    constrained_dec,
    constrained_from_matrices,
    dec_profile,
    gap_matrix,
    hull_sup_dec,
    hull_sup_offset,
    lagrangian_bound,
    offset_dec,
    randomized_dec,
    regularity_check,
    simplex_grid,
    solve_game,
)
from declab.divergence import divergence_matrix
from declab.models import ModelClass, flat_bandit, make_mab_class, make_random_class, mixture_of

FROZEN = load_frozen()
# Distance from a grid point to the nearest optimum times the largest payoff slope.
GRID_TOL = 2e-3


def _valid_pmf(d):
    return d is None or (np.all(d.probs >= 0) and abs(d.probs.sum() - 1) < 1e-12)


def _check_shape(dec: DecValue):
    assert dec.lower <= dec.value + 1e-12 <= dec.upper + 2e-12
    assert _valid_pmf(dec.witness_p) and _valid_pmf(dec.witness_q)


# ---------------------------------------------------------------------------
# Frozen brute-force values
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("gamma", [1.0, 2.0, 10.0])
def test_offset_mab2_against_frozen_grid(gamma):
    cls = make_mab_class(0.2, 2)
    reg = offset_dec(cls, cls[0], gamma)
    pac = offset_dec(cls, cls[0], gamma, "pac")
    _check_shape(reg)
    assert reg.value <= FROZEN[f"offset_regret_mab2_gamma{gamma:g}"] + 1e-9
    assert reg.value == pytest.approx(FROZEN[f"offset_regret_mab2_gamma{gamma:g}"], abs=GRID_TOL)
    assert pac.value <= FROZEN[f"offset_pac_mab2_gamma{gamma:g}"] + 1e-9
    assert pac.value == pytest.approx(FROZEN[f"offset_pac_mab2_gamma{gamma:g}"], abs=GRID_TOL)


@pytest.mark.parametrize("arms", [2, 3])
@pytest.mark.parametrize("eps", [0.05, 0.1, 0.2])
@pytest.mark.parametrize("ref_name", ["flat", "mixture"])
def test_constrained_mab_against_frozen_grid(arms, eps, ref_name):
    cls = make_mab_class(eps * math.sqrt(arms), arms)
    ref = flat_bandit(arms) if ref_name == "flat" else mixture_of(cls, np.full(arms, 1 / arms))
    key = f"A{arms}_eps{eps:g}_{ref_name}"
    for kind in ("regret", "pac"):
        dec = constrained_dec(cls, ref, eps, kind)
        _check_shape(dec)
        frozen = FROZEN[f"constrained_{kind}_{key}"]
        assert dec.lower <= frozen + 1e-9
        assert dec.value == pytest.approx(frozen, abs=GRID_TOL)
    if ref_name == "mixture":
        dec = constrained_dec(cls, ref, eps, include_ref=True)
        assert dec.value == pytest.approx(FROZEN[f"constrained_regret_{key}_include"], abs=GRID_TOL)


def test_flat_reference_is_empty_ball_without_hull():
    # Every arm model is too far from the flat reference under every p.
    cls = make_mab_class(0.1 * math.sqrt(2), 2)
    dec = constrained_dec(cls, flat_bandit(2), 0.1)
    assert dec.value == 0.0 and dec.active_set == ()


def test_randomized_uniform_prior_against_frozen_grid():
    cls = make_mab_class(0.3, 3)
    dec = randomized_dec(cls, np.full(3, 1 / 3), 8.0)
    frozen = FROZEN["randomized_offset_uniform_mab3_gamma8"]
    assert dec.value <= frozen + 1e-9
    assert dec.value == pytest.approx(frozen, abs=GRID_TOL)
    assert dec.variant == "randomized-regret_offset"


# ---------------------------------------------------------------------------
# Random instances against grid oracles computed on the fly
# ---------------------------------------------------------------------------


def _random_pair(seed, decisions=2):
    rng = np.random.default_rng(seed)
    cls = make_random_class(seed, decisions, int(rng.integers(1, 6)))
    ref = mixture_of(cls, rng.dirichlet(np.ones(len(cls))))
    return cls, ref, rng


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([0.5, 2.0, 8.0, 32.0]))
def test_offset_regret_matches_grid(seed, gamma):
    cls, ref, _ = _random_pair(seed)
    G, H = adversary_matrices(cls, ref)
    dec = offset_dec(cls, ref, gamma)
    grid = grid_offset_regret(G, H, gamma, 2000)
    assert dec.value <= grid + 1e-9
    slope = np.abs(G - gamma * H).max() * 2
    assert dec.value >= grid - slope / 2000 - 1e-9


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([0.5, 2.0, 8.0]))
def test_offset_pac_matches_grid(seed, gamma):
    cls, ref, _ = _random_pair(seed)
    G, H = adversary_matrices(cls, ref)
    dec = offset_dec(cls, ref, gamma, "pac")
    grid = grid_offset_pac(G, H, gamma, 200)
    slope = (np.abs(G).max() + gamma * np.abs(H).max()) * 2
    assert dec.value <= grid + 1e-9
    assert dec.value >= grid - slope / 200 - 1e-9


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([0.1, 0.2, 0.3, 0.5, 0.8]))
def test_constrained_regret_lower_bound_below_grid(seed, eps):
    cls, ref, _ = _random_pair(seed)
    G, H = adversary_matrices(cls, ref)
    dec = constrained_dec(cls, ref, eps)
    _check_shape(dec)
    # The grid minimizes over a subset of the simplex.
    assert dec.lower <= grid_constrained_regret(G, H, eps, 2000) + 1e-9


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([0.1, 0.3, 0.5, 0.8]))
def test_constrained_pac_lower_bound_below_grid(seed, eps):
    cls, ref, _ = _random_pair(seed)
    G, H = adversary_matrices(cls, ref)
    dec = constrained_dec(cls, ref, eps, "pac")
    _check_shape(dec)
    assert dec.lower <= grid_constrained_pac(G, H, eps, 100) + 1e-9


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_constrained_value_is_attained_by_witness(seed):
    cls, ref, rng = _random_pair(seed, decisions=3)
    eps = float(rng.choice([0.2, 0.4, 0.7]))
    G, H = adversary_matrices(cls, ref)
    dec = constrained_dec(cls, ref, eps)
    p = dec.witness_p.probs
    # Models at distance eps^2 + MARGIN or more are excluded by the margin solve.
    inside = H @ p < eps * eps + MARGIN - 1e-13
    achieved = float((G @ p)[inside].max()) if inside.any() else 0.0
    assert achieved <= dec.upper + 1e-7


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 4), st.integers(2, 4))
def test_game_value_matches_grid(seed, rows, cols):
    payoff = np.random.default_rng(seed).uniform(-1, 1, size=(rows, cols))
    value, p = solve_game(payoff)
    assert abs(p.sum() - 1) < 1e-12 and np.all(p >= 0)
    assert float(np.max(payoff @ p)) == pytest.approx(value, abs=1e-9)
    assert value <= grid_game_value(payoff, 60 if cols > 3 else 400) + 1e-9


# ---------------------------------------------------------------------------
# Structural properties
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("seed", range(20))
def test_minimax_swap(seed):
    cls, ref, _ = _random_pair(seed, decisions=3)
    for gamma in (0.5, 2.0, 8.0, 32.0):
        primal = offset_dec(cls, ref, gamma).value
        dual = bayesian_offset_dec(cls, ref, gamma)
        assert dual.value == pytest.approx(primal, abs=1e-7)
        assert dual.prior is not None and abs(dual.prior.sum() - 1) < 1e-9


@pytest.mark.parametrize("seed", range(15))
def test_pac_at_most_regret_and_greedy_at_least_pac(seed):
    cls, ref, rng = _random_pair(seed, decisions=3)
    eps = float(rng.choice([0.2, 0.4, 0.7]))
    regret = constrained_dec(cls, ref, eps)
    pac = constrained_dec(cls, ref, eps, "pac")
    greedy = constrained_dec(cls, ref, eps, "pac_greedy")
    assert pac.lower <= regret.upper + 1e-9
    assert pac.lower <= greedy.upper + 1e-9
    gamma = float(rng.choice([0.5, 4.0]))
    assert offset_dec(cls, ref, gamma, "pac").value <= offset_dec(cls, ref, gamma).value + 1e-9


@pytest.mark.parametrize("seed", range(10))
def test_monotonicity(seed):
    cls, ref, _ = _random_pair(seed, decisions=3)
    eps_values = [constrained_dec(cls, ref, e).upper for e in (0.1, 0.2, 0.4, 0.8)]
    assert all(b >= a - 1e-7 for a, b in zip(eps_values, eps_values[1:]))
    gamma_values = [offset_dec(cls, ref, g).value for g in (0.5, 1, 4, 16)]
    assert all(b <= a + 1e-9 for a, b in zip(gamma_values, gamma_values[1:]))


@pytest.mark.parametrize("seed", range(10))
def test_lagrangian_dominates_constrained(seed):
    cls, ref, rng = _random_pair(seed, decisions=3)
    eps = float(rng.choice([0.1, 0.3, 0.6]))
    assert constrained_dec(cls, ref, eps).lower <= lagrangian_bound(cls, ref, eps) + 1e-7


def test_empty_ball_conventions():
    cls = make_mab_class(0.3, 3)
    far = flat_bandit(3, 0.05)
    for kind in ("regret", "pac", "pac_alt", "pac_greedy"):
        dec = constrained_dec(cls, far, 0.01, kind)
        assert dec.value == 0.0 and dec.lower == 0.0
    assert constrained_dec(None, far, 0.3).value == 0.0
    with pytest.raises(ValueError):
        offset_dec(None, far, 1.0)
    with pytest.raises(ValueError):
        constrained_dec(cls, far, -0.1)


def test_singleton_member_reference():
    cls = make_mab_class(0.3, 3).subset([1])
    assert constrained_dec(cls, cls[0], 0.5).value == 0.0
    assert offset_dec(cls, cls[0], 1.0).value == pytest.approx(0.0, abs=1e-12)


def test_fallback_above_enumeration_cap():
    cls = make_random_class(11, 3, 20)
    ref = mixture_of(cls, np.full(20, 0.05))
    dec = constrained_dec(cls, ref, 0.3)
    assert dec.diagnostics.method == "fallback"
    assert dec.lower <= dec.value + 1e-12
    G, H = adversary_matrices(cls, ref)
    assert dec.lower <= grid_constrained_regret(G, H, 0.3, 60) + 1e-9
    with pytest.raises(ValueError):
        constrained_dec(cls, ref, 0.3, "pac")


def test_matrices_and_include_ref():
    cls = make_mab_class(0.2, 2)
    ref = mixture_of(cls, [0.5, 0.5])
    G, H = adversary_matrices(cls, ref, include_ref=True)
    assert G.shape == (3, 2)
    np.testing.assert_array_equal(G[:2], gap_matrix(cls))
    np.testing.assert_array_equal(H[:2], divergence_matrix(cls, ref))
    np.testing.assert_array_equal(H[2], 0.0)
    dec = constrained_from_matrices(G, H, 0.0)
    assert dec.value == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("kind", ["regret", "pac"])
def test_hull_sup_dominates_vertices(kind):
    cls = make_mab_class(0.15, 3)
    hull = hull_sup_dec(cls, 0.1, kind, HullGrid(resolution=4, random_points=8))
    for m in cls:
        dec = constrained_dec(cls, m, 0.1, kind, include_ref=(kind == "regret"))
        assert hull.dec.value >= dec.value - 1e-12
    assert hull.evaluated == len(HullGrid(resolution=4, random_points=8).weights(3))
    off = hull_sup_offset(cls, 4.0, grid=HullGrid(resolution=2, random_points=0))
    assert off.dec.value >= offset_dec(cls, cls[0], 4.0).value - 1e-12


def test_hull_grid_contents():
    w = HullGrid(resolution=2, random_points=0).weights(3)
    assert len(w) == 6
    np.testing.assert_allclose(w.sum(axis=1), 1.0)
    assert len(simplex_grid(3, 8)) == math.comb(10, 2)
    assert len(HullGrid(resolution=8, random_points=5).weights(8)) == 8 + 5


def test_profile_and_regularity():
    cls = make_mab_class(0.2, 2)
    grid = np.geomspace(0.05, 0.8, 9)
    prof = dec_profile(cls, "proper_sup", grid, "constrained-regret")
    assert isinstance(prof, DecProfile) and len(prof.values) == 9
    assert np.all(np.diff(prof.series()) >= -1e-7)
    offset = dec_profile(cls, cls[0], [0.5, 1, 2], "offset-pac")
    assert np.all(np.diff(offset.series()) <= 1e-9)
    with pytest.raises(ValueError):
        dec_profile(cls, "nowhere", grid)
    with pytest.raises(ValueError):
        dec_profile(cls, cls[0], [], "offset-regret")


def test_regularity_check_on_synthetic_profiles():
    grid = tuple(2.0 ** (-np.arange(6)[::-1]))

    def fake(values):
        p = None
        return DecProfile(grid, tuple(DecValue(v, p, None, (), None) for v in values), "synthetic")

    linear = regularity_check(fake([x for x in grid]), 2.0, 1.2)
    assert linear.satisfied and linear.worst_ratio == pytest.approx(2.0)
    assert linear.strong_satisfied is False
    jump = regularity_check(fake([0, 0, 0, 0, 1e-3, 1.0]), 2.0)
    assert not jump.satisfied and jump.flagged == (grid[-2], grid[-1])


def test_gamma_grid():
    assert GAMMA_GRID[0] == pytest.approx(0.1) and GAMMA_GRID[-1] == pytest.approx(1e4)
    assert len(GAMMA_GRID) == 40


# ---------------------------------------------------------------------------
# Documented examples
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("arms", [2, 3, 4])
@pytest.mark.parametrize("eps", [0.02, 0.05, 0.1])
def test_flat_reference_scaling_below_boundary(arms, eps):
    # Uniform play puts each arm model at divergence about gap^2 / A, so a gap
    # of exactly eps sqrt(A) sits on the boundary; a smaller constant leaves
    # the least-played arm's model inside the ball.
    scale = 0.9 * eps * math.sqrt(arms)
    cls = make_mab_class(scale, arms)
    dec = constrained_dec(cls, flat_bandit(arms), eps)
    assert dec.value / (eps * math.sqrt(arms)) == pytest.approx(0.9 * (arms - 1) / arms, abs=1e-9)
    if arms == 2:
        G, H = adversary_matrices(cls, flat_bandit(arms))
        assert dec.value == pytest.approx(grid_constrained_regret(G, H, eps, 4000), abs=1e-3 * scale)


def test_small_gamma_limit_is_game_value():
    cls = make_random_class(21, 3, 4)
    value, _ = solve_game(gap_matrix(cls))
    assert offset_dec(cls, cls[0], 1e-9).value == pytest.approx(value, abs=1e-8)


@pytest.mark.parametrize("gap", [0.01, 0.1, 0.3, 0.5])
@pytest.mark.parametrize("gamma", [0.5, 2.0, 10.0, 100.0])
def test_member_reference_offset_at_most_inverse_gamma(gap, gamma):
    cls = make_mab_class(gap, 3)
    assert offset_dec(cls, cls[1], gamma).value <= 1.0 / gamma + 1e-12


def test_large_radius_equals_game_value():
    cls = make_random_class(22, 3, 5)
    ref = mixture_of(cls, np.full(5, 0.2))
    value, _ = solve_game(np.vstack([gap_matrix(cls)]))
    assert constrained_dec(cls, ref, math.sqrt(2.0)).value == pytest.approx(value, abs=1e-9)


def test_exact_identification_at_zero_radius():
    cls = make_mab_class(0.2, 2)
    dec = constrained_dec(cls, cls[0], 0.0)
    assert dec.value == 0.0
