"""Interaction protocol and the estimation-to-decisions learners.

Two learners are provided:

* :func:`run_pac` alternates an exploration phase, where each round solves the
  constrained PAC min-max problem around the current estimate, with an
  exploitation phase that picks the exploration round whose estimate best
  agrees with fresh held-out data.
* :func:`run_regret` works in doubling epochs.  Each epoch explores with the
  constrained regret min-max problem, then refines by replaying a few of the
  exploration distributions with fresh estimators, and finally shrinks the
  confidence set used by the next epoch's estimator.

All randomness comes from :mod:`declab.rng` streams addressed by phase, so
runs are reproducible bit for bit.  Regret and risk are computed exactly from
the stored sampling distributions, never from realized rewards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import rng as rngmod
from .dec import MARGIN, DecValue, constrained_from_matrices, gap_matrix
from .divergence import hellinger_rows
from .estimation import ExpWeightsOracle
from .models import DecisionDistribution, FiniteModel, ModelClass, best_decision, gap_vector

#: Optional replacement for the per-round min-max solver:
#: ``solver(G, H, eps, ref_decision) -> DecValue``.
DecSolver = Callable[[np.ndarray, np.ndarray, float, int], DecValue]


class RealizabilityError(ValueError):
    """The environment model is not a member of the class."""


class BudgetError(ValueError):
    """The horizon is too short for the requested schedule."""


# ---------------------------------------------------------------------------
# Protocol
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Round:
    dist: np.ndarray
    decision: int
    reward: float
    observation: int
    phase: str


@dataclass
class Transcript:
    """Rounds played so far with their exact expected regret under the truth."""

    gaps: np.ndarray
    rounds: list[Round] = field(default_factory=list)
    instant_regret: list[float] = field(default_factory=list)

    def record(self, dist: np.ndarray, decision: int, reward: float, observation: int, phase: str) -> None:
        self.rounds.append(Round(dist, decision, reward, observation, phase))
        self.instant_regret.append(float(self.gaps @ dist))

    def __len__(self) -> int:
        return len(self.rounds)

    @property
    def regret(self) -> float:
        return float(math.fsum(self.instant_regret))

    def phase_regret(self, phase: str) -> float:
        return float(math.fsum(r for row, r in zip(self.rounds, self.instant_regret) if row.phase == phase))


class Environment:
    """Samples outcomes of a fixed model."""

    def __init__(self, model: FiniteModel) -> None:
        self.model = model
        self._flat = model.flat()
        self._width = max(model.obs_count, 1)

    def step(self, dist: np.ndarray, rng: np.random.Generator) -> tuple[int, int, float, int]:
        """Return ``(decision, outcome index, reward, observation)``."""
        decision = rngmod.draw_index(rng, dist)
        outcome = rngmod.draw_index(rng, self._flat[decision])
        r_idx, obs = divmod(outcome, self._width)
        return decision, outcome, self.model.reward_support[r_idx], obs


def protocol_step(
    true_model: FiniteModel, dist: DecisionDistribution | np.ndarray, rng: np.random.Generator
) -> tuple[int, float, int]:
    """One round: draw a decision from ``dist`` and an outcome from the model."""
    probs = dist.probs if isinstance(dist, DecisionDistribution) else DecisionDistribution(dist).probs
    decision, _, reward, obs = Environment(true_model).step(probs, rng)
    return decision, reward, obs


def resolve_truth(model_class: ModelClass, true_model: int | FiniteModel) -> int:
    """Index of the environment model in the class; rejects non-members."""
    if isinstance(true_model, FiniteModel):
        idx = model_class.index_of(true_model)
        if idx is None:
            raise RealizabilityError("the environment model is not in the class")
        return idx
    idx = int(true_model)
    if not 0 <= idx < len(model_class):
        raise RealizabilityError(f"model index {idx} is not in the class")
    return idx


class _ClassView:
    """Matrix views of a class for fast per-round work."""

    def __init__(self, model_class: ModelClass) -> None:
        self.model_class = model_class
        self.flat = model_class.flat_kernels()
        self.means = model_class.means()
        self.gaps = gap_matrix(model_class)

    def mixture(self, weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Outcome pmfs and mean rewards of a mixture."""
        return np.tensordot(weights, self.flat, axes=1), weights @ self.means

    def divergences(self, flat_ref: np.ndarray) -> np.ndarray:
        return hellinger_rows(self.flat, flat_ref[None, :, :])


def _default_solver(kind: str, margin: float, cache: dict | None) -> DecSolver:
    def solve(G, H, eps, ref_decision):
        return constrained_from_matrices(
            G, H, eps, kind, ref_decision, margin=margin, certify=False, game_cache=cache
        )

    return solve


def _argmax_lowest(values: np.ndarray) -> int:
    return int(np.flatnonzero(values == values.max())[0])


# ---------------------------------------------------------------------------
# PAC learner
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PacParameters:
    repeats: int
    phase_length: int
    est_bound: float
    radius: float


def pac_parameters(horizon: int, delta: float, class_size: int, est_constant: float = 1.0) -> PacParameters:
    """Schedule of the PAC learner.

    ``repeats = ceil(log(2/delta))`` exploitation candidates, phases of length
    ``floor(T / (repeats + 1))``, estimation bound ``c log(4 L |M| / delta)``
    and radius ``8 sqrt(L / T * bound)``.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    repeats = math.ceil(math.log(2.0 / delta))
    if horizon < 2 * (repeats + 1):
        raise BudgetError(f"horizon {horizon} is below 2 (L + 1) = {2 * (repeats + 1)}")
    phase = horizon // (repeats + 1)
    est = est_constant * math.log(4.0 * repeats * class_size / delta)
    radius = 8.0 * math.sqrt(repeats / horizon * est)
    return PacParameters(repeats, phase, est, radius)


@dataclass
class PacRunResult:
    """Output of :func:`run_pac`."""

    final_p: DecisionDistribution
    chosen: int
    risk: float
    transcript: Transcript
    params: PacParameters
    candidate_rounds: tuple[int, ...]
    test_statistics: tuple[float, ...]
    chosen_truth_error: float
    chosen_dec: float

    @property
    def event_observed(self) -> bool:
        """Whether the truth lies well inside the chosen round's ball."""
        return self.chosen_truth_error <= self.params.radius**2 / 16.0


def run_pac(
    model_class: ModelClass,
    true_model: int | FiniteModel,
    horizon: int,
    delta: float,
    seed: int = 0,
    solver: DecSolver | None = None,
    est_constant: float = 1.0,
    margin: float = MARGIN,
    require_realizable: bool = True,
) -> PacRunResult:
    """Run the PAC learner against a member of the class.

    With ``require_realizable=False`` a model outside the class may drive
    the environment; lower-bound constructions use this to observe the
    learner under an improper reference model.
    """
    if not require_realizable and isinstance(true_model, FiniteModel):
        if not true_model.same_spaces(model_class[0]):
            raise RealizabilityError("the environment model does not share the class spaces")
        truth = true_model
    else:
        truth = model_class[resolve_truth(model_class, true_model)]
    params = pac_parameters(horizon, delta, len(model_class), est_constant)
    view = _ClassView(model_class)
    solve = solver or _default_solver("pac", margin, {})
    env = Environment(truth)
    transcript = Transcript(gap_vector(truth))
    L, J, eps = params.repeats, params.phase_length, params.radius

    explore_rng = rngmod.stream(seed, rngmod.PAC, 0)
    oracle = ExpWeightsOracle(model_class)
    ps, qs, estimates, values = [], [], [], []
    for _ in range(J):
        flat_hat, means_hat = view.mixture(oracle.weights)
        dec = solve(view.gaps, view.divergences(flat_hat), eps, _argmax_lowest(means_hat))
        p = dec.witness_p.probs
        q = dec.witness_q.probs if dec.witness_q is not None else p
        ps.append(p)
        qs.append(q)
        estimates.append(flat_hat)
        values.append(dec.value)
        decision, outcome, reward, obs = env.step(q, explore_rng)
        transcript.record(q, decision, reward, obs, "explore")
        oracle.update_index(decision, outcome)

    pick_rng = rngmod.stream(seed, rngmod.PAC, 1)
    candidates = tuple(int(t) for t in pick_rng.integers(0, J, size=L))
    stats = []
    for ell, t in enumerate(candidates):
        sample_rng = rngmod.stream(seed, rngmod.PAC, 2, ell)
        fresh = ExpWeightsOracle(model_class)
        total = np.zeros_like(estimates[t])
        for _ in range(J):
            total += view.mixture(fresh.weights)[0]
            decision, outcome, reward, obs = env.step(qs[t], sample_rng)
            transcript.record(qs[t], decision, reward, obs, "exploit")
            fresh.update_index(decision, outcome)
        averaged = total / J
        stats.append(float(hellinger_rows(estimates[t], averaged) @ qs[t]))
    chosen = int(np.argmin(stats))
    t_hat = candidates[chosen]
    final = DecisionDistribution(ps[t_hat])
    truth_err = float(hellinger_rows(truth.flat(), estimates[t_hat]) @ qs[t_hat])
    return PacRunResult(
        final_p=final,
        chosen=chosen,
        risk=float(transcript.gaps @ final.probs),
        transcript=transcript,
        params=params,
        candidate_rounds=candidates,
        test_statistics=tuple(stats),
        chosen_truth_error=truth_err,
        chosen_dec=values[t_hat],
    )


# ---------------------------------------------------------------------------
# Regret learner
# ---------------------------------------------------------------------------


def regret_blocks(horizon: int) -> list[tuple[int, int]]:
    """Lengths ``(|E_i|, |R_i|)`` of the exploration and refinement blocks.

    Both blocks of epoch ``i`` get ``max(1, floor(2**i / 4))`` rounds for
    ``i = 1..ceil(log2 T)``, with at most ``floor(T / 2)`` epochs so that every
    block can hold a round.  Blocks are shortened from the end when they
    overshoot the horizon and any leftover rounds extend the last exploration
    block, so the lengths always sum to ``T``.
    """
    if horizon < 2:
        raise BudgetError("the regret learner needs at least two rounds")
    epochs = min(math.ceil(math.log2(horizon)), horizon // 2)
    sizes = [max(1, (2**i) // 4) for i in range(1, epochs + 1) for _ in range(2)]
    excess = sum(sizes) - horizon
    pos = len(sizes) - 1
    while excess > 0:
        cut = min(excess, sizes[pos] - 1)
        sizes[pos] -= cut
        excess -= cut
        pos -= 1
        if pos < 0 and excess > 0:
            raise BudgetError(f"cannot tile {horizon} rounds with nonempty blocks")
    if excess < 0:
        sizes[-2] += -excess
    return [(sizes[2 * k], sizes[2 * k + 1]) for k in range(epochs)]


@dataclass(frozen=True)
class RegretParameters:
    epochs: int
    repeats: int
    est_bound: float
    radii: tuple[float, ...]
    blocks: tuple[tuple[int, int], ...]


def regret_parameters(
    horizon: int, delta: float, class_size: int, c1: float = 128.0, est_constant: float = 1.0
) -> RegretParameters:
    """Epoch schedule and radii ``eps_i = sqrt(2**(N-i)) * sqrt(c1 * Est * L / T)``."""
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    blocks = regret_blocks(horizon)
    epochs = len(blocks)
    repeats = math.ceil(math.log(1.0 / delta))
    est = est_constant * math.log(class_size / delta)
    last = math.sqrt(c1 * est * repeats / horizon)
    radii = tuple(math.sqrt(2.0 ** (epochs - i)) * last for i in range(1, epochs + 1))
    return RegretParameters(epochs, repeats, est, radii, tuple(blocks))


@dataclass
class EpochRecord:
    index: int
    radius: float
    explore_rounds: int
    refine_rounds: int
    explore_regret: float
    refine_regret: float
    confidence_size: int
    next_confidence_size: int
    truth_in_set: bool
    chosen_round: int | None
    accepted: bool
    refinement_skipped: bool
    confidence_fallback: bool
    localization_ok: bool


@dataclass
class RegretRunResult:
    """Output of :func:`run_regret` and :func:`run_baseline`."""

    regret: float
    transcript: Transcript
    epochs: list[EpochRecord] = field(default_factory=list)
    params: RegretParameters | None = None
    algorithm: str = "e2d-regret"

    @property
    def confidence_sizes(self) -> tuple[int, ...]:
        return tuple(e.confidence_size for e in self.epochs)

    @property
    def truth_always_retained(self) -> bool:
        return all(e.truth_in_set for e in self.epochs)


def run_regret(
    model_class: ModelClass,
    true_model: int | FiniteModel,
    horizon: int,
    delta: float,
    c0: float = 20.0,
    c1: float = 128.0,
    seed: int = 0,
    solver: DecSolver | None = None,
    est_constant: float = 1.0,
    stop_at_first_success: bool = False,
    margin: float = MARGIN,
) -> RegretRunResult:
    """Run the epoch-based regret learner against a member of the class.

    ``c0`` scales the localization radius reported in the epoch records;
    with the default solver the check uses the smallest admissible radius
    ``64 * eps_{i-1}`` (the DEC term is bounded below by zero), which makes
    the check stricter, not looser.
    """
    truth_idx = resolve_truth(model_class, true_model)
    truth = model_class[truth_idx]
    params = regret_parameters(horizon, delta, len(model_class), c1, est_constant)
    view = _ClassView(model_class)
    solve = solver or _default_solver("regret", margin, None)
    env = Environment(truth)
    transcript = Transcript(gap_vector(truth))
    truth_value = float(truth.means.max())
    L = params.repeats
    active = tuple(range(len(model_class)))
    records: list[EpochRecord] = []

    for i, (n_explore, n_refine) in enumerate(params.blocks, start=1):
        eps = params.radii[i - 1]
        start_regret = transcript.regret
        # Exploration.
        explore_rng = rngmod.stream(seed, rngmod.REGRET, i, 0)
        oracle = ExpWeightsOracle(model_class, active)
        ps, estimates = [], []
        # The localization check needs the previous epoch's radius.
        slack = math.inf if i == 1 else 32.0 * params.radii[i - 2]
        localized = True
        for _ in range(n_explore):
            flat_hat, means_hat = view.mixture(oracle.weights)
            G = np.vstack([view.gaps, (means_hat.max() - means_hat)[None, :]])
            H = np.vstack([view.divergences(flat_hat), np.zeros((1, flat_hat.shape[0]))])
            dec = solve(G, H, eps, _argmax_lowest(means_hat))
            p = dec.witness_p.probs
            ps.append(p)
            estimates.append(flat_hat)
            localized &= truth_value <= float(means_hat.max()) + slack
            decision, outcome, reward, obs = env.step(p, explore_rng)
            transcript.record(p, decision, reward, obs, "explore")
            oracle.update_index(decision, outcome)
        explore_regret = transcript.regret - start_regret

        # Refinement.
        refine_rng = rngmod.stream(seed, rngmod.REGRET, i, 1)
        play_rng = rngmod.stream(seed, rngmod.REGRET, i, 2)
        used = 0
        skipped = L > n_refine
        accepted = False
        fallback = False
        next_active = active
        if skipped:
            chosen = int(refine_rng.integers(0, n_explore))
        else:
            per_run = max(1, n_refine // L)
            picks = [int(s) for s in refine_rng.integers(0, n_explore, size=L)]
            threshold = per_run * eps * eps / 4.0
            results: list[tuple[int, np.ndarray, bool]] = []
            for k, s in enumerate(picks):
                sample_rng = rngmod.stream(seed, rngmod.REGRET, i, 3, k)
                fresh = ExpWeightsOracle(model_class, active)
                cumulative = 0.0
                total = np.zeros_like(view.flat[0])
                success = False
                for j in range(1, per_run + 1):
                    # The estimate for step j uses the first j - 1 samples only.
                    pred = view.mixture(fresh.weights)[0]
                    total += pred
                    decision, outcome, reward, obs = env.step(ps[s], sample_rng)
                    transcript.record(ps[s], decision, reward, obs, "refine")
                    used += 1
                    fresh.update_index(decision, outcome)
                    cumulative += float(hellinger_rows(estimates[s], pred) @ ps[s])
                    if cumulative > threshold:
                        break
                    success = j == per_run
                results.append((s, total / j, success))
                if success and stop_at_first_success:
                    break
            passed = [r for r in results if r[2]]
            accepted = bool(passed)
            chosen, chosen_avg, _ = passed[-1] if passed else results[0]
            p_hat = ps[chosen]
            radius_sq = est_constant * math.log(len(active) / delta) / per_run
            dists = view.divergences(chosen_avg) @ p_hat
            kept = tuple(int(m) for m in np.flatnonzero(dists <= radius_sq))
            if kept:
                next_active = kept
            else:
                fallback = True
        remaining = n_refine - used
        for _ in range(remaining):
            p = ps[chosen]
            decision, _, reward, obs = env.step(p, play_rng)
            transcript.record(p, decision, reward, obs, "refine")
        records.append(
            EpochRecord(
                index=i,
                radius=eps,
                explore_rounds=n_explore,
                refine_rounds=n_refine,
                explore_regret=explore_regret,
                refine_regret=transcript.regret - start_regret - explore_regret,
                confidence_size=len(active),
                next_confidence_size=len(next_active),
                truth_in_set=truth_idx in active,
                chosen_round=chosen,
                accepted=accepted,
                refinement_skipped=skipped,
                confidence_fallback=fallback,
                localization_ok=localized,
            )
        )
        active = next_active
    return RegretRunResult(transcript.regret, transcript, records, params)


# ---------------------------------------------------------------------------
# Baselines
# ---------------------------------------------------------------------------

BASELINES = ("ucb", "thompson", "uniform")


def run_baseline(
    model_class: ModelClass,
    true_model: int | FiniteModel,
    horizon: int,
    policy: str,
    seed: int = 0,
) -> RegretRunResult:
    """Standard comparison policies with the same exact regret accounting.

    ``uniform`` plays the uniform distribution, ``ucb`` runs UCB1 on the
    reward marginals and ``thompson`` samples a model from the exponential
    weights posterior over the class and plays its best decision.
    """
    if policy not in BASELINES:
        raise ValueError(f"unknown baseline {policy!r}; choose from {BASELINES}")
    truth_idx = resolve_truth(model_class, true_model)
    truth = model_class[truth_idx]
    if policy == "ucb" and model_class.obs_count > 1:
        raise ValueError("ucb needs a bandit class (no observations beyond rewards)")
    env = Environment(truth)
    transcript = Transcript(gap_vector(truth))
    k = model_class.decision_count
    play_rng = rngmod.stream(seed, rngmod.BASELINE, BASELINES.index(policy))
    best = np.array([best_decision(m)[0] for m in model_class])
    oracle = ExpWeightsOracle(model_class)
    counts = np.zeros(k)
    sums = np.zeros(k)
    for t in range(1, horizon + 1):
        if policy == "uniform":
            p = np.full(k, 1.0 / k)
        elif policy == "thompson":
            p = np.bincount(best, weights=oracle.weights, minlength=k).astype(float)
            p /= p.sum()
        else:
            p = np.zeros(k)
            if t <= k:
                p[t - 1] = 1.0
            else:
                index = sums / counts + np.sqrt(2.0 * math.log(t) / counts)
                p[_argmax_lowest(index)] = 1.0
        decision, outcome, reward, obs = env.step(p, play_rng)
        transcript.record(p, decision, reward, obs, policy)
        counts[decision] += 1
        sums[decision] += reward
        if policy == "thompson":
            oracle.update_index(decision, outcome)
    return RegretRunResult(transcript.regret, transcript, [], None, policy)
