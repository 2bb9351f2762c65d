"""Online estimation by exponential weights with log loss.

The oracle keeps a posterior over the members of a finite class (optionally
restricted to a subset) and predicts the posterior-mean mixture.  Updates
multiply each weight by the probability the model assigns to the observed
reward and observation at the chosen decision; the arithmetic is done in log
space so long runs cannot underflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .divergence import hellinger_rows
from .models import DecisionDistribution, FiniteModel, MixtureModel, ModelClass

REWARD_MATCH_TOL = 1e-12


class EstimationError(ValueError):
    """Raised for outcomes that no active model can produce."""


@dataclass
class TraceRow:
    round: int
    decision: int
    reward_index: int
    obs_index: int
    top_model: int
    est_running: float


@dataclass
class ExpWeightsOracle:
    """Exponential weights (learning rate 1) over a finite class.

    Parameters
    ----------
    model_class
        The class whose mixtures are predicted.
    subset
        Optional indices of the active sub-class; the remaining members keep
        weight exactly zero forever.
    truth
        When given, the oracle accumulates the squared Hellinger error of its
        predictions against this model (test harness only).
    """

    model_class: ModelClass
    subset: Sequence[int] | None = None
    truth: FiniteModel | None = None
    log_weights: np.ndarray = field(init=False)
    rounds: int = field(init=False, default=0)
    est_running: float = field(init=False, default=0.0)
    trace: list[TraceRow] = field(init=False, default_factory=list)

    def __post_init__(self) -> None:
        n = len(self.model_class)
        log_w = np.full(n, -math.inf)
        if self.subset is None:
            log_w[:] = 0.0
        else:
            idx = sorted(set(int(i) for i in self.subset))
            if not idx:
                raise ValueError("constraint subset must be nonempty")
            if idx[0] < 0 or idx[-1] >= n:
                raise ValueError("constraint subset index out of range")
            log_w[idx] = 0.0
            self.subset = tuple(idx)
        self.log_weights = log_w
        self._flat = self.model_class.flat_kernels()
        self._support = np.asarray(self.model_class.reward_support)
        self._obs_width = max(self.model_class.obs_count, 1)
        self._truth_flat = None if self.truth is None else self.truth.flat()

    # -- queries ---------------------------------------------------------

    @property
    def weights(self) -> np.ndarray:
        top = self.log_weights.max()
        w = np.exp(self.log_weights - top)
        return w / w.sum()

    def predict(self) -> MixtureModel:
        """Posterior-mean mixture over the class."""
        return MixtureModel(self.model_class, self.weights)

    def predict_flat(self) -> np.ndarray:
        """Outcome pmfs of the predicted mixture, shape ``(decisions, outcomes)``."""
        return np.tensordot(self.weights, self._flat, axes=1)

    def reward_index(self, reward: float) -> int:
        hits = np.flatnonzero(np.abs(self._support - float(reward)) <= REWARD_MATCH_TOL)
        if hits.size == 0:
            raise EstimationError(f"reward {reward!r} is not on the class support grid")
        return int(hits[0])

    # -- updates ---------------------------------------------------------

    def update(
        self,
        decision: int,
        reward: float,
        observation: int,
        dist: DecisionDistribution | np.ndarray | None = None,
    ) -> None:
        """Multiply weights by the likelihood of ``(reward, observation)``.

        ``dist`` is the sampling distribution that produced ``decision``; it
        is only used for error accounting when ``truth`` is set.
        """
        if not 0 <= decision < self.model_class.decision_count:
            raise EstimationError(f"decision {decision} out of range")
        if not 0 <= observation < self._obs_width:
            raise EstimationError(f"observation {observation} is not on the class grid")
        r_idx = self.reward_index(reward)
        outcome = r_idx * self._obs_width + observation
        if self._truth_flat is not None and dist is not None:
            probs = dist.probs if isinstance(dist, DecisionDistribution) else np.asarray(dist, dtype=float)
            per_decision = hellinger_rows(self._truth_flat, self.predict_flat())
            self.est_running += float(per_decision @ probs)
        lik = self._flat[:, decision, outcome]
        with np.errstate(divide="ignore"):
            new = self.log_weights + np.log(lik)
        if not np.isfinite(new).any():
            raise EstimationError("observed outcome is impossible under every active model")
        self.log_weights = new
        self.rounds += 1
        self.trace.append(
            TraceRow(self.rounds, int(decision), r_idx, int(observation), int(np.argmax(new)), self.est_running)
        )

    def update_index(self, decision: int, outcome: int, dist=None) -> None:
        """Update from a flat outcome index ``reward_index * obs_width + obs``."""
        r_idx, obs = divmod(int(outcome), self._obs_width)
        self.update(decision, self.model_class.reward_support[r_idx], obs, dist)


def oracle_init(model_class: ModelClass, constraint_subset: Iterable[int] | None = None) -> ExpWeightsOracle:
    return ExpWeightsOracle(model_class, None if constraint_subset is None else tuple(constraint_subset))


def oracle_predict(state: ExpWeightsOracle) -> MixtureModel:
    return state.predict()


def oracle_update(state: ExpWeightsOracle, decision: int, reward: float, observation: int) -> ExpWeightsOracle:
    state.update(decision, reward, observation)
    return state


def est_error(
    estimates: Sequence[MixtureModel],
    true_model: FiniteModel,
    sampling_dists: Sequence[DecisionDistribution | np.ndarray],
) -> float:
    """Cumulative expected squared Hellinger error of a sequence of estimates."""
    if len(estimates) != len(sampling_dists):
        raise ValueError("need one sampling distribution per estimate")
    truth = true_model.flat()
    total = 0.0
    for est, dist in zip(estimates, sampling_dists):
        probs = dist.probs if isinstance(dist, DecisionDistribution) else np.asarray(dist, dtype=float)
        pred = np.tensordot(est.weights, est.base.flat_kernels(), axes=1)
        total += float(hellinger_rows(truth, pred) @ probs)
    return total


def online_to_batch(estimates: Sequence[MixtureModel]) -> MixtureModel:
    """Uniform average of a sequence of mixtures over one class."""
    if not estimates:
        raise ValueError("need at least one estimate")
    base = estimates[0].base
    for est in estimates[1:]:
        if est.base is not base and not _same_class(est.base, base):
            raise ValueError("estimates are mixtures over different classes")
    weights = np.mean([est.weights for est in estimates], axis=0)
    return MixtureModel(base, weights / weights.sum())


def _same_class(a: ModelClass, b: ModelClass) -> bool:
    return len(a) == len(b) and a.kernels.shape == b.kernels.shape and bool(np.array_equal(a.kernels, b.kernels))


def batch_error_check(
    estimates: Sequence[MixtureModel], true_model: FiniteModel, dist: DecisionDistribution | np.ndarray
) -> tuple[float, float]:
    """Error of the averaged estimate and the mean per-round error under one ``dist``.

    Convexity of the squared Hellinger distance makes the first at most the
    second; both are returned so callers can assert it.
    """
    avg = online_to_batch(estimates)
    averaged = est_error([avg], true_model, [dist])
    mean = est_error(estimates, true_model, [dist] * len(estimates)) / len(estimates)
    return averaged, mean


def trace_rows(state: ExpWeightsOracle) -> list[tuple[int, int, int, int, int, float]]:
    """Per-round trace as plain tuples, ready for tabular export."""
    return [(r.round, r.decision, r.reward_index, r.obs_index, r.top_model, r.est_running) for r in state.trace]
