"""Finite decision-making models, model classes and instance generators.

A model maps each decision to a joint pmf over ``reward_support x
observations``.  Kernels are stored as read-only arrays of shape
``(decisions, rewards, observations)`` where the observation axis always has
at least one column: ``obs_count == 0`` denotes the setting without side
observations and uses a single null column.  The null observation is index 0
whenever observations are present.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

PMF_TOL = 1e-12


class UnboundedRatio:
    """Sentinel for an infinite density ratio (disjoint supports)."""

    _instance: "UnboundedRatio | None" = None

    def __new__(cls) -> "UnboundedRatio":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "UNBOUNDED"

    def __reduce__(self):
        return (UnboundedRatio, ())


UNBOUNDED = UnboundedRatio()


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float, copy=True)
    array.flags.writeable = False
    return array


def _check_pmf(vector: np.ndarray, what: str) -> None:
    if np.any(vector < 0.0) or not np.all(np.isfinite(vector)):
        raise ValueError(f"{what} has negative or non-finite entries")
    if abs(float(vector.sum()) - 1.0) > PMF_TOL:
        raise ValueError(f"{what} sums to {float(vector.sum())!r}, not 1")


@dataclass(frozen=True, eq=False)
class DecisionDistribution:
    """A probability vector over decisions."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = _frozen(np.asarray(self.probs, dtype=float).ravel())
        _check_pmf(probs, "decision distribution")
        object.__setattr__(self, "probs", probs)

    @classmethod
    def point_mass(cls, size: int, index: int) -> "DecisionDistribution":
        probs = np.zeros(size)
        probs[index] = 1.0
        return cls(probs)

    @classmethod
    def uniform(cls, size: int) -> "DecisionDistribution":
        return cls(np.full(size, 1.0 / size))

    @property
    def size(self) -> int:
        return self.probs.size

    def support(self, tol: float = 0.0) -> tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(self.probs > tol))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, DecisionDistribution) and np.array_equal(self.probs, other.probs)

    def __hash__(self) -> int:
        return hash(self.probs.tobytes())


@dataclass(frozen=True, eq=False)
class FiniteModel:
    """A map from decisions to joint pmfs over (reward, observation)."""

    reward_support: tuple[float, ...]
    obs_count: int
    kernel: np.ndarray

    def __post_init__(self) -> None:
        support = tuple(float(r) for r in self.reward_support)
        if not support:
            raise ValueError("reward support is empty")
        if any(r < 0.0 or r > 1.0 for r in support):
            raise ValueError("reward support must lie in [0, 1]")
        if any(b <= a for a, b in zip(support, support[1:])):
            raise ValueError("reward support must be strictly increasing")
        if self.obs_count < 0:
            raise ValueError("obs_count must be nonnegative")
        kernel = np.asarray(self.kernel, dtype=float)
        width = max(int(self.obs_count), 1)
        if kernel.ndim != 3 or kernel.shape[1:] != (len(support), width):
            raise ValueError(
                f"kernel shape {kernel.shape} does not match "
                f"(decisions, {len(support)}, {width})"
            )
        if kernel.shape[0] < 1:
            raise ValueError("a model needs at least one decision")
        for pi in range(kernel.shape[0]):
            _check_pmf(kernel[pi].ravel(), f"kernel row for decision {pi}")
        object.__setattr__(self, "reward_support", support)
        object.__setattr__(self, "obs_count", int(self.obs_count))
        object.__setattr__(self, "kernel", _frozen(kernel))
        means = kernel.sum(axis=2) @ np.asarray(support)
        object.__setattr__(self, "_means", _frozen(np.clip(means, 0.0, 1.0)))

    @property
    def decision_count(self) -> int:
        return self.kernel.shape[0]

    @property
    def outcome_count(self) -> int:
        return self.kernel.shape[1] * self.kernel.shape[2]

    @property
    def means(self) -> np.ndarray:
        """Mean reward of every decision."""
        return self._means  # type: ignore[attr-defined]

    def flat(self) -> np.ndarray:
        """Kernel reshaped to ``(decisions, outcomes)``."""
        return self.kernel.reshape(self.decision_count, -1)

    def same_spaces(self, other: "FiniteModel") -> bool:
        return (
            self.decision_count == other.decision_count
            and self.reward_support == other.reward_support
            and self.obs_count == other.obs_count
        )

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, FiniteModel)
            and self.same_spaces(other)
            and np.array_equal(self.kernel, other.kernel)
        )

    def __hash__(self) -> int:
        return hash((self.reward_support, self.obs_count, self.kernel.tobytes()))


def mean_reward(model: FiniteModel, decision: int) -> float:
    """Expected reward of ``decision`` under ``model``."""
    if not 0 <= decision < model.decision_count:
        raise IndexError(f"decision {decision} out of range")
    return float(model.means[decision])


def best_decision(model: FiniteModel) -> tuple[int, float]:
    """Optimal decision (lowest index among ties) and its mean reward."""
    index = int(np.argmax(model.means))
    return index, float(model.means[index])


def gap_vector(model: FiniteModel) -> np.ndarray:
    """Per-decision suboptimality ``max f - f``."""
    means = model.means
    return means.max() - means


def suboptimality(model: FiniteModel, p: DecisionDistribution | np.ndarray) -> float:
    """Expected suboptimality of playing ``p`` under ``model``."""
    probs = p.probs if isinstance(p, DecisionDistribution) else np.asarray(p, dtype=float)
    if probs.size != model.decision_count:
        raise ValueError("distribution and model have different decision counts")
    return float(max(gap_vector(model) @ probs, 0.0))


@dataclass(frozen=True)
class ModelClass:
    """An ordered, nonempty collection of models over shared spaces."""

    models: tuple[FiniteModel, ...]
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        models = tuple(self.models)
        if not models:
            raise ValueError("a model class must be nonempty")
        first = models[0]
        for m in models[1:]:
            if not first.same_spaces(m):
                raise ValueError("all models in a class must share their spaces")
        labels = tuple(self.labels) if self.labels else tuple(f"M{i}" for i in range(len(models)))
        if len(labels) != len(models):
            raise ValueError("need one label per model")
        object.__setattr__(self, "models", models)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "_stack", _frozen(np.stack([m.kernel for m in models])))

    def __len__(self) -> int:
        return len(self.models)

    def __getitem__(self, index: int) -> FiniteModel:
        return self.models[index]

    def __iter__(self):
        return iter(self.models)

    @property
    def decision_count(self) -> int:
        return self.models[0].decision_count

    @property
    def reward_support(self) -> tuple[float, ...]:
        return self.models[0].reward_support

    @property
    def obs_count(self) -> int:
        return self.models[0].obs_count

    @property
    def kernels(self) -> np.ndarray:
        """Stacked kernels with shape ``(models, decisions, rewards, obs)``."""
        return self._stack  # type: ignore[attr-defined]

    def flat_kernels(self) -> np.ndarray:
        return self.kernels.reshape(len(self), self.decision_count, -1)

    def means(self) -> np.ndarray:
        return np.stack([m.means for m in self.models])

    def subset(self, indices: Iterable[int]) -> "ModelClass | None":
        """Sub-class with the given indices, or ``None`` when empty."""
        idx = [int(i) for i in indices]
        if not idx:
            return None
        return ModelClass(tuple(self.models[i] for i in idx), tuple(self.labels[i] for i in idx))

    def with_model(self, model: FiniteModel, label: str = "ref") -> "ModelClass":
        return ModelClass(self.models + (model,), self.labels + (label,))

    def index_of(self, model: FiniteModel) -> int | None:
        for i, m in enumerate(self.models):
            if m == model:
                return i
        return None


@dataclass(frozen=True, eq=False)
class MixtureModel:
    """A convex combination of the members of a class."""

    base: ModelClass
    weights: np.ndarray

    def __post_init__(self) -> None:
        weights = _frozen(np.asarray(self.weights, dtype=float).ravel())
        if weights.size != len(self.base):
            raise ValueError("mixture weights and class size differ")
        _check_pmf(weights, "mixture weights")
        object.__setattr__(self, "weights", weights)

    def materialize(self) -> FiniteModel:
        return mixture_materialize(self)


def mixture_materialize(mix: MixtureModel) -> FiniteModel:
    """Realize a mixture as a concrete model."""
    base = mix.base
    nz = np.flatnonzero(mix.weights)
    if nz.size == 1:
        return base.models[int(nz[0])]
    kernel = np.tensordot(mix.weights, base.kernels, axes=1)
    kernel = np.clip(kernel, 0.0, None)
    kernel /= kernel.sum(axis=(1, 2), keepdims=True)
    return FiniteModel(base.reward_support, base.obs_count, kernel)


def mixture_of(base: ModelClass, weights: Sequence[float] | np.ndarray) -> FiniteModel:
    return mixture_materialize(MixtureModel(base, np.asarray(weights, dtype=float)))


def density_ratio_bound(model_class: ModelClass) -> float | UnboundedRatio:
    """Largest outcome-probability ratio between any two members, at least e."""
    flat = model_class.flat_kernels()
    positive = flat > 0.0
    # An outcome possible under one model and impossible under another.
    if np.any(positive.any(axis=0) & ~positive.all(axis=0)):
        return UNBOUNDED
    best = 1.0
    lo = flat.min(axis=0)
    hi = flat.max(axis=0)
    mask = hi > 0.0
    if mask.any():
        best = float((hi[mask] / lo[mask]).max())
    return max(best, math.e)


LOCALIZE_MODES = ("one_sided", "two_sided", "ref_gap")


def localize(
    model_class: ModelClass,
    ref: FiniteModel,
    alpha: float,
    mode: str = "one_sided",
) -> tuple[ModelClass | None, tuple[int, ...]]:
    """Restrict a class to models whose optimal value is close to the reference's.

    ``one_sided`` keeps models with ``max f^M <= max f^ref + alpha``.
    ``two_sided`` additionally requires ``max f^ref <= f^M(best ref decision) + alpha``.
    ``ref_gap`` keeps only the second condition.

    Returns the sub-class (``None`` when empty) and the retained indices.
    """
    if mode not in LOCALIZE_MODES:
        raise ValueError(f"unknown localization mode {mode!r}")
    if not model_class[0].same_spaces(ref):
        raise ValueError("reference model does not share the class spaces")
    ref_best, ref_value = best_decision(ref)
    keep = []
    for i, m in enumerate(model_class):
        upper = m.means.max() <= ref_value + alpha
        lower = ref_value <= m.means[ref_best] + alpha
        if (mode == "one_sided" and upper) or (mode == "two_sided" and upper and lower) or (
            mode == "ref_gap" and lower
        ):
            keep.append(i)
    return model_class.subset(keep), tuple(keep)


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

BERNOULLI = (0.0, 1.0)


def make_mab(means: Sequence[float]) -> FiniteModel:
    """Bernoulli bandit with the given arm means and no observations."""
    means = [float(m) for m in means]
    if not means or any(m < 0.0 or m > 1.0 for m in means):
        raise ValueError("arm means must lie in [0, 1]")
    kernel = np.array([[[1.0 - m], [m]] for m in means])
    return FiniteModel(BERNOULLI, 0, kernel)


def make_mab_class(gap: float, arms: int) -> ModelClass:
    """Arms ``i`` models where arm ``i`` has mean ``1/2 + gap`` and the rest ``1/2``."""
    if arms < 1:
        raise ValueError("need at least one arm")
    if not 0.0 <= gap <= 0.5:
        raise ValueError("gap must lie in [0, 1/2]")
    models = tuple(make_mab([0.5 + gap * (a == i) for a in range(arms)]) for i in range(arms))
    return ModelClass(models, tuple(f"arm{i}" for i in range(arms)))


def flat_bandit(arms: int, mean: float = 0.5) -> FiniteModel:
    return make_mab([mean] * arms)


def _deterministic_row(support: Sequence[float], reward: float, obs_pmf: np.ndarray) -> np.ndarray:
    row = np.zeros((len(support), obs_pmf.size))
    row[list(support).index(reward)] = obs_pmf
    return row


def _revealing_support(alpha: float) -> tuple[float, ...]:
    return tuple(sorted({0.0, 0.5, 0.5 + alpha}))


def make_revealing_model(alpha: float, beta: float, arms: int, target: int | None) -> FiniteModel:
    """One member of the revealing-decision class.

    Decisions ``0..arms-1`` are arms and decision ``arms`` is the revealing
    decision.  Observation 0 is the null symbol and observation ``i + 1``
    names arm ``i``.  ``target=None`` builds the uninformative member whose
    arms all pay 1/2 and whose revealing decision names a uniform arm.
    """
    support = _revealing_support(alpha)
    width = arms + 1
    null = np.zeros(width)
    null[0] = 1.0
    kernel = []
    for pi in range(arms):
        reward = 0.5 + (alpha if target is not None and pi == target else 0.0)
        kernel.append(_deterministic_row(support, reward, null))
    reveal = np.zeros(width)
    reveal[0] = 1.0 - beta
    if target is None:
        reveal[1:] = beta / arms
    else:
        reveal[1 + target] = beta
    kernel.append(_deterministic_row(support, 0.0, reveal))
    return FiniteModel(support, width, np.array(kernel))


def make_revealing_class(alpha: float, beta: float, arms: int, include_uninformative: bool = True) -> ModelClass:
    """Revealing-decision class with one model per arm plus the uninformative model."""
    if not 0.0 < alpha <= 0.5:
        raise ValueError("alpha must lie in (0, 1/2]")
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    if arms < 2:
        raise ValueError("need at least two arms")
    models = [make_revealing_model(alpha, beta, arms, i) for i in range(arms)]
    labels = [f"reveal{i}" for i in range(arms)]
    if include_uninformative:
        models.append(make_revealing_model(alpha, beta, arms, None))
        labels.append("uninformative")
    return ModelClass(tuple(models), tuple(labels))


def make_random_class(
    seed: int,
    decisions: int,
    models: int,
    reward_grid: Sequence[float] = BERNOULLI,
    obs_count: int = 0,
    concentration: float = 1.0,
) -> ModelClass:
    """Random class with Dirichlet kernels; fully determined by ``seed``."""
    if decisions < 1 or models < 1:
        raise ValueError("need at least one decision and one model")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), decisions, models, obs_count]))
    width = max(obs_count, 1)
    outcomes = len(reward_grid) * width
    out = []
    for _ in range(models):
        raw = rng.dirichlet(np.full(outcomes, concentration), size=decisions)
        raw = raw.reshape(decisions, len(reward_grid), width)
        raw /= raw.sum(axis=(1, 2), keepdims=True)
        out.append(FiniteModel(tuple(reward_grid), obs_count, raw))
    return ModelClass(tuple(out))
