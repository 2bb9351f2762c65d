"""Exact divergences between finite distributions and between models."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .models import (
    PMF_TOL,
    UNBOUNDED,
    DecisionDistribution,
    FiniteModel,
    ModelClass,
    density_ratio_bound,
)

BALL_SLACK = 1e-12


@dataclass(frozen=True)
class DivergenceValue:
    value: float
    kind: str

    def __post_init__(self) -> None:
        if self.kind not in ("hellinger_sq", "tv"):
            raise ValueError(f"unknown divergence kind {self.kind!r}")
        upper = 2.0 if self.kind == "hellinger_sq" else 1.0
        if not 0.0 <= self.value <= upper:
            raise ValueError(f"{self.kind} value {self.value} outside [0, {upper}]")


def _as_pmfs(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"pmf shapes differ: {a.shape} vs {b.shape}")
    for v in (a, b):
        if np.any(v < 0.0) or np.any(np.abs(v.sum(axis=-1) - 1.0) > 1e-9):
            raise ValueError("input is not a probability vector")
    return a, b


def hellinger_sq(pmf_a, pmf_b) -> float:
    """Squared Hellinger distance without the 1/2 factor; lies in [0, 2]."""
    a, b = _as_pmfs(pmf_a, pmf_b)
    value = float(np.sum((np.sqrt(a) - np.sqrt(b)) ** 2))
    return min(max(value, 0.0), 2.0)


def tv(pmf_a, pmf_b) -> float:
    """Total variation distance."""
    a, b = _as_pmfs(pmf_a, pmf_b)
    return min(0.5 * float(np.abs(a - b).sum()), 1.0)


def hellinger_rows(rows_a: np.ndarray, rows_b: np.ndarray) -> np.ndarray:
    """Row-wise squared Hellinger distance over the last axis (no validation)."""
    diff = np.sqrt(rows_a) - np.sqrt(rows_b)
    return np.clip(np.sum(diff * diff, axis=-1), 0.0, 2.0)


def decision_divergences(model_a: FiniteModel, model_b: FiniteModel) -> np.ndarray:
    """Squared Hellinger distance at every decision."""
    if not model_a.same_spaces(model_b):
        raise ValueError("models do not share spaces")
    return hellinger_rows(model_a.flat(), model_b.flat())


def divergence_matrix(model_class: ModelClass, ref: FiniteModel) -> np.ndarray:
    """Matrix ``H[m, pi]`` of squared Hellinger distances to a reference model."""
    if not model_class[0].same_spaces(ref):
        raise ValueError("reference model does not share the class spaces")
    return hellinger_rows(model_class.flat_kernels(), ref.flat()[None, :, :])


def randomized_divergence_matrix(model_class: ModelClass, nu: np.ndarray, targets: ModelClass | None = None) -> np.ndarray:
    """``H[m, pi] = sum_j nu_j D^2(target_m(pi), class_j(pi))``.

    ``targets`` defaults to the class itself.
    """
    nu = np.asarray(nu, dtype=float)
    if nu.size != len(model_class):
        raise ValueError("nu must weight every model in the class")
    targets = model_class if targets is None else targets
    base = model_class.flat_kernels()
    tgt = targets.flat_kernels()
    pairwise = hellinger_rows(tgt[:, None, :, :], base[None, :, :, :])  # (targets, class, decisions)
    return np.tensordot(pairwise, nu, axes=([1], [0]))


def expected_hellinger_sq(model_a: FiniteModel, model_b: FiniteModel, p: DecisionDistribution | np.ndarray) -> float:
    """Average squared Hellinger distance under a decision distribution."""
    probs = p.probs if isinstance(p, DecisionDistribution) else np.asarray(p, dtype=float)
    if probs.size != model_a.decision_count:
        raise ValueError("distribution and model have different decision counts")
    return float(decision_divergences(model_a, model_b) @ probs)


def in_ball(model: FiniteModel, ref: FiniteModel, p: DecisionDistribution | np.ndarray, radius: float) -> bool:
    return expected_hellinger_sq(model, ref, p) <= radius * radius + BALL_SLACK


# ---------------------------------------------------------------------------
# Transcript-level comparison
# ---------------------------------------------------------------------------

#: An algorithm for exhaustive transcript enumeration maps the history
#: (a tuple of (decision, outcome index) pairs) to a decision distribution.
HistoryPolicy = Callable[[tuple[tuple[int, int], ...]], np.ndarray]

ENUMERATION_LIMIT = 200_000


def _transcript_laws(policy: HistoryPolicy, models: Sequence[FiniteModel], horizon: int):
    """Yield (probabilities under each model, average exploration weights) per transcript."""
    outcomes = models[0].outcome_count
    flats = [m.flat() for m in models]
    decisions = models[0].decision_count
    stack = [((), [1.0] * len(models))]
    leaves = []
    avg = np.zeros((len(models), decisions))
    while stack:
        history, probs = stack.pop()
        if len(history) == horizon:
            leaves.append(probs)
            continue
        dist = np.asarray(policy(history), dtype=float)
        for k in range(len(models)):
            avg[k] += probs[k] * dist
        for pi in np.flatnonzero(dist > 0.0):
            for o in range(outcomes):
                new = [probs[k] * dist[pi] * flats[k][pi, o] for k in range(len(models))]
                if max(new) > 0.0:
                    stack.append((history + ((int(pi), o),), new))
    return np.array(leaves), avg / horizon


@dataclass(frozen=True)
class ChainRuleReport:
    """Comparison of the transcript-level divergence with its per-round bound."""

    transcript_hellinger_sq: float
    per_round_hellinger_sq: float
    horizon: int
    log_factor_statement: float
    log_factor_proof: float
    slack_statement: float
    slack_proof: float

    @property
    def holds(self) -> bool:
        """Whether the bound with the proof constant holds.

        The statement form carries no explicit constant, so a negative
        ``slack_statement`` is informative rather than a violation.
        """
        return self.slack_proof >= -1e-12

    @property
    def holds_statement(self) -> bool:
        return self.slack_statement >= -1e-12


def tv_ub_check(
    policy: HistoryPolicy,
    model: FiniteModel,
    ref: FiniteModel,
    horizon: int,
    ratio_class: ModelClass | None = None,
) -> ChainRuleReport:
    """Check the transcript divergence against ``C(T) * T * E_qbar D^2``.

    The transcript laws under ``model`` and ``ref`` are enumerated exactly;
    ``qbar`` is the average decision distribution of the policy under the
    reference.  The log factor is ``log(min(T, V))`` (statement convention)
    and ``2**8`` times that (proof convention); both slacks are reported.
    """
    if not model.same_spaces(ref):
        raise ValueError("models do not share spaces")
    size = (model.decision_count * model.outcome_count) ** horizon
    if size > ENUMERATION_LIMIT:
        raise ValueError(f"transcript space of size {size} is too large to enumerate")
    leaves, avg = _transcript_laws(policy, [model, ref], horizon)
    p_model, p_ref = leaves[:, 0], leaves[:, 1]
    transcript = float(np.sum((np.sqrt(p_model) - np.sqrt(p_ref)) ** 2))
    per_round = float(decision_divergences(model, ref) @ avg[1])
    ratio_class = ratio_class if ratio_class is not None else ModelClass((model, ref))
    ratio = density_ratio_bound(ratio_class)
    cap = float(horizon) if ratio is UNBOUNDED else min(float(horizon), float(ratio))
    # log(T ^ V) vanishes at T = 1, where the chain rule holds with factor 1.
    log_stmt = max(math.log(cap), 1.0)
    log_proof = 2**8 * log_stmt
    rhs = horizon * per_round
    return ChainRuleReport(
        transcript_hellinger_sq=transcript,
        per_round_hellinger_sq=per_round,
        horizon=horizon,
        log_factor_statement=log_stmt,
        log_factor_proof=log_proof,
        slack_statement=log_stmt * rhs - transcript,
        slack_proof=log_proof * rhs - transcript,
    )


def all_histories(decisions: int, outcomes: int, horizon: int):
    """Every history of the given length (used by tests as an oracle)."""
    steps = list(itertools.product(range(decisions), range(outcomes)))
    return itertools.product(steps, repeat=horizon)
