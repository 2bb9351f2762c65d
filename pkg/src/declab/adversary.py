"""Hard-pair construction against a PAC learner.

Given a learner and a reference model, the learner's average exploration
distribution ``q`` and final-decision distribution ``p`` under the reference
are estimated by Monte Carlo.  The first hard model maximizes the expected
gap under ``p`` among the models within radius ``eps`` of the reference under
both ``p`` and ``q``.  The second repeats the selection with ``p``
conditioned on decisions where the first model's gap is below ``c0 * delta``,
``delta`` being the constrained PAC DEC at ``eps / sqrt 2``.  The learner's
risk under each hard model is then measured.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import rng as rngmod
from .dec import constrained_dec
from .divergence import BALL_SLACK, decision_divergences, tv
from .e2d import run_pac
from .models import UNBOUNDED, FiniteModel, ModelClass, density_ratio_bound, gap_vector

GAP_FRACTION = 1.0 / 16.0
CT_CONVENTIONS = ("statement", "proof")
PROOF_LOG_MULTIPLIER = 2**8
MIN_CONDITIONING_MASS = 1e-3
DEFAULT_BUDGET = 10_000


class AdversaryError(ValueError):
    """Raised when no hard pair can be formed."""


@dataclass(frozen=True)
class PacBehavior:
    """What one run of a PAC learner reveals.

    Attributes
    ----------
    final
        Distribution of the final decision given the transcript.
    exploration
        Average over rounds of the per-round sampling distributions.
    """

    final: np.ndarray
    exploration: np.ndarray


PacRunner = Callable[[FiniteModel, int], PacBehavior]


def constant_runner(decision: int, decisions: int) -> PacRunner:
    """A learner that always plays and outputs ``decision``."""
    point = np.zeros(decisions)
    point[decision] = 1.0

    def run(model: FiniteModel, seed: int) -> PacBehavior:
        return PacBehavior(point, point)

    return run


def e2d_pac_runner(model_class: ModelClass, horizon: int, delta: float, **options) -> PacRunner:
    """Wrap the PAC learner so it can run under any model over the class spaces."""

    def run(model: FiniteModel, seed: int) -> PacBehavior:
        result = run_pac(model_class, model, horizon, delta, seed=seed, require_realizable=False, **options)
        dists = np.array([r.dist for r in result.transcript.rounds])
        return PacBehavior(result.final_p.probs, dists.mean(axis=0))

    return run


def log_factor(horizon: int, model_class: ModelClass, convention: str = "proof") -> float:
    """``log(min(T, V))`` (statement) or ``2**8`` times it (proof), floored at 1 before scaling."""
    if convention not in CT_CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    ratio = density_ratio_bound(model_class)
    cap = float(horizon) if ratio is UNBOUNDED else min(float(horizon), float(ratio))
    base = max(math.log(cap), 1.0)
    return base if convention == "statement" else PROOF_LOG_MULTIPLIER * base


def lower_bound_radius(horizon: int, model_class: ModelClass, convention: str = "proof") -> float:
    """``1 / (10 sqrt(C(T) T))``."""
    if horizon < 1:
        raise ValueError("horizon must be positive")
    return 1.0 / (10.0 * math.sqrt(log_factor(horizon, model_class, convention) * horizon))


@dataclass(frozen=True)
class BehaviorEstimate:
    final: np.ndarray
    final_se: np.ndarray
    exploration: np.ndarray
    exploration_se: np.ndarray
    runs: int


def _run_seed(seed: int, tag: int, k: int) -> int:
    return int(np.random.SeedSequence([seed, rngmod.ADVERSARY, tag, k]).generate_state(1, np.uint64)[0] >> 1)


def estimate_behavior(runner: PacRunner, model: FiniteModel, budget: int, seed: int = 0, tag: int = 0) -> BehaviorEstimate:
    """Monte Carlo means and standard errors of the learner's distributions under ``model``."""
    if budget < 1:
        raise ValueError("Monte Carlo budget must be positive")
    finals, explores = [], []
    for k in range(budget):
        out = runner(model, _run_seed(seed, tag, k))
        finals.append(np.asarray(out.final, dtype=float))
        explores.append(np.asarray(out.exploration, dtype=float))
    finals, explores = np.array(finals), np.array(explores)
    scale = 1.0 / math.sqrt(budget)
    se = lambda x: x.std(axis=0, ddof=1) * scale if budget > 1 else np.zeros(x.shape[1])
    return BehaviorEstimate(finals.mean(axis=0), se(finals), explores.mean(axis=0), se(explores), budget)


@dataclass(frozen=True)
class HardPairReport:
    eps: float
    dec_radius: float
    convention: str
    log_factor: float
    dec_value: float
    gap_threshold: float
    first: int
    second: int
    conditioned: bool
    conditioning_mass: float
    feasible: tuple[int, ...]
    reference: BehaviorEstimate
    risks: tuple[float, float]
    risk_se: tuple[float, float]
    tv_to_reference: tuple[float, float]
    tv_bound: tuple[float, float]

    @property
    def max_risk(self) -> float:
        return max(self.risks)

    @property
    def guaranteed_risk(self) -> float:
        """``(3 c0 / 20) * delta``, the risk one of the pair must incur."""
        return 3.0 * GAP_FRACTION / 20.0 * self.dec_value

    HEADER = (
        "eps",
        "dec_radius",
        "convention",
        "dec_value",
        "first",
        "second",
        "conditioned",
        "conditioning_mass",
        "risk_first",
        "risk_first_se",
        "risk_second",
        "risk_second_se",
        "tv_first",
        "tv_second",
        "tv_bound_first",
        "tv_bound_second",
        "guaranteed_risk",
    )

    def row(self) -> list:
        return [
            self.eps,
            self.dec_radius,
            self.convention,
            self.dec_value,
            self.first,
            self.second,
            self.conditioned,
            self.conditioning_mass,
            self.risks[0],
            self.risk_se[0],
            self.risks[1],
            self.risk_se[1],
            self.tv_to_reference[0],
            self.tv_to_reference[1],
            self.tv_bound[0],
            self.tv_bound[1],
            self.guaranteed_risk,
        ]


def _feasible(divs: np.ndarray, q: np.ndarray, p: np.ndarray, eps: float) -> np.ndarray:
    bound = eps * eps + BALL_SLACK
    return np.flatnonzero((divs @ q <= bound) & (divs @ p <= bound))


def _argmax_first(values: np.ndarray, candidates: np.ndarray) -> int:
    best = candidates[0]
    for m in candidates[1:]:
        if values[m] > values[best]:
            best = m
    return int(best)


def adversary_hard_pair_pac(
    model_class: ModelClass,
    runner: PacRunner,
    ref: FiniteModel,
    horizon: int,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    eps: float | None = None,
    convention: str = "proof",
    risk_budget: int | None = None,
    require_conditioning: bool = False,
) -> tuple[int, int, HardPairReport]:
    """Select two hard models for ``runner`` and measure its risk under each.

    Parameters
    ----------
    model_class
        Finite class the pair is drawn from.
    runner
        Maps ``(environment model, seed)`` to the learner's behavior.
    ref
        Reference model; need not belong to the class.
    horizon
        Number of rounds the learner is given (sets the default radius).
    budget
        Monte Carlo runs under the reference.
    eps
        Radius of the feasibility constraint; defaults to
        :func:`lower_bound_radius` under ``convention``.
    risk_budget
        Monte Carlo runs under each hard model (defaults to ``budget``).
    require_conditioning
        When the mass left after removing the first model's large-gap
        decisions is below ``MIN_CONDITIONING_MASS`` the second model is
        normally the runner-up of the first selection; with this flag the
        situation raises instead.

    Returns
    -------
    tuple
        ``(first index, second index, report)``.
    """
    if not ref.same_spaces(model_class[0]):
        raise ValueError("reference model does not share the class spaces")
    radius = lower_bound_radius(horizon, model_class, convention) if eps is None else float(eps)
    if radius <= 0:
        raise ValueError("eps must be positive")
    dec_radius = radius / math.sqrt(2.0)
    dec_value = constrained_dec(model_class, ref, dec_radius, "pac").value
    threshold = GAP_FRACTION * dec_value

    behavior = estimate_behavior(runner, ref, budget, seed, tag=0)
    p, q = behavior.final, behavior.exploration
    divs = np.array([decision_divergences(m, ref) for m in model_class])
    gaps = np.array([gap_vector(m) for m in model_class])

    if len(model_class) == 1:
        feasible = np.array([0])
    else:
        feasible = _feasible(divs, q, p, radius)
    if feasible.size == 0:
        raise AdversaryError(
            f"DEC condition unmet at eps={radius!r}: no model is within eps of the reference "
            "under both the exploration and the final-decision distributions"
        )
    first = _argmax_first(gaps @ p, feasible)
    keep = gaps[first] < threshold
    mass = float(p[keep].sum())
    conditioned = mass >= MIN_CONDITIONING_MASS and len(model_class) > 1
    if conditioned:
        p_cond = np.where(keep, p, 0.0) / mass
        feasible2 = _feasible(divs, q, p_cond, radius)
        if feasible2.size == 0:
            raise AdversaryError(f"DEC condition unmet at eps={radius!r} for the conditioned distribution")
        second = _argmax_first(gaps @ p_cond, feasible2)
    else:
        if require_conditioning and len(model_class) > 1:
            raise AdversaryError(f"conditioning mass {mass!r} is below {MIN_CONDITIONING_MASS}")
        others = feasible[feasible != first]
        second = _argmax_first(gaps @ p, others) if others.size else first

    rb = budget if risk_budget is None else risk_budget
    risks, risk_se, tvs, bounds = [], [], [], []
    log_c = log_factor(horizon, model_class, convention)
    for tag, m in ((1, first), (2, second)):
        under = estimate_behavior(runner, model_class[m], rb, seed, tag=tag)
        risks.append(float(gaps[m] @ under.final))
        risk_se.append(float(math.sqrt(np.sum((gaps[m] * under.final_se) ** 2))))
        tvs.append(tv(under.final, p))
        bounds.append(math.sqrt(max(log_c * horizon * float(divs[m] @ q), 0.0)))
    report = HardPairReport(
        eps=radius,
        dec_radius=dec_radius,
        convention=convention,
        log_factor=log_c,
        dec_value=dec_value,
        gap_threshold=threshold,
        first=first,
        second=second,
        conditioned=conditioned,
        conditioning_mass=mass,
        feasible=tuple(int(i) for i in feasible),
        reference=behavior,
        risks=(risks[0], risks[1]),
        risk_se=(risk_se[0], risk_se[1]),
        tv_to_reference=(tvs[0], tvs[1]),
        tv_bound=(bounds[0], bounds[1]),
    )
    return first, second, report
