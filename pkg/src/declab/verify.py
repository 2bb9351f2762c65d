"""Registry of numerical inequalities checked on generated instances.

Each entry evaluates ``left <= right`` on instances derived from an integer
seed and returns one record per evaluated inequality.  Constrained DEC values
enter through their certified bounds: the side that must be small uses the
upper bound and the side that must be large uses the lower bound, so a
passing record holds for the exact values as well.  A record passes when
``right - left >= -TOLERANCE``.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import rng as rngmod
from .dec import (
    GAMMA_GRID,
    HullGrid,
    adversary_matrices,
    bayesian_offset_dec,
    constrained_dec,
    constrained_from_matrices,
    hull_sup_dec,
    lagrangian_bound,
    offset_dec,
    offset_pac_from_matrices,
    offset_regret_from_matrices,
    randomized_dec,
    solve_game,
    gap_matrix,
)
from .divergence import hellinger_sq, tv, tv_ub_check, randomized_divergence_matrix
from .estimation import ExpWeightsOracle, batch_error_check
from .models import (
    FiniteModel,
    ModelClass,
    gap_vector,
    localize,
    make_random_class,
    make_revealing_class,
    mixture_of,
)

TOLERANCE = 1e-7


@dataclass(frozen=True)
class CheckRecord:
    name: str
    anchor: str
    seed: int
    left: float
    right: float
    detail: str = ""

    @property
    def margin(self) -> float:
        return self.right - self.left

    @property
    def passed(self) -> bool:
        return self.margin >= -TOLERANCE


@dataclass
class VerificationReport:
    records: list[CheckRecord] = field(default_factory=list)
    not_applicable: dict[str, int] = field(default_factory=dict)

    @property
    def failures(self) -> list[CheckRecord]:
        return [r for r in self.records if not r.passed]

    @property
    def passed(self) -> bool:
        return not self.failures

    def summary(self) -> dict[str, dict[str, float]]:
        """Per-inequality counts, instance seeds covered and worst margin."""
        out: dict[str, dict[str, float]] = {}
        for r in self.records:
            entry = out.setdefault(r.name, {"records": 0, "failures": 0, "seeds": set(), "worst_margin": math.inf})
            entry["records"] += 1
            entry["failures"] += int(not r.passed)
            entry["seeds"].add(r.seed)
            entry["worst_margin"] = min(entry["worst_margin"], r.margin)
        for entry in out.values():
            entry["seeds"] = len(entry["seeds"])
        return out

    HEADER = ("name", "anchor", "seed", "left", "right", "margin", "passed", "detail")

    def rows(self) -> list[list]:
        return [[r.name, r.anchor, r.seed, r.left, r.right, r.margin, r.passed, r.detail] for r in self.records]


@dataclass(frozen=True)
class Inequality:
    name: str
    anchor: str
    description: str
    run: Callable[[int], list[tuple[float, float, str]] | None]
    core: bool = True


REGISTRY: dict[str, Inequality] = {}


def register(name: str, anchor: str, description: str, core: bool = True):
    """Add a check to the registry.

    The decorated function maps a seed to a list of ``(left, right, detail)``
    triples, or ``None`` when no applicable instance exists for that seed.
    ``core`` marks the checks that form the standard suite.
    """

    def wrap(fn):
        if name in REGISTRY:
            raise ValueError(f"duplicate inequality {name!r}")
        REGISTRY[name] = Inequality(name, anchor, description, fn, core)
        return fn

    return wrap


def list_inequalities() -> list[Inequality]:
    return list(REGISTRY.values())


def core_names() -> list[str]:
    return [q.name for q in REGISTRY.values() if q.core]


def run_suite(names: Sequence[str] | None, seeds: Iterable[int]) -> VerificationReport:
    """Run the named checks (all core checks when ``names`` is empty) on every seed."""
    names = list(names) if names else core_names()
    unknown = [n for n in names if n not in REGISTRY]
    if unknown:
        raise KeyError(f"unknown inequality names: {', '.join(unknown)}")
    report = VerificationReport()
    seeds = list(seeds)
    for name in names:
        entry = REGISTRY[name]
        for seed in seeds:
            out = entry.run(int(seed))
            if out is None:
                report.not_applicable[name] = report.not_applicable.get(name, 0) + 1
                continue
            for left, right, detail in out:
                report.records.append(CheckRecord(name, entry.anchor, int(seed), float(left), float(right), detail))
    return report


# ---------------------------------------------------------------------------
# Instance generation
# ---------------------------------------------------------------------------

MAX_DECISIONS = 5
MAX_MODELS = 8
REF_KINDS = ("member", "hull", "arbitrary")


def _stream(name: str, seed: int, *path: int) -> np.random.Generator:
    return rngmod.stream(seed, rngmod.HARNESS, zlib.crc32(name.encode()), *path)


def random_instance(seed: int, max_decisions: int = MAX_DECISIONS, max_models: int = MAX_MODELS) -> ModelClass:
    """Random Bernoulli-reward class with 2..max decisions and 2..max models."""
    rng = rngmod.stream(seed, rngmod.GENERATOR)
    decisions = int(rng.integers(2, max_decisions + 1))
    models = int(rng.integers(2, max_models + 1))
    concentration = float(rng.choice([0.3, 1.0, 3.0]))
    return make_random_class(seed, decisions, models, concentration=concentration)


def random_model_like(model_class: ModelClass, rng: np.random.Generator) -> FiniteModel:
    """A random model over the class spaces (typically outside its hull)."""
    k = model_class.decision_count
    width = max(model_class.obs_count, 1)
    outcomes = len(model_class.reward_support) * width
    kernel = rng.dirichlet(np.ones(outcomes), size=k).reshape(k, len(model_class.reward_support), width)
    return FiniteModel(model_class.reward_support, model_class.obs_count, kernel)


def random_reference(model_class: ModelClass, rng: np.random.Generator, kind: str) -> FiniteModel:
    if kind == "member":
        return model_class[int(rng.integers(len(model_class)))]
    if kind == "hull":
        return mixture_of(model_class, rng.dirichlet(np.ones(len(model_class))))
    return random_model_like(model_class, rng)


def _setup(name: str, seed: int, kinds: Sequence[str] = REF_KINDS):
    model_class = random_instance(seed)
    rng = _stream(name, seed)
    kind = kinds[seed % len(kinds)]
    ref = random_reference(model_class, rng, kind)
    return model_class, ref, rng, kind


def _eps(rng: np.random.Generator) -> float:
    return float(rng.choice([0.1, 0.2, 0.3, 0.5, 0.7, 0.9, 1.1]))


def _gamma(rng: np.random.Generator) -> float:
    return float(rng.choice([0.5, 1.0, 2.0, 4.0, 8.0, 32.0]))


def _lower(dec) -> float:
    return 0.0 if dec is None else dec.lower


def _constrained_or_zero(model_class, ref, eps, kind="regret", include_ref=False):
    if model_class is None and not include_ref:
        return None
    return constrained_dec(model_class, ref, eps, kind, include_ref=include_ref)


# ---------------------------------------------------------------------------
# DEC relations
# ---------------------------------------------------------------------------


@register(
    "lagrangian",
    "method of Lagrange multipliers to show",
    "constrained regret DEC <= min over gamma of offset DEC + gamma eps^2 (member reference)",
)
def _lagrangian(seed):
    model_class, ref, rng, _ = _setup("lagrangian", seed, ("member",))
    eps = _eps(rng)
    left = constrained_dec(model_class, ref, eps).upper
    return [(left, lagrangian_bound(model_class, ref, eps), f"eps={eps}")]


def _offset_envelope(model_class, ref, eps, kind, include_zero=False):
    G, H = adversary_matrices(model_class, ref)
    solver = offset_regret_from_matrices if kind == "regret" else offset_pac_from_matrices
    values = [max(solver(G, H, g).value, 0.0) + g * eps * eps for g in GAMMA_GRID]
    if include_zero:
        values.append(max(solve_game(G)[0], 0.0))
    return min(values)


@register(
    "prop-3.1",
    "the following slightly looser version",
    "constrained regret DEC with the reference added <= 8 min_gamma (offset DEC v 0 + gamma eps^2) + 7 eps",
)
def _constrained_vs_offset_with_reference(seed):
    model_class, ref, rng, kind = _setup("prop-3.1", seed)
    eps = _eps(rng)
    left = constrained_dec(model_class, ref, eps, include_ref=True).upper
    right = 8.0 * _offset_envelope(model_class, ref, eps, "regret") + 7.0 * eps
    return [(left, right, f"ref={kind} eps={eps}")]


@register(
    "prop-3.2-upper",
    "equivalent up to logarithmic factors",
    "constrained PAC DEC <= min over gamma >= 0 of (PAC offset DEC v 0 + gamma eps^2)",
)
def _pac_constrained_vs_offset(seed):
    model_class, ref, rng, kind = _setup("prop-3.2-upper", seed)
    eps = _eps(rng)
    left = constrained_dec(model_class, ref, eps, "pac").upper
    right = _offset_envelope(model_class, ref, eps, "pac", include_zero=True)
    return [(left, right, f"ref={kind} eps={eps}")]


def pac_offset_radius_grid(gamma: float) -> list[float]:
    """Radii at which the PAC offset-to-constrained bound is evaluated.

    Covers the dyadic radii ``2**(-i/2)`` for ``i < 2 ceil(log 2 gamma)``
    plus a tiny radius; restricting the supremum to a finite grid only
    lowers the right-hand side.
    """
    levels = 2 * math.ceil(math.log(2.0 * gamma))
    grid = [2.0 ** (-i / 2.0) for i in range(levels + 1)] + [1e-3, math.sqrt(2.0)]
    return sorted(set(grid))


@register(
    "prop-3.2-lower",
    "equivalent up to logarithmic factors",
    "PAC offset DEC at gamma (4L + 1) <= 2/gamma + sup over eps of (PAC constrained DEC - gamma eps^2 / 4)",
)
def _pac_offset_vs_constrained(seed):
    model_class, ref, rng, kind = _setup("prop-3.2-lower", seed)
    gamma = float(rng.choice([1.0, 2.0, 4.0, 8.0]))
    levels = 2 * math.ceil(math.log(2.0 * gamma))
    left = offset_dec(model_class, ref, gamma * (4 * levels + 1), "pac").value
    sup = max(
        constrained_dec(model_class, ref, e, "pac").lower - gamma * e * e / 4.0 for e in pac_offset_radius_grid(gamma)
    )
    return [(left, 2.0 / gamma + sup, f"ref={kind} gamma={gamma} L={levels}")]


@register(
    "prop-3.3",
    "quantitatively weaker converse to",
    "offset regret DEC at gamma <= constrained regret DEC at radius gamma^(-1/2)",
)
def _offset_vs_constrained_at_matched_radius(seed):
    model_class, ref, rng, kind = _setup("prop-3.3", seed)
    gamma = _gamma(rng)
    left = offset_dec(model_class, ref, gamma).value
    right = constrained_dec(model_class, ref, gamma**-0.5).lower
    return [(left, right, f"ref={kind} gamma={gamma}")]


@register(
    "prop-3.5",
    "Localization for PAC",
    "PAC DEC at eps <= PAC DEC at sqrt(3) eps on the class localized at sqrt(3) eps + PAC DEC at sqrt(6) eps",
)
def _pac_localization(seed):
    model_class, ref, rng, kind = _setup("prop-3.5", seed)
    eps = _eps(rng)
    left = constrained_dec(model_class, ref, eps, "pac").upper
    alpha = math.sqrt(3.0) * eps + constrained_dec(model_class, ref, math.sqrt(6.0) * eps, "pac").lower
    sub, kept = localize(model_class, ref, alpha)
    right = _lower(_constrained_or_zero(sub, ref, math.sqrt(3.0) * eps, "pac"))
    return [(left, right, f"ref={kind} eps={eps} alpha={alpha:.4g} kept={len(kept)}")]


REGULARITY_SCALE = 2.0


@register(
    "prop-3.6",
    "Localization for regret",
    "on instances whose DEC ratio between eps and 2 eps is below 4: DEC(eps) <= C_loc DEC(2 eps) on the localized class",
)
def _regret_localization(seed):
    C = REGULARITY_SCALE
    rng = _stream("prop-3.6", seed)
    model_class = random_instance(seed)
    # Several draws per seed; the first one that meets the regularity
    # requirement at its radius is checked.
    for attempt in range(24):
        ref = random_reference(model_class, rng, REF_KINDS[(seed + attempt) % 3])
        eps = _eps(rng)
        small = constrained_dec(model_class, ref, eps)
        big = constrained_dec(model_class, ref, C * eps)
        if small.lower <= 0.0:
            continue
        ratio = big.upper / small.lower
        if ratio >= C * C:
            continue
        c_loc = 1.0 / (1.0 / ratio - 1.0 / (C * C))
        alpha = C * eps + big.lower
        sub, kept = localize(model_class, ref, alpha)
        right = c_loc * _lower(_constrained_or_zero(sub, ref, C * eps))
        return [(small.upper, right, f"eps={eps} c_reg^2={ratio:.4g} C_loc={c_loc:.4g} kept={len(kept)}")]
    return None


@register(
    "lemma-localization-core",
    "Fix any",
    "DEC(eps / C) <= DEC(eps) / C^2 + DEC(eps) on the class localized at eps + DEC(eps), for C >= sqrt 2",
)
def _localization_core(seed):
    model_class, ref, rng, kind = _setup("lemma-localization-core", seed)
    eps = _eps(rng)
    out = []
    full = constrained_dec(model_class, ref, eps)
    alpha = eps + full.lower
    sub, kept = localize(model_class, ref, alpha)
    local = _lower(_constrained_or_zero(sub, ref, eps))
    for C in (math.sqrt(2.0), 2.0, 4.0):
        left = constrained_dec(model_class, ref, eps / C).upper
        out.append((left, full.lower / (C * C) + local, f"ref={kind} eps={eps} C={C:.4g}"))
    return out


def _offset_on(adversary: ModelClass | None, ref: FiniteModel, gamma: float) -> float:
    G, H = adversary_matrices(adversary, ref, include_ref=True)
    return offset_regret_from_matrices(G, H, gamma).value


@register(
    "prop-3.7",
    "which in particular yields",
    "offset DEC of the localized class plus the reference <= constrained DEC at sqrt(2 alpha / gamma) + 1/(2 gamma)",
)
def _localized_offset_vs_constrained(seed):
    model_class, ref, rng, kind = _setup("prop-3.7", seed)
    gamma = _gamma(rng)
    alpha = float(rng.choice([0.01, 0.05, 0.1, 0.3, 0.6]))
    eps = _eps(rng)
    sub, kept = localize(model_class, ref, alpha)
    left = _offset_on(sub, ref, gamma)
    radius = math.sqrt(2.0 * alpha / gamma)
    right = constrained_dec(model_class, ref, radius, include_ref=True).lower + 1.0 / (2.0 * gamma)
    general = constrained_dec(model_class, ref, eps, include_ref=True).lower + max(
        0.0, alpha + 1.0 / (2.0 * gamma) - gamma * eps * eps / 2.0
    )
    detail = f"ref={kind} gamma={gamma} alpha={alpha} kept={len(kept)}"
    return [(left, right, detail), (left, general, detail + f" eps={eps}")]


@register(
    "prop-3.9-chain",
    "is sandwiched between",
    "offset DEC at gamma <= randomized offset DEC at gamma/4 (worst prior) <= offset DEC of the prior mean at gamma/4",
)
def _randomized_offset_chain(seed):
    model_class, ref, rng, kind = _setup("prop-3.9-chain", seed)
    gamma = _gamma(rng)
    top = offset_dec(model_class, ref, gamma).value
    prior = bayesian_offset_dec(model_class, ref, gamma).prior
    middle = randomized_dec(model_class, prior, gamma / 4.0, "regret_offset").value
    bottom = offset_dec(model_class, mixture_of(model_class, prior), gamma / 4.0).value
    detail = f"ref={kind} gamma={gamma}"
    return [(top, middle, detail + " step=randomize"), (middle, bottom, detail + " step=jensen")]


@register(
    "prop-3.10",
    "largely inconsequential for PAC",
    "PAC DEC with the reference added at eps <= PAC DEC at sqrt(3) eps + 4 eps",
)
def _pac_reference_inclusion(seed):
    model_class, ref, rng, kind = _setup("prop-3.10", seed)
    eps = _eps(rng)
    left = constrained_dec(model_class, ref, eps, "pac", include_ref=True).upper
    right = constrained_dec(model_class, ref, math.sqrt(3.0) * eps, "pac").lower + 4.0 * eps
    return [(left, right, f"ref={kind} eps={eps}")]


@register(
    "prop-C.1",
    "which accommodates randomized estimators",
    "randomized offset DEC of the localized class plus the prior mean <= randomized constrained DEC at sqrt(2 alpha/gamma) + 1/(2 gamma)",
)
def _randomized_localized_offset(seed):
    model_class = random_instance(seed)
    rng = _stream("prop-C.1", seed)
    nu = rng.dirichlet(np.ones(len(model_class)))
    gamma = _gamma(rng)
    alpha = float(rng.choice([0.01, 0.05, 0.1, 0.3, 0.6]))
    mean = mixture_of(model_class, nu)
    sub, kept = localize(model_class, mean, alpha)
    targets = ModelClass(((sub.models if sub is not None else ()) + (mean,)))
    G = gap_matrix(targets)
    H = randomized_divergence_matrix(model_class, nu, targets=targets)
    left = offset_regret_from_matrices(G, H, gamma).value
    radius = math.sqrt(2.0 * alpha / gamma)
    right = randomized_dec(model_class, nu, radius, "regret_constrained", include_mean=True).lower + 1.0 / (2.0 * gamma)
    return [(left, right, f"gamma={gamma} alpha={alpha} kept={len(kept)}")]


@register(
    "prop-C.2",
    "PAC DEC with Greedy Decisions",
    "PAC DEC <= greedy PAC DEC <= PAC DEC at sqrt(3) eps + 4 eps",
)
def _greedy_pac_sandwich(seed):
    model_class, ref, rng, kind = _setup("prop-C.2", seed)
    eps = _eps(rng)
    pac = constrained_dec(model_class, ref, eps, "pac")
    greedy = constrained_dec(model_class, ref, eps, "pac_greedy")
    wide = constrained_dec(model_class, ref, math.sqrt(3.0) * eps, "pac")
    detail = f"ref={kind} eps={eps}"
    return [(pac.upper, greedy.lower, detail + " side=lower"), (greedy.upper, wide.lower + 4.0 * eps, detail + " side=upper")]


@register(
    "lemma-C.1",
    "Since rewards are in",
    "E_p |f^M - f^ref| <= sqrt(E_p D^2(M, ref)) for rewards in [0, 1]",
)
def _value_gap_vs_hellinger(seed):
    model_class, ref, rng, kind = _setup("lemma-C.1", seed, ("arbitrary",))
    out = []
    for m in model_class:
        p = rng.dirichlet(np.ones(model_class.decision_count))
        left = float(np.abs(m.means - ref.means) @ p)
        d2 = float(np.sum((np.sqrt(m.flat()) - np.sqrt(ref.flat())) ** 2, axis=1) @ p)
        out.append((left, math.sqrt(max(d2, 0.0)), f"ref={kind}"))
    return out


@register(
    "lemma-C.2",
    "Fix a model class",
    "DEC(eps / sqrt 2) <= DEC(eps) on models whose value at the reference's best decision is within eps + eps",
)
def _ref_gap_localization(seed):
    model_class, ref, rng, kind = _setup("lemma-C.2", seed)
    eps = _eps(rng)
    left = constrained_dec(model_class, ref, eps / math.sqrt(2.0)).upper
    sub, kept = localize(model_class, ref, eps, "ref_gap")
    right = _lower(_constrained_or_zero(sub, ref, eps)) + eps
    return [(left, right, f"ref={kind} eps={eps} kept={len(kept)}")]


@register(
    "lemma-C.3",
    "For a model class and reference model",
    "double-ball PAC DEC(eps) <= PAC DEC(eps) <= double-ball PAC DEC(sqrt 2 eps)",
)
def _double_ball_pac_sandwich(seed):
    model_class, ref, rng, kind = _setup("lemma-C.3", seed)
    eps = _eps(rng)
    alt = constrained_dec(model_class, ref, eps, "pac_alt")
    pac = constrained_dec(model_class, ref, eps, "pac")
    alt_wide = constrained_dec(model_class, ref, math.sqrt(2.0) * eps, "pac_alt")
    detail = f"ref={kind} eps={eps}"
    return [(alt.upper, pac.lower, detail + " side=lower"), (pac.upper, alt_wide.lower, detail + " side=upper")]


@register(
    "minimax-swap",
    "Minimax swap",
    "offset regret DEC equals its prior-side (max-min) form",
    core=False,
)
def _minimax(seed):
    model_class, ref, rng, kind = _setup("minimax-swap", seed)
    out = []
    for gamma in (0.5, 2.0, 8.0, 32.0):
        a = offset_dec(model_class, ref, gamma).value
        b = bayesian_offset_dec(model_class, ref, gamma).value
        out.append((a, b, f"gamma={gamma} side=primal<=dual"))
        out.append((b, a, f"gamma={gamma} side=dual<=primal"))
    return out


# ---------------------------------------------------------------------------
# Divergence and estimation properties
# ---------------------------------------------------------------------------


def _random_pmfs(rng: np.random.Generator, count: int, size: int) -> np.ndarray:
    alpha = float(rng.choice([0.2, 1.0, 5.0]))
    return rng.dirichlet(np.full(size, alpha), size=count)


@register("tv-le-hellinger", "elementary property", "tv(a, b) <= sqrt(D^2(a, b)) on random pmfs", core=False)
def _tv_hel(seed):
    rng = _stream("tv-le-hellinger", seed)
    a, b = _random_pmfs(rng, 2, int(rng.integers(2, 8)))
    return [(tv(a, b), math.sqrt(hellinger_sq(a, b)), "")]


@register("triangle", "Triangle-type bound", "D^2(a, c) <= 2 D^2(a, b) + 2 D^2(b, c) on random pmfs", core=False)
def _triangle(seed):
    rng = _stream("triangle", seed)
    a, b, c = _random_pmfs(rng, 3, int(rng.integers(2, 8)))
    return [(hellinger_sq(a, c), 2.0 * hellinger_sq(a, b) + 2.0 * hellinger_sq(b, c), "")]


@register("convexity", "jointly convex", "squared Hellinger distance is jointly convex", core=False)
def _convexity(seed):
    rng = _stream("convexity", seed)
    a, a2, b, b2 = _random_pmfs(rng, 4, int(rng.integers(2, 8)))
    lam = float(rng.random())
    left = hellinger_sq(lam * a + (1 - lam) * a2, lam * b + (1 - lam) * b2)
    return [(left, lam * hellinger_sq(a, b) + (1 - lam) * hellinger_sq(a2, b2), f"lambda={lam:.4g}")]


@register(
    "chain-rule",
    "recall Lemma A.13 from",
    "transcript D^2 <= C(T) T E_qbar D^2 with the proof constant; statement-form slack reported in the detail",
    core=False,
)
def _chain_rule(seed):
    rng = _stream("chain-rule", seed)
    model_class = make_random_class(seed, 2, 2)
    horizon = int(rng.integers(1, 4))
    weights = rng.dirichlet(np.ones(2), size=8)

    def policy(history):
        return weights[len(history) % len(weights)] if not history else weights[(history[-1][0] + 2 * history[-1][1]) % 8]

    rep = tv_ub_check(policy, model_class[0], model_class[1], horizon)
    detail = f"T={horizon} convention=proof statement_slack={rep.slack_statement!r}"
    return [(rep.transcript_hellinger_sq, rep.log_factor_proof * horizon * rep.per_round_hellinger_sq, detail)]


@register(
    "online-to-batch",
    "online-to-batch conversion process",
    "error of the averaged estimate <= mean per-round error (convexity)",
    core=False,
)
def _online_to_batch(seed):
    model_class = random_instance(seed)
    rng = _stream("online-to-batch", seed)
    truth = model_class[int(rng.integers(len(model_class)))]
    oracle = ExpWeightsOracle(model_class)
    flat = truth.flat()
    estimates = []
    p = rng.dirichlet(np.ones(model_class.decision_count))
    for _ in range(20):
        estimates.append(oracle.predict())
        decision = rngmod.draw_index(rng, p)
        oracle.update_index(decision, rngmod.draw_index(rng, flat[decision]))
    averaged, mean = batch_error_check(estimates, truth, p)
    return [(averaged, mean, "rounds=20")]


# ---------------------------------------------------------------------------
# Revealing-decision class
# ---------------------------------------------------------------------------


def revealing_offset_value(alpha: float, beta: float, arms: int, gamma: float) -> float:
    """Offset regret DEC of the revealing class against its uninformative member.

    Any permutation of the arms maps the class to itself and fixes the
    uninformative member, and the objective is convex in the decision
    distribution, so an optimal distribution puts equal mass ``a`` on every
    arm and ``b = 1 - A a`` on the revealing decision.  The DEC is then the
    minimum over ``b`` in [0, 1] of the larger of two affine functions.
    """
    reveal_div = 2.0 * beta * (1.0 - 1.0 / math.sqrt(arms))

    def informative(b: float) -> float:
        a = (1.0 - b) / arms
        return alpha * (arms - 1) * a + (0.5 + alpha) * b - gamma * (2.0 * a + reveal_div * b)

    def uninformative(b: float) -> float:
        return 0.5 * b

    candidates = [0.0, 1.0]
    # Crossing point of the two affine functions.
    s0, s1 = informative(0.0), informative(1.0)
    u0, u1 = uninformative(0.0), uninformative(1.0)
    denom = (s1 - s0) - (u1 - u0)
    if denom != 0.0:
        b = (u0 - s0) / denom
        if 0.0 <= b <= 1.0:
            candidates.append(b)
    return min(max(informative(b), uninformative(b)) for b in candidates)


def ex_lb_bound(alpha: float, beta: float, arms: int, gamma: float) -> float:
    return alpha / (2.0 + 8.0 * gamma * beta) - 4.0 * gamma / arms


@register(
    "ex-lb",
    "Let",
    "offset DEC of the revealing class against its uninformative member >= alpha/(2 + 8 gamma beta) - 4 gamma / A",
    core=False,
)
def _ex_lb(seed):
    rng = _stream("ex-lb", seed)
    alpha = float(rng.choice([0.05, 0.1, 0.2]))
    beta = float(rng.choice([0.1, 0.25, 0.5]))
    arms = int(rng.integers(2, 6))
    model_class = make_revealing_class(alpha, beta, arms)
    ref = model_class[arms]
    out = []
    for gamma in (1.0, 2.0, 4.0, 8.0):
        value = offset_dec(model_class, ref, gamma).value
        out.append((ex_lb_bound(alpha, beta, arms, gamma), value, f"alpha={alpha} beta={beta} A={arms} gamma={gamma}"))
    return out


@register(
    "ex-ub",
    "Upper bound on constrained",
    "hull-sup constrained regret DEC of the revealing class <= 30 eps^2 / beta (grid of references)",
    core=False,
)
def _ex_ub(seed):
    rng = _stream("ex-ub", seed)
    alpha, beta, arms = 0.5, 0.25, 4
    model_class = make_revealing_class(alpha, beta, arms)
    eps = float(rng.uniform(0.02, 0.2))
    grid = HullGrid(resolution=2, random_points=8, seed=seed)
    found = hull_sup_dec(model_class, eps, "regret", grid)
    return [(found.upper_on_grid, 30.0 * eps * eps / beta, f"eps={eps:.4g}")]


def revealing_direction_parameters(gamma: float) -> tuple[float, float, int]:
    """Parameters ``(alpha, beta, A)`` of the construction at scale ``gamma``."""
    beta = 1.0 / math.sqrt(gamma)
    return 0.5, beta, math.ceil(256.0 * gamma * gamma / beta)


@register(
    "prop-3.4-direction",
    "there exists a model class",
    "offset DEC against the uninformative member >= min(gamma^-1/2, 1)/64 at the construction's parameters",
    core=False,
)
def _revealing_direction(seed):
    out = []
    for gamma in (1.0, 4.0):
        alpha, beta, arms = revealing_direction_parameters(gamma)
        value = revealing_offset_value(alpha, beta, arms, gamma)
        detail = f"gamma={gamma} A={arms}"
        out.append((min(gamma**-0.5, 1.0) / 64.0, value, detail))
        out.append((ex_lb_bound(alpha, beta, arms, gamma), value, detail + " bound=ex_lb"))
    return out


# ---------------------------------------------------------------------------
# Union counterexample
# ---------------------------------------------------------------------------


def make_union_counterexample(alpha: float, arms: int) -> ModelClass:
    """Bandit with a probing decision that emits independent coins.

    Arms ``0..A-1`` pay ``1/2 + alpha 1{arm = a}`` deterministically with a
    null observation.  The probing decision (index ``A``) pays 0 and emits
    ``A`` coins, coin ``i`` being Bernoulli ``1/2 + alpha 1{i = a}``; the
    observation index is ``1 +`` the coin vector read as a binary number.
    Only small ``A`` can be materialized; the closed forms below handle any
    ``A``.
    """
    support = tuple(sorted({0.0, 0.5, 0.5 + alpha}))
    width = 1 + 2**arms
    bits = ((np.arange(2**arms)[:, None] >> np.arange(arms)[None, :]) & 1).astype(float)
    models = []
    for a in range(arms):
        kernel = np.zeros((arms + 1, len(support), width))
        for pi in range(arms):
            kernel[pi, support.index(0.5 + alpha * (pi == a)), 0] = 1.0
        heads = np.full(arms, 0.5)
        heads[a] += alpha
        probs = np.prod(np.where(bits == 1.0, heads, 1.0 - heads), axis=1)
        kernel[arms, support.index(0.0), 1:] = probs / probs.sum()
        models.append(FiniteModel(support, width, kernel))
    return ModelClass(tuple(models))


def _log_binom(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def union_probe_divergence(alpha: float, arms: int) -> float:
    """Squared Hellinger distance at the probe between one model and the uniform mixture.

    Both laws depend on a coin vector only through its own coin and the
    number of heads, so the affinity is a sum over head counts.
    """
    up, down = 1.0 + 2.0 * alpha, 1.0 - 2.0 * alpha
    affinity = 0.0
    for k in range(arms + 1):
        mix = (k * up + (arms - k) * down) / arms
        base = -arms * math.log(2.0)
        if k >= 1:
            affinity += math.exp(base + _log_binom(arms - 1, k - 1)) * math.sqrt(up * mix)
        if k <= arms - 1:
            affinity += math.exp(base + _log_binom(arms - 1, k)) * math.sqrt(down * mix)
    return max(2.0 * (1.0 - affinity), 0.0)


def _bernoulli_sq(a: float, b: float) -> float:
    return (math.sqrt(a) - math.sqrt(b)) ** 2 + (math.sqrt(1.0 - a) - math.sqrt(1.0 - b)) ** 2


def union_with_reference_value(alpha: float, arms: int, eps: float) -> float:
    """Constrained regret DEC of the union class plus its uniform mixture, at that mixture.

    For a fixed probe mass ``s`` the least-played arm is the binding model:
    its gap is the largest and its divergence the smallest (its own arm is
    at least as far from the mixture as any other arm), and spreading
    the arm mass evenly lowers that gap while keeping every other model
    out.  So the DEC is the infimum over ``s`` of
    ``max(mixture gap, gap of an evenly played arm if it is in the ball)``.
    """
    probe = union_probe_divergence(alpha, arms)
    other = _bernoulli_sq(0.0, 1.0 / arms)
    own = _bernoulli_sq(1.0, 1.0 / arms)

    def mixture_gap(s):
        return (0.5 + alpha / arms) * s

    def arm_gap(s):
        return alpha * (1.0 - s) * (1.0 - 1.0 / arms) + (0.5 + alpha) * s

    def arm_div(s):
        return s * probe + (1.0 - s) * (own + (arms - 1) * other) / arms

    d0, d1 = arm_div(0.0), arm_div(1.0)
    # Probe masses whose evenly played arm is inside the ball form an interval.
    if d1 == d0:
        inside = (0.0, 1.0) if d0 <= eps * eps else None
    else:
        cut = (eps * eps - d0) / (d1 - d0)
        if d1 < d0:
            inside = (max(cut, 0.0), 1.0) if cut <= 1.0 else None
        else:
            inside = (0.0, min(cut, 1.0)) if cut >= 0.0 else None
    candidates = []
    if inside is None:
        return mixture_gap(0.0)
    lo, hi = inside
    both = lambda s: max(mixture_gap(s), arm_gap(s))
    points = [lo, hi]
    denom = (0.5 + alpha / arms) - (0.5 + alpha - alpha * (1.0 - 1.0 / arms))
    if denom != 0.0:
        cross = alpha * (1.0 - 1.0 / arms) / denom
        if lo <= cross <= hi:
            points.append(cross)
    candidates.extend(both(s) for s in points)
    # Outside the interval only the mixture contributes; its gap grows with s.
    if lo > 0.0:
        candidates.append(mixture_gap(0.0))
    elif hi < 1.0:
        candidates.append(mixture_gap(hi))
    return min(candidates)


def union_hull_bound(alpha: float, eps: float) -> float:
    """Upper bound on the hull supremum of the constrained regret DEC without the reference.

    Against a mixture giving every model weight at most 2/3 the probe alone
    leaves no model within ``eps`` once the coin of the model differs enough;
    against a mixture with a model of weight at least 2/3 playing that model's
    arm excludes every other model.  When both separations exceed ``eps^2``
    the DEC is 0 at every hull point; otherwise playing any fixed arm gives
    at most ``alpha``.
    """
    probe_sep = _bernoulli_sq(0.5 + alpha, 0.5 + 2.0 * alpha / 3.0)
    arm_sep = _bernoulli_sq(0.0, 2.0 / 3.0)
    return 0.0 if min(probe_sep, arm_sep) > eps * eps else alpha


UNION_EPS_GRID = (0.005, 0.01, 0.02, 0.03)
UNION_SCALES = (1.0, 2.0)
#: Constant in the lower bound ``with_ref >= c' eps^(2/3)`` checked on the grid.
UNION_RATE_CONSTANT = 0.05


def union_parameters(eps: float, scale: float = 1.0) -> tuple[float, int]:
    """``(alpha, A)`` with ``alpha = scale eps^(2/3)`` and ``4/A <= eps^2/2``."""
    return min(scale * eps ** (2.0 / 3.0), 0.49), math.ceil(8.0 / (eps * eps))


@register(
    "regret-union-ordering",
    "sufficiently small, there exists a model class",
    "union class: hull-sup DEC without the reference is 0 while adding the uniform mixture gives a positive DEC",
    core=False,
)
def _union(seed):
    rng = _stream("regret-union-ordering", seed)
    eps = float(rng.choice(UNION_EPS_GRID))
    scale = float(rng.choice(UNION_SCALES))
    alpha, arms = union_parameters(eps, scale)
    without = union_hull_bound(alpha, eps)
    with_ref = union_with_reference_value(alpha, arms, eps)
    detail = f"eps={eps} alpha={alpha:.4g} A={arms}"
    return [
        (without, with_ref, detail + " side=ordering"),
        (UNION_RATE_CONSTANT * eps ** (2.0 / 3.0), with_ref, detail + " side=rate"),
    ]
