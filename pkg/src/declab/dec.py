"""Decision-Estimation Coefficients of finite model classes.

Every variant reduces to two matrices indexed by ``(adversary model, decision)``:

* ``G[m, pi]`` -- suboptimality of decision ``pi`` under model ``m``;
* ``H[m, pi]`` -- squared Hellinger distance between model ``m`` and the
  reference at decision ``pi`` (or its average over a reference
  distribution for the randomized variants).

Offset variants are single linear programs.  Constrained variants are
solved exactly by branch and bound over which models the player's
distribution pushes outside the Hellinger ball.  A model counts as excluded
only when its averaged divergence reaches ``eps**2 + margin``; running the
same search with ``margin = 0`` gives a relaxation, and the two runs bracket
the exact value (``lower <= value <= upper``).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .divergence import divergence_matrix, hellinger_rows, randomized_divergence_matrix
from .lp import clean_distribution, solve_lp
from .models import (
    DecisionDistribution,
    FiniteModel,
    ModelClass,
    best_decision,
    gap_vector,
    mixture_of,
)

MARGIN = 1e-9
ENUMERATION_CAP = 16
GAMMA_GRID = np.geomspace(1e-1, 1e4, 40)
REGRET_KINDS = ("regret",)
PAC_KINDS = ("pac", "pac_alt", "pac_greedy")


class SolverError(RuntimeError):
    """An LP that must be feasible was reported infeasible or unbounded."""


@dataclass(frozen=True)
class Diagnostics:
    """Bookkeeping attached to every DEC evaluation."""

    lp_solves: int = 0
    pivots: int = 0
    margin: float = 0.0
    lower: float = 0.0
    upper: float = 0.0
    method: str = "lp"


@dataclass(frozen=True)
class DecValue:
    """Result of a DEC evaluation with its witnesses."""

    value: float
    witness_p: DecisionDistribution
    witness_q: DecisionDistribution | None
    active_set: tuple[int, ...]
    diagnostics: Diagnostics
    variant: str = ""
    scale: float = 0.0
    prior: np.ndarray | None = field(default=None, compare=False)

    @property
    def lower(self) -> float:
        return self.diagnostics.lower

    @property
    def upper(self) -> float:
        return self.diagnostics.upper


class _Counter:
    __slots__ = ("lps", "pivots")

    def __init__(self) -> None:
        self.lps = 0
        self.pivots = 0

    def solve(self, *args, **kwargs):
        res = solve_lp(*args, **kwargs)
        self.lps += 1
        self.pivots += res.pivots
        return res


# ---------------------------------------------------------------------------
# Matrices
# ---------------------------------------------------------------------------


def gap_matrix(model_class: ModelClass) -> np.ndarray:
    means = model_class.means()
    return means.max(axis=1, keepdims=True) - means


def adversary_matrices(
    model_class: ModelClass | None,
    ref: FiniteModel,
    include_ref: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """Gap and divergence matrices of the adversary set.

    ``model_class`` may be ``None`` (an empty class); with ``include_ref`` the
    reference joins the adversary set with zero divergence to itself.
    """
    k = ref.decision_count
    if model_class is None:
        G = np.zeros((0, k))
        H = np.zeros((0, k))
    else:
        G = gap_matrix(model_class)
        H = divergence_matrix(model_class, ref)
    if include_ref:
        G = np.vstack([G, gap_vector(ref)[None, :]])
        H = np.vstack([H, np.zeros((1, k))])
    return G, H


def randomized_matrices(
    model_class: ModelClass,
    nu: np.ndarray,
    include_mean: bool = False,
) -> tuple[np.ndarray, np.ndarray, FiniteModel]:
    """Gap and averaged-divergence matrices for a reference distribution ``nu``."""
    nu = np.asarray(nu, dtype=float)
    mean_model = mixture_of(model_class, nu)
    G = gap_matrix(model_class)
    H = randomized_divergence_matrix(model_class, nu)
    if include_mean:
        extra = ModelClass((mean_model,))
        G = np.vstack([G, gap_vector(mean_model)[None, :]])
        H = np.vstack([H, randomized_divergence_matrix(model_class, nu, targets=extra)])
    return G, H, mean_model


# ---------------------------------------------------------------------------
# Offset variants
# ---------------------------------------------------------------------------


def _simplex_row(k: int, offset: int, width: int) -> np.ndarray:
    row = np.zeros(width)
    row[offset : offset + k] = 1.0
    return row


def solve_game(payoff: np.ndarray, counter: _Counter | None = None) -> tuple[float, np.ndarray]:
    """Value and minimizing mixed strategy of ``min_p max_m payoff[m] @ p``."""
    counter = counter or _Counter()
    n, k = payoff.shape
    if n == 0:
        return 0.0, np.full(k, 1.0 / k)
    if n == 1:
        j = int(np.argmin(payoff[0]))
        p = np.zeros(k)
        p[j] = 1.0
        return float(payoff[0, j]), p
    c = np.zeros(k + 1)
    c[k] = 1.0
    A_ub = np.hstack([payoff, -np.ones((n, 1))])
    res = counter.solve(c, A_ub, np.zeros(n), _simplex_row(k, 0, k + 1)[None, :], [1.0], free=[k])
    if not res.ok:
        raise SolverError(f"matrix game LP returned {res.status}")
    p = clean_distribution(res.x[:k])
    return float(np.max(payoff @ p)), p


def _finish(value, p, q, active, counter, variant, scale, lower=None, upper=None, method="lp", margin=0.0, prior=None):
    value = float(value)
    lower = value if lower is None else float(lower)
    upper = value if upper is None else float(upper)
    k = p.size
    return DecValue(
        value=value,
        witness_p=DecisionDistribution(p),
        witness_q=None if q is None else DecisionDistribution(q),
        active_set=tuple(int(i) for i in active),
        diagnostics=Diagnostics(counter.lps, counter.pivots, margin, min(lower, value), max(upper, value), method),
        variant=variant,
        scale=float(scale),
        prior=prior,
    )


def offset_regret_from_matrices(G: np.ndarray, H: np.ndarray, gamma: float) -> DecValue:
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    counter = _Counter()
    payoff = G - gamma * H
    value, p = solve_game(payoff, counter)
    active = np.flatnonzero(payoff @ p >= value - 1e-9)
    return _finish(value, p, None, active, counter, "offset-regret", gamma)


def offset_pac_from_matrices(G: np.ndarray, H: np.ndarray, gamma: float) -> DecValue:
    """``min_{p,q} max_m G[m] @ p - gamma * H[m] @ q`` as one LP."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    counter = _Counter()
    n, k = G.shape
    width = 2 * k + 1
    c = np.zeros(width)
    c[-1] = 1.0
    A_ub = np.hstack([G, -gamma * H, -np.ones((n, 1))])
    A_eq = np.vstack([_simplex_row(k, 0, width), _simplex_row(k, k, width)])
    res = counter.solve(c, A_ub, np.zeros(n), A_eq, [1.0, 1.0], free=[width - 1])
    if not res.ok:
        raise SolverError(f"PAC offset LP returned {res.status}")
    p = clean_distribution(res.x[:k])
    q = clean_distribution(res.x[k : 2 * k])
    scores = G @ p - gamma * (H @ q)
    value = float(scores.max())
    active = np.flatnonzero(scores >= value - 1e-9)
    return _finish(value, p, q, active, counter, "offset-pac", gamma)


def bayesian_regret_from_matrices(G: np.ndarray, H: np.ndarray, gamma: float) -> DecValue:
    """The max-min (prior) side: ``max_mu min_pi sum_m mu_m (G - gamma H)[m, pi]``."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    counter = _Counter()
    payoff = G - gamma * H
    n, k = payoff.shape
    c = np.zeros(n + 1)
    c[-1] = -1.0
    # s - mu @ payoff[:, pi] <= 0 for every decision.
    A_ub = np.hstack([-payoff.T, np.ones((k, 1))])
    res = counter.solve(c, A_ub, np.zeros(k), _simplex_row(n, 0, n + 1)[None, :], [1.0], free=[n])
    if not res.ok:
        raise SolverError(f"prior-side LP returned {res.status}")
    mu = clean_distribution(res.x[:n])
    responses = mu @ payoff
    value = float(responses.min())
    best = int(np.argmin(responses))
    p = np.zeros(k)
    p[best] = 1.0
    return _finish(value, p, None, np.flatnonzero(mu > 0), counter, "bayesian-offset-regret", gamma, prior=mu)


# ---------------------------------------------------------------------------
# Constrained variants: branch and bound over excluded sets
# ---------------------------------------------------------------------------


def _project_simplex(v: np.ndarray) -> np.ndarray:
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    rho = np.flatnonzero(u * np.arange(1, v.size + 1) > (css - 1.0))[-1]
    theta = (css[rho] - 1.0) / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def _ball_value(G: np.ndarray, H: np.ndarray, p: np.ndarray, threshold: float) -> tuple[float, np.ndarray]:
    """Worst in-ball suboptimality of ``p``; models reaching ``threshold`` are out."""
    inside = np.flatnonzero(H @ p < threshold - 1e-12)
    if inside.size == 0:
        return 0.0, inside
    return float(max(np.max(G[inside] @ p), 0.0)), inside


def _exclusion_lp(G_in, H_out, threshold, k, counter):
    """``min t`` s.t. ``G_in p <= t``, ``H_out p >= threshold``, ``p`` a pmf, ``t >= 0``."""
    n_in, n_out = G_in.shape[0], H_out.shape[0]
    c = np.zeros(k + 1)
    c[k] = 1.0
    A_ub = np.vstack([np.hstack([G_in, -np.ones((n_in, 1))]), np.hstack([-H_out, np.zeros((n_out, 1))])])
    b_ub = np.concatenate([np.zeros(n_in), np.full(n_out, -threshold)])
    res = counter.solve(c, A_ub, b_ub, _simplex_row(k, 0, k + 1)[None, :], [1.0])
    if res.status == "infeasible":
        return None
    if not res.ok:
        raise SolverError(f"exclusion LP returned {res.status}")
    p = clean_distribution(res.x[:k])
    return float(res.x[k]), p


def _bnb_regret(G, H, threshold, counter, best=(math.inf, None)):
    """Exact ``min_p max{G[m] @ p : H[m] @ p < threshold}`` (0 over an empty ball)."""
    n, k = G.shape
    reachable = H.max(axis=1) >= threshold
    always = [int(m) for m in np.flatnonzero(~reachable)]
    order = sorted((int(m) for m in np.flatnonzero(reachable)), key=lambda m: (-G[m].max(), m))
    best_value, best_p = best
    stack = [(tuple(always), (), 0)]
    while stack:
        included, excluded, depth = stack.pop()
        sol = _exclusion_lp(G[list(included)], H[list(excluded)], threshold, k, counter)
        if sol is None:
            continue
        bound, p = sol
        if bound >= best_value - 1e-12:
            continue
        value, _ = _ball_value(G, H, p, threshold)
        if value < best_value:
            best_value, best_p = value, p
        if value <= bound + 1e-12 or depth == len(order):
            continue
        m = order[depth]
        stack.append((included + (m,), excluded, depth + 1))
        stack.append((included, excluded + (m,), depth + 1))
    return best_value, best_p


def _max_margin_q(H_out: np.ndarray, k: int, counter: _Counter) -> tuple[float, np.ndarray]:
    """``max_q min_m H_out[m] @ q`` with its maximizer."""
    if H_out.shape[0] == 0:
        return math.inf, np.full(k, 1.0 / k)
    value, q = solve_game(-H_out, counter)
    return -value, q


def _bnb_pac(G_pac, H, threshold, counter, game: Callable[[tuple[int, ...]], tuple[float, np.ndarray]]):
    """``min over q-excludable sets E`` of ``game(complement of E)``."""
    n, k = H.shape
    reachable = H.max(axis=1) >= threshold
    always = tuple(int(m) for m in np.flatnonzero(~reachable))
    order = sorted((int(m) for m in np.flatnonzero(reachable)), key=lambda m: (-G_pac[m].max(), m))
    best = (math.inf, None, None, ())
    stack = [(always, (), 0)]
    while stack:
        included, excluded, depth = stack.pop()
        margin_value, q = _max_margin_q(H[list(excluded)], k, counter)
        if margin_value < threshold:
            continue
        bound, _ = game(tuple(sorted(included)))
        if bound >= best[0] - 1e-12:
            continue
        inside = tuple(int(m) for m in np.flatnonzero(H @ q < threshold - 1e-12))
        value, p = game(inside)
        if value < best[0]:
            best = (value, p, q, inside)
        if value <= bound + 1e-12 or depth == len(order):
            continue
        m = order[depth]
        stack.append((included + (m,), excluded, depth + 1))
        stack.append((included, excluded + (m,), depth + 1))
    return best


def _game_cache(G: np.ndarray, counter: _Counter, cache: dict | None = None):
    """Memoised game values over subsets of rows of ``G``.

    Passing the same ``cache`` dict across calls with an identical ``G``
    shares solved subgames between them.
    """
    cache = {} if cache is None else cache

    def game(models: tuple[int, ...]) -> tuple[float, np.ndarray]:
        if models not in cache:
            if not models:
                cache[models] = (0.0, None)
            else:
                value, p = solve_game(G[list(models)], counter)
                cache[models] = (max(value, 0.0), p)
        return cache[models]

    return game


def _maximal_excludable_sets(H: np.ndarray, threshold: float, counter: _Counter):
    """All inclusion-maximal sets that one distribution can push out of the ball."""
    n, k = H.shape
    reachable = [int(m) for m in np.flatnonzero(H.max(axis=1) >= threshold)]
    feasible: list[tuple[tuple[int, ...], np.ndarray]] = []

    def extend(current: tuple[int, ...], start: int, q: np.ndarray) -> None:
        grown = False
        for pos in range(start, len(reachable)):
            cand = current + (reachable[pos],)
            value, q_new = _max_margin_q(H[list(cand)], k, counter)
            if value >= threshold:
                grown = True
                extend(cand, pos + 1, q_new)
        if not grown:
            feasible.append((current, q))

    extend((), 0, np.full(k, 1.0 / k))
    # Keep only sets that are not contained in another feasible set.
    sets = [set(s) for s, _ in feasible]
    maximal = []
    for i, (s, q) in enumerate(feasible):
        if not any(i != j and sets[i] < sets[j] for j in range(len(sets))):
            maximal.append((s, q))
    return maximal


def _search(G, H, eps, kind, margin, ref_decision, counter, cache=None):
    """Run one exact search at the given margin; returns (value, p, q, active)."""
    n, k = G.shape
    threshold = eps * eps + margin
    if n == 0:
        return 0.0, np.full(k, 1.0 / k), None, ()
    if kind == "regret":
        value, p = _bnb_regret(G, H, threshold, counter)
        value, active = _ball_value(G, H, p, threshold)
        return value, p, None, tuple(active)
    if kind in ("pac", "pac_greedy"):
        if kind == "pac":
            game = _game_cache(G, counter, cache)
        else:
            column = G[:, ref_decision]

            def game(models, _c=column):
                point = np.zeros(k)
                point[ref_decision] = 1.0
                if not models:
                    return 0.0, point
                return float(max(_c[list(models)].max(), 0.0)), point

        value, p, q, inside = _bnb_pac(G, H, threshold, counter, game)
        if p is None:
            p = np.zeros(k)
            p[ref_decision] = 1.0
        return value, p, q, inside
    if kind == "pac_alt":
        best = (math.inf, None, None, ())
        for excluded, q in _maximal_excludable_sets(H, threshold, counter):
            rest = [m for m in range(n) if m not in set(excluded)]
            if not rest:
                point = np.zeros(k)
                point[ref_decision] = 1.0
                cand = (0.0, point, q, ())
            else:
                value, p = _bnb_regret(G[rest], H[rest], threshold, counter)
                value, inside = _ball_value(G[rest], H[rest], p, threshold)
                cand = (value, p, q, tuple(rest[i] for i in inside))
            if cand[0] < best[0]:
                best = cand
        return best
    raise ValueError(f"unknown constrained kind {kind!r}")


def _fallback_regret(G, H, eps, margin, counter):
    """Heuristic search for classes above the enumeration cap.

    Candidate distributions come from the offset programs on the gamma grid
    and from projected subgradient steps; the best in-ball value found is an
    upper bound attained by an explicit witness.  The certified lower bound
    is the game over models that no distribution can push out of the ball.
    """
    n, k = G.shape
    threshold = eps * eps + margin
    candidates = [np.eye(k)[j] for j in range(k)] + [np.full(k, 1.0 / k)]
    for gamma in GAMMA_GRID:
        _, p = solve_game(G - gamma * H, counter)
        candidates.append(p)
    best_value, best_p = math.inf, None
    for p in candidates:
        value, _ = _ball_value(G, H, p, threshold)
        if value < best_value:
            best_value, best_p = value, p
    p = best_p.copy()
    for step in range(200):
        value, inside = _ball_value(G, H, p, threshold)
        if value < best_value:
            best_value, best_p = value, p.copy()
        if inside.size == 0:
            break
        worst = inside[int(np.argmax(G[inside] @ p))]
        # Move away from the worst model's gap while pushing models out.
        direction = G[worst] - H[inside].mean(axis=0)
        p = _project_simplex(p - direction / math.sqrt(step + 1.0) * 0.5)
    relax_threshold = eps * eps
    fixed = np.flatnonzero(H.max(axis=1) < relax_threshold)
    lower = max(solve_game(G[fixed], counter)[0], 0.0) if fixed.size else 0.0
    lagrange = min(max(solve_game(G - g * H, counter)[0], 0.0) + g * eps * eps for g in GAMMA_GRID)
    return best_value, best_p, lower, min(lagrange, best_value)


def constrained_from_matrices(
    G: np.ndarray,
    H: np.ndarray,
    eps: float,
    kind: str = "regret",
    ref_decision: int = 0,
    margin: float = MARGIN,
    cap: int = ENUMERATION_CAP,
    certify: bool = True,
    game_cache: dict | None = None,
) -> DecValue:
    """Constrained DEC of the adversary set described by ``G`` and ``H``.

    With ``certify`` the search is repeated with zero margin to obtain a
    certified lower bound; otherwise the reported lower bound is the trivial
    value 0.  ``game_cache`` shares PAC subgame values between calls that use
    the same ``G``.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    counter = _Counter()
    n, k = G.shape
    if kind == "regret" and n > cap:
        value, p, lower, upper = _fallback_regret(G, H, eps, margin, counter)
        value, active = _ball_value(G, H, p, eps * eps + margin)
        return _finish(value, p, None, active, counter, "constrained-regret", eps, lower, value, "fallback", margin)
    if kind != "regret" and n > cap:
        raise ValueError(f"{kind} search supports at most {cap} models")
    value, p, q, active = _search(G, H, eps, kind, margin, ref_decision, counter, game_cache)
    if not certify:
        lower = 0.0
    elif margin > 0:
        lower = _search(G, H, eps, kind, 0.0, ref_decision, counter, game_cache)[0]
    else:
        lower = value
    if kind == "regret":
        q = None
    elif q is None:
        q = np.full(k, 1.0 / k)
    method = "branch_and_bound"
    return _finish(value, p, q, active, counter, f"constrained-{kind}", eps, lower, value, method, margin)


# ---------------------------------------------------------------------------
# Model-level entry points
# ---------------------------------------------------------------------------


def offset_dec(
    model_class: ModelClass | None,
    ref: FiniteModel,
    gamma: float,
    kind: str = "regret",
    include_ref: bool = False,
) -> DecValue:
    """Offset DEC (regret or PAC) of a class against a reference model."""
    G, H = adversary_matrices(model_class, ref, include_ref)
    if G.shape[0] == 0:
        raise ValueError("offset DEC of an empty adversary set is undefined")
    if kind == "regret":
        return offset_regret_from_matrices(G, H, gamma)
    if kind == "pac":
        return offset_pac_from_matrices(G, H, gamma)
    raise ValueError(f"unknown offset kind {kind!r}")


def bayesian_offset_dec(model_class: ModelClass, ref: FiniteModel, gamma: float, include_ref: bool = False) -> DecValue:
    """Prior-side (max-min) offset regret DEC; ``prior`` holds the optimal prior."""
    G, H = adversary_matrices(model_class, ref, include_ref)
    return bayesian_regret_from_matrices(G, H, gamma)


def constrained_dec(
    model_class: ModelClass | None,
    ref: FiniteModel,
    eps: float,
    kind: str = "regret",
    include_ref: bool = False,
    margin: float = MARGIN,
    cap: int = ENUMERATION_CAP,
    certify: bool = True,
    game_cache: dict | None = None,
) -> DecValue:
    """Constrained DEC; an empty adversary set or empty ball gives exactly 0."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    G, H = adversary_matrices(model_class, ref, include_ref)
    return constrained_from_matrices(G, H, eps, kind, best_decision(ref)[0], margin, cap, certify, game_cache)


RANDOMIZED_KINDS = ("regret_offset", "regret_constrained", "pac_offset", "pac_constrained")


def randomized_dec(
    model_class: ModelClass,
    nu: Sequence[float] | np.ndarray,
    scale: float,
    kind: str = "regret_offset",
    include_mean: bool = False,
    margin: float = MARGIN,
) -> DecValue:
    """DEC against a distribution over reference models.

    ``include_mean`` adds the mean model of ``nu`` to the adversary set.
    """
    if kind not in RANDOMIZED_KINDS:
        raise ValueError(f"unknown randomized kind {kind!r}")
    G, H, mean_model = randomized_matrices(model_class, np.asarray(nu, dtype=float), include_mean)
    if kind == "regret_offset":
        out = offset_regret_from_matrices(G, H, scale)
    elif kind == "pac_offset":
        out = offset_pac_from_matrices(G, H, scale)
    elif kind == "regret_constrained":
        out = constrained_from_matrices(G, H, scale, "regret", best_decision(mean_model)[0], margin)
    else:
        out = constrained_from_matrices(G, H, scale, "pac", best_decision(mean_model)[0], margin)
    return DecValue(
        out.value, out.witness_p, out.witness_q, out.active_set, out.diagnostics, f"randomized-{kind}", scale, out.prior
    )


# ---------------------------------------------------------------------------
# Suprema over the convex hull
# ---------------------------------------------------------------------------


def simplex_grid(n: int, resolution: int) -> np.ndarray:
    """All weight vectors with entries in ``{0, 1/r, ..., 1}`` summing to one."""
    points = []
    for bars in itertools.combinations(range(resolution + n - 1), n - 1):
        prev = -1
        counts = []
        for b in bars:
            counts.append(b - prev - 1)
            prev = b
        counts.append(resolution + n - 1 - prev - 1)
        points.append(np.array(counts, dtype=float) / resolution)
    return np.array(points)


@dataclass(frozen=True)
class HullGrid:
    """Discretization of the convex hull: vertices, a lattice and random points."""

    resolution: int = 8
    lattice_max_models: int = 6
    random_points: int = 64
    seed: int = 0

    def weights(self, n: int) -> np.ndarray:
        pts = [np.eye(n)]
        if n <= self.lattice_max_models and self.resolution > 0:
            pts.append(simplex_grid(n, self.resolution))
        if self.random_points > 0:
            rng = np.random.default_rng(np.random.SeedSequence([self.seed, n, 0x48554C4C]))
            pts.append(rng.dirichlet(np.ones(n), size=self.random_points))
        allw = np.vstack(pts)
        # Deduplicate while preserving order.
        seen = set()
        out = []
        for w in allw:
            key = np.round(w, 12).tobytes()
            if key not in seen:
                seen.add(key)
                out.append(w / w.sum())
        if not out:
            raise ValueError("empty hull grid")
        return np.array(out)


@dataclass(frozen=True)
class HullSupResult:
    """Largest DEC found over a hull grid (a lower bound on the supremum)."""

    dec: DecValue
    weights: np.ndarray
    ref: FiniteModel
    evaluated: int
    lower: float
    upper_on_grid: float


def hull_sup_dec(
    model_class: ModelClass,
    eps: float,
    kind: str = "regret",
    grid: HullGrid | None = None,
    margin: float = MARGIN,
) -> HullSupResult:
    """Sup over hull mixtures of the constrained DEC.

    The regret kind adds the mixture to the adversary set; the PAC kinds do not.
    """
    grid = grid or HullGrid()
    weights = grid.weights(len(model_class))
    best = None
    lower = -math.inf
    upper = -math.inf
    for w in weights:
        ref = mixture_of(model_class, w)
        dec = constrained_dec(model_class, ref, eps, kind, include_ref=(kind == "regret"), margin=margin)
        lower = max(lower, dec.lower)
        upper = max(upper, dec.upper)
        if best is None or dec.value > best[0].value:
            best = (dec, w, ref)
    return HullSupResult(best[0], best[1], best[2], len(weights), lower, upper)


def hull_sup_offset(
    model_class: ModelClass,
    gamma: float,
    kind: str = "regret",
    grid: HullGrid | None = None,
) -> HullSupResult:
    """Sup over hull mixtures of the offset DEC (reference not added)."""
    grid = grid or HullGrid()
    weights = grid.weights(len(model_class))
    best = None
    for w in weights:
        ref = mixture_of(model_class, w)
        dec = offset_dec(model_class, ref, gamma, kind)
        if best is None or dec.value > best[0].value:
            best = (dec, w, ref)
    return HullSupResult(best[0], best[1], best[2], len(weights), best[0].value, best[0].value)


# ---------------------------------------------------------------------------
# Profiles and regularity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DecProfile:
    grid: tuple[float, ...]
    values: tuple[DecValue, ...]
    variant: str

    def series(self, which: str = "value") -> np.ndarray:
        return np.array([getattr(v, which) for v in self.values])


PROFILE_VARIANTS = (
    "constrained-regret",
    "constrained-pac",
    "constrained-pac_alt",
    "constrained-pac_greedy",
    "offset-regret",
    "offset-pac",
)


def dec_profile(
    model_class: ModelClass,
    refspec: str | FiniteModel,
    grid: Sequence[float],
    variant: str = "constrained-regret",
    hull_grid: HullGrid | None = None,
) -> DecProfile:
    """Evaluate a DEC variant on a grid of radii (constrained) or scales (offset).

    ``refspec`` is ``"proper_sup"`` (maximum over members as references),
    ``"hull_sup"`` (maximum over the hull grid) or a concrete reference model.
    """
    if variant not in PROFILE_VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    points = sorted(float(x) for x in grid)
    if not points:
        raise ValueError("empty grid")
    family, kind = variant.split("-", 1)
    include = family == "constrained" and kind == "regret"
    if isinstance(refspec, FiniteModel):
        refs = [refspec]
    elif refspec == "proper_sup":
        refs = list(model_class.models)
    elif refspec == "hull_sup":
        refs = [mixture_of(model_class, w) for w in (hull_grid or HullGrid()).weights(len(model_class))]
    else:
        raise ValueError(f"unknown reference spec {refspec!r}")
    values = []
    for x in points:
        best = None
        for ref in refs:
            if family == "constrained":
                dec = constrained_dec(model_class, ref, x, kind, include_ref=include and refspec == "hull_sup")
            else:
                dec = offset_dec(model_class, ref, x, kind)
            if best is None or dec.value > best.value:
                best = dec
        values.append(best)
    if family == "constrained":
        _enforce_monotone(values, increasing=True)
    return DecProfile(tuple(points), tuple(values), variant)


def _enforce_monotone(values: list[DecValue], increasing: bool) -> None:
    series = [v.value for v in values]
    for a, b in zip(series, series[1:]):
        if increasing and b < a - 1e-7:
            raise AssertionError("constrained profile is not nondecreasing")


@dataclass(frozen=True)
class RegularityReport:
    c_big: float
    c_small: float | None
    pairs: tuple[tuple[float, float], ...]
    worst_ratio: float
    satisfied: bool
    strong_worst_ratio: float | None
    strong_satisfied: bool | None
    flagged: tuple[float, ...]


def _nearest(grid: np.ndarray, x: float) -> int:
    return int(np.argmin(np.abs(np.log(grid) - math.log(x))))


def regularity_check(profile: DecProfile, c_big: float, c_small: float | None = None, rel_tol: float = 0.05) -> RegularityReport:
    """Check ``dec(eps) <= C^2 dec(eps / C)`` and optionally ``dec(C eps) <= c^2 dec(eps)``.

    Pairs are matched to the nearest grid point in log scale; a pair counts
    when the matched point is within ``rel_tol`` (relative) of the target.
    """
    grid = np.array(profile.grid)
    values = profile.series("value")
    if grid.size < 2 or np.any(grid <= 0):
        raise ValueError("regularity check needs at least two positive radii")
    pairs = []
    for i, eps in enumerate(grid):
        j = _nearest(grid, eps / c_big)
        if j != i and abs(grid[j] - eps / c_big) <= rel_tol * eps / c_big:
            pairs.append((i, j))
    if not pairs:
        raise ValueError("grid contains no (eps, eps / C) pairs")
    worst = 0.0
    flagged = []
    for i, j in pairs:
        ratio = _ratio(values[i], values[j])
        worst = max(worst, ratio)
        if ratio > c_big**2 + 1e-9:
            flagged.append(float(grid[i]))
    strong_worst = None
    strong_ok = None
    if c_small is not None:
        strong_worst = 0.0
        for i, j in pairs:
            # dec(C * eps_j) <= c^2 dec(eps_j) with eps_i = C * eps_j.
            ratio = _ratio(values[i], values[j])
            strong_worst = max(strong_worst, ratio)
            if ratio > c_small**2 + 1e-9:
                flagged.append(float(grid[j]))
        strong_ok = bool(strong_worst <= c_small**2 + 1e-9)
    return RegularityReport(
        c_big,
        c_small,
        tuple((float(grid[i]), float(grid[j])) for i, j in pairs),
        float(worst),
        bool(worst <= c_big**2 + 1e-9),
        None if strong_worst is None else float(strong_worst),
        strong_ok,
        tuple(sorted(set(flagged))),
    )


def _ratio(top: float, bottom: float) -> float:
    if top <= 1e-15:
        return 0.0
    if bottom <= 1e-15:
        return math.inf
    return top / bottom


def lagrangian_bound(model_class: ModelClass | None, ref: FiniteModel, eps: float, include_ref: bool = False, kind: str = "regret", grid=GAMMA_GRID) -> float:
    """``min over the gamma grid of max(offset DEC, 0) + gamma eps^2``."""
    return min(max(offset_dec(model_class, ref, g, kind, include_ref).value, 0.0) + g * eps * eps for g in grid)


def hellinger_matrix_to(model_class: ModelClass, ref: FiniteModel) -> np.ndarray:
    return hellinger_rows(model_class.flat_kernels(), ref.flat()[None])
