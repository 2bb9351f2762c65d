"""Dense two-phase tableau simplex with Bland's pivoting rule.

The solver targets the tiny dense programs produced by the DEC solvers
(tens of variables and constraints).  It favours determinism over speed:
the entering column is always the lowest-index improving column and ties in
the ratio test go to the lowest-index basic variable, which rules out
cycling.

Problems are stated as::

    minimize    c @ x
    subject to  A_ub @ x <= b_ub
                A_eq @ x == b_eq
                x[j] >= 0 for every j not listed in ``free``
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

TOL = 1e-9
MAX_PIVOTS = 50_000


class LPError(RuntimeError):
    """Raised when the pivot budget is exhausted (should not happen)."""


@dataclass(frozen=True)
class LPResult:
    """Outcome of :func:`solve_lp`.

    ``status`` is one of ``"optimal"``, ``"infeasible"`` or ``"unbounded"``.
    ``x`` and ``fun`` are only meaningful when the status is optimal.
    """

    status: str
    x: np.ndarray
    fun: float
    pivots: int

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


def _pivot(tab: np.ndarray, row: int, col: int) -> None:
    tab[row] /= tab[row, col]
    column = tab[:, col].copy()
    column[row] = 0.0
    tab -= np.outer(column, tab[row])
    # The pivot column is now an exact unit vector; write it so that
    # roundoff cannot accumulate in basic columns.
    tab[:, col] = 0.0
    tab[row, col] = 1.0


def _run_simplex(
    tab: np.ndarray,
    basis: list[int],
    n_cols: int,
    tol: float,
    allowed: np.ndarray,
) -> tuple[str, int]:
    """Pivot until optimal.  The last row of ``tab`` holds reduced costs."""
    pivots = 0
    while True:
        reduced = tab[-1, :n_cols]
        candidates = np.flatnonzero((reduced < -tol) & allowed)
        if candidates.size == 0:
            return "optimal", pivots
        col = int(candidates[0])
        column = tab[:-1, col]
        rows = np.flatnonzero(column > tol)
        if rows.size == 0:
            return "unbounded", pivots
        ratios = tab[rows, -1] / column[rows]
        best = ratios.min()
        tied = rows[ratios <= best + tol * max(1.0, abs(best))]
        row = int(min(tied, key=lambda r: basis[r]))
        _pivot(tab, row, col)
        basis[row] = col
        pivots += 1
        if pivots > MAX_PIVOTS:
            raise LPError("simplex pivot budget exhausted")


def solve_lp(
    c: Sequence[float] | np.ndarray,
    A_ub: np.ndarray | None = None,
    b_ub: Sequence[float] | np.ndarray | None = None,
    A_eq: np.ndarray | None = None,
    b_eq: Sequence[float] | np.ndarray | None = None,
    free: Sequence[int] = (),
    tol: float = TOL,
) -> LPResult:
    """Solve a small dense linear program with a two-phase Bland simplex."""
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.asarray(A_ub, dtype=float).reshape(-1, n)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, n)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    if A_ub.shape[0] != b_ub.size or A_eq.shape[0] != b_eq.size:
        raise ValueError("constraint matrix and right-hand side sizes differ")

    # Split free variables into positive and negative parts.
    free = sorted(set(int(j) for j in free))
    if free:
        c = np.concatenate([c, c[free] * -1.0])
        A_ub = np.hstack([A_ub, -A_ub[:, free]]) if A_ub.size else np.zeros((0, n + len(free)))
        A_eq = np.hstack([A_eq, -A_eq[:, free]]) if A_eq.size else np.zeros((0, n + len(free)))
    n_struct = c.size

    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    m = m_ub + m_eq
    n_slack = m_ub
    # Columns: structural | slack | artificial | rhs
    rows = np.zeros((m, n_struct + n_slack))
    rhs = np.concatenate([b_ub, b_eq])
    rows[:m_ub, :n_struct] = A_ub
    rows[m_ub:, :n_struct] = A_eq
    rows[np.arange(m_ub), n_struct + np.arange(m_ub)] = 1.0
    negative = rhs < 0
    rows[negative] *= -1.0
    rhs = np.where(negative, -rhs, rhs)

    # A slack with coefficient +1 can start in the basis; every other row
    # receives an artificial variable.
    basis: list[int] = [-1] * m
    need_art: list[int] = []
    for i in range(m):
        if i < m_ub and not negative[i]:
            basis[i] = n_struct + i
        else:
            need_art.append(i)
    n_art = len(need_art)
    n_cols = n_struct + n_slack + n_art
    tab = np.zeros((m + 1, n_cols + 1))
    tab[:m, : n_struct + n_slack] = rows
    tab[:m, -1] = rhs
    for k, i in enumerate(need_art):
        col = n_struct + n_slack + k
        tab[i, col] = 1.0
        basis[i] = col

    pivots = 0
    if n_art:
        # Phase one: minimise the sum of artificials.
        tab[-1, :] = 0.0
        tab[-1, n_struct + n_slack : n_cols] = 1.0
        for i in need_art:
            tab[-1] -= tab[i]
        allowed = np.ones(n_cols, dtype=bool)
        _, k = _run_simplex(tab, basis, n_cols, tol, allowed)
        pivots += k
        if -tab[-1, -1] > tol * max(1.0, float(np.abs(rhs).max(initial=0.0))) * 10:
            return LPResult("infeasible", np.full(n, np.nan), float("nan"), pivots)
        # Drive remaining artificials out of the basis.
        first_art = n_struct + n_slack
        keep = np.ones(m, dtype=bool)
        for i in range(m):
            if basis[i] >= first_art:
                row = tab[i, :first_art]
                nz = np.flatnonzero(np.abs(row) > tol)
                if nz.size:
                    _pivot(tab, i, int(nz[0]))
                    basis[i] = int(nz[0])
                    pivots += 1
                else:
                    keep[i] = False
        if not keep.all():
            idx = np.concatenate([np.flatnonzero(keep), [m]])
            tab = tab[idx]
            basis = [b for b, k in zip(basis, keep) if k]
            m = len(basis)
        tab = np.hstack([tab[:, :first_art], tab[:, -1:]])
        n_cols = first_art

    # Phase two.
    tab[-1, :] = 0.0
    tab[-1, :n_struct] = c
    for i, b in enumerate(basis):
        if tab[-1, b] != 0.0:
            tab[-1] -= tab[-1, b] * tab[i]
    allowed = np.ones(n_cols, dtype=bool)
    status, k = _run_simplex(tab, basis, n_cols, tol, allowed)
    pivots += k
    if status != "optimal":
        return LPResult(status, np.full(n, np.nan), float("nan"), pivots)

    values = np.zeros(n_cols)
    for i, b in enumerate(basis):
        values[b] = tab[i, -1]
    x = values[:n_struct].copy()
    if free:
        for k, j in enumerate(free):
            x[j] -= x[n + k]
        x = x[:n]
    fun = float(c[:n] @ x)
    return LPResult("optimal", x, fun, pivots)


def clean_distribution(x: np.ndarray) -> np.ndarray:
    """Project a simplex LP solution onto the probability simplex.

    Removes tiny negative roundoff and renormalises so that the result is
    an exact pmf in floating point.
    """
    p = np.where(x > 0.0, x, 0.0)
    total = p.sum()
    if total <= 0.0:
        raise ValueError("cannot normalise a zero vector")
    return p / total
