"""Dense two-phase simplex for the tiny programs built by the correction module.

Solves

    min c.x   s.t.   A_eq x = b_eq,   A_ub x <= b_ub,   x >= 0

with a textbook tableau and Bland's anti-cycling rule.  The programs here
have four structural variables and at most a couple dozen rows, so clarity
beats sophistication; no external solver is involved.
"""

from __future__ import annotations

import numpy as np

from .errors import InfeasibleError, UnboundedProgramError

_TOL = 1e-10
_FEAS_TOL = 1e-9
_MAX_ITER = 10_000


def _pivot(tableau: np.ndarray, basis: np.ndarray, row: int, col: int) -> None:
    tableau[row] /= tableau[row, col]
    for r in range(tableau.shape[0]):
        if r != row and abs(tableau[r, col]) > 0:
            tableau[r] -= tableau[r, col] * tableau[row]
    basis[row] = col


def _run_simplex(tableau: np.ndarray, basis: np.ndarray, cost: np.ndarray, allowed: np.ndarray) -> float:
    """Minimize `cost` over the current tableau; returns the objective value.

    `allowed[j]` masks columns eligible to enter the basis.  The last tableau
    column is the right-hand side.  Bland's rule: enter the lowest-index
    column with negative reduced cost, leave via the ratio test with ties
    broken by lowest basic-variable index.
    """
    m = tableau.shape[0]
    reduced = cost.copy()
    value = 0.0
    for r in range(m):
        if cost[basis[r]] != 0:
            reduced -= cost[basis[r]] * tableau[r, :-1]
            value -= cost[basis[r]] * tableau[r, -1]
    for _ in range(_MAX_ITER):
        candidates = np.nonzero(allowed & (reduced < -_TOL))[0]
        if candidates.size == 0:
            return -value
        col = int(candidates[0])
        ratios = np.full(m, np.inf)
        positive = tableau[:, col] > _TOL
        ratios[positive] = tableau[positive, -1] / tableau[positive, col]
        best = ratios.min()
        if not np.isfinite(best):
            raise UnboundedProgramError("objective is unbounded below")
        tied = np.nonzero(ratios <= best + _TOL)[0]
        row = int(tied[np.argmin(basis[tied])])
        delta = reduced[col]
        _pivot(tableau, basis, row, col)
        reduced -= delta * tableau[row, :-1]
        value -= delta * tableau[row, -1]
    raise RuntimeError("simplex iteration cap exceeded")


def solve_linear_program(
    c: np.ndarray,
    a_eq: np.ndarray,
    b_eq: np.ndarray,
    a_ub: np.ndarray,
    b_ub: np.ndarray,
) -> np.ndarray:
    """Return an optimal basic solution x (a vertex of the feasible region).

    Raises InfeasibleError when no point satisfies the constraints and
    UnboundedProgramError when the objective has no finite minimum.
    """
    c = np.asarray(c, dtype=float)
    n = c.size
    a_eq = np.asarray(a_eq, dtype=float).reshape(-1, n)
    b_eq = np.asarray(b_eq, dtype=float).reshape(-1)
    a_ub = np.asarray(a_ub, dtype=float).reshape(-1, n)
    b_ub = np.asarray(b_ub, dtype=float).reshape(-1)
    m_eq, m_ub = a_eq.shape[0], a_ub.shape[0]
    m = m_eq + m_ub

    # Standard form: slack per inequality, artificial per row, nonnegative rhs.
    body = np.zeros((m, n + m_ub + m + 1))
    body[:m_eq, :n] = a_eq
    body[:m_eq, -1] = b_eq
    body[m_eq:, :n] = a_ub
    body[m_eq:, n : n + m_ub] = np.eye(m_ub)
    body[m_eq:, -1] = b_ub
    negative = body[:, -1] < 0
    body[negative] *= -1.0
    body[:, n + m_ub : n + m_ub + m] = np.eye(m)
    basis = np.arange(n + m_ub, n + m_ub + m)

    structural = np.zeros(n + m_ub + m, dtype=bool)
    structural[: n + m_ub] = True

    phase1 = np.zeros(n + m_ub + m)
    phase1[n + m_ub :] = 1.0
    residual = _run_simplex(body, basis, phase1, structural)
    if residual > _FEAS_TOL:
        raise InfeasibleError(f"no feasible point (phase-1 residual {residual:.3e})")

    # Remove lingering artificials from the basis; a row with no structural
    # pivot available is redundant and can stay (its artificial is zero).
    for r in range(m):
        if basis[r] >= n + m_ub:
            pivots = np.nonzero(structural & (np.abs(body[r, :-1]) > _TOL))[0]
            if pivots.size:
                _pivot(body, basis, r, int(pivots[0]))

    phase2 = np.zeros(n + m_ub + m)
    phase2[:n] = c
    allowed = structural.copy()
    _run_simplex(body, basis, phase2, allowed)

    x = np.zeros(n + m_ub + m)
    x[basis] = body[:, -1]
    return x[:n].copy()
