"""Dense two-phase simplex for small equality-form linear programs.

Solves min c'x s.t. Ax = b, x >= 0 with Bland's anti-cycling rule, sized for
the feasibility and certificate problems that arise here (at most a few
hundred rows/columns).  Phase 1 minimizes the total artificial mass; its
optimal value measures infeasibility and its dual multipliers provide a
Farkas-style separating certificate when the program is infeasible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class SimplexResult:
    status: str            # "optimal" | "infeasible" | "unbounded" | "stalled"
    x: np.ndarray
    value: float           # c'x at the optimum (nan if no phase-2 objective)
    dual: np.ndarray       # equality multipliers in the original row orientation
    phase1_value: float    # minimal total artificial mass (0 iff feasible)


def simplex_solve(A, b, c=None, *, tol: float = 1e-11, max_pivots: int = 200_000) -> SimplexResult:
    """Two-phase tableau simplex with Bland's rule.

    ``c=None`` runs phase 1 only (pure feasibility).  The returned dual is the
    phase-2 multiplier vector at optimality, or the phase-1 (Farkas) vector
    when the program is infeasible.
    """
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float).ravel()
    m, n = A.shape
    signs = np.where(b < 0, -1.0, 1.0)
    A = A * signs[:, None]
    b = b * signs

    # tableau: constraint rows | cost row; columns: x, artificials, rhs
    tab = np.zeros((m + 1, n + m + 1))
    tab[:m, :n] = A
    tab[:m, n:n + m] = np.eye(m)
    tab[:m, -1] = b
    basis = list(range(n, n + m))
    banned = np.zeros(n + m, dtype=bool)  # artificials may not re-enter once they leave

    def set_cost_row(cost):
        tab[m, :] = 0.0
        tab[m, :n + m] = cost
        for i, bi in enumerate(basis):
            if cost[bi] != 0.0:
                tab[m, :] -= cost[bi] * tab[i, :]

    def pivot(row, col):
        tab[row, :] /= tab[row, col]
        for r in range(m + 1):
            if r != row and tab[r, col] != 0.0:
                tab[r, :] -= tab[r, col] * tab[row, :]
        if basis[row] >= n:
            banned[basis[row]] = True
        basis[row] = col

    def run(allowed):
        pivots = 0
        while True:
            r = tab[m, :n + m]
            cand = np.flatnonzero((r < -tol) & allowed & ~banned)
            if cand.size == 0:
                return "optimal"
            j = int(cand[0])  # Bland: smallest eligible index
            col = tab[:m, j]
            rows = np.flatnonzero(col > tol)
            if rows.size == 0:
                return "unbounded"
            ratios = tab[rows, -1] / col[rows]
            best = ratios.min()
            tied = rows[np.flatnonzero(ratios <= best + 1e-12 * (1.0 + abs(best)))]
            row = int(min(tied, key=lambda i: basis[i]))  # Bland tie-break
            pivot(row, j)
            pivots += 1
            if pivots > max_pivots:
                return "stalled"

    def extract_x():
        x = np.zeros(n)
        for i, bi in enumerate(basis):
            if bi < n:
                x[bi] = tab[i, -1]
        return np.maximum(x, 0.0)

    # phase 1
    set_cost_row(np.concatenate([np.zeros(n), np.ones(m)]))
    status = run(np.ones(n + m, dtype=bool))
    phase1_value = float(-tab[m, -1])
    dual1 = signs * (1.0 - tab[m, n:n + m])
    if status == "stalled":
        return SimplexResult("stalled", extract_x(), float("nan"), dual1, phase1_value)
    if phase1_value > tol * max(1.0, float(np.abs(b).max())):
        return SimplexResult("infeasible", extract_x(), float("nan"), dual1, phase1_value)

    # drive remaining artificials out of the basis where possible
    for i in range(m):
        if basis[i] >= n:
            nz = np.flatnonzero(np.abs(tab[i, :n]) > tol)
            if nz.size:
                pivot(i, int(nz[0]))

    if c is None:
        return SimplexResult("optimal", extract_x(), float("nan"), dual1, phase1_value)

    # phase 2
    c = np.asarray(c, dtype=float).ravel()
    set_cost_row(np.concatenate([c, np.zeros(m)]))
    allowed = np.concatenate([np.ones(n, dtype=bool), np.zeros(m, dtype=bool)])
    status = run(allowed)
    x = extract_x()
    dual2 = signs * (-tab[m, n:n + m])
    if status != "optimal":
        return SimplexResult(status, x, float("nan"), dual2, phase1_value)
    return SimplexResult("optimal", x, float(c @ x), dual2, phase1_value)
