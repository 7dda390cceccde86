"""Dense revised simplex and an interior-point crossover built on it.

The interior-point solver can stall on highly degenerate problems (for
example transport problems between rank-deficient covariances, whose dual
optimal faces are nearly unbounded). :func:`crossover` finishes such runs:
it restricts the problem to the columns the interior point favours, solves
the restriction exactly with a two-phase simplex, and prices every column
of the full problem with the resulting duals, adding columns until no
reduced cost is negative.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .report import INFEASIBLE, ITERATION_LIMIT, NUMERICAL_FAILURE, OPTIMAL, UNBOUNDED


class SimplexResult(NamedTuple):
    x: np.ndarray
    y: np.ndarray
    status: str
    basis: np.ndarray
    iterations: int


def _phase(A, b, c, basis, tol, max_iter, fixed_zero=None):
    """Primal simplex from a feasible basis. Dantzig pricing, Bland's rule after degenerate streaks."""
    E, V = A.shape
    basis = basis.copy()
    degenerate = 0
    banned = np.zeros(V, dtype=bool) if fixed_zero is None else fixed_zero
    for it in range(max_iter):
        B = A[:, basis]
        try:
            xB = np.linalg.solve(B, b)
            y = np.linalg.solve(B.T, c[basis])
        except np.linalg.LinAlgError:
            return basis, None, None, NUMERICAL_FAILURE, it
        d = c - A.T @ y
        d[basis] = 0.0
        d[banned] = 0.0
        scale = 1 + np.abs(c).max(initial=0.0)
        cand = np.flatnonzero(d < -tol * scale)
        if cand.size == 0:
            return basis, xB, y, OPTIMAL, it
        j = int(cand[0]) if degenerate > 50 else int(cand[np.argmin(d[cand])])
        w = np.linalg.solve(B, A[:, j])
        pos = w > tol * (1 + np.abs(w).max())
        if not np.any(pos):
            return basis, xB, y, UNBOUNDED, it
        ratios = np.full(E, np.inf)
        ratios[pos] = np.maximum(xB[pos], 0.0) / w[pos]
        rmin = ratios.min()
        ties = np.flatnonzero(ratios <= rmin + 1e-12 * (1 + rmin))
        # Bland: leave with the smallest variable index among ties
        r = int(ties[np.argmin(basis[ties])]) if degenerate > 50 else int(ties[np.argmax(w[ties])])
        degenerate = degenerate + 1 if rmin <= 1e-14 else 0
        basis[r] = j
    return basis, None, None, ITERATION_LIMIT, max_iter


def simplex_dense(c, A, b, tol=1e-10, max_iter=5000) -> SimplexResult:
    """Two-phase revised simplex for ``min c^T x, A x = b, x >= 0`` with dense ``A``."""
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    c = np.asarray(c, dtype=float)
    E, V = A.shape
    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1
    # phase 1 with one artificial per row
    A1 = np.hstack([A, np.eye(E)])
    c1 = np.concatenate([np.zeros(V), np.ones(E)])
    basis = np.arange(V, V + E)
    basis, xB, y, status, it1 = _phase(A1, b, c1, basis, tol, max_iter)
    if status != OPTIMAL:
        return SimplexResult(np.full(V, np.nan), np.full(E, np.nan), status, basis, it1)
    if xB[basis >= V].sum() > 1e-9 * (1 + np.abs(b).max(initial=0.0)):
        return SimplexResult(np.full(V, np.nan), np.full(E, np.nan), INFEASIBLE, basis, it1)
    # drive zero-level artificials out of the basis where possible
    keep_rows = np.ones(E, dtype=bool)
    for r in np.flatnonzero(basis >= V):
        B = A1[:, basis]
        row = np.linalg.solve(B.T, np.eye(E)[r])  # r-th row of B^{-1}
        alpha = row @ A
        alpha[basis[basis < V]] = 0.0
        j = int(np.argmax(np.abs(alpha)))
        if abs(alpha[j]) > 1e-9:
            basis[r] = j
        else:
            keep_rows[r] = False  # redundant constraint
    if not keep_rows.all():
        A, b = A[keep_rows], b[keep_rows]
        basis = basis[keep_rows]
    banned = np.zeros(V, dtype=bool)
    basis, xB, y, status, it2 = _phase(A, b, c, basis, tol, max_iter, banned)
    x = np.zeros(V)
    if status == OPTIMAL:
        x[basis] = np.maximum(xB, 0.0)
        y_full = np.zeros(E)
        y_full[np.flatnonzero(keep_rows)] = y
        y_full[neg] *= -1
    else:
        y_full = np.full(E, np.nan)
    return SimplexResult(x, y_full, status, basis, it1 + it2)


def _column(op, AT, j, V):
    if AT is not None:
        return AT[j]
    e = np.zeros(V)
    e[j] = 1.0
    return op.matvec(e)


def crossover(op, c, b, x, z, AT=None, tol=1e-9, max_rounds=30):
    """Exact vertex solution near an interior point ``(x, z)``.

    Returns ``(x, y, status)``; ``status`` is ``optimal`` only when every
    reduced cost of the full problem is nonnegative.
    """
    E, V = op.shape
    score = x / np.maximum(z, 1e-300)
    order = np.argsort(-score, kind="stable")
    k = min(V, max(4 * E, 64))
    cols = list(order[:k])
    scale_c = 1 + np.abs(c).max(initial=0.0)
    status = NUMERICAL_FAILURE
    for _ in range(max_rounds):
        idx = np.array(sorted(set(int(j) for j in cols)))
        A_sub = np.column_stack([_column(op, AT, j, V) for j in idx])
        res = simplex_dense(c[idx], A_sub, b, tol=1e-11)
        if res.status == INFEASIBLE:
            # the restriction may simply be too small
            if idx.size >= V:
                return x, None, INFEASIBLE
            cols = list(order[: min(V, 4 * idx.size)])
            continue
        if res.status != OPTIMAL:
            return x, None, res.status
        y = res.y
        d = c - op.rmatvec(y)
        bad = np.flatnonzero(d < -tol * scale_c)
        x_full = np.zeros(V)
        x_full[idx] = res.x
        if bad.size == 0:
            return x_full, y, OPTIMAL
        worst = bad[np.argsort(d[bad])[: max(2 * E, 32)]]
        cols = list(idx) + [int(j) for j in worst]
        status = ITERATION_LIMIT
    return x, None, status
