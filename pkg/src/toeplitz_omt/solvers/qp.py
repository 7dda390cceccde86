"""Nonnegativity-constrained convex quadratic programs.

``min 0.5 x^T Q x + q^T x  s.t.  x >= 0`` by accelerated projected gradient
(FISTA) with backtracking on the step size and gradient-based restart.
``Q`` is only touched through a matrix-free ``apply``.
"""
from __future__ import annotations

import time
from typing import Callable, NamedTuple

import numpy as np

from ..errors import ValidationError
from .report import ITERATION_LIMIT, NUMERICAL_FAILURE, OPTIMAL, SolveReport


class QpResult(NamedTuple):
    x: np.ndarray
    report: SolveReport


def _as_apply(quadratic):
    if callable(quadratic):
        return quadratic
    Q = np.asarray(quadratic, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise ValidationError(f"quadratic must be square, got {Q.shape}")
    return lambda v: Q @ v


def _lipschitz(apply, V, rng, iters=30):
    v = rng.standard_normal(V)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = apply(v)
        lam = float(np.linalg.norm(w))
        if lam == 0.0:
            return 0.0
        v = w / lam
    return lam


def kkt_residual(x, grad) -> float:
    """``||x - max(0, x - grad)||_inf``."""
    return float(np.abs(x - np.maximum(0.0, x - grad)).max(initial=0.0))


def solve_qp_nonneg(
    quadratic: Callable[[np.ndarray], np.ndarray] | np.ndarray,
    linear,
    tol: float = 1e-8,
    max_iter: int = 20000,
    x0=None,
) -> QpResult:
    """Minimize ``0.5 x^T Q x + q^T x`` over ``x >= 0``.

    Stops when ``||x - max(0, x - grad f(x))||_inf <= tol (1 + ||grad f(x)||_inf)``.
    """
    start = time.perf_counter()
    apply = _as_apply(quadratic)
    q = np.asarray(linear, dtype=float).ravel()
    V = q.size
    x = np.zeros(V) if x0 is None else np.maximum(np.asarray(x0, dtype=float).ravel(), 0.0)

    # fixed seed so that repeated calls are bitwise reproducible
    L = _lipschitz(apply, V, np.random.default_rng(0))
    L = max(L, 1e-12)

    def f_of(x, Qx):
        return 0.5 * x @ Qx + q @ x

    Qx = apply(x)
    fx = f_of(x, Qx)
    y, Qy = x.copy(), Qx.copy()
    t = 1.0
    status = ITERATION_LIMIT
    res = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        grad_x = Qx + q
        res = kkt_residual(x, grad_x) / (1 + np.abs(grad_x).max(initial=0.0))
        if res <= tol:
            status = OPTIMAL
            it -= 1
            break
        grad_y = Qy + q
        while True:
            x_new = np.maximum(0.0, y - grad_y / L)
            Qx_new = apply(x_new)
            d = x_new - y
            # exact quadratic model: f(x_new) - f(y) - grad.d = d^T Q d / 2
            if d @ (Qx_new - Qy) <= L * (d @ d) * (1 + 1e-12):
                break
            L *= 2.0
        if not np.all(np.isfinite(Qx_new)):
            status = NUMERICAL_FAILURE
            break
        if (y - x_new) @ (x_new - x) > 0:
            # gradient restart: momentum points uphill
            t = 1.0
            y, Qy = x_new.copy(), Qx_new.copy()
        else:
            t_new = 0.5 * (1 + np.sqrt(1 + 4 * t * t))
            beta = (t - 1) / t_new
            y = x_new + beta * (x_new - x)
            Qy = Qx_new + beta * (Qx_new - Qx)
            t = t_new
        x, Qx = x_new, Qx_new
        fx = f_of(x, Qx)
        # allow the step to grow back slowly after backtracking
        L *= 0.95
    grad = Qx + q
    rep = SolveReport(
        status=status,
        objective=float(fx),
        primal_residual=float(res),
        dual_residual=float(res),
        gap=0.0,
        iterations=int(it),
        seconds=time.perf_counter() - start,
    )
    if status != OPTIMAL:
        rep.message = f"KKT residual {kkt_residual(x, grad):.3e} after {it} iterations"
    return QpResult(x, rep)
