"""Standard-form linear programming by a homogeneous primal-dual interior point method.

Solves ``min c^T x  s.t.  A x = b, x >= 0`` and its dual
``max b^T y  s.t.  A^T y <= c``. Search directions come from the normal
equations ``A D A^T``; the constraint matrix only has to provide
``matvec``, ``rmatvec`` and ``normal(d)`` (see :class:`DenseOperator`), so
structured problems with few rows and very many columns never materialize
``A``. The homogeneous self-dual embedding gives infeasibility and
unboundedness certificates without a phase one.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from ..errors import ValidationError
from .simplex import crossover
from .report import (
    INFEASIBLE,
    ITERATION_LIMIT,
    NUMERICAL_FAILURE,
    OPTIMAL,
    UNBOUNDED,
    SolveReport,
)


log = logging.getLogger(__name__)


class DenseOperator:
    """Constraint operator backed by a dense array or a scipy sparse matrix."""

    def __init__(self, A):
        self.A = A if sp.issparse(A) else np.atleast_2d(np.asarray(A, dtype=float))
        self.shape = self.A.shape

    def matvec(self, x):
        return self.A @ x

    def rmatvec(self, y):
        return self.A.T @ y

    def normal(self, d):
        if sp.issparse(self.A):
            return (self.A @ sp.diags(d) @ self.A.T).toarray()
        return (self.A * d) @ self.A.T


class BandOperator:
    """Relax selected rows of ``A x = b`` to ``|A x - b| <= t``.

    Adds unit-scaled variables ``s`` and ``s'`` with
    ``A x + P diag(t) s = b + P t`` and ``s + s' = 2`` for the relaxed rows
    ``P``, so the slacks stay O(1) however narrow the band is.
    """

    def __init__(self, inner, rows, widths):
        self.inner = inner
        self.rows = np.asarray(rows, dtype=int)
        self.widths = np.broadcast_to(np.asarray(widths, dtype=float), self.rows.shape).copy()
        E, V = inner.shape
        k = self.rows.size
        self.V0, self.k = V, k
        self.shape = (E + k, V + 2 * k)

    def rhs(self, b):
        top = np.array(b, dtype=float)
        top[self.rows] += self.widths
        return np.concatenate([top, np.full(self.k, 2.0)])

    def split(self, x):
        V, k = self.V0, self.k
        return x[:V], x[V:V + k], x[V + k:]

    def matvec(self, x):
        x0, s, s2 = self.split(x)
        top = self.inner.matvec(x0)
        top[self.rows] += self.widths * s
        return np.concatenate([top, s + s2])

    def rmatvec(self, y):
        E = self.inner.shape[0]
        y0, y1 = y[:E], y[E:]
        return np.concatenate([self.inner.rmatvec(y0), self.widths * y0[self.rows] + y1, y1])

    def normal(self, d):
        d0, ds, ds2 = self.split(d)
        E = self.inner.shape[0]
        k = self.k
        t = self.widths
        M = np.zeros((E + k, E + k))
        top = self.inner.normal(d0)
        top[self.rows, self.rows] += t * t * ds
        M[:E, :E] = top
        M[self.rows, E + np.arange(k)] = t * ds
        M[E + np.arange(k), self.rows] = t * ds
        M[E:, E:] = np.diag(ds + ds2)
        return M


def as_operator(A):
    if hasattr(A, "normal") and hasattr(A, "rmatvec"):
        return A
    return DenseOperator(A)


@dataclass
class LinearProgram:
    """``min c^T x  s.t.  A x = b, x >= 0``."""

    c: np.ndarray
    A: object
    b: np.ndarray

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        self.b = np.asarray(self.b, dtype=float).ravel()
        op = as_operator(self.A)
        E, V = op.shape
        if V != self.c.size or E != self.b.size:
            raise ValidationError(
                f"inconsistent LP dimensions: A is {E}x{V}, c has {self.c.size}, b has {self.b.size}"
            )

    @property
    def operator(self):
        return as_operator(self.A)

    def to_dict(self) -> dict:
        """JSON-ready dump (dense operators only)."""
        op = self.operator
        if not isinstance(op, DenseOperator):
            raise ValidationError("only dense/sparse LPs can be dumped")
        A = op.A.toarray() if sp.issparse(op.A) else op.A
        return {"format": "lp-standard-form", "c": self.c.tolist(), "A": A.tolist(), "b": self.b.tolist()}


class LpResult(NamedTuple):
    x: np.ndarray
    y: np.ndarray
    report: SolveReport


def _presolve(op, b, tol):
    """Drop zero and linearly dependent rows of a dense/sparse constraint matrix.

    Returns the kept row indices, or raises ``_Conflict`` when dropped rows
    are inconsistent with the kept ones.
    """
    if not isinstance(op, DenseOperator):
        return None
    A = op.A.toarray() if sp.issparse(op.A) else op.A
    E = A.shape[0]
    norms = np.abs(A).max(axis=1) if A.size else np.zeros(E)
    nz = np.flatnonzero(norms > 0)
    zero_rows = np.setdiff1d(np.arange(E), nz)
    if np.any(np.abs(b[zero_rows]) > tol * (1 + np.abs(b).max(initial=0))):
        raise _Conflict("zero constraint row with nonzero right-hand side")
    if nz.size == 0:
        return nz
    Anz = A[nz] / norms[nz, None]
    _, R, piv = scipy.linalg.qr(Anz.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > 1e-10 * diag[0])) if diag.size else 0
    keep = np.sort(nz[piv[:rank]])
    if keep.size < E:
        coef, *_ = np.linalg.lstsq(A[keep].T, A.T, rcond=None)
        implied = coef.T @ b[keep]
        if np.abs(implied - b).max() > 1e-9 * (1 + np.abs(b).max()):
            raise _Conflict("conflicting equality constraints")
    return keep


class _Conflict(Exception):
    pass


def _restrict(op, rows):
    A = op.A[rows]
    return DenseOperator(A)


def _factor(M):
    """Cholesky of the symmetrically equilibrated normal matrix."""
    n = M.shape[0]
    diag = np.abs(np.diag(M))
    diag = np.where(diag > 0, diag, 1.0)
    sc = 1.0 / np.sqrt(diag)
    Ms = M * sc[:, None] * sc[None, :]
    reg = 1e-14
    for _ in range(8):
        try:
            F = scipy.linalg.cho_factor(Ms + reg * np.eye(n), check_finite=False)
            return ("chol", F, M, sc)
        except np.linalg.LinAlgError:
            reg *= 100
    return ("lstsq", None, M, sc)


def _factor_qr(AT, D, apply=None):
    """Triangular factor of ``A D A^T`` from a QR of ``D^{1/2} A^T``.

    Rows are sorted by decreasing weight before the Householder QR, which
    keeps the factor accurate row by row when ``D`` spans many orders of
    magnitude. Forming ``A D A^T`` explicitly would lose the contribution of
    the lightly weighted rows to cancellation.
    """
    order = np.argsort(-D, kind="stable")
    B = np.sqrt(D[order])[:, None] * AT[order]
    E = AT.shape[1]
    # a vanishing ridge keeps R invertible when the weighted rows are dependent
    ridge = np.sqrt(1e-30 * max(float(np.max(np.abs(B), initial=0.0)) ** 2, 1e-300))
    B = np.vstack([B, ridge * np.eye(E)])
    R = scipy.linalg.qr(B, mode="r", check_finite=False)[0][:E]
    return ("qr", R, apply, None)


def _solve(fac, r, refine=2):
    kind, F, M, sc = fac
    if kind == "qr":
        def tri(v):
            w = scipy.linalg.solve_triangular(F, v, trans="T", check_finite=False)
            return scipy.linalg.solve_triangular(F, w, check_finite=False)

        x = tri(r)
        # corrected semi-normal equations: refine against the exact A D A^T
        if M is not None:
            for _ in range(refine):
                x = x + tri(r - M(x))
        return x
    if kind != "chol":
        return np.linalg.lstsq(M, r, rcond=None)[0]
    x = sc * scipy.linalg.cho_solve(F, sc * r, check_finite=False)
    # iterative refinement against the unregularized matrix
    for _ in range(refine):
        x = x + sc * scipy.linalg.cho_solve(F, sc * (r - M @ x), check_finite=False)
    return x


def _dense_transpose(op):
    """``A^T`` as a dense ``V x E`` array (one ``rmatvec`` per row)."""
    if isinstance(op, DenseOperator):
        A = op.A.toarray() if sp.issparse(op.A) else op.A
        return np.ascontiguousarray(A.T)
    E = op.shape[0]
    I = np.eye(E)
    return np.column_stack([op.rmatvec(I[i]) for i in range(E)])


def _step(v, dv):
    neg = dv < 0
    if not np.any(neg):
        return 1.0
    return float(min(1.0, np.min(-v[neg] / dv[neg])))


QR_BUDGET = 2e7
STEP_FACTOR = 0.99995
NEIGHBOURHOOD = 1e-3
STALL_ITERS = 25
PROBE_STALL_ITERS = 6
CROSSOVER_MERIT = 1e-4


def solve_lp(lp: LinearProgram, tol: float = 1e-8, max_iter: int = 200, presolve: bool = True,
             linear_solver: str = "auto") -> LpResult:
    """Solve a standard-form LP.

    ``status == 'optimal'`` guarantees ``||Ax - b||_inf <= tol (1 + ||b||_inf)``,
    ``||c - A^T y - z||_inf <= tol (1 + ||c||_inf)`` for some ``z >= 0``, and
    ``|c^T x - b^T y| <= tol (1 + |c^T x|)``.

    ``linear_solver`` picks how the normal equations are factored: ``"qr"``
    (accurate on degenerate problems, needs ``A^T`` as a dense array),
    ``"cholesky"`` (forms ``A D A^T``), or ``"auto"`` (Cholesky first, and
    when that run ends without an optimality or infeasibility certificate a
    second run with QR, provided ``A^T`` has at most ``QR_BUDGET`` entries).
    """
    if linear_solver not in ("auto", "qr", "cholesky"):
        raise ValidationError(f"unknown linear_solver {linear_solver!r}")
    start = time.perf_counter()
    op = lp.operator
    c, b = lp.c, lp.b
    E, V = op.shape
    rows = None
    if presolve:
        try:
            rows = _presolve(op, b, tol)
        except _Conflict as exc:
            rep = SolveReport(INFEASIBLE, np.nan, np.inf, np.nan, np.nan, 0, time.perf_counter() - start)
            rep.message = str(exc)
            return LpResult(np.full(V, np.nan), np.full(E, np.nan), rep)
    if rows is not None and rows.size < E:
        work_op, work_b = _restrict(op, rows), b[rows]
    else:
        rows, work_op, work_b = None, op, b

    E_w, V_w = work_op.shape
    qr_ok = E_w * V_w <= QR_BUDGET
    if linear_solver == "auto" and qr_ok:
        # Cholesky of the structured normal matrix is far cheaper; a run that
        # ends without a certificate is repeated with the QR factorization
        x, y, rep = _hsd(work_op, c, work_b, tol, max_iter, None, allow_crossover=False,
                         stall_iters=PROBE_STALL_ITERS)
        if rep.status in (ITERATION_LIMIT, NUMERICAL_FAILURE):
            x, y, rep = _hsd(work_op, c, work_b, tol, max_iter, _dense_transpose(work_op))
    else:
        AT = _dense_transpose(work_op) if linear_solver == "qr" else None
        x, y, rep = _hsd(work_op, c, work_b, tol, max_iter, AT)
    if rows is not None:
        y_full = np.zeros(E)
        y_full[rows] = y
        y = y_full
    rep.seconds = time.perf_counter() - start
    return LpResult(x, y, rep)


def _certificate(op, b, c, x, y):
    # b^T y > 0 with A^T y <= 0 proves primal infeasibility (Farkas);
    # c^T x < 0 with A x = 0, x >= 0 is a ray of unboundedness. Report the
    # cleaner of the two certificates.
    by, cx = b @ y, c @ x
    bad_y = np.max(op.rmatvec(y), initial=0.0) / by if by > 0 else np.inf
    bad_x = np.abs(op.matvec(x)).max(initial=0.0) / -cx if cx < 0 else np.inf
    return INFEASIBLE if bad_y <= bad_x else UNBOUNDED


def _hsd(op, c, b, tol, max_iter, AT=None, allow_crossover=True, stall_iters=STALL_ITERS):
    E, V = op.shape
    x = np.ones(V)
    z = np.ones(V)
    y = np.zeros(E)
    tau = kappa = 1.0
    bnorm = 1 + np.abs(b).max(initial=0.0)
    cnorm = 1 + np.abs(c).max(initial=0.0)
    status = ITERATION_LIMIT
    it = 0
    p_res = d_res = gap = np.inf

    def residuals(x, y, z, tau, kappa):
        rP = b * tau - op.matvec(x)
        rD = c * tau - op.rmatvec(y) - z
        rG = c @ x - b @ y + kappa
        return rP, rD, rG

    rP0, rD0, rG0 = residuals(x, y, z, tau, kappa)
    nP0 = max(1.0, np.linalg.norm(rP0))
    nD0 = max(1.0, np.linalg.norm(rD0))
    nG0 = max(1.0, abs(rG0))
    mu0 = (x @ z + tau * kappa) / (V + 1)
    best = (np.inf, None)
    since_best = 0

    for it in range(max_iter + 1):
        rP, rD, rG = residuals(x, y, z, tau, kappa)
        mu = (x @ z + tau * kappa) / (V + 1)
        obj_p, obj_d = c @ x / tau, b @ y / tau
        p_res = np.abs(rP).max(initial=0.0) / tau / bnorm
        d_res = np.abs(rD).max(initial=0.0) / tau / cnorm
        gap = abs(obj_p - obj_d) / (1 + abs(obj_p))
        log.debug("it %d pres %.2e dres %.2e gap %.2e tau %.2e kappa %.2e mu %.2e",
                  it, p_res, d_res, gap, tau, kappa, mu)
        if p_res <= tol and d_res <= tol and gap <= tol:
            status = OPTIMAL
            break
        merit = max(p_res, d_res, gap)
        if merit < 0.5 * best[0]:
            best = (merit, (x / tau, z / tau))
            since_best = 0
        else:
            since_best += 1
        if since_best >= stall_iters:
            log.debug("interior point stalled at merit %.2e", best[0])
            break
        rho_p = np.linalg.norm(rP) / nP0
        rho_d = np.linalg.norm(rD) / nD0
        rho_g = abs(rG) / nG0
        rho_mu = mu / mu0
        if rho_p <= tol and rho_d <= tol and rho_g <= tol and tau <= tol * max(1.0, kappa):
            status = _certificate(op, b, c, x, y)
            break
        if rho_mu <= tol * 1e-2 and tau <= tol * 1e-2 * min(1.0, kappa):
            status = _certificate(op, b, c, x, y)
            break
        if it == max_iter:
            break
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            status = NUMERICAL_FAILURE
            break

        D = x / z
        if AT is not None:
            fac = _factor_qr(AT, D, lambda v, D=D: op.matvec(D * op.rmatvec(v)))
        else:
            fac = _factor(op.normal(D))
        p = _solve(fac, b + op.matvec(D * c))
        u = D * (op.rmatvec(p) - c)
        denom_base = b @ p - c @ u

        def direction(eta, gamma, corr_xz, corr_tk):
            r4 = gamma * mu - x * z - corr_xz
            r5 = gamma * mu - tau * kappa - corr_tk
            # D r4 / x is written as r4 / z to avoid dividing by vanishing x
            q = _solve(fac, eta * rP + op.matvec(D * eta * rD - r4 / z))
            v = D * (op.rmatvec(q) - eta * rD) + r4 / z
            dtau = (eta * rG + c @ v - b @ q + r5 / tau) / (denom_base + kappa / tau)
            dx = u * dtau + v
            # v is a difference of large terms when D spans many orders of
            # magnitude; one projection restores A dx - b dtau = eta rP
            err = eta * rP + b * dtau - op.matvec(dx)
            dx = dx + D * op.rmatvec(_solve(fac, err))
            dy = p * dtau + q
            # dual residual equation rather than (r4 - z dx) / x, for the same reason
            dz = eta * rD + c * dtau - op.rmatvec(dy)
            dkappa = (r5 - kappa * dtau) / tau
            return dx, dy, dz, dtau, dkappa

        def steplen(dx, dz, dtau, dkappa):
            a = min(_step(x, dx), _step(z, dz), _step(np.array([tau]), np.array([dtau])),
                    _step(np.array([kappa]), np.array([dkappa])))
            return a

        # predictor
        dx, dy, dz, dtau, dkappa = direction(1.0, 0.0, 0.0, 0.0)
        a = steplen(dx, dz, dtau, dkappa)
        gamma = (1 - a) ** 2 * min(0.1, 1 - a)
        eta = 1 - gamma
        # corrector
        dx, dy, dz, dtau, dkappa = direction(eta, gamma, dx * dz, dtau * dkappa)
        a = min(1.0, STEP_FACTOR * steplen(dx, dz, dtau, dkappa))
        # stay in a wide neighbourhood of the central path: no product
        # x_j z_j may fall far below the average complementarity
        for _ in range(30):
            xn, zn = x + a * dx, z + a * dz
            tk = (tau + a * dtau) * (kappa + a * dkappa)
            mun = (xn @ zn + tk) / (V + 1)
            if min(np.min(xn * zn), tk) >= NEIGHBOURHOOD * mun:
                break
            a *= 0.8
        x = x + a * dx
        y = y + a * dy
        z = z + a * dz
        tau = tau + a * dtau
        kappa = kappa + a * dkappa
        # keep the iterate strictly interior under rounding
        x = np.maximum(x, 1e-300)
        z = np.maximum(z, 1e-300)

    xs, ys = x / tau, y / tau
    if allow_crossover and status in (ITERATION_LIMIT, NUMERICAL_FAILURE) and best[0] <= CROSSOVER_MERIT:
        xc, yc, st = crossover(op, c, b, *best[1], AT=AT, tol=tol)
        if st == OPTIMAL:
            p_c = np.abs(op.matvec(xc) - b).max(initial=0.0) / bnorm
            d_c = max(-(c - op.rmatvec(yc)).min(initial=0.0), 0.0) / cnorm
            g_c = abs(c @ xc - b @ yc) / (1 + abs(c @ xc))
            if max(p_c, d_c, g_c) <= tol:
                rep = SolveReport(OPTIMAL, float(c @ xc), float(p_c), float(d_c), float(g_c),
                                  int(it), 0.0, "finished by simplex crossover")
                return xc, yc, rep
    rep = SolveReport(
        status=status,
        objective=float(c @ xs) if status == OPTIMAL else (float(c @ xs) if np.isfinite(tau) else np.nan),
        primal_residual=float(p_res),
        dual_residual=float(d_res),
        gap=float(gap),
        iterations=int(it),
        seconds=0.0,
    )
    return xs, ys, rep
