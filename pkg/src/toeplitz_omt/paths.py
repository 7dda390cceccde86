"""Covariance paths: displacement interpolation, tracking and line fits.

A transport plan ``M`` induces the path

    R_tau = (1/2pi) sum_{k,l} M[k, l] a(psi_kl) a(psi_kl)^H,
    psi_kl = theta_k + tau * wrap(theta_l - theta_k),

in which every unit of mass travels along the shorter arc from its source
to its destination (a half-turn goes counter-clockwise, ``wrap(-pi) = +pi``).
The path is Toeplitz and PSD for every real ``tau`` and keeps the diagonal
``sum(M) / 2pi``; ``tau`` outside ``[0, 1]`` extrapolates.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConvergenceError, SolverError, ValidationError
from .matrices import _herm, hermitian_eig, matrix_function
from .solvers.qp import solve_qp_nonneg
from .solvers.report import OPTIMAL, SolveReport
from .spectral import (
    TWO_PI,
    DiscreteSpectrum,
    FrequencyGrid,
    ToeplitzCov,
    TransportPlan,
    _as_matrix,
    correlogram,
    spectrum_lags,
    wrap_to_T,
)
from .transport import CHORDAL2, CostSpec, build_cost_matrix


def displacement(grid: FrequencyGrid) -> np.ndarray:
    """``Delta[k, l] = wrap(theta_l - theta_k)`` with the half-turn sent to ``+pi``."""
    th = grid.nodes
    return wrap_to_T(th[None, :] - th[:, None])


def _path_lags(grid, mass, n, tau):
    k, l = np.nonzero(mass)
    w = mass[k, l]
    th = grid.nodes
    psi = th[k] + tau * wrap_to_T(th[l] - th[k])
    lags = np.exp(-1j * np.outer(np.arange(n), psi)) @ w / TWO_PI
    lags[0] = w.sum() / TWO_PI
    return lags


def interpolate(plan: TransportPlan, n: int, tau: float) -> ToeplitzCov:
    """Displacement interpolation ``R_tau`` of the plan (any real ``tau``)."""
    if n < 1:
        raise ValidationError(f"dimension must be >= 1, got {n}")
    return ToeplitzCov(_path_lags(plan.grid, plan.mass, n, float(tau)))


def interpolate_with_mass_terms(plan: TransportPlan, psi0: DiscreteSpectrum, psi1: DiscreteSpectrum,
                                n: int, tau: float) -> ToeplitzCov:
    """``R_tau`` plus the linearly faded mass differences ``Psi_j - Phi_j^M``.

    PSD is guaranteed for ``tau`` in ``[0, 1]`` only.
    """
    if psi0.grid != plan.grid or psi1.grid != plan.grid:
        raise ValidationError("psi0, psi1 and the plan must share one grid")
    tau = float(tau)
    lags = _path_lags(plan.grid, plan.mass, n, tau)
    d0 = psi0.masses - plan.mass.sum(axis=1)
    d1 = psi1.masses - plan.mass.sum(axis=0)
    lags = lags + (1 - tau) * spectrum_lags(plan.grid, d0, n) + tau * spectrum_lags(plan.grid, d1, n)
    lags[0] = lags[0].real
    if lags[0].real < 0:
        # only possible far outside [0, 1]
        raise ValidationError(f"extrapolation at tau={tau} gives a negative diagonal")
    return ToeplitzCov(lags)


@dataclass
class CovariancePath:
    """A plan (with optional mass terms) evaluated on a list of ``tau`` values."""

    plan: TransportPlan
    n: int
    tau_grid: list
    matrices: list = field(default_factory=list)
    psi0: DiscreteSpectrum | None = None
    psi1: DiscreteSpectrum | None = None

    @classmethod
    def evaluate(cls, plan: TransportPlan, n: int, taus: Sequence[float],
                 psi0: DiscreteSpectrum | None = None, psi1: DiscreteSpectrum | None = None):
        if (psi0 is None) != (psi1 is None):
            raise ValidationError("give both psi0 and psi1 or neither")
        path = cls(plan, n, [float(t) for t in taus], [], psi0, psi1)
        path.matrices = [path.at(t) for t in path.tau_grid]
        return path

    def at(self, tau: float) -> ToeplitzCov:
        if self.psi0 is None:
            return interpolate(self.plan, self.n, tau)
        return interpolate_with_mass_terms(self.plan, self.psi0, self.psi1, self.n, tau)

    def correlograms(self, thetas) -> np.ndarray:
        """``a(theta)^H R_tau a(theta)``, one row per ``tau``."""
        return np.array([correlogram(R, thetas) for R in self.matrices])

    def write_csv(self, path, thetas):
        """Long format: columns ``tau, theta, value``."""
        write_correlogram_csv(path, self.tau_grid, thetas, self.correlograms(thetas))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "tau": self.tau_grid,
            "matrices": [[[z.real, z.imag] for z in R.lags] for R in self.matrices],
        }

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)


def write_correlogram_csv(path, taus, thetas, values):
    values = np.asarray(values)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["tau", "theta", "value"])
        for i, t in enumerate(taus):
            for j, th in enumerate(thetas):
                w.writerow([repr(float(t)), repr(float(th)), repr(float(values[i, j]))])


# --- tracking ------------------------------------------------------------------


def _frobenius_weights(n):
    # ||T(r)||_F^2 = n |r_0|^2 + 2 sum_m (n - m) |r_m|^2
    w = 2.0 * (n - np.arange(n))
    w[0] = n
    return w


def _toeplitz_part(R, n):
    """Lags of the Frobenius-nearest Toeplitz matrix and the squared distance to it."""
    if isinstance(R, ToeplitzCov):
        if R.n != n:
            raise ValidationError(f"estimate has dimension {R.n}, expected {n}")
        return np.array(R.lags), 0.0
    H = _as_matrix(R)
    if H.shape != (n, n):
        raise ValidationError(f"estimate has shape {H.shape}, expected {(n, n)}")
    T = ToeplitzCov.from_average(H)
    return np.array(T.lags), float(np.linalg.norm(H - T.matrix()) ** 2)


class TrackResult(NamedTuple):
    plan: TransportPlan
    path: CovariancePath
    report: SolveReport
    objective: float


def track(estimates, grid: FrequencyGrid | None = None, cost: CostSpec = CHORDAL2,
          lam: float | None = None, tol: float = 1e-7, max_iter: int = 20000,
          taus: Sequence[float] | None = None) -> TrackResult:
    """Fit a displacement path to covariance estimates at given ``tau`` values.

    Minimizes ``<C, M> + lam * sum_j ||R_{tau_j}(M) - Rhat_j||_F^2`` over
    ``M >= 0``. Estimates may be Toeplitz or dense Hermitian; only their
    Toeplitz part interacts with the path, the rest is a constant.

    Parameters
    ----------
    estimates : list of (tau_j, R_hat_j)
    lam : float, optional
        Data weight, by default ``1 / (2 n^2)``.
    taus : sequence of float, optional
        Where to evaluate the returned path; defaults to the estimate times.
    """
    if not estimates:
        raise ValidationError("track needs at least one estimate")
    grid = grid or FrequencyGrid(256)
    ts = np.array([float(t) for t, _ in estimates])
    if np.unique(ts).size != ts.size:
        raise ValidationError("estimate times must be distinct")
    first = estimates[0][1]
    n = first.n if isinstance(first, ToeplitzCov) else np.asarray(first).shape[0]
    lam = 1.0 / (2 * n * n) if lam is None else float(lam)
    if lam <= 0:
        raise ValidationError(f"lambda must be positive, got {lam}")

    N = grid.N
    th = grid.nodes
    D = displacement(grid).ravel()
    src = np.repeat(th, N)
    m = np.arange(n)
    w = _frobenius_weights(n)
    # realified lag map of every estimate time, stacked: rows Re r_m and
    # Im r_m with the Frobenius weights folded in as square roots
    sw = np.sqrt(np.concatenate([w, w[1:]]))
    blocks, targets = [], []
    const = 0.0
    for (t, R) in estimates:
        q, resid = _toeplitz_part(R, n)
        E = np.exp(-1j * np.outer(m, src + t * D)) / TWO_PI
        blocks.append(sw[:, None] * np.concatenate([E.real, E[1:].imag]))
        targets.append(sw * np.concatenate([q.real, q[1:].imag]))
        const += lam * resid
    G = np.concatenate(blocks)
    g = np.concatenate(targets)
    C = build_cost_matrix(grid, cost).ravel()

    def apply(v):
        return 2 * lam * (G.T @ (G @ v))

    linear = C - 2 * lam * (G.T @ g)
    const += lam * float(g @ g)
    res = solve_qp_nonneg(apply, linear, tol=tol, max_iter=max_iter)
    if res.report.status != OPTIMAL:
        raise SolverError(f"tracking QP ended with status {res.report.status}: {res.report.message}",
                          report=res.report)
    M = np.maximum(res.x, 0.0).reshape(N, N)
    plan = TransportPlan(grid, M)
    objective = res.report.objective + const
    path = CovariancePath.evaluate(plan, n, ts if taus is None else taus)
    return TrackResult(plan, path, res.report, objective)


def tracking_objective(plan: TransportPlan, estimates, cost: CostSpec = CHORDAL2, lam=None) -> float:
    """Direct evaluation of the tracking objective, for checking :func:`track`."""
    first = estimates[0][1]
    n = first.n if isinstance(first, ToeplitzCov) else np.asarray(first).shape[0]
    lam = 1.0 / (2 * n * n) if lam is None else lam
    C = build_cost_matrix(plan.grid, cost)
    val = float((C * plan.mass).sum())
    for t, R in estimates:
        Rh = R.matrix() if isinstance(R, ToeplitzCov) else np.asarray(R)
        val += lam * float(np.linalg.norm(interpolate(plan, n, t).matrix() - Rh) ** 2)
    return val


# --- line fits -------------------------------------------------------------------


@dataclass(frozen=True)
class LinePath:
    """Endpoints of a Euclidean or log-Euclidean line fit."""

    kind: str
    R0: np.ndarray
    R1: np.ndarray
    objective: float
    iterations: int = 0

    def at(self, tau: float) -> np.ndarray:
        if self.kind == "euclidean":
            return _herm((1 - tau) * self.R0 + tau * self.R1)
        L0 = matrix_function(self.R0, "log")
        L1 = matrix_function(self.R1, "log")
        return matrix_function(_herm((1 - tau) * L0 + tau * L1), "exp")


def _dense_estimates(estimates, minimum=2):
    if len(estimates) < minimum:
        raise ValidationError(f"need at least {minimum} estimates, got {len(estimates)}")
    ts = np.array([float(t) for t, _ in estimates])
    Rs = [_as_matrix(R) for _, R in estimates]
    n = Rs[0].shape[0]
    if any(R.shape != (n, n) for R in Rs):
        raise ValidationError("estimates must share one dimension")
    return ts, Rs


def _line_normal_equations(ts, Xs):
    """Unconstrained least squares for ``(1 - t) X0 + t X1 ~ X_j``."""
    a, b = 1 - ts, ts
    G = np.array([[a @ a, a @ b], [a @ b, b @ b]])
    if abs(np.linalg.det(G)) <= 1e-14 * max(np.abs(G).max(), 1.0) ** 2:
        raise ValidationError("the estimate times must take at least two distinct values")
    rhs0 = sum(ai * X for ai, X in zip(a, Xs))
    rhs1 = sum(bi * X for bi, X in zip(b, Xs))
    Gi = np.linalg.inv(G)
    X0 = Gi[0, 0] * rhs0 + Gi[0, 1] * rhs1
    X1 = Gi[1, 0] * rhs0 + Gi[1, 1] * rhs1
    return _herm(X0), _herm(X1)


def _line_objective(ts, Xs, X0, X1):
    return float(sum(np.linalg.norm((1 - t) * X0 + t * X1 - X) ** 2 for t, X in zip(ts, Xs)))


def psd_projection(H) -> np.ndarray:
    """Frobenius-nearest PSD matrix (eigenvalue clipping)."""
    return hermitian_eig(H).recompose(lambda v: np.clip(v, 0.0, None))


def fit_euclidean_path(estimates, tol: float = 1e-9, max_iter: int = 100000) -> LinePath:
    """PSD endpoints ``(R0, R1)`` of the least-squares line through the estimates.

    Block coordinate descent: with one endpoint fixed the objective is a
    weighted distance to a single matrix, so the other endpoint is the PSD
    projection of that matrix. Starts from the projected unconstrained fit and
    stops when both endpoints change by less than ``tol`` relative.
    """
    ts, Rs = _dense_estimates(estimates)
    a, b = 1 - ts, ts
    X0, X1 = _line_normal_equations(ts, Rs)
    R0, R1 = psd_projection(X0), psd_projection(X1)
    for it in range(1, max_iter + 1):
        if a @ a > 0:
            R0n = psd_projection(sum(ai * (X - bi * R1) for ai, bi, X in zip(a, b, Rs)) / (a @ a))
        else:
            R0n = R0
        if b @ b > 0:
            R1n = psd_projection(sum(bi * (X - ai * R0n) for ai, bi, X in zip(a, b, Rs)) / (b @ b))
        else:
            R1n = R1
        change = max(np.linalg.norm(R0n - R0), np.linalg.norm(R1n - R1))
        scale = max(np.linalg.norm(R0n), np.linalg.norm(R1n), 1e-300)
        R0, R1 = R0n, R1n
        if change <= tol * scale:
            return LinePath("euclidean", R0, R1, _line_objective(ts, Rs, R0, R1), it)
    raise ConvergenceError("Euclidean path fit did not converge", residual=change / scale,
                           iterations=max_iter)


def euclidean_kkt_residual(estimates, fit: LinePath) -> float:
    """Projected-gradient residual of the PSD-constrained line fit."""
    ts, Rs = _dense_estimates(estimates)
    res0 = sum((1 - t) * ((1 - t) * fit.R0 + t * fit.R1 - X) for t, X in zip(ts, Rs))
    res1 = sum(t * ((1 - t) * fit.R0 + t * fit.R1 - X) for t, X in zip(ts, Rs))
    r = 0.0
    for R, G in ((fit.R0, res0), (fit.R1, res1)):
        r = max(r, float(np.linalg.norm(R - psd_projection(R - G))))
    return r


def fit_log_euclidean_path(estimates) -> LinePath:
    """Least-squares line in matrix-logarithm coordinates (estimates must be PD)."""
    ts, Rs = _dense_estimates(estimates)
    Ls = [matrix_function(R, "log") for R in Rs]
    L0, L1 = _line_normal_equations(ts, Ls)
    obj = _line_objective(ts, Ls, L0, L1)
    return LinePath("log_euclidean", matrix_function(L0, "exp"), matrix_function(L1, "exp"), obj)
