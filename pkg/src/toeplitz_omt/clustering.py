"""Barycenters, classification and K-means for Toeplitz covariances.

The transport barycenter ``argmin_R sum_l T_kappa(R, R_l)`` is one joint
linear program. The free matrix ``R`` is eliminated by requiring the
barycenter-side spectra ``Phi_l`` of all pairs to share moments with
``Phi_1``; the barycenter is then ``Gamma(Phi_1)``, which is Toeplitz and
PSD by construction.

Comparison clusterings use the cost paired with each closed-form barycenter:
squared Frobenius distance with the arithmetic mean, squared distance of
matrix logarithms with the log-Euclidean mean, ``KL(R_i, B)`` with the
inverse of the mean inverse, and the ellipticity distance with the
solution of its fixed-point equation (not the unit-diagonal version, which
is a congruence of it and does not minimize the cost). Each barycenter
minimizes the summed cost of its cluster, which makes every K-means run
monotone.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ValidationError
from .matrices import (
    _herm,
    ellipticity_fixed_point,
    ellipticity_distance,
    kl_barycenter,
    kl_divergence,
    matrix_function,
)
from .solvers.lp import BandOperator, LinearProgram, solve_lp
from .solvers.report import SolveReport
from .spectral import (
    FrequencyGrid,
    ToeplitzCov,
    _as_matrix,
    complexify_lags,
    lag_moment_rows,
    realify_lags,
)
from .transport import (
    CHORDAL2,
    DEFAULT_GRID,
    DEFAULT_KAPPA,
    CostSpec,
    PlanOperator,
    _GRID_ADVICE,
    _check_kappa,
    _raise_if_failed,
    build_cost_matrix,
    compute_T_kappa,
    default_feas_tol,
)

DEFAULT_RESTARTS = 5
MONOTONE_SLACK = 1e-6


class BarycenterResult(NamedTuple):
    R: ToeplitzCov
    objective: float
    report: SolveReport


def barycenter_tk(Rs, grid: FrequencyGrid | None = None, cost: CostSpec = CHORDAL2,
                  kappa: float = DEFAULT_KAPPA, feas_tol: float | None = None,
                  tol: float = 1e-8) -> BarycenterResult:
    """Transport barycenter of Toeplitz covariances.

    Variables per input ``l``: a plan ``M_l`` from the barycenter side to
    ``R_l`` and deletion vectors ``a_l`` (barycenter side) and ``b_l``
    (input side), with ``Phi_l = rowsum(M_l) + a_l`` and
    ``Psi_l = colsum(M_l) + b_l``. Rows: ``Gamma(Phi_l) = Gamma(Phi_1)``
    exactly for ``l >= 2`` and ``Gamma(Psi_l) = R_l`` within ``feas_tol``.
    """
    Rs = list(Rs)
    if not Rs:
        raise ValidationError("barycenter of an empty list")
    _check_kappa(kappa)
    n = Rs[0].n
    if any(R.n != n for R in Rs):
        raise ValidationError("all inputs must share one dimension")
    grid = grid or FrequencyGrid(DEFAULT_GRID)
    L, N = len(Rs), grid.N
    F = lag_moment_rows(grid, n)
    p = F.shape[0]
    C = build_cost_matrix(grid, cost).ravel()

    blocks, rhs, widths = [], [], []
    for l in range(1, L):
        blocks.append((F, [(1, "row", l), (1, "vec", 2 * l), (-1, "row", 0), (-1, "vec", 0)]))
        rhs.append(np.zeros(p))
        widths.append(np.zeros(p))
    for l, R in enumerate(Rs):
        blocks.append((F, [(1, "col", l), (1, "vec", 2 * l + 1)]))
        rhs.append(realify_lags(R.lags))
        t = default_feas_tol(R) if feas_tol is None else float(feas_tol)
        if t < 0:
            raise ValidationError(f"feas_tol must be nonnegative, got {feas_tol}")
        widths.append(np.full(p, t))
    op = PlanOperator(N, L, 2 * L, blocks)
    b = np.concatenate(rhs)
    tvec = np.concatenate(widths)
    c = np.concatenate([np.tile(C, L), np.full(2 * L * N, kappa)])
    if np.any(tvec > 0):
        rows = np.flatnonzero(tvec > 0)
        band = BandOperator(op, rows, tvec[rows])
        lp = LinearProgram(np.concatenate([c, np.zeros(2 * rows.size)]), band, band.rhs(b))
    else:
        lp = LinearProgram(c, op, b)
    x, _, rep = solve_lp(lp, tol=tol)
    _raise_if_failed(rep, "barycenter problem", _GRID_ADVICE)
    x = np.clip(x[: op.shape[1]], 0.0, None)
    M0 = x[: N * N].reshape(N, N)
    a0 = x[L * N * N: L * N * N + N]
    lags = complexify_lags(F @ (M0.sum(axis=1) + a0))
    objective = float(c @ x)
    return BarycenterResult(ToeplitzCov(lags), objective, rep)


# --- distances ---------------------------------------------------------------------


def _map(fn, items, workers):
    if workers is None:
        workers = min(len(items), os.cpu_count() or 1)
    if workers <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def tk_distance_table(Rs, barycenters, grid=None, cost=CHORDAL2, kappa=DEFAULT_KAPPA,
                      feas_tol=None, workers=None) -> np.ndarray:
    """``D[i, j] = T_kappa(R_i, B_j)``, solved concurrently."""
    pairs = [(i, j) for i in range(len(Rs)) for j in range(len(barycenters))]

    def one(ij):
        i, j = ij
        return compute_T_kappa(Rs[i], barycenters[j], grid, cost, kappa, feas_tol).value

    vals = _map(one, pairs, workers)
    return np.array(vals).reshape(len(Rs), len(barycenters))


def classify(R: ToeplitzCov, barycenters, grid=None, cost=CHORDAL2, kappa=DEFAULT_KAPPA,
             feas_tol=None) -> int:
    """Index of the nearest barycenter in ``T_kappa``; ties go to the lowest index."""
    if not barycenters:
        raise ValidationError("classify needs at least one barycenter")
    d = tk_distance_table([R], barycenters, grid, cost, kappa, feas_tol)[0]
    return int(np.argmin(d))


def normalized_distance_table(D) -> np.ndarray:
    """Divide each row by its smallest entry (rows with a zero minimum are left as is)."""
    D = np.asarray(D, dtype=float)
    m = D.min(axis=1, keepdims=True)
    return np.where(m > 0, D / np.where(m > 0, m, 1.0), D)


# --- K-means -------------------------------------------------------------------------


@dataclass
class ClusterModel:
    K: int
    barycenters: list
    assignments: np.ndarray
    total_cost: float
    history: list = field(default_factory=list)
    distances: np.ndarray | None = None
    metric: str = "tk"
    seed: int | None = None
    restart_costs: list = field(default_factory=list)

    def to_dict(self) -> dict:
        def enc(B):
            if isinstance(B, ToeplitzCov):
                return {"lags": [[z.real, z.imag] for z in B.lags]}
            B = np.asarray(B)
            return {"matrix": [B.real.tolist(), B.imag.tolist()]}

        out = {
            "metric": self.metric,
            "K": self.K,
            "assignments": self.assignments.tolist(),
            "total_cost": self.total_cost,
            "history": list(self.history),
            "barycenters": [enc(B) for B in self.barycenters],
            "seed": self.seed,
            "restart_costs": list(self.restart_costs),
        }
        if self.distances is not None:
            out["distances"] = self.distances.tolist()
            out["normalized_distances"] = normalized_distance_table(self.distances).tolist()
        return out


def _restart_seeds(init_seed, n_restarts):
    ss = np.random.SeedSequence(init_seed)
    return [int(s.generate_state(1)[0]) for s in ss.spawn(n_restarts)]


class _Centers:
    """Barycenters and distances memoized by cluster membership.

    A center is ``(key, B)``. Keys are tuples of member indices (the center
    is their barycenter), ``("item", i)`` for an input used as a center, or
    ``None`` for a random initial center, which is never cached. Barycenters
    are deterministic functions of their members, so restarts that revisit
    a cluster reuse its solves.
    """

    def __init__(self, items, distances, barycenter):
        self.items = items
        self.distances = distances  # list of (B, i) -> list of costs
        self.barycenter = barycenter
        self._bary = {}
        self._dist = {}

    def of(self, members):
        key = tuple(int(i) for i in members)
        if key not in self._bary:
            self._bary[key] = self.barycenter([self.items[i] for i in key])
        return key, self._bary[key]

    def item(self, i):
        return ("item", int(i)), self.items[i]

    def table(self, centers):
        L = len(self.items)
        D = np.empty((L, len(centers)))
        todo = []
        for j, (key, _) in enumerate(centers):
            for i in range(L):
                hit = self._dist.get((key, i)) if key is not None else None
                if hit is None:
                    todo.append((i, j))
                else:
                    D[i, j] = hit
        vals = self.distances([(centers[j][1], i) for i, j in todo])
        for (i, j), v in zip(todo, vals):
            D[i, j] = v
            if centers[j][0] is not None:
                self._dist[(centers[j][0], i)] = v
        return D


def _alternate(engine: _Centers, K, combine, rng, max_iter):
    """One K-means run from random convex-combination centers.

    Returns the centers, assignments, final cost table and the total cost
    recorded after every assignment step.
    """
    L = len(engine.items)
    centers = [(None, combine(rng.dirichlet(np.ones(L)))) for _ in range(K)]
    D = engine.table(centers)
    assign = np.argmin(D, axis=1)
    history = []
    prev = None
    for _ in range(max_iter):
        # an empty cluster takes the input farthest from its center; clusters
        # holding a single input are never emptied by this
        for k in range(K):
            if np.any(assign == k):
                continue
            served = D[np.arange(L), assign].copy()
            counts = np.bincount(assign, minlength=K)
            served[counts[assign] <= 1] = -np.inf
            far = int(np.argmax(served))
            centers[k] = engine.item(far)
            D[:, k] = engine.table([centers[k]])[:, 0]
            assign[far] = k
        history.append(float(D[np.arange(L), assign].sum()))
        if prev is not None and np.array_equal(assign, prev):
            break
        prev = assign.copy()
        centers = [engine.of(np.flatnonzero(assign == k)) for k in range(K)]
        D = engine.table(centers)
        assign = np.argmin(D, axis=1)
    return [B for _, B in centers], assign, D, history


def _best_of(engine, K, combine, init_seed, max_iter, n_restarts, metric):
    if int(n_restarts) != n_restarts or n_restarts < 1:
        raise ValidationError(f"n_restarts must be a positive integer, got {n_restarts}")
    best = None
    costs = []
    for s in _restart_seeds(init_seed, n_restarts):
        rng = np.random.Generator(np.random.PCG64(s))
        bars, assign, D, history = _alternate(engine, K, combine, rng, max_iter)
        model = ClusterModel(K, bars, assign, history[-1], history, D, metric, s)
        costs.append(model.total_cost)
        if best is None or model.total_cost < best.total_cost:
            best = model
    best.restart_costs = costs
    return best


def kmeans(Rs, K: int, grid=None, cost=CHORDAL2, kappa=DEFAULT_KAPPA, init_seed: int = 0,
           max_iter: int = 50, n_restarts: int = DEFAULT_RESTARTS, normalize: bool = False,
           feas_tol=None, workers=None) -> ClusterModel:
    """K-means in ``T_kappa`` with transport barycenters.

    Each restart draws its initial barycenters as random convex combinations
    of the inputs and alternates classification and barycenter updates
    until the assignments repeat. The restart with the least total cost is
    returned. A cluster that becomes empty takes the input currently
    farthest from its barycenter.

    Costs are ``T_kappa(B_j, R_i)``, with the barycenter as the first
    argument as in the barycenter problem (the two orders agree for
    symmetric costs).
    """
    Rs = [R.normalized() if normalize else R for R in Rs]
    _check_k(K, len(Rs))
    grid = grid or FrequencyGrid(DEFAULT_GRID)

    def distances(pairs):
        return _map(lambda p: compute_T_kappa(p[0], Rs[p[1]], grid, cost, kappa, feas_tol).value,
                    pairs, workers)

    def bary(members):
        return barycenter_tk(members, grid, cost, kappa, feas_tol).R

    def combine(w):
        return ToeplitzCov(sum(wi * R.lags for wi, R in zip(w, Rs)))

    engine = _Centers(Rs, distances, bary)
    return _best_of(engine, K, combine, init_seed, max_iter, n_restarts, "tk")


def _check_k(K, L):
    if int(K) != K or K < 1:
        raise ValidationError(f"K must be a positive integer, got {K}")
    if K > L:
        raise ValidationError(f"K={K} exceeds the number of inputs {L}")


def _log(X):
    return matrix_function(X, "log")


COMPARISON_METRICS = ("euclidean", "log_euclidean", "kl", "ellipticity")


def comparison_cost(metric: str, R, B) -> float:
    """The K-means cost paired with each comparison barycenter."""
    if metric == "euclidean":
        return float(np.linalg.norm(_as_matrix(R) - _as_matrix(B)) ** 2)
    if metric == "log_euclidean":
        return float(np.linalg.norm(_log(_as_matrix(R)) - _log(_as_matrix(B))) ** 2)
    if metric == "kl":
        return kl_divergence(R, B)
    if metric == "ellipticity":
        return ellipticity_distance(R, B)
    raise ValidationError(f"unknown metric {metric!r}; choose from {COMPARISON_METRICS}")


def comparison_barycenter(metric: str, Rs) -> np.ndarray:
    mats = [_as_matrix(R) for R in Rs]
    if metric == "euclidean":
        return _herm(sum(mats) / len(mats))
    if metric == "log_euclidean":
        return matrix_function(_herm(sum(_log(X) for X in mats) / len(mats)), "exp")
    if metric == "kl":
        return kl_barycenter(mats)
    if metric == "ellipticity":
        return ellipticity_fixed_point(mats)
    raise ValidationError(f"unknown metric {metric!r}; choose from {COMPARISON_METRICS}")


def kmeans_comparison(Rs, K: int, metric: str = "euclidean", init_seed: int = 0,
                      max_iter: int = 50, n_restarts: int = DEFAULT_RESTARTS,
                      normalize: bool = False) -> ClusterModel:
    """K-means with a classical matrix distance and its barycenter."""
    if metric not in COMPARISON_METRICS:
        raise ValidationError(f"unknown metric {metric!r}; choose from {COMPARISON_METRICS}")
    mats = [_as_matrix(R.normalized() if normalize and isinstance(R, ToeplitzCov) else R) for R in Rs]
    _check_k(K, len(mats))
    if metric != "euclidean":
        for X in mats:
            matrix_function(X, "power", -1.0)  # raises SingularMatrixError if not PD

    def distances(pairs):
        return [comparison_cost(metric, mats[i], B) for B, i in pairs]

    def bary(members):
        return comparison_barycenter(metric, members)

    def combine(w):
        return _herm(sum(wi * X for wi, X in zip(w, mats)))

    engine = _Centers(mats, distances, bary)
    return _best_of(engine, K, combine, init_seed, max_iter, n_restarts, metric)
