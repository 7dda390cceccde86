"""Transport distances between spectra and between Toeplitz covariances.

All problems are discretized on a :class:`FrequencyGrid` and solved as
linear programs. The unbalanced (``kappa``) variants use the reduced lift
in which ``Phi_j = marginal_j(M) + a_j`` with ``a_j >= 0`` and cost
``kappa * sum(a_j)``: creating mass on one side to transport it is never
cheaper than deleting the matching mass on the other side, so the L1
penalties only ever act as deletions.

Moment constraints ``Gamma(Phi_j) = R_j`` are realified into ``2n - 1`` real
rows (see :func:`lag_moment_rows`) and may be relaxed to a band of width
``feas_tol`` per row, because a finite grid cannot place atoms at arbitrary
off-grid frequencies.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import InfeasibleError, SolverError, ValidationError
from .solvers.lp import BandOperator, LinearProgram, solve_lp
from .solvers.report import INFEASIBLE, OPTIMAL, SolveReport
from .spectral import (
    TWO_PI,
    DiscreteSpectrum,
    FrequencyGrid,
    ToeplitzCov,
    TransportPlan,
    _same_n,
    complexify_lags,
    hermitian_from_lag_coefficients,
    lag_moment_rows,
    realify_lags,
    wrap_to_T,
)

DEFAULT_GRID = 256
DEFAULT_KAPPA = 5.0
FEAS_TOL_REL = 1e-7
MASS_RTOL = 1e-9
CERT_TOL = 1e-8

COST_KINDS = ("chordal_pow", "abs_angle_pow", "fixed_plus_chordal", "custom_table")


@dataclass(frozen=True)
class CostSpec:
    """Ground cost on the circle.

    ``chordal_pow``: ``|e^{i theta} - e^{i phi}|^p``; ``abs_angle_pow``:
    wrapped angular distance to the power ``p``; ``fixed_plus_chordal``:
    ``1 + |e^{i theta} - e^{i phi}|^2`` off the diagonal; ``custom_table``:
    an explicit ``N x N`` matrix.
    """

    kind: str = "chordal_pow"
    p: float = 2.0
    table: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in COST_KINDS:
            raise ValidationError(f"unknown cost kind {self.kind!r}; expected one of {COST_KINDS}")
        if self.kind in ("chordal_pow", "abs_angle_pow") and not self.p > 0:
            raise ValidationError(f"cost exponent must be positive, got {self.p}")
        if self.kind == "custom_table" and self.table is None:
            raise ValidationError("custom_table cost needs a table")

    @property
    def shift_invariant(self) -> bool:
        return self.kind != "custom_table"

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "p": self.p}
        if self.table is not None:
            d["table"] = np.asarray(self.table).tolist()
        return d


CHORDAL2 = CostSpec("chordal_pow", 2.0)


def angular_distance(a, b):
    return np.abs(wrap_to_T(np.asarray(a) - np.asarray(b)))


def build_cost_matrix(grid: FrequencyGrid, spec: CostSpec) -> np.ndarray:
    th = grid.nodes
    if spec.kind == "custom_table":
        C = np.asarray(spec.table, dtype=float)
        if C.shape != (grid.N, grid.N):
            raise ValidationError(f"cost table must be {grid.N}x{grid.N}, got {C.shape}")
        if not np.all(np.isfinite(C)) or C.min() < 0:
            raise ValidationError("cost table entries must be finite and nonnegative")
        return C.copy()
    if spec.kind == "abs_angle_pow":
        D = angular_distance(th[:, None], th[None, :])
        C = D ** spec.p
    else:
        # |e^{ia} - e^{ib}| = 2 |sin((a - b)/2)|
        chord = 2.0 * np.abs(np.sin(0.5 * (th[:, None] - th[None, :])))
        if spec.kind == "chordal_pow":
            C = chord ** spec.p
        else:
            C = 1.0 + chord ** 2
    np.fill_diagonal(C, 0.0)
    return C


class PlanOperator:
    """Constraint operator over transport plans and auxiliary mass vectors.

    Variables are ``L`` flattened ``N x N`` plans followed by ``J`` vectors of
    length ``N``. Each row block is ``F_r @ (sum of signed terms)`` where a
    term is the row sums or column sums of a plan, or a vector.
    """

    def __init__(self, N, n_plans, n_vecs, blocks):
        self.N, self.L, self.J = N, n_plans, n_vecs
        self.blocks = [(np.asarray(F, dtype=float), list(terms)) for F, terms in blocks]
        self.sizes = [F.shape[0] for F, _ in self.blocks]
        self.offsets = np.concatenate([[0], np.cumsum(self.sizes)])
        self.shape = (int(self.offsets[-1]), n_plans * N * N + n_vecs * N)

    def _parts(self, x):
        N, L = self.N, self.L
        plans = x[: L * N * N].reshape(L, N, N)
        vecs = x[L * N * N:].reshape(self.J, N)
        return plans, vecs

    def _term(self, plans, vecs, kind, idx):
        if kind == "row":
            return plans[idx].sum(axis=1)
        if kind == "col":
            return plans[idx].sum(axis=0)
        return vecs[idx]

    def matvec(self, x):
        plans, vecs = self._parts(x)
        out = []
        for F, terms in self.blocks:
            s = sum(sign * self._term(plans, vecs, kind, idx) for sign, kind, idx in terms)
            out.append(F @ s)
        return np.concatenate(out)

    def rmatvec(self, y):
        N = self.N
        plans = np.zeros((self.L, N, N))
        vecs = np.zeros((self.J, N))
        for (F, terms), lo, hi in zip(self.blocks, self.offsets[:-1], self.offsets[1:]):
            g = F.T @ y[lo:hi]
            for sign, kind, idx in terms:
                if kind == "row":
                    plans[idx] += sign * g[:, None]
                elif kind == "col":
                    plans[idx] += sign * g[None, :]
                else:
                    vecs[idx] += sign * g
        return np.concatenate([plans.ravel(), vecs.ravel()])

    def normal(self, d):
        plans, vecs = self._parts(d)
        rows = plans.sum(axis=2)
        cols = plans.sum(axis=1)
        E = self.shape[0]
        M = np.zeros((E, E))
        nb = len(self.blocks)
        for r in range(nb):
            Fr, tr = self.blocks[r]
            for s in range(r, nb):
                Fs, ts = self.blocks[s]
                acc = None
                for sr, kr, ir in tr:
                    for ss, ks, is_ in ts:
                        if (kr == "vec") != (ks == "vec") or ir != is_:
                            continue
                        if kr == "vec":
                            K = Fr * vecs[ir] @ Fs.T
                        elif kr == "row" and ks == "row":
                            K = (Fr * rows[ir]) @ Fs.T
                        elif kr == "col" and ks == "col":
                            K = (Fr * cols[ir]) @ Fs.T
                        elif kr == "row":
                            K = Fr @ plans[ir] @ Fs.T
                        else:
                            K = Fr @ plans[ir].T @ Fs.T
                        acc = sr * ss * K if acc is None else acc + sr * ss * K
                if acc is None:
                    continue
                rs = slice(self.offsets[r], self.offsets[r + 1])
                ss_ = slice(self.offsets[s], self.offsets[s + 1])
                M[rs, ss_] = acc
                if s != r:
                    M[ss_, rs] = acc.T
        return M


class DistanceResult(NamedTuple):
    value: float
    plan: TransportPlan
    psi0: DiscreteSpectrum
    psi1: DiscreteSpectrum
    report: SolveReport
    kappa: float | None = None

    def to_dict(self) -> dict:
        k, l = np.nonzero(self.plan.mass)
        return {
            "value": self.value,
            "kappa": self.kappa,
            "grid_size": self.plan.grid.N,
            "plan": [[int(a), int(b), float(self.plan.mass[a, b])] for a, b in zip(k, l)],
            "psi0": self.psi0.masses.tolist(),
            "psi1": self.psi1.masses.tolist(),
            "report": self.report.to_dict(),
        }


def plan_objective(C, M, psi0, psi1, kappa=None) -> float:
    """Re-evaluate the transport objective from a plan and the two targets."""
    val = float(np.sum(C * M))
    if kappa is not None:
        val += kappa * float(np.abs(M.sum(axis=1) - psi0).sum() + np.abs(M.sum(axis=0) - psi1).sum())
    return val


def _check_grid(*spectra):
    g = spectra[0].grid
    for s in spectra[1:]:
        if s.grid != g:
            raise ValidationError(f"spectra live on different grids (N={g.N} vs N={s.grid.N})")
    return g


def _check_kappa(kappa):
    if kappa is None or not np.isfinite(kappa) or kappa <= 0:
        raise ValidationError(f"kappa must be a positive finite number, got {kappa}")


def _unpack(x, N, n_vecs):
    M = np.clip(x[: N * N].reshape(N, N), 0.0, None)
    vecs = np.clip(x[N * N:].reshape(n_vecs, N), 0.0, None) if n_vecs else np.zeros((0, N))
    return M, vecs


def _raise_if_failed(report, what, advice=""):
    if report.status == OPTIMAL:
        return
    if report.status == INFEASIBLE:
        raise InfeasibleError(f"{what} is infeasible{advice}", report=report)
    raise SolverError(f"{what}: solver stopped with status {report.status}", report=report)


def compute_S(phi0: DiscreteSpectrum, phi1: DiscreteSpectrum, cost: CostSpec = CHORDAL2, tol=1e-9) -> DistanceResult:
    """Balanced transport distance between two spectra with equal mass."""
    grid = _check_grid(phi0, phi1)
    m0, m1 = phi0.total, phi1.total
    if abs(m0 - m1) > MASS_RTOL * max(m0, m1, 1e-300):
        raise ValidationError(
            f"total masses differ ({m0} vs {m1}); use compute_S_kappa for unbalanced spectra"
        )
    N = grid.N
    C = build_cost_matrix(grid, cost)
    I = np.eye(N)
    # one marginal row is implied by the others (equal totals)
    op = PlanOperator(N, 1, 0, [(I, [(1, "row", 0)]), (I[:-1], [(1, "col", 0)])])
    b = np.concatenate([phi0.masses, phi1.masses[:-1]])
    x, _, rep = solve_lp(LinearProgram(C.ravel(), op, b), tol=tol)
    _raise_if_failed(rep, "balanced spectral transport")
    M, _ = _unpack(x, N, 0)
    plan = TransportPlan(grid, M)
    value = plan_objective(C, M, None, None)
    return DistanceResult(value, plan, plan.source(), plan.target(), rep)


def compute_S_kappa(phi0, phi1, cost: CostSpec = CHORDAL2, kappa: float = DEFAULT_KAPPA, tol=1e-9) -> DistanceResult:
    """Unbalanced transport distance: mass may be deleted at cost ``kappa`` per unit."""
    _check_kappa(kappa)
    grid = _check_grid(phi0, phi1)
    N = grid.N
    C = build_cost_matrix(grid, cost)
    I = np.eye(N)
    op = PlanOperator(
        N, 1, 2, [(I, [(1, "row", 0), (1, "vec", 0)]), (I, [(1, "col", 0), (1, "vec", 1)])]
    )
    c = np.concatenate([C.ravel(), np.full(2 * N, kappa)])
    b = np.concatenate([phi0.masses, phi1.masses])
    x, _, rep = solve_lp(LinearProgram(c, op, b), tol=tol)
    _raise_if_failed(rep, "unbalanced spectral transport")
    M, _ = _unpack(x, N, 2)
    plan = TransportPlan(grid, M)
    value = plan_objective(C, M, phi0.masses, phi1.masses, kappa)
    return DistanceResult(value, plan, phi0, phi1, rep, kappa)


def wasserstein_kappa(phi0, phi1, cost: CostSpec, kappa: float) -> float:
    """``S_kappa^(1/p)`` for the angular cost ``|theta - phi|^p``."""
    if cost.kind != "abs_angle_pow":
        raise ValidationError("wasserstein_kappa needs an abs_angle_pow cost")
    val = compute_S_kappa(phi0, phi1, cost, kappa).value
    return max(val, 0.0) ** (1.0 / cost.p)


def default_feas_tol(R: ToeplitzCov) -> float:
    return FEAS_TOL_REL * float(np.linalg.norm(R.matrix()))


def _resolve_feas(feas_tol, R0, R1):
    if feas_tol is None:
        return default_feas_tol(R0), default_feas_tol(R1)
    if feas_tol < 0:
        raise ValidationError(f"feas_tol must be nonnegative, got {feas_tol}")
    return float(feas_tol), float(feas_tol)


_GRID_ADVICE = (
    "; the moments may need atoms off this grid, so increase the grid size N or feas_tol"
)


def _toeplitz_lp(R0, R1, grid, cost, kappa, feas_tol, tol):
    _same_n(R0, R1)
    n, N = R0.n, grid.N
    F = lag_moment_rows(grid, n)
    C = build_cost_matrix(grid, cost)
    b0, b1 = realify_lags(R0.lags), realify_lags(R1.lags)
    t0, t1 = _resolve_feas(feas_tol, R0, R1)
    w0 = np.full(b0.size, t0)
    w1 = np.full(b1.size, t1)
    if kappa is None:
        # both lag-0 rows fix the total mass; keep one, centred between the
        # two diagonals, with the intersection of the two bands
        b0 = b0.copy()
        gap = abs(b0[0] - b1[0])
        b0[0] = 0.5 * (b0[0] + b1[0])
        w0[0] = max(min(t0, t1) - 0.5 * gap, 0.0)
        blocks = [(F, [(1, "row", 0)]), (F[1:], [(1, "col", 0)])]
        b1_used, w1 = b1[1:], w1[1:]
        op = PlanOperator(N, 1, 0, blocks)
        c = C.ravel()
        n_vecs = 0
    else:
        blocks = [(F, [(1, "row", 0), (1, "vec", 0)]), (F, [(1, "col", 0), (1, "vec", 1)])]
        op = PlanOperator(N, 1, 2, blocks)
        c = np.concatenate([C.ravel(), np.full(2 * N, kappa)])
        b1_used = b1
        n_vecs = 2
    b = np.concatenate([b0, b1_used])
    tvec = np.concatenate([w0, w1])
    if np.any(tvec > 0):
        rows = np.flatnonzero(tvec > 0)
        band = BandOperator(op, rows, tvec[rows])
        lp = LinearProgram(np.concatenate([c, np.zeros(2 * rows.size)]), band, band.rhs(b))
    else:
        lp = LinearProgram(c, op, b)
    x, y, rep = solve_lp(lp, tol=tol)
    return x[: op.shape[1]], y, rep, C, F, n_vecs


def compute_T(R0: ToeplitzCov, R1: ToeplitzCov, grid: FrequencyGrid | None = None,
              cost: CostSpec = CHORDAL2, feas_tol: float | None = None, tol=1e-9) -> DistanceResult:
    """Transport distance between Toeplitz covariances with equal ``r_0``.

    ``feas_tol`` is the allowed violation per realified moment row; ``None``
    means ``1e-7 * ||R||_F`` and ``0`` enforces exact equalities.
    """
    grid = grid or FrequencyGrid(DEFAULT_GRID)
    _same_n(R0, R1)
    if abs(R0.r0 - R1.r0) > MASS_RTOL * max(R0.r0, R1.r0, 1e-300):
        raise ValidationError(
            f"r_0 differs ({R0.r0} vs {R1.r0}); the balanced distance needs equal diagonals, "
            "use compute_T_kappa"
        )
    x, _, rep, C, F, _ = _toeplitz_lp(R0, R1, grid, cost, None, feas_tol, tol)
    _raise_if_failed(rep, "Toeplitz transport problem", _GRID_ADVICE)
    M, _ = _unpack(x, grid.N, 0)
    plan = TransportPlan(grid, M)
    value = plan_objective(C, M, None, None)
    return DistanceResult(value, plan, plan.source(), plan.target(), rep)


def compute_T_kappa(R0: ToeplitzCov, R1: ToeplitzCov, grid: FrequencyGrid | None = None,
                    cost: CostSpec = CHORDAL2, kappa: float = DEFAULT_KAPPA,
                    feas_tol: float | None = None, tol=1e-9) -> DistanceResult:
    """Unbalanced transport distance between Toeplitz covariances."""
    _check_kappa(kappa)
    grid = grid or FrequencyGrid(DEFAULT_GRID)
    x, _, rep, C, F, _ = _toeplitz_lp(R0, R1, grid, cost, kappa, feas_tol, tol)
    _raise_if_failed(rep, "unbalanced Toeplitz transport problem", _GRID_ADVICE)
    M, vecs = _unpack(x, grid.N, 2)
    psi0 = M.sum(axis=1) + vecs[0]
    psi1 = M.sum(axis=0) + vecs[1]
    plan = TransportPlan(grid, M)
    value = plan_objective(C, M, psi0, psi1, kappa)
    return DistanceResult(
        value, plan, DiscreteSpectrum(grid, psi0), DiscreteSpectrum(grid, psi1), rep, kappa
    )


def moment_residual(spectrum: DiscreteSpectrum, R: ToeplitzCov) -> float:
    """Largest realified moment mismatch ``|F mu - realify(R)|``."""
    F = lag_moment_rows(spectrum.grid, R.n)
    return float(np.abs(F @ spectrum.masses - realify_lags(R.lags)).max())


# --- dual certificates -------------------------------------------------------


@dataclass(frozen=True)
class DualCertificate:
    """Hermitian Toeplitz multipliers ``(Lambda0, Lambda1)`` and their dual value."""

    lambda0: np.ndarray
    lambda1: np.ndarray
    value: float
    kappa: float | None = None

    def adjoints(self, grid: FrequencyGrid):
        F = lag_moment_rows(grid, self.lambda0.shape[0])
        return F.T @ lag_vector(self.lambda0), F.T @ lag_vector(self.lambda1)

    def violation(self, grid: FrequencyGrid, cost: CostSpec = CHORDAL2) -> float:
        """Largest violation of the dual constraints on ``grid`` (<= 0 when feasible)."""
        g0, g1 = self.adjoints(grid)
        C = build_cost_matrix(grid, cost)
        v = float(np.max(g0[:, None] + g1[None, :] - C))
        if self.kappa is not None:
            v = max(v, float(g0.max() - self.kappa), float(g1.max() - self.kappa))
        return v

    def is_member(self, grid: FrequencyGrid, cost: CostSpec = CHORDAL2, atol=CERT_TOL) -> bool:
        return self.violation(grid, cost) <= atol

    def objective(self, R0: ToeplitzCov, R1: ToeplitzCov) -> float:
        return hermitian_inner(self.lambda0, R0) + hermitian_inner(self.lambda1, R1)

    def to_dict(self) -> dict:
        def enc(H):
            return [H.real.tolist(), H.imag.tolist()]

        return {"lambda0": enc(self.lambda0), "lambda1": enc(self.lambda1),
                "value": self.value, "kappa": self.kappa}


def hermitian_inner(Lambda, R) -> float:
    """``<Lambda, R> = Re tr(Lambda R)`` (both Hermitian)."""
    Rm = R.matrix() if isinstance(R, ToeplitzCov) else np.asarray(R)
    return float(np.real(np.vdot(Lambda, Rm)))


def lag_vector(Lambda) -> np.ndarray:
    """Realified coefficients ``y`` with ``<Lambda, R> = y . realify(R)`` for Toeplitz ``R``.

    ``y_0 = d_0`` and ``y_{2m-1} + i y_{2m} = 2 d_m`` where ``d_m`` is the sum
    of the m-th superdiagonal of ``Lambda``.
    """
    Lambda = np.asarray(Lambda, dtype=complex)
    n = Lambda.shape[0]
    d = np.array([np.diagonal(Lambda, m).sum() for m in range(n)])
    y = np.empty(2 * n - 1)
    y[0] = d[0].real
    y[1::2] = 2 * d[1:].real
    y[2::2] = 2 * d[1:].imag
    return y


def lambda_from_lag_vector(y, n) -> np.ndarray:
    d = complexify_lags(y)
    d[1:] = d[1:] / 2
    return hermitian_from_lag_coefficients(d, n)


def dual_grid(R0: ToeplitzCov, R1: ToeplitzCov, grid: FrequencyGrid | None = None,
              cost: CostSpec = CHORDAL2, kappa: float | None = None, tol=1e-10,
              max_rounds: int = 60) -> DualCertificate:
    """Maximize ``<Lambda0, R0> + <Lambda1, R1>`` over the grid-sampled dual set.

    The dual LP has ``2(2n-1)`` free variables and ``N^2`` (+``2N``)
    inequalities. It is solved by constraint generation: a working set of
    grid pairs is grown from a banded start by adding the most violated
    pairs until the multipliers are feasible on the whole grid. A box on the
    multipliers keeps each restricted LP bounded and is enlarged if it
    becomes active. The returned certificate is shifted to be exactly
    feasible on the grid before its value is computed.
    """
    grid = grid or FrequencyGrid(DEFAULT_GRID)
    _same_n(R0, R1)
    if kappa is not None:
        _check_kappa(kappa)
    elif abs(R0.r0 - R1.r0) > MASS_RTOL * max(R0.r0, R1.r0, 1e-300):
        raise ValidationError("the dual without kappa needs equal r_0")
    n, N = R0.n, grid.N
    F = lag_moment_rows(grid, n)
    p = F.shape[0]
    C = build_cost_matrix(grid, cost)
    b = np.concatenate([realify_lags(R0.lags), realify_lags(R1.lags)])

    # banded start: each node paired with its nearest neighbours
    k = np.arange(N)
    W = set()
    for off in range(-3, 4):
        W.update(zip(k.tolist(), ((k + off) % N).tolist()))
    box = 1e3 * (1 + C.max() + (kappa or 0.0)) * TWO_PI
    rep = None
    for _ in range(max_rounds):
        pairs = np.array(sorted(W))
        cols = [np.concatenate([F[:, pairs[:, 0]], F[:, pairs[:, 1]]])]
        cost_vec = [C[pairs[:, 0], pairs[:, 1]]]
        if kappa is not None:
            Z = np.zeros((p, N))
            cols += [np.concatenate([F, Z]), np.concatenate([Z, F])]
            cost_vec += [np.full(2 * N, kappa)]
        # elastic columns: +-e_i with price ``box`` bound |y_i| <= box
        I2 = np.eye(2 * p)
        cols += [I2, -I2]
        cost_vec += [np.full(4 * p, box)]
        A = np.concatenate(cols, axis=1)
        c = np.concatenate(cost_vec)
        if kappa is None:
            # equal masses make the second total-mass row redundant and leave
            # y0[0] - y1[0] free; dropping the row pins y1[0] = 0
            keep = np.arange(2 * p) != p
            A = A[keep]
            live = np.abs(A).max(axis=0) > 0
            A, c = A[:, live], c[live]
            _, yk, rep = solve_lp(LinearProgram(c, A, b[keep]), tol=tol)
            y = np.zeros(2 * p)
            y[keep] = yk
        else:
            _, y, rep = solve_lp(LinearProgram(c, A, b), tol=tol)
        if rep.status != OPTIMAL:
            raise SolverError(f"restricted dual LP failed with status {rep.status}", report=rep)
        y0, y1 = y[:p], y[p:]
        g0, g1 = F.T @ y0, F.T @ y1
        V = g0[:, None] + g1[None, :] - C
        scale = 1 + np.abs(C).max()
        if V.max() <= 1e-9 * scale:
            # feasible on the grid; a binding box means it was too small
            if np.abs(y).max() > 0.5 * box:
                box *= 100
                continue
            break
        # most violated pair per row and per column
        new = {(int(i), int(V[i].argmax())) for i in range(N) if V[i].max() > 0}
        new |= {(int(V[:, j].argmax()), int(j)) for j in range(N) if V[:, j].max() > 0}
        if new <= W:
            break
        W |= new
    else:
        raise SolverError(f"dual constraint generation did not converge in {max_rounds} rounds", report=rep)

    g0, g1 = F.T @ y0, F.T @ y1
    shift = max(float(np.max(g0[:, None] + g1[None, :] - C)), 0.0)
    if kappa is not None:
        shift = max(shift, float(g0.max() - kappa), 0.0)
        y0 = y0.copy()
        y0[0] -= TWO_PI * shift
        shift1 = max(float(np.max(F.T @ y1) - kappa), 0.0)
        y1 = y1.copy()
        y1[0] -= TWO_PI * shift1
    else:
        # only y0[0] + y1[0] is determined; split it evenly
        total = y0[0] + y1[0] - TWO_PI * shift
        y0, y1 = y0.copy(), y1.copy()
        y0[0] = y1[0] = total / 2
    L0 = lambda_from_lag_vector(y0, n)
    L1 = lambda_from_lag_vector(y1, n)
    value = hermitian_inner(L0, R0) + hermitian_inner(L1, R1)
    return DualCertificate(L0, L1, value, kappa)
