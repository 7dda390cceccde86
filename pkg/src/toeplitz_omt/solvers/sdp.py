"""Small dense semidefinite programs over Hermitian matrices.

Primal: ``min Re tr(C Q) + offset  s.t.  Re tr(A_i Q) = b_i, Q >= 0`` (or ``max`` with
``sense='max'``). Dual: ``max b^T y  s.t.  C - sum_i y_i A_i >= 0``.

Hermitian ``d x d`` data is mapped to real symmetric ``2d x 2d`` matrices by
``E(H) = [[Re H, -Im H], [Im H, Re H]]``. Because
``tr(E(A) E(Q)) = 2 Re tr(A Q)``, every constraint is stored as ``E(A_i)/2``
and a real solution ``X`` is mapped back to
``Q = (X11 + X22)/2 + i (X21 - X12)/2``, which is PSD whenever ``X`` is and
reproduces every inner product. The real problem is solved by an
infeasible primal-dual path-following method with the HKM search direction
and Mehrotra predictor-corrector steps.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.linalg

from ..errors import ValidationError
from .report import (
    INFEASIBLE,
    ITERATION_LIMIT,
    NUMERICAL_FAILURE,
    OPTIMAL,
    UNBOUNDED,
    SolveReport,
)


def real_embedding(H) -> np.ndarray:
    H = np.asarray(H, dtype=complex)
    return np.block([[H.real, -H.imag], [H.imag, H.real]])


def complex_from_embedding(X) -> np.ndarray:
    d = X.shape[0] // 2
    X11, X12, X21, X22 = X[:d, :d], X[:d, d:], X[d:, :d], X[d:, d:]
    Q = 0.5 * (X11 + X22) + 0.5j * (X21 - X12)
    return 0.5 * (Q + Q.conj().T)


def _hermitian(H, what):
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValidationError(f"{what} must be square, got shape {H.shape}")
    scale = max(np.abs(H).max(initial=0.0), 1.0)
    if np.abs(H - H.conj().T).max(initial=0.0) > 1e-12 * scale:
        raise ValidationError(f"{what} is not Hermitian")
    return 0.5 * (H + H.conj().T)


@dataclass
class SdpProblem:
    dim: int
    objective: np.ndarray
    constraints: list = field(default_factory=list)
    sense: str = "min"
    offset: float = 0.0

    def __post_init__(self):
        if self.sense not in ("min", "max"):
            raise ValidationError(f"sense must be 'min' or 'max', got {self.sense!r}")
        if not self.constraints:
            raise ValidationError("an SDP needs at least one constraint")
        self.objective = _hermitian(self.objective, "objective")
        if self.objective.shape != (self.dim, self.dim):
            raise ValidationError(f"objective must be {self.dim}x{self.dim}")
        cons = []
        for i, (A, b) in enumerate(self.constraints):
            A = _hermitian(A, f"constraint {i}")
            if A.shape != (self.dim, self.dim):
                raise ValidationError(f"constraint {i} must be {self.dim}x{self.dim}")
            cons.append((A, float(b)))
        self.constraints = cons

    @property
    def b(self) -> np.ndarray:
        return np.array([b for _, b in self.constraints])

    def constraint_values(self, Q) -> np.ndarray:
        return np.array([np.real(np.vdot(A, Q)) for A, _ in self.constraints])

    def objective_value(self, Q) -> float:
        return float(np.real(np.vdot(self.objective, Q))) + self.offset

    def to_dict(self) -> dict:
        """JSON-ready dump; complex matrices as ``[real, imag]`` pairs of nested lists."""

        def enc(H):
            return [H.real.tolist(), H.imag.tolist()]

        return {
            "format": "sdp-hermitian",
            "sense": self.sense,
            "dim": self.dim,
            "objective": enc(self.objective),
            "offset": self.offset,
            "constraints": [{"A": enc(A), "b": b} for A, b in self.constraints],
        }


class SdpResult(NamedTuple):
    Q: np.ndarray
    y: np.ndarray
    report: SolveReport


def _max_step(X, dX):
    """Largest alpha in (0, inf] with X + alpha dX PSD (X positive definite)."""
    L = np.linalg.cholesky(X)
    Li = scipy.linalg.solve_triangular(L, np.eye(X.shape[0]), lower=True)
    w = np.linalg.eigvalsh(Li @ dX @ Li.T)
    lo = w[0]
    return np.inf if lo >= 0 else -1.0 / lo


def _factor_schur(M):
    """Cholesky of the Schur complement with a small ridge only when needed."""
    ridge = 0.0
    base = np.trace(M) / M.shape[0]
    for _ in range(8):
        try:
            return scipy.linalg.cho_factor(M + ridge * np.eye(M.shape[0]))
        except np.linalg.LinAlgError:
            ridge = 1e-15 * base if ridge == 0.0 else ridge * 100
    raise np.linalg.LinAlgError("Schur complement is not positive definite")


def _safe_update(X, dX, alpha, tries=40):
    """``X + alpha dX`` with ``alpha`` shrunk until the result is Cholesky-factorable."""
    for _ in range(tries):
        Xn = X + alpha * dX
        Xn = 0.5 * (Xn + Xn.T)
        try:
            np.linalg.cholesky(Xn)
            return Xn, alpha
        except np.linalg.LinAlgError:
            alpha *= 0.7
    return None, 0.0


def solve_sdp(p: SdpProblem, tol: float = 1e-7, max_iter: int = 100) -> SdpResult:
    """Solve ``p``; ``y`` is the dual vector in the problem's own sense."""
    start = time.perf_counter()
    sign = 1.0 if p.sense == "min" else -1.0
    C = sign * real_embedding(p.objective) / 2
    As = np.stack([real_embedding(A) / 2 for A, _ in p.constraints])
    b = p.b
    m, nn = As.shape[0], C.shape[0]
    Avec = As.reshape(m, -1)

    def A_op(X):
        return Avec @ X.ravel()

    def At_op(y):
        return (y @ Avec).reshape(nn, nn)

    normA = np.linalg.norm(Avec, axis=1)
    xi = max(10.0, np.sqrt(nn), nn * np.max((1 + np.abs(b)) / (1 + normA)))
    eta = max(10.0, np.sqrt(nn), np.linalg.norm(C), normA.max())
    X = xi * np.eye(nn)
    Z = eta * np.eye(nn)
    y = np.zeros(m)
    bnorm = 1 + np.abs(b).max()
    cnorm = 1 + np.linalg.norm(C)

    status = ITERATION_LIMIT
    it = 0
    pres = dres = gap = np.inf
    message = ""
    for it in range(max_iter + 1):
        rp = b - A_op(X)
        Rd = C - At_op(y) - Z
        Rd = 0.5 * (Rd + Rd.T)
        pobj = float(np.vdot(C, X))
        dobj = float(b @ y)
        mu = float(np.vdot(X, Z)) / nn
        pres = np.abs(rp).max() / bnorm
        dres = np.linalg.norm(Rd) / cnorm
        gap = abs(pobj - dobj) / (1 + abs(pobj + sign * p.offset))
        if pres <= tol and dres <= tol and gap <= tol:
            status = OPTIMAL
            break
        # infeasibility certificates
        Aty = At_op(y)
        if dobj > 0 and dobj / max(np.linalg.norm(Aty + Z), 1e-300) > 1e10 and pres > tol:
            status = INFEASIBLE
            message = "dual ray: b^T y unbounded with A^T y <= 0"
            break
        if pobj < 0 and -pobj / max(np.linalg.norm(A_op(X)), 1e-300) > 1e10 and dres > tol:
            status = UNBOUNDED
            message = "primal ray: C.X unbounded below with A(X) = 0"
            break
        if it == max_iter:
            break
        try:
            Zi = scipy.linalg.cho_solve(scipy.linalg.cho_factor(Z), np.eye(nn))
            Zi = 0.5 * (Zi + Zi.T)
            G = np.matmul(np.matmul(X, As), Zi)  # X A_j Z^{-1}
            # tr(A_i G_j) = vec(A_i) . vec(G_j) since A_i is symmetric
            M = Avec @ G.reshape(m, -1).T
            M = 0.5 * (M + M.T)
            Mfac = _factor_schur(M)
        except (np.linalg.LinAlgError, ValueError):
            status = NUMERICAL_FAILURE
            message = "Schur complement or dual slack lost definiteness"
            break

        XRZ = A_op(X @ Rd @ Zi)
        AX = A_op(X)

        def direction(target):
            # target = sigma mu I - dX_a dZ_a, the right-hand side of the
            # centering equation before multiplication by Z^{-1}
            TZ = target @ Zi
            rhs = rp + AX + XRZ - A_op(TZ)
            dy = scipy.linalg.cho_solve(Mfac, rhs)
            # the Schur complement becomes ill-conditioned as mu -> 0; refine
            # against the unregularized matrix so that A(dX) = rp holds
            for _ in range(3):
                dy = dy + scipy.linalg.cho_solve(Mfac, rhs - M @ dy)
            dZ = Rd - At_op(dy)
            dZ = 0.5 * (dZ + dZ.T)
            dX = TZ - X - X @ dZ @ Zi
            dX = 0.5 * (dX + dX.T)
            return dX, dy, dZ

        try:
            dXa, dya, dZa = direction(np.zeros((nn, nn)))
            ap = min(1.0, _max_step(X, dXa))
            ad = min(1.0, _max_step(Z, dZa))
            mu_aff = float(np.vdot(X + ap * dXa, Z + ad * dZa)) / nn
            sigma = min(1.0, (mu_aff / mu) ** 3)
            dX, dy, dZ = direction(sigma * mu * np.eye(nn) - dXa @ dZa)
            ap = min(1.0, 0.98 * _max_step(X, dX))
            ad = min(1.0, 0.98 * _max_step(Z, dZ))
        except np.linalg.LinAlgError:
            status = NUMERICAL_FAILURE
            message = "iterate lost definiteness"
            break
        Xn, ap = _safe_update(X, dX, ap)
        Zn, ad = _safe_update(Z, dZ, ad)
        if Xn is None or Zn is None:
            status = NUMERICAL_FAILURE
            message = "no step keeps the iterates positive definite"
            break
        X, Z = Xn, Zn
        y = y + ad * dy

    Q = complex_from_embedding(X)
    rep = SolveReport(
        status=status,
        objective=float(sign * np.vdot(C, X)) + p.offset,
        primal_residual=float(pres),
        dual_residual=float(dres),
        gap=float(gap),
        iterations=int(it),
        seconds=time.perf_counter() - start,
        message=message,
    )
    return SdpResult(Q, sign * y, rep)
