"""Sum-of-squares lower bounds for the transport distance without mass terms.

With ``z = e^{i theta}`` and ``w = e^{i phi}`` the chordal squared cost is
``2 - z/w - w/z`` and the dual constraint asks the bivariate trigonometric
polynomial

    P(z, w) = 2 - z w^{-1} - z^{-1} w - (1/2pi) sum_k s0_k z^k - (1/2pi) sum_k s1_k w^k

to be nonnegative on the torus, where ``s_k`` is the sum of the k-th
superdiagonal of ``Lambda``. Requiring ``P(z, w) = v^H Q v`` with ``Q`` PSD
and ``v = [w^b z^a]`` (``0 <= a, b < m``, index ``b m + a``) is a sufficient
condition, so the resulting SDP gives a lower bound on the distance.

Every coefficient of ``P`` is linear in ``Q``: the coefficient of
``z^k1 w^k2`` is the sum of ``Q[i, j]`` over the positions with
``a_j - a_i = k1`` and ``b_j - b_i = k2``. The multipliers are eliminated:
``s0_k`` and ``s1_k`` are read off the pure ``(k, 0)`` and ``(0, k)``
coefficients, the constant coefficient fixes ``s0_0 + s1_0``, and for equal
diagonals the objective ``<Lambda0, R0> + <Lambda1, R1>`` depends on those
quantities only. What remains is a standard-form SDP in ``Q`` whose rows
pin the two cross coefficients to ``-1`` and every other coefficient that
``P`` cannot carry to zero.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import SolverError, ToeplitzOMTError, ValidationError
from .spectral import TWO_PI, FrequencyGrid, ToeplitzCov, _same_n, hermitian_from_lag_coefficients
from .solvers.report import OPTIMAL, SolveReport
from .solvers.sdp import SdpProblem, solve_sdp
from .transport import MASS_RTOL, compute_T, dual_grid, hermitian_inner


class SandwichError(ToeplitzOMTError):
    """The computed bounds are not ordered as they must be."""

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


@lru_cache(maxsize=None)
def coefficient_index_map(m: int) -> dict:
    """Map ``(k1, k2)`` to the ``(i, j)`` positions of ``Q`` feeding that coefficient."""
    a = np.tile(np.arange(m), m)
    b = np.repeat(np.arange(m), m)
    dk1 = a[None, :] - a[:, None]
    dk2 = b[None, :] - b[:, None]
    out = {}
    for k1 in range(-m + 1, m):
        for k2 in range(-m + 1, m):
            i, j = np.nonzero((dk1 == k1) & (dk2 == k2))
            out[(k1, k2)] = (i, j)
    return out


def coefficients(Q, m: int) -> dict:
    """All coefficients ``p[(k1, k2)]`` of ``v^H Q v``."""
    Q = np.asarray(Q)
    return {k: complex(Q[i, j].sum()) for k, (i, j) in coefficient_index_map(m).items()}


def _selector(m, k):
    """Hermitian pair ``(Re, Im)`` with ``Re tr(A Q)`` equal to Re/Im of coefficient ``k``."""
    i, j = coefficient_index_map(m)[k]
    T = np.zeros((m * m, m * m), dtype=complex)
    T[j, i] = 1.0  # tr(T Q) = sum Q[i, j]
    return 0.5 * (T + T.conj().T), 0.5 * (-1j * T + 1j * T.conj().T)


def _free(k, n):
    k1, k2 = k
    return (k2 == 0 and abs(k1) < n) or (k1 == 0 and abs(k2) < n)


def constraint_keys(n: int, m: int) -> list:
    """One representative per conjugate pair of constrained coefficients."""
    keys = []
    for k1 in range(-m + 1, m):
        for k2 in range(-m + 1, m):
            k = (k1, k2)
            if _free(k, n) or (-k1, -k2) < k:
                continue
            keys.append(k)
    return keys


def build_sos_sdp(R0: ToeplitzCov, R1: ToeplitzCov, m: int) -> SdpProblem:
    """SDP in ``Q`` (side ``m^2``) whose optimal value is the SOS lower bound.

    Raises
    ------
    ValidationError
        If ``m < max(n, 2)`` or the diagonals of ``R0`` and ``R1`` differ.
    """
    _same_n(R0, R1)
    n = R0.n
    if m < max(n, 2):
        raise ValidationError(f"degree parameter m must be >= max(n, 2) = {max(n, 2)}, got {m}")
    if abs(R0.r0 - R1.r0) > MASS_RTOL * max(R0.r0, R1.r0, 1e-300):
        raise ValidationError("the SOS bound needs R0 and R1 with equal diagonals")
    d = m * m
    cons = []
    for k in constraint_keys(n, m):
        target = -1.0 if k in ((1, -1), (-1, 1)) else 0.0
        A_re, A_im = _selector(m, k)
        cons.append((A_re, target))
        cons.append((A_im, 0.0))
    # value = 2pi r0 (2 - tr Q) - 2pi sum_{k != 0} [conj(p(k,0)) r0_k + conj(p(0,k)) r1_k]
    r0 = 0.5 * (R0.r0 + R1.r0)
    C = TWO_PI * r0 * np.eye(d, dtype=complex)
    for k in range(1, n):
        for key, lag in (((k, 0), R0.lags[k]), ((0, k), R1.lags[k])):
            A_re, A_im = _selector(m, key)
            # 2 Re(conj(p) r) = 2 (Re p Re r + Im p Im r)
            C += 2 * TWO_PI * (lag.real * A_re + lag.imag * A_im)
    return SdpProblem(dim=d, objective=C, constraints=cons, sense="min", offset=-2 * TWO_PI * r0)


@dataclass(frozen=True)
class SosCertificate:
    lambda0: np.ndarray
    lambda1: np.ndarray
    Q: np.ndarray
    m: int
    value: float
    report: SolveReport

    def polynomial(self, theta, phi) -> np.ndarray:
        """``v^H Q v`` at the torus points ``(theta, phi)`` (broadcast)."""
        theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
        a = np.tile(np.arange(self.m), self.m)
        b = np.repeat(np.arange(self.m), self.m)
        V = np.exp(1j * (np.multiply.outer(theta, a) + np.multiply.outer(phi, b)))
        return np.einsum("...i,ij,...j->...", V.conj(), self.Q, V).real

    def to_dict(self) -> dict:
        def enc(H):
            return [H.real.tolist(), H.imag.tolist()]

        return {"lambda0": enc(self.lambda0), "lambda1": enc(self.lambda1), "Q": enc(self.Q),
                "m": self.m, "value": self.value, "report": self.report.to_dict()}


def target_polynomial(lambda0, lambda1, theta, phi) -> np.ndarray:
    """``c(theta, phi) - Gamma*(Lambda0)(theta) - Gamma*(Lambda1)(phi)`` for chordal squared cost."""
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    n = lambda0.shape[0]
    k = np.arange(n)

    def adj(L, x):
        A = np.exp(1j * np.multiply.outer(x, k))
        return np.einsum("...j,jk,...k->...", A.conj(), L, A).real / TWO_PI

    return 2 - 2 * np.cos(theta - phi) - adj(lambda0, theta) - adj(lambda1, phi)


def sos_lower_bound(R0: ToeplitzCov, R1: ToeplitzCov, m: int, tol: float = 1e-9,
                    max_iter: int = 100) -> SosCertificate:
    """Certified lower bound on the distance from the degree-``m`` SOS relaxation.

    Raises
    ------
    SolverError
        If the SDP solver does not reach an optimal status.
    """
    # the optimal multipliers do not depend on the scale of R, and unit
    # diagonals keep the constant offset of the objective at 4 pi
    scale = 0.5 * (R0.r0 + R1.r0)
    if scale > 0:
        prob = build_sos_sdp(R0.scaled(1 / scale), R1.scaled(1 / scale), m)
    else:
        prob = build_sos_sdp(R0, R1, m)
    res = solve_sdp(prob, tol=tol, max_iter=max_iter)
    if res.report.status != OPTIMAL:
        raise SolverError(f"SOS semidefinite program ended with status {res.report.status}",
                          report=res.report)
    Q = res.Q
    n = R0.n
    p = coefficients(Q, m)
    s0 = np.zeros(n, dtype=complex)
    s1 = np.zeros(n, dtype=complex)
    for k in range(1, n):
        s0[k] = -TWO_PI * p[(k, 0)]
        s1[k] = -TWO_PI * p[(0, k)]
    s0[0] = s1[0] = 0.5 * TWO_PI * (2 - np.trace(Q).real)
    L0 = hermitian_from_lag_coefficients(s0, n)
    L1 = hermitian_from_lag_coefficients(s1, n)
    value = hermitian_inner(L0, R0) + hermitian_inner(L1, R1)
    return SosCertificate(L0, L1, Q, m, value, res.report)


def bounds_sandwich(R0: ToeplitzCov, R1: ToeplitzCov, grid_sizes=(256, 512), degrees=None,
                    tol: float = 1e-6, feas_tol=0.0) -> list:
    """Primal grid, dual grid and SOS values for every ``(N, m)`` combination.

    Each row is a dict with keys ``N``, ``m``, ``primal_grid``, ``dual_grid``
    and ``sos``. The exact distance lies between ``sos`` and the gridded
    values, and the two gridded values agree by LP duality.

    Raises
    ------
    SandwichError
        If ``sos > primal_grid + tol (1 + |primal_grid|)`` or the gridded
        primal and dual differ by more than ``tol (1 + |primal_grid|)``.
    """
    _same_n(R0, R1)
    degrees = tuple(degrees) if degrees is not None else (R0.n + 2, R0.n + 4)
    sos = {m: sos_lower_bound(R0, R1, m).value for m in degrees}
    rows = []
    for N in grid_sizes:
        g = FrequencyGrid(N)
        primal = compute_T(R0, R1, g, feas_tol=feas_tol).value
        dual = dual_grid(R0, R1, g).value
        scale = tol * (1 + abs(primal))
        for m in degrees:
            row = {"N": N, "m": m, "primal_grid": primal, "dual_grid": dual, "sos": sos[m]}
            rows.append(row)
            if abs(primal - dual) > scale:
                raise SandwichError(f"gridded primal {primal:.10g} and dual {dual:.10g} differ at N={N}", row)
            if sos[m] > primal + scale:
                raise SandwichError(f"SOS bound {sos[m]:.10g} exceeds gridded value {primal:.10g} "
                                    f"at N={N}, m={m}", row)
    return rows
