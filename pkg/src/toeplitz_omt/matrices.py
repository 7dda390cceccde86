"""Hermitian matrix functions, comparison geodesics and divergences.

All functions accept dense Hermitian arrays or :class:`ToeplitzCov`.
Geodesics return dense matrices (they are not Toeplitz in general), except
:func:`geodesic_convex`, which stays in lag form.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import ConvergenceError, SingularMatrixError, ValidationError
from .spectral import ToeplitzCov, _as_matrix, _same_n

PD_RTOL = 1e-12


class EigDecomposition(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray

    def recompose(self, f=None) -> np.ndarray:
        vals = self.values if f is None else f(self.values)
        V = self.vectors
        return (V * vals) @ V.conj().T


def hermitian_eig(H) -> EigDecomposition:
    H = _as_matrix(H)
    w, V = np.linalg.eigh(0.5 * (H + H.conj().T))
    return EigDecomposition(w, V)


def _require_pd(eig: EigDecomposition, what="matrix"):
    lo, hi = eig.values[0], eig.values[-1]
    if hi <= 0 or lo <= PD_RTOL * hi:
        raise SingularMatrixError(
            f"{what} is not positive definite (smallest eigenvalue {lo:.3e})", eigenvalue=lo
        )


def matrix_function(H, f, power=None) -> np.ndarray:
    """Apply ``f`` in {'power', 'log', 'exp', 'sqrt'} to a Hermitian matrix."""
    eig = hermitian_eig(H)
    if f == "exp":
        return eig.recompose(np.exp)
    if f == "log":
        _require_pd(eig)
        return eig.recompose(np.log)
    if f == "sqrt":
        return eig.recompose(lambda w: np.sqrt(np.clip(w, 0.0, None)))
    if f == "power":
        if power is None:
            raise ValidationError("matrix_function(..., 'power') needs power=")
        if power < 0:
            _require_pd(eig)
            return eig.recompose(lambda w: w ** power)
        return eig.recompose(lambda w: np.clip(w, 0.0, None) ** power)
    raise ValidationError(f"unknown matrix function {f!r}")


def _pd(R, what):
    H = _as_matrix(R)
    _require_pd(hermitian_eig(H), what)
    return H


def _herm(X):
    return 0.5 * (X + X.conj().T)


def geodesic_convex(R0: ToeplitzCov, R1: ToeplitzCov, tau: float) -> ToeplitzCov:
    """Euclidean path ``(1 - tau) R0 + tau R1``."""
    _same_n(R0, R1)
    return ToeplitzCov((1 - tau) * R0.lags + tau * R1.lags)


def geodesic_gconvex(R0, R1, tau) -> np.ndarray:
    A = _pd(R0, "R0")
    B = _pd(R1, "R1")
    Ah = matrix_function(A, "sqrt")
    Aih = matrix_function(A, "power", -0.5)
    inner = matrix_function(_herm(Aih @ B @ Aih), "power", tau)
    return _herm(Ah @ inner @ Ah)


def geodesic_gaussian_omt(R0, R1, tau) -> np.ndarray:
    A = _pd(R0, "R0")
    B = _pd(R1, "R1")
    Ah = matrix_function(A, "sqrt")
    Aih = matrix_function(A, "power", -0.5)
    Bh = matrix_function(B, "sqrt")
    Bih = matrix_function(B, "power", -0.5)
    U = Bih @ Aih @ matrix_function(_herm(Ah @ B @ Ah), "sqrt")
    G = (1 - tau) * Ah + tau * Bh @ U
    return _herm(G @ G.conj().T)


def geodesic_log_euclidean(R0, R1, tau) -> np.ndarray:
    L0 = matrix_function(_pd(R0, "R0"), "log")
    L1 = matrix_function(_pd(R1, "R1"), "log")
    return matrix_function(_herm((1 - tau) * L0 + tau * L1), "exp")


def _whitened_eigs(R0, R1):
    A = _pd(R0, "R0")
    B = _pd(R1, "R1")
    if A.shape != B.shape:
        raise ValidationError(f"dimension mismatch: {A.shape} vs {B.shape}")
    Aih = matrix_function(A, "power", -0.5)
    # eigenvalues of R0^{-1} R1, computed through a Hermitian similarity
    return np.linalg.eigvalsh(_herm(Aih @ B @ Aih))


def kl_divergence(R0, R1) -> float:
    w = _whitened_eigs(R0, R1)
    return float(max(w.sum() - np.log(w).sum() - w.size, 0.0))


def ellipticity_distance(R0, R1) -> float:
    w = _whitened_eigs(R0, R1)
    n = w.size
    return float(max(n * np.log(w.sum() / n) - np.log(w).sum(), 0.0))


def kl_barycenter(Rs) -> np.ndarray:
    """Inverse of the mean of inverses."""
    if len(Rs) == 0:
        raise ValidationError("need at least one matrix")
    invs = [matrix_function(_pd(R, "input"), "power", -1.0) for R in Rs]
    return matrix_function(_herm(sum(invs) / len(invs)), "power", -1.0)


def unit_diagonal(R) -> np.ndarray:
    R = _as_matrix(R)
    d = np.sqrt(np.diag(R).real)
    return _herm(R / np.outer(d, d))


def ellipticity_fixed_point_residual(R, Rs) -> float:
    """Relative residual of the ellipticity barycenter equation at ``R``."""
    R = _as_matrix(R)
    n = R.shape[0]
    invs = [matrix_function(_as_matrix(X), "power", -1.0) for X in Rs]
    S = sum(Ri / np.trace(Ri @ R).real for Ri in invs) * n / len(invs)
    rhs = matrix_function(_herm(S), "power", -1.0)
    return float(np.linalg.norm(rhs - R) / np.linalg.norm(R))


def ellipticity_fixed_point(Rs, tol=1e-10, max_iter=500) -> np.ndarray:
    """Solution of the ellipticity barycenter equation, scaled to trace ``n``.

    The equation fixes the barycenter only up to a positive factor, so each
    iterate is rescaled to trace ``n``; the limit satisfies the equation and
    minimizes the summed ellipticity distance.
    """
    if len(Rs) == 0:
        raise ValidationError("need at least one matrix")
    mats = [_pd(R, "input") for R in Rs]
    n = mats[0].shape[0]
    J = len(mats)
    invs = [matrix_function(A, "power", -1.0) for A in mats]
    R = _herm(sum(mats) / J)
    R *= n / np.trace(R).real
    change = np.inf
    for _ in range(max_iter):
        S = sum(Ri / np.trace(Ri @ R).real for Ri in invs) * (n / J)
        R_new = matrix_function(_herm(S), "power", -1.0)
        R_new *= n / np.trace(R_new).real
        change = np.linalg.norm(R_new - R) / np.linalg.norm(R)
        R = R_new
        if change < tol:
            return R
    raise ConvergenceError(
        f"ellipticity barycenter did not converge in {max_iter} iterations",
        residual=change,
        iterations=max_iter,
    )


def ellipticity_barycenter(Rs, tol=1e-10, max_iter=500) -> np.ndarray:
    """Ellipticity barycenter normalized to unit diagonal by ``D^{-1/2} R D^{-1/2}``.

    The normalization is a congruence, so the result no longer solves the
    fixed-point equation unless the diagonal of the solution is constant;
    :func:`ellipticity_fixed_point` returns the solution itself.
    """
    return unit_diagonal(ellipticity_fixed_point(Rs, tol, max_iter))
