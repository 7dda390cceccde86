"""Toeplitz covariances, discrete spectra and the maps between them.

A spectrum is a set of nonnegative point masses on a uniform frequency
grid. The operator ``Gamma`` sends a spectrum ``mu`` to the Hermitian
Toeplitz matrix ``(1/2pi) sum_k mu_k a(theta_k) a(theta_k)^H`` with
``a(theta) = [1, e^{i theta}, ..., e^{i(n-1) theta}]``. Its covariance lags
are ``r_j = (1/2pi) sum_k mu_k e^{-i j theta_k}`` and they form the first
row of the matrix, i.e. ``R[j, k] = r_{k-j}`` with ``r_{-m} = conj(r_m)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .errors import ValidationError

TWO_PI = 2.0 * np.pi
EPS_PSD = 1e-9
HERMITIAN_RTOL = 1e-12


def wrap_to_T(x):
    """Map angles into (-pi, pi]; ``-pi`` is sent to ``+pi``."""
    x = np.asarray(x, dtype=float)
    y = x - TWO_PI * np.ceil((x - np.pi) / TWO_PI)
    # ceil can land one period off when x - pi is an exact multiple of 2pi
    y = np.where(y <= -np.pi, y + TWO_PI, y)
    y = np.where(y > np.pi, y - TWO_PI, y)
    return y if y.ndim else float(y)


def fourier_vector(theta, n):
    """Return ``a(theta) = [e^{i j theta}]_{j=0}^{n-1}``."""
    if n < 1:
        raise ValidationError(f"dimension must be >= 1, got {n}")
    theta = wrap_to_T(theta)
    return np.exp(1j * np.arange(n) * theta)


@dataclass(frozen=True)
class ToeplitzCov:
    """Hermitian Toeplitz covariance stored through its lags ``r_0..r_{n-1}``.

    ``lags[k]`` is the entry ``R[0, k]``; the full matrix has
    ``R[j, k] = lags[k - j]`` above the diagonal and the conjugate below.
    """

    lags: np.ndarray
    eps_psd: float = EPS_PSD

    def __post_init__(self):
        lags = np.array(self.lags, dtype=complex).ravel()
        if lags.size == 0:
            raise ValidationError("a ToeplitzCov needs at least one lag")
        if not np.all(np.isfinite(lags)):
            raise ValidationError("lags must be finite")
        r0 = lags[0]
        if abs(r0.imag) > 1e-12 * max(1.0, abs(r0.real)):
            raise ValidationError(f"r_0 must be real, got {r0}")
        if r0.real < 0:
            raise ValidationError(f"r_0 must be nonnegative, got {r0.real}")
        lags[0] = r0.real
        lags.flags.writeable = False
        object.__setattr__(self, "lags", lags)

    @property
    def n(self) -> int:
        return self.lags.size

    @property
    def r0(self) -> float:
        return float(self.lags[0].real)

    def matrix(self) -> np.ndarray:
        return scipy.linalg.toeplitz(np.conj(self.lags), self.lags)

    @classmethod
    def from_matrix(cls, R, atol=1e-10) -> "ToeplitzCov":
        """Build from a dense matrix that must already be Hermitian Toeplitz."""
        R = np.asarray(R, dtype=complex)
        _check_hermitian(R)
        T = cls(R[0])
        scale = max(1.0, np.abs(R).max())
        if np.abs(T.matrix() - R).max() > atol * scale:
            raise ValidationError("matrix is not Toeplitz")
        return T

    @classmethod
    def from_average(cls, R) -> "ToeplitzCov":
        """Toeplitz projection: average each superdiagonal of a Hermitian matrix."""
        R = np.asarray(R, dtype=complex)
        R = 0.5 * (R + R.conj().T)
        n = R.shape[0]
        return cls(np.array([np.diagonal(R, k).mean() for k in range(n)]))

    def __add__(self, other):
        if not isinstance(other, ToeplitzCov):
            return NotImplemented
        _same_n(self, other)
        return ToeplitzCov(self.lags + other.lags)

    def scaled(self, c: float) -> "ToeplitzCov":
        return ToeplitzCov(self.lags * c)

    def normalized(self) -> "ToeplitzCov":
        """Scale so that ``r_0 == 1``."""
        if self.r0 <= 0:
            raise ValidationError("cannot normalize a matrix with r_0 = 0")
        return ToeplitzCov(self.lags / self.r0)


def _same_n(a: ToeplitzCov, b: ToeplitzCov):
    if a.n != b.n:
        raise ValidationError(f"dimension mismatch: {a.n} vs {b.n}")


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform grid ``theta_k = -pi + 2 pi (k+1) / N`` on (-pi, pi]."""

    N: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValidationError(f"grid size must be a positive integer, got {self.N}")

    @property
    def nodes(self) -> np.ndarray:
        return -np.pi + TWO_PI * (np.arange(self.N) + 1) / self.N

    @property
    def spacing(self) -> float:
        return TWO_PI / self.N

    def index_of(self, theta, atol=1e-9) -> int:
        """Index of the node equal to ``theta`` (mod 2pi); raises if off-grid."""
        t = wrap_to_T(theta)
        k = int(round((t + np.pi) * self.N / TWO_PI)) - 1
        k %= self.N
        if abs(wrap_to_T(self.nodes[k] - t)) > atol:
            raise ValidationError(f"angle {theta} is not a node of the N={self.N} grid")
        return k

    def nearest(self, theta) -> int:
        t = wrap_to_T(theta)
        return int(np.argmin(np.abs(wrap_to_T(self.nodes - t))))


@dataclass(frozen=True)
class DiscreteSpectrum:
    """Nonnegative masses on a frequency grid."""

    grid: FrequencyGrid
    masses: np.ndarray

    def __post_init__(self):
        m = np.array(self.masses, dtype=float).ravel()
        if m.size != self.grid.N:
            raise ValidationError(f"expected {self.grid.N} masses, got {m.size}")
        if not np.all(np.isfinite(m)):
            raise ValidationError("masses must be finite")
        if m.min(initial=0.0) < 0:
            raise ValidationError(f"masses must be nonnegative (min {m.min()})")
        m.flags.writeable = False
        object.__setattr__(self, "masses", m)

    @property
    def total(self) -> float:
        return float(self.masses.sum())

    @classmethod
    def atoms(cls, grid, thetas, masses):
        m = np.zeros(grid.N)
        for t, w in zip(np.atleast_1d(thetas), np.atleast_1d(masses)):
            m[grid.index_of(t)] += w
        return cls(grid, m)


@dataclass(frozen=True)
class TransportPlan:
    """``mass[k, l]`` is moved from node ``k`` to node ``l``."""

    grid: FrequencyGrid
    mass: np.ndarray = field(repr=False)

    def __post_init__(self):
        M = np.array(self.mass, dtype=float)
        N = self.grid.N
        if M.shape != (N, N):
            raise ValidationError(f"plan must be {N}x{N}, got {M.shape}")
        if M.min(initial=0.0) < 0:
            raise ValidationError("plan entries must be nonnegative")
        M.flags.writeable = False
        object.__setattr__(self, "mass", M)

    @property
    def total(self) -> float:
        return float(self.mass.sum())

    def source(self) -> DiscreteSpectrum:
        return DiscreteSpectrum(self.grid, self.mass.sum(axis=1))

    def target(self) -> DiscreteSpectrum:
        return DiscreteSpectrum(self.grid, self.mass.sum(axis=0))


def spectrum_lags(grid: FrequencyGrid, masses, n: int) -> np.ndarray:
    masses = np.asarray(masses, dtype=float)
    E = np.exp(-1j * np.outer(np.arange(n), grid.nodes))
    return E @ masses / TWO_PI


def gamma_apply(spectrum: DiscreteSpectrum, n: int) -> ToeplitzCov:
    """Toeplitz covariance consistent with a discrete spectrum."""
    if n < 1:
        raise ValidationError(f"dimension must be >= 1, got {n}")
    lags = spectrum_lags(spectrum.grid, spectrum.masses, n)
    lags[0] = spectrum.total / TWO_PI
    return ToeplitzCov(lags)


def _check_hermitian(H, rtol=HERMITIAN_RTOL):
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {H.shape}")
    scale = max(np.abs(H).max(initial=0.0), 1e-300)
    if np.abs(H - H.conj().T).max(initial=0.0) > rtol * scale:
        raise ValidationError("matrix is not Hermitian")


def _as_matrix(X) -> np.ndarray:
    if isinstance(X, ToeplitzCov):
        return X.matrix()
    X = np.asarray(X, dtype=complex)
    _check_hermitian(X)
    return X


def _quadratic_form(X: np.ndarray, theta) -> np.ndarray:
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    A = np.exp(1j * np.outer(np.arange(X.shape[0]), theta))
    return np.einsum("jt,jk,kt->t", A.conj(), X, A).real


def gamma_adjoint(Lambda, theta):
    """``(1/2pi) a(theta)^H Lambda a(theta)``; vectorized over ``theta``."""
    X = _as_matrix(Lambda)
    out = _quadratic_form(X, theta) / TWO_PI
    return float(out[0]) if np.ndim(theta) == 0 else out


def correlogram(X, theta):
    """Spectral estimate ``a(theta)^H X a(theta)`` (no 1/2pi factor)."""
    X = _as_matrix(X)
    out = _quadratic_form(X, theta)
    return float(out[0]) if np.ndim(theta) == 0 else out


class PsdCheck(NamedTuple):
    min_eigenvalue: float
    is_psd: bool


def validate_psd(R: ToeplitzCov, eps_psd: float | None = None) -> PsdCheck:
    """Smallest eigenvalue and the scale-free PSD verdict."""
    eps = R.eps_psd if eps_psd is None else eps_psd
    lam = float(np.linalg.eigvalsh(R.matrix())[0])
    return PsdCheck(lam, lam >= -eps * R.r0 * R.n)


def lag_moment_rows(grid: FrequencyGrid, n: int) -> np.ndarray:
    """Real (2n-1) x N matrix sending masses to realified lags.

    Row 0 gives ``r_0``; rows ``2m-1`` and ``2m`` give ``Re r_m`` and
    ``Im r_m`` for ``m = 1..n-1``.
    """
    th = grid.nodes
    F = np.empty((2 * n - 1, grid.N))
    F[0] = 1.0
    for m in range(1, n):
        F[2 * m - 1] = np.cos(m * th)
        F[2 * m] = -np.sin(m * th)
    return F / TWO_PI


def realify_lags(lags) -> np.ndarray:
    lags = np.asarray(lags, dtype=complex)
    out = np.empty(2 * lags.size - 1)
    out[0] = lags[0].real
    out[1::2] = lags[1:].real
    out[2::2] = lags[1:].imag
    return out


def complexify_lags(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = (v.size + 1) // 2
    lags = np.empty(n, dtype=complex)
    lags[0] = v[0]
    lags[1:] = v[1::2] + 1j * v[2::2]
    return lags


def hermitian_from_lag_coefficients(d, n: int) -> np.ndarray:
    """Toeplitz Hermitian matrix whose m-th superdiagonal sums to ``d[m]``."""
    d = np.asarray(d, dtype=complex)
    first_row = np.array([d[m] / (n - m) for m in range(n)])
    first_row[0] = first_row[0].real
    return scipy.linalg.toeplitz(np.conj(first_row), first_row)


def superdiagonal_sums(Lambda) -> np.ndarray:
    Lambda = np.asarray(Lambda, dtype=complex)
    return np.array([np.diagonal(Lambda, m).sum() for m in range(Lambda.shape[0])])
