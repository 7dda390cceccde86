"""Synthetic signals, array covariances, covariance estimates and corruption models.

Random draws use numpy's ``Generator`` over the PCG64 bit generator, whose
output stream is fixed by the seed on every platform.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .spectral import ToeplitzCov, _same_n


class DiagonalWarning(UserWarning):
    """A multiplicative noise covariance has diagonal entries above one."""


def rng_from_seed(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class ArSpec:
    """First-order complex AR process whose pole rotates at constant radius."""

    pole_radius: float = 0.9
    freq_start: float = 0.3 * np.pi
    freq_end: float = 0.6 * np.pi
    total_samples: int = 1000
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.pole_radius < 1:
            raise ValidationError(f"pole radius must be in (0, 1), got {self.pole_radius}")
        for f in (self.freq_start, self.freq_end):
            if not -np.pi < f <= np.pi:
                raise ValidationError(f"frequency {f} outside (-pi, pi]")
        if int(self.total_samples) != self.total_samples or self.total_samples < 1:
            raise ValidationError(f"total_samples must be a positive integer, got {self.total_samples}")

    def to_dict(self) -> dict:
        return {"pole_radius": self.pole_radius, "freq_start": self.freq_start,
                "freq_end": self.freq_end, "total_samples": self.total_samples, "seed": self.seed}


def complex_white_noise(rng: np.random.Generator, size) -> np.ndarray:
    """Circular complex Gaussian samples with unit variance."""
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / np.sqrt(2)


def simulate_ar(spec: ArSpec) -> np.ndarray:
    """``y(t) = p(t) y(t-1) + e(t)`` with ``p(t) = radius * exp(i omega(t))``.

    ``omega`` moves linearly from ``freq_start`` to ``freq_end``. The
    recursion starts from ``y(-1) = 0``.
    """
    T = int(spec.total_samples)
    e = complex_white_noise(rng_from_seed(spec.seed), T)
    omega = np.linspace(spec.freq_start, spec.freq_end, T)
    p = spec.pole_radius * np.exp(1j * omega)
    y = np.empty(T, dtype=complex)
    prev = 0.0
    for t in range(T):
        prev = p[t] * prev + e[t]
        y[t] = prev
    return y


@dataclass(frozen=True)
class UlaScene:
    """Far-field sources seen by a half-wavelength uniform linear array."""

    n_sensors: int
    sources: tuple = field(default_factory=tuple)
    noise_power: float = 0.0

    def __post_init__(self):
        if int(self.n_sensors) != self.n_sensors or self.n_sensors < 1:
            raise ValidationError(f"n_sensors must be a positive integer, got {self.n_sensors}")
        src = tuple((float(a), float(p)) for a, p in self.sources)
        for a, p in src:
            if not -90 <= a <= 90:
                raise ValidationError(f"source angle {a} outside [-90, 90] degrees")
            if p <= 0:
                raise ValidationError(f"source power must be positive, got {p}")
        if self.noise_power < 0:
            raise ValidationError(f"noise power must be nonnegative, got {self.noise_power}")
        object.__setattr__(self, "sources", src)

    def to_dict(self) -> dict:
        return {"n_sensors": self.n_sensors, "sources": [list(s) for s in self.sources],
                "noise_power": self.noise_power}


def spatial_frequency(angle_deg):
    """``pi * sin(angle)`` for half-wavelength spacing."""
    return np.pi * np.sin(np.deg2rad(angle_deg))


def look_angle(omega):
    """Inverse of :func:`spatial_frequency`, in degrees."""
    return np.rad2deg(np.arcsin(np.clip(np.asarray(omega) / np.pi, -1.0, 1.0)))


def ula_covariance(scene: UlaScene) -> ToeplitzCov:
    """``sum_l p_l a(w_l) a(w_l)^H + sigma^2 I`` as lags."""
    k = np.arange(scene.n_sensors)
    lags = np.zeros(scene.n_sensors, dtype=complex)
    for angle, power in scene.sources:
        lags += power * np.exp(-1j * k * spatial_frequency(angle))
    lags[0] += scene.noise_power
    return ToeplitzCov(lags)


def window_starts(total: int, window_len: int, overlap: int) -> np.ndarray:
    step = window_len - overlap
    if step <= 0:
        raise ValidationError(f"overlap {overlap} must be smaller than the window length {window_len}")
    if total < window_len:
        raise ValidationError(f"signal of length {total} is shorter than one window ({window_len})")
    return np.arange((total - window_len) // step + 1) * step


def sample_covariance(signal, n: int, window_len: int, overlap: int = 0, estimator: str = "snapshot"):
    """Covariance estimates over sliding windows.

    ``estimator='snapshot'`` averages ``y_t y_t^H`` over the ``W - n + 1``
    length-``n`` snapshot vectors of each window and returns dense Hermitian
    matrices. ``estimator='lag'`` returns the biased lag estimates
    ``r_k = (1/W) sum_t x(t) conj(x(t+k))`` as :class:`ToeplitzCov`, which are
    PSD by construction.
    """
    x = np.asarray(signal, dtype=complex).ravel()
    if window_len < n:
        raise ValidationError(f"window length {window_len} must be at least n={n}")
    out = []
    for s in window_starts(x.size, window_len, overlap):
        w = x[s:s + window_len]
        if estimator == "snapshot":
            Y = np.lib.stride_tricks.sliding_window_view(w, n)  # rows are snapshots
            out.append(Y.T @ Y.conj() / Y.shape[0])
        elif estimator == "lag":
            lags = np.array([w[: window_len - k] @ np.conj(w[k:]) for k in range(n)]) / window_len
            out.append(ToeplitzCov(lags))
        else:
            raise ValidationError(f"unknown estimator {estimator!r}")
    return out


def corrupt_additive(R: ToeplitzCov, Rw: ToeplitzCov) -> ToeplitzCov:
    _same_n(R, Rw)
    return ToeplitzCov(R.lags + Rw.lags)


def corrupt_multiplicative(R: ToeplitzCov, Rw: ToeplitzCov, warn: bool = True) -> ToeplitzCov:
    """Schur product ``R o Rw``; lag ``k`` becomes ``r_k w_k``."""
    _same_n(R, Rw)
    if warn and Rw.r0 > 1:
        warnings.warn(f"noise covariance diagonal {Rw.r0} exceeds one", DiagonalWarning, stacklevel=2)
    return ToeplitzCov(R.lags * Rw.lags)


def random_toeplitz_psd(rng: np.random.Generator, n: int, n_atoms: int | None = None,
                        r0: float | None = None) -> ToeplitzCov:
    """Random PSD Toeplitz matrix from a random atomic spectrum."""
    n_atoms = 2 * n if n_atoms is None else n_atoms
    th = rng.uniform(-np.pi, np.pi, n_atoms)
    w = rng.random(n_atoms)
    lags = np.exp(-1j * np.outer(np.arange(n), th)) @ w
    R = ToeplitzCov(lags)
    return R if r0 is None else R.scaled(r0 / R.r0)


def ar_covariance(pole: complex, n: int, noise_var: float = 1.0) -> ToeplitzCov:
    """Exact covariance of a stationary AR(1) process ``y(t) = p y(t-1) + e(t)``.

    ``R[0, k] = E[y(t) conj(y(t+k))] = sigma^2 conj(p)^k / (1 - |p|^2)``.
    """
    pole = complex(pole)
    if abs(pole) >= 1:
        raise ValidationError(f"AR pole must be inside the unit circle, got {pole}")
    k = np.arange(n)
    return ToeplitzCov(noise_var * np.conj(pole) ** k / (1 - abs(pole) ** 2))
