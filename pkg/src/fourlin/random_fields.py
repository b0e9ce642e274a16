"""Gaussian random fields ``N(0, sigma^2 (-Laplacian + I)^-gamma)`` on the torus.

Sampling is by spectral synthesis on the grid-representable modes: every
coefficient gets a complex Gaussian with standard deviation
:func:`spectral_std`, then the spectrum is symmetrized so the field is real.
The Laplacian eigenvalue of ``exp(2 pi i <m, x>)`` is ``-4 pi^2 |m|_2^2``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .spectral import GridField, GridSpec, SpectrumField, dft_inverse, reflect


class SmoothnessWarning(UserWarning):
    """Emitted when ``gamma <= d/2``: samples are too rough for the rate theory."""


@dataclass(frozen=True)
class GrfConfig:
    spec: GridSpec
    gamma: float = 2.0
    sigma: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")
        if self.gamma <= self.spec.d / 2:
            warnings.warn(
                f"gamma={self.gamma} <= d/2={self.spec.d / 2}: samples leave the smooth regime",
                SmoothnessWarning,
                stacklevel=3,
            )


def make_rng(seed, *stream: int) -> np.random.Generator:
    """PCG64 generator for ``seed`` and an optional integer stream path.

    The stream path is used as the SeedSequence spawn key, so
    ``make_rng(s, i)`` are independent streams for distinct ``i``.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(x) for x in stream))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(seed, *path: int) -> int:
    """Deterministic 63-bit child seed for ``seed`` along an integer path."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(x) for x in path))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def spectral_std(m, cfg: GrfConfig) -> float:
    """Standard deviation of the coefficient at mode ``m``."""
    l2sq = float(sum(int(c) ** 2 for c in np.atleast_1d(m)))
    return cfg.sigma * (4.0 * math.pi**2 * l2sq + 1.0) ** (-cfg.gamma / 2.0)


def spectral_std_grid(spec: GridSpec, gamma: float, sigma: float) -> np.ndarray:
    """:func:`spectral_std` evaluated at every array position of ``spec``."""
    return sigma * (4.0 * math.pi**2 * spec.l2sq_modes() + 1.0) ** (-gamma / 2.0)


def sample_spectrum(spec: GridSpec, gamma: float, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Hermitian coefficient array with per-mode variance ``spectral_std^2``.

    With ``z`` complex Gaussian (real and imaginary parts of variance
    ``std^2 / 2`` each), ``c = (z + conj(z(-m))) / sqrt(2)`` keeps that
    variance on generic modes and is exactly real, with the full variance, on
    self-conjugate modes (zero and even-N Nyquist).
    """
    std = spectral_std_grid(spec, gamma, sigma)
    z = rng.standard_normal(spec.shape) + 1j * rng.standard_normal(spec.shape)
    z *= std / math.sqrt(2.0)
    c = (z + np.conj(reflect(z))) / math.sqrt(2.0)
    return c


def sample_grf(cfg: GrfConfig, rng: np.random.Generator | None = None) -> GridField:
    """Draw one real field; deterministic given ``cfg.seed`` (or the passed rng)."""
    if rng is None:
        rng = make_rng(cfg.seed)
    coeffs = sample_spectrum(cfg.spec, cfg.gamma, cfg.sigma, rng)
    return dft_inverse(SpectrumField(cfg.spec, coeffs))


NOISE_GAMMA = 3.0
NOISE_SIGMA = 1.0


def sample_noise(spec: GridSpec, seed=0, rng: np.random.Generator | None = None) -> GridField:
    """Smooth additive noise ``N(0, (-Laplacian + I)^-3)``."""
    cfg = GrfConfig(spec, gamma=NOISE_GAMMA, sigma=NOISE_SIGMA, seed=seed)
    return sample_grf(cfg, rng)
