"""Operators that are diagonal in the Fourier basis, and synthetic data built from them.

An operator ``T = sum_{|m|_inf <= K} lambda_m phi_m (x) phi_{-m}`` acts on a
field by scaling each Fourier coefficient: ``(Tv)^(m) = lambda_m v^(m)``. On an
``N``-grid this is FFT, multiply, inverse FFT; it is exact for band-limited
inputs as long as ``N > 2K`` so no two retained modes share a grid slot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
import scipy.fft

from .errors import InvalidFieldError, OracleSizeError, ResolutionError, SymmetryError
from .random_fields import GrfConfig, make_rng, sample_noise, sample_grf
from .spectral import (
    ORACLE_CAP,
    GridField,
    GridSpec,
    SpectrumField,
    dft_forward,
    dft_inverse,
    dft_naive,
    fft_workers,
)

#: Relative tolerance for the conjugate-symmetry test of a parameter sequence.
SYMMETRY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DiagonalOperator:
    """Parameters ``lambda_m`` for ``|m|_inf <= K`` with bound ``|lambda_m| <= C``.

    ``lambdas`` has shape ``(2K+1,) * d``; entry ``lambdas[m + K]`` holds
    ``lambda_m`` (lexicographic mode order). Modes outside the block are zero.
    """

    d: int
    K: int
    C: float
    lambdas: np.ndarray

    def __post_init__(self):
        if self.K < 0:
            raise ValueError(f"truncation K must be >= 0, got {self.K}")
        if not self.C > 0:
            raise ValueError(f"bound C must be positive, got {self.C}")
        lam = np.array(self.lambdas, dtype=np.complex128, copy=True)
        expected = (2 * self.K + 1,) * self.d
        if lam.shape != expected:
            raise ValueError(f"lambdas must have shape {expected}, got {lam.shape}")
        if not np.all(np.isfinite(lam)):
            raise ValueError("lambdas contain NaN or Inf")
        peak = float(np.max(np.abs(lam)))
        if peak > self.C * (1 + 1e-12):
            raise ValueError(f"max |lambda| = {peak} exceeds bound C = {self.C}")
        lam.flags.writeable = False
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "K", int(self.K))
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "C", float(self.C))

    @classmethod
    def from_function(cls, d: int, K: int, C: float, func) -> "DiagonalOperator":
        """``func`` receives one integer mode array per axis (broadcastable)."""
        return cls(d, K, C, np.broadcast_to(func(*block_mode_axes(d, K)), (2 * K + 1,) * d))

    @classmethod
    def zeros(cls, d: int, K: int, C: float = 1.0) -> "DiagonalOperator":
        return cls(d, K, C, np.zeros((2 * K + 1,) * d))

    def lam(self, m: Sequence[int]) -> complex:
        m = tuple(int(c) for c in m)
        if len(m) != self.d:
            raise ValueError("mode dimension mismatch")
        if max(abs(c) for c in m) > self.K:
            return 0j
        return complex(self.lambdas[tuple(c + self.K for c in m)])

    def symmetry_defect(self) -> float:
        """``max |lambda_{-m} - conj(lambda_m)|`` relative to ``C``."""
        return float(np.max(np.abs(np.flip(self.lambdas) - np.conj(self.lambdas)))) / self.C

    @property
    def real_output(self) -> bool:
        """True when the operator maps real fields to real fields."""
        return self.symmetry_defect() <= SYMMETRY_TOL

    def multiplier(self, spec: GridSpec) -> np.ndarray:
        """Grid-shaped array with ``lambda_m`` at each mode's FFT slot, zero elsewhere."""
        if spec.d != self.d:
            raise ResolutionError(f"operator is {self.d}-D, grid is {spec.d}-D")
        if spec.N <= 2 * self.K:
            raise ResolutionError(f"grid N={spec.N} too coarse for K={self.K} (need N > 2K)")
        out = np.zeros(spec.shape, dtype=np.complex128)
        slots = np.arange(-self.K, self.K + 1) % spec.N
        out[np.ix_(*([slots] * self.d))] = self.lambdas
        return out

    def truncated(self, K: int) -> "DiagonalOperator":
        """Restriction to ``|m|_inf <= K`` (zero-padded if ``K`` exceeds the block)."""
        if K >= self.K:
            lam = np.zeros((2 * K + 1,) * self.d, dtype=np.complex128)
            lo = K - self.K
            lam[tuple(slice(lo, lo + 2 * self.K + 1) for _ in range(self.d))] = self.lambdas
        else:
            lo = self.K - K
            lam = self.lambdas[tuple(slice(lo, lo + 2 * K + 1) for _ in range(self.d))]
        return DiagonalOperator(self.d, K, self.C, lam)


def block_mode_axes(d: int, K: int) -> list[np.ndarray]:
    """Signed modes of the ``(2K+1)^d`` parameter block, one array per axis."""
    r = np.arange(-K, K + 1)
    out = []
    for j in range(d):
        shape = [1] * d
        shape[j] = 2 * K + 1
        out.append(r.reshape(shape))
    return out


def apply(T: DiagonalOperator, v: GridField, *, complex_output: bool = False):
    """Grid values of ``sum_{|m| <= K} lambda_m DFT(v)(m) phi_m``.

    Returns a :class:`GridField`, or a complex ndarray when
    ``complex_output=True``. A non-Hermitian result without the opt-in raises
    :class:`SymmetryError`.
    """
    coeffs = dft_forward(v).coeffs * T.multiplier(v.spec)
    if complex_output:
        return scipy.fft.ifftn(coeffs, workers=fft_workers()) * v.spec.size
    try:
        return dft_inverse(SpectrumField(v.spec, coeffs))
    except SymmetryError as exc:
        raise SymmetryError(f"operator output is not real ({exc}); pass complex_output=True") from exc


def apply_direct(T: DiagonalOperator, v: GridField, *, complex_output: bool = False, cap: int = ORACLE_CAP):
    """Oracle for :func:`apply`: naive DFT, then term-by-term pointwise synthesis."""
    spec = v.spec
    if spec.size > cap:
        raise OracleSizeError(f"direct application limited to {cap} points, grid has {spec.size}")
    if spec.N <= 2 * T.K:
        raise ResolutionError(f"grid N={spec.N} too coarse for K={T.K} (need N > 2K)")
    c = dft_naive(v, cap=cap)
    idx = np.indices(spec.shape).reshape(spec.d, -1).T
    table = np.exp(2j * np.pi * np.arange(spec.N) / spec.N)
    out = np.zeros(spec.size, dtype=np.complex128)
    modes = np.stack([a.ravel() for a in np.meshgrid(*([np.arange(-T.K, T.K + 1)] * spec.d), indexing="ij")], -1)
    for m in modes:
        lam = T.lambdas[tuple(m + T.K)]
        if lam == 0:
            continue
        coeff = c.coeffs[tuple(m % spec.N)]
        out += lam * coeff * table[(idx @ m) % spec.N]
    out = out.reshape(spec.shape)
    if complex_output:
        return out
    scale = max(float(np.max(np.abs(out))), np.finfo(float).tiny)
    if np.max(np.abs(out.imag)) > 1e-10 * scale:
        raise SymmetryError("operator output is not real; pass complex_output=True")
    return GridField(spec, out.real)


def _mirror_half(u: np.ndarray) -> np.ndarray:
    """Copy the lexicographically-lower half of a parameter block onto ``-m``."""
    flat = u.ravel()
    mirrored = np.flip(u).ravel()
    center = flat.size // 2
    out = np.where(np.arange(flat.size) <= center, flat, mirrored)
    return out.reshape(u.shape)


def synthesize_random_operator(d: int, K: int, bound: float = 2.0, seed: int = 0, real_output: bool = True) -> DiagonalOperator:
    """``lambda_m ~ Uniform(-bound, bound)``, mirrored across ``+-m`` when ``real_output``."""
    if not bound > 0:
        raise ValueError(f"bound must be positive, got {bound}")
    rng = make_rng(seed)
    lam = rng.uniform(-bound, bound, size=(2 * K + 1,) * d)
    if real_output:
        lam = _mirror_half(lam)
    return DiagonalOperator(d, K, bound, lam)


def heat_operator(tau: float, K: int, d: int = 1) -> DiagonalOperator:
    """Heat semigroup ``exp(tau * Laplacian)``: ``lambda_m = exp(-4 pi^2 tau |m|_2^2)``."""
    if tau < 0:
        raise ValueError(f"tau must be non-negative, got {tau}")
    return DiagonalOperator.from_function(
        d, K, 1.0, lambda *ax: np.exp(-4 * math.pi**2 * tau * sum(a.astype(float) ** 2 for a in ax))
    )


@dataclass(frozen=True, eq=False)
class Dataset:
    """``n`` input/output pairs on a common grid, stored as ``(n,) + grid`` arrays."""

    spec: GridSpec
    v: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        shape = (len(self.v),) + self.spec.shape
        v = np.asarray(self.v, dtype=np.float64).reshape(shape)
        w = np.asarray(self.w, dtype=np.float64).reshape(shape)
        if len(v) < 1:
            raise InvalidFieldError("dataset must contain at least one pair")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(w))):
            raise InvalidFieldError("dataset contains NaN or Inf")
        v.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "w", w)

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[GridField, GridField]]) -> "Dataset":
        if not pairs:
            raise InvalidFieldError("dataset must contain at least one pair")
        spec = pairs[0][0].spec
        for v, w in pairs:
            if v.spec != spec or w.spec != spec:
                raise InvalidFieldError("all fields in a dataset must share one grid")
        return cls(spec, np.stack([p[0].values for p in pairs]), np.stack([p[1].values for p in pairs]))

    @property
    def n(self) -> int:
        return len(self.v)

    @property
    def pairs(self) -> list[tuple[GridField, GridField]]:
        return [(GridField(self.spec, a), GridField(self.spec, b)) for a, b in zip(self.v, self.w)]

    def head(self, n: int) -> "Dataset":
        return Dataset(self.spec, self.v[:n], self.w[:n])


def iter_pairs(T_star: DiagonalOperator, grf: GrfConfig, noise: bool, n: int, seed: int, start: int = 0) -> Iterator[tuple[GridField, GridField]]:
    """Yield pairs ``i = start .. start+n-1``; pair ``i`` uses streams ``(seed, i, 0|1)``."""
    if grf.spec.N <= 2 * T_star.K:
        raise ResolutionError(f"grid N={grf.spec.N} too coarse for K={T_star.K} (need N > 2K)")
    for i in range(start, start + n):
        v = sample_grf(grf, make_rng(seed, i, 0))
        w = apply(T_star, v)
        if noise:
            w = w + sample_noise(grf.spec, rng=make_rng(seed, i, 1))
        yield v, w


def generate_dataset(T_star: DiagonalOperator, grf: GrfConfig, noise: bool, n: int, seed: int) -> Dataset:
    """``v_i ~ GRF``, ``w_i = T_star v_i (+ smooth noise)``; deterministic per seed."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return Dataset.from_pairs(list(iter_pairs(T_star, grf, noise, n, seed)))


def restrict_to_grid(u: GridField, N2: int) -> GridField:
    """Subsample onto the coarser ``N2``-grid; requires ``N2`` to divide ``N``."""
    N1 = u.spec.N
    if N2 < 1 or N1 % N2:
        raise ResolutionError(f"target grid {N2} does not divide source grid {N1}")
    stride = N1 // N2
    sl = (slice(None, None, stride),) * u.spec.d
    return GridField(GridSpec(u.spec.d, N2), u.values[sl])
