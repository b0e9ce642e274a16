"""Periodic grid fields on the unit torus and their discrete Fourier transforms.

Conventions
-----------
* Grid points are ``x = j / N`` for ``j in {0, ..., N-1}^d``; arrays are stored
  row-major with the last axis fastest (plain C-ordered numpy arrays of shape
  ``(N,) * d``).
* Array index ``idx`` on an axis stores the signed mode ``idx`` when
  ``idx < ceil(N/2)`` and ``idx - N`` otherwise (the usual FFT ordering).
* The forward transform carries the ``1/N^d`` factor::

      coeff(m) = N^-d * sum_x u(x) exp(-2 pi i <m, x>)

  so ``coeff(m)`` approximates the Fourier coefficient of ``phi_m``; the
  inverse transform ``u(x) = sum_m coeff(m) exp(2 pi i <m, x>)`` carries none.
"""

from __future__ import annotations

import math
import os
import sys
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.fft

from .errors import InvalidFieldError, ModeRangeError, OracleSizeError, SymmetryError

Mode = tuple[int, ...]

#: Relative tolerance on the anti-Hermitian part when realizing a real field.
IMAG_RESIDUE_TOL = 1e-12
#: Default point-count cap for the brute-force oracles.
ORACLE_CAP = 4096


def fft_workers() -> int:
    """Thread count for FFTs, capped by ``FOURLIN_THREADS`` (default 1)."""
    raw = os.environ.get("FOURLIN_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


@dataclass(frozen=True)
class GridSpec:
    """Uniform ``N^d`` grid on the torus ``[0, 1)^d``."""

    d: int
    N: int

    def __post_init__(self):
        if not isinstance(self.d, (int, np.integer)) or self.d < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.d!r}")
        if not isinstance(self.N, (int, np.integer)) or self.N < 1:
            raise ValueError(f"grid size must be a positive integer, got {self.N!r}")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "N", int(self.N))
        # complex128 storage of N^d entries must be addressable
        if self.N**self.d > sys.maxsize // 16:
            raise ValueError(f"grid {self.N}^{self.d} exceeds addressable size")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.d

    @property
    def size(self) -> int:
        return self.N**self.d

    @property
    def nyquist(self) -> int:
        """Largest representable mode magnitude, ``floor(N/2)``."""
        return self.N // 2

    def points(self) -> np.ndarray:
        """Grid coordinates, shape ``(N^d, d)`` in row-major order."""
        axes = np.meshgrid(*([np.arange(self.N) / self.N] * self.d), indexing="ij")
        return np.stack([a.ravel() for a in axes], axis=-1)

    def mode_axes(self) -> list[np.ndarray]:
        """Signed mode of every array position, one broadcastable array per axis."""
        freqs = np.rint(np.fft.fftfreq(self.N, d=1.0 / self.N)).astype(np.int64)
        out = []
        for j in range(self.d):
            shape = [1] * self.d
            shape[j] = self.N
            out.append(freqs.reshape(shape))
        return out

    def linf_modes(self) -> np.ndarray:
        """``|m|_inf`` at every array position, shape ``(N,) * d``."""
        axes = self.mode_axes()
        out = np.zeros(self.shape, dtype=np.int64)
        for a in axes:
            out = np.maximum(out, np.abs(a))
        return out

    def l2sq_modes(self) -> np.ndarray:
        """``|m|_2^2`` at every array position."""
        out = np.zeros(self.shape, dtype=np.int64)
        for a in self.mode_axes():
            out = out + a * a
        return out

    def nyquist_mask(self) -> np.ndarray:
        """True where any component sits at the even-N Nyquist mode ``-N/2``."""
        mask = np.zeros(self.shape, dtype=bool)
        if self.N % 2:
            return mask
        for a in self.mode_axes():
            mask = mask | (a == -(self.N // 2))
        return mask


def _as_mode(m) -> Mode:
    return tuple(int(c) for c in np.atleast_1d(m))


def linf(m: Sequence[int]) -> int:
    """ℓ∞ magnitude of a mode."""
    return max((abs(int(c)) for c in m), default=0)


def mode_of_index(idx: Sequence[int], spec: GridSpec) -> Mode:
    idx = _as_mode(idx)
    if len(idx) != spec.d:
        raise ModeRangeError(f"index has {len(idx)} components, grid has d={spec.d}")
    half = (spec.N + 1) // 2
    out = []
    for i in idx:
        if not 0 <= i < spec.N:
            raise ModeRangeError(f"index component {i} outside [0, {spec.N})")
        out.append(i if i < half else i - spec.N)
    return tuple(out)


def index_of_mode(m: Sequence[int], spec: GridSpec) -> tuple[int, ...]:
    """Inverse of :func:`mode_of_index`; rejects modes the grid cannot store."""
    m = _as_mode(m)
    if len(m) != spec.d:
        raise ModeRangeError(f"mode has {len(m)} components, grid has d={spec.d}")
    lo, hi = -(spec.N // 2), (spec.N + 1) // 2 - 1
    for c in m:
        if not lo <= c <= hi:
            raise ModeRangeError(f"mode component {c} not representable for N={spec.N}")
    return tuple(c % spec.N for c in m)


def _check_values(values: np.ndarray, spec: GridSpec, *, complex_ok: bool) -> np.ndarray:
    arr = np.asarray(values)
    if arr.size != spec.size:
        raise InvalidFieldError(f"expected {spec.size} values for grid {spec}, got {arr.size}")
    arr = arr.reshape(spec.shape)
    if np.iscomplexobj(arr):
        if not complex_ok:
            raise InvalidFieldError("grid field values must be real")
        arr = arr.astype(np.complex128, copy=False)
    else:
        arr = arr.astype(np.complex128 if complex_ok else np.float64, copy=False)
    if not np.all(np.isfinite(arr)):
        raise InvalidFieldError("field contains NaN or Inf")
    return arr


@dataclass(frozen=True, eq=False)
class GridField:
    """Real samples of a periodic function on a :class:`GridSpec` grid."""

    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        arr = _check_values(self.values, self.spec, complex_ok=False)
        arr = np.array(arr, dtype=np.float64, copy=True)
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_function(cls, spec: GridSpec, func) -> "GridField":
        """Sample ``func(*coords)`` where each coordinate array has grid shape."""
        coords = np.meshgrid(*([np.arange(spec.N) / spec.N] * spec.d), indexing="ij")
        return cls(spec, np.broadcast_to(func(*coords), spec.shape))

    @classmethod
    def zeros(cls, spec: GridSpec) -> "GridField":
        return cls(spec, np.zeros(spec.shape))

    def __add__(self, other: "GridField") -> "GridField":
        _same_spec(self.spec, other.spec)
        return GridField(self.spec, self.values + other.values)

    def __sub__(self, other: "GridField") -> "GridField":
        _same_spec(self.spec, other.spec)
        return GridField(self.spec, self.values - other.values)

    def scaled(self, a: float) -> "GridField":
        return GridField(self.spec, a * self.values)


@dataclass(frozen=True, eq=False)
class SpectrumField:
    """DFT coefficients stored at array positions (see module conventions)."""

    spec: GridSpec
    coeffs: np.ndarray

    def __post_init__(self):
        arr = np.array(_check_values(self.coeffs, self.spec, complex_ok=True), copy=True)
        arr.flags.writeable = False
        object.__setattr__(self, "coeffs", arr)

    def coeff(self, m: Sequence[int]) -> complex:
        return complex(self.coeffs[index_of_mode(m, self.spec)])

    @classmethod
    def from_modes(cls, spec: GridSpec, modes: dict) -> "SpectrumField":
        """Build a spectrum from a sparse ``{mode: coefficient}`` mapping."""
        arr = np.zeros(spec.shape, dtype=np.complex128)
        for m, c in modes.items():
            arr[index_of_mode(m, spec)] += c
        return cls(spec, arr)

    def hermitian_defect(self) -> float:
        """``||c - conj(c(-m))|| / ||c||`` (0 for the zero spectrum)."""
        scale = np.linalg.norm(self.coeffs)
        if scale == 0.0:
            return 0.0
        return float(np.linalg.norm(self.coeffs - np.conj(reflect(self.coeffs))) / scale)

    def is_hermitian(self, tol: float = IMAG_RESIDUE_TOL) -> bool:
        return self.hermitian_defect() <= tol


def _same_spec(a: GridSpec, b: GridSpec):
    if a != b:
        raise InvalidFieldError(f"grid mismatch: {a} vs {b}")


def reflect(arr: np.ndarray) -> np.ndarray:
    """Return ``arr`` re-indexed by ``-idx mod N`` on every axis."""
    out = np.flip(arr)
    return np.roll(out, 1, axis=tuple(range(arr.ndim)))


def dft_forward(u: GridField) -> SpectrumField:
    """FFT-based DFT with ``1/N^d`` normalization.

    The output is symmetrized as ``(F + conj(F(-m))) / 2``, which is a no-op
    up to round-off for real input but makes Hermitian symmetry hold exactly.
    """
    vals = np.asarray(u.values)
    if not np.all(np.isfinite(vals)):
        raise InvalidFieldError("field contains NaN or Inf")
    spec = u.spec
    F = scipy.fft.fftn(vals, workers=fft_workers()) / spec.size
    F = 0.5 * (F + np.conj(reflect(F)))
    return SpectrumField(spec, F)


def dft_inverse(s: SpectrumField, *, real: bool = True):
    """Synthesize grid values from coefficients.

    With ``real=True`` (default) returns a :class:`GridField` and raises
    :class:`SymmetryError` unless the spectrum is Hermitian to
    ``IMAG_RESIDUE_TOL`` (by discrete Parseval this bounds the discarded
    imaginary part by the same fraction of ``||u||``). With ``real=False``
    returns the complex values as an ndarray.
    """
    spec = s.spec
    if not real:
        return scipy.fft.ifftn(s.coeffs, workers=fft_workers()) * spec.size
    defect = s.hermitian_defect()
    if defect > IMAG_RESIDUE_TOL:
        raise SymmetryError(f"spectrum is not Hermitian (relative defect {defect:.3e})")
    half = s.coeffs[..., : spec.N // 2 + 1]
    vals = scipy.fft.irfftn(half, s=spec.shape, workers=fft_workers()) * spec.size
    return GridField(spec, vals)


def _phase_table(N: int, sign: int) -> np.ndarray:
    return np.exp(sign * 2j * np.pi * np.arange(N) / N)


def dft_naive(u: GridField, cap: int = ORACLE_CAP) -> SpectrumField:
    """Direct O(N^{2d}) evaluation of the DFT sum (test oracle).

    Phases are reduced to integer residues ``<m, j> mod N`` before the
    exponential so large modes do not lose accuracy.
    """
    spec = u.spec
    if spec.size > cap:
        raise OracleSizeError(f"naive DFT limited to {cap} points, grid has {spec.size}")
    N = spec.N
    idx = np.indices(spec.shape).reshape(spec.d, -1).T  # (P, d) integer grid indices
    modes = np.array([mode_of_index(i, spec) for i in idx], dtype=np.int64)
    table = _phase_table(N, -1)
    flat = np.asarray(u.values, dtype=np.float64).ravel()
    out = np.empty(spec.size, dtype=np.complex128)
    for start in range(0, spec.size, 256):
        r = (modes[start : start + 256] @ idx.T) % N
        out[start : start + 256] = table[r] @ flat
    return SpectrumField(spec, out.reshape(spec.shape) / spec.size)


def grid_l2_norm_sq(u: GridField) -> float:
    """Grid approximation ``N^-d * sum_x u(x)^2`` of the squared L2 norm."""
    return float(np.mean(np.square(u.values)))


def sobolev_weights(spec: GridSpec, s: int, freq_scale: float = 2.0 * math.pi) -> np.ndarray:
    """Per-mode multiplier ``prod_j sum_{k=0..s} (freq_scale * m_j)^(2k)``.

    ``freq_scale=2*pi`` is the exact Sobolev norm for the ``exp(2 pi i <m, x>)``
    basis with multi-indices ``|k|_inf <= s``; ``freq_scale=1`` gives the
    integer-frequency variant.
    """
    if s < 0 or int(s) != s:
        raise ValueError(f"smoothness order must be a non-negative integer, got {s}")
    out = np.ones(spec.shape)
    for a in spec.mode_axes():
        x = (freq_scale * a.astype(np.float64)) ** 2
        acc = np.zeros_like(x)
        term = np.ones_like(x)
        for _ in range(int(s) + 1):
            acc = acc + term
            term = term * x
        out = out * acc
    return out


def sobolev_norm_sq(field: SpectrumField, s: int, freq_scale: float = 2.0 * math.pi) -> float:
    """Spectral ``||u||_{H^s}^2`` of the band-limited function with these coefficients."""
    w = sobolev_weights(field.spec, s, freq_scale)
    return float(np.sum(w * np.abs(field.coeffs) ** 2))


def grid_character_sum(k: Sequence[int], m: Sequence[int], spec: GridSpec) -> complex:
    """Direct evaluation of ``N^-d * sum_x exp(2 pi i <k - m, x>)``."""
    k, m = _as_mode(k), _as_mode(m)
    if len(k) != spec.d or len(m) != spec.d:
        raise ModeRangeError("mode dimension does not match grid")
    diff = np.array(k, dtype=np.int64) - np.array(m, dtype=np.int64)
    idx = np.indices(spec.shape).reshape(spec.d, -1).T
    r = (idx @ diff) % spec.N
    return complex(np.sum(_phase_table(spec.N, +1)[r]) / spec.size)
