"""DFT-based constrained least squares for diagonal Fourier operators.

Given pairs ``(v_i, w_i)`` on an ``N``-grid, with ``a_i = DFT(v_i)(m)`` and
``b_i = DFT(w_i)(m)``, the estimator minimizes::

    (1/n) sum_i sum_{|m|_inf <= K} |lambda_m a_i - b_i|^2   s.t.  |lambda_m| <= C

The objective separates over modes. Per mode it is the isotropic quadratic
``A |lambda|^2 - 2 Re(lambda conj(G)) + W`` with ``A = sum |a_i|^2``,
``G = sum b_i conj(a_i)``, ``W = sum |b_i|^2``, minimized over a disk, so the
radial projection of ``G / A`` is the exact constrained minimizer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import scipy.fft

from .errors import DegenerateTargetError, InvalidFieldError, NonConvergenceError, ResolutionError
from .operators import Dataset, DiagonalOperator, apply
from .random_fields import make_rng
from .spectral import GridField, GridSpec, fft_workers

#: Modes with ``sum |a_i|^2`` at or below this fraction of the total input energy
#: are treated as never excited (FFT round-off sits around 1e-32).
DEGENERATE_RTOL = 1e-28


@dataclass(frozen=True)
class FitConfig:
    K: int
    C: float = 2.0
    method: Literal["closed_form", "projected_sgd"] = "closed_form"
    step_size: float = 0.5
    batch_size: int = 32
    epochs: int = 200
    seed: int = 0
    tol: float = 1e-6
    min_step: float = 1e-6

    def __post_init__(self):
        if self.K < 0:
            raise ValueError(f"K must be >= 0, got {self.K}")
        if not self.C > 0:
            raise ValueError(f"C must be positive, got {self.C}")
        if self.method not in ("closed_form", "projected_sgd"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.batch_size < 1 or self.epochs < 1 or not self.step_size > 0:
            raise ValueError("SGD batch_size, epochs and step_size must be positive")

    def check_resolution(self, N: int):
        if N <= 2 * self.K:
            raise ResolutionError(f"grid N={N} too coarse for K={self.K} (need N > 2K)")


@dataclass
class FitResult:
    operator: DiagonalOperator
    per_mode_residual: np.ndarray
    objective: float
    modes_clipped: int
    modes_degenerate: int
    epoch_losses: list[float] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def as_record(self) -> dict:
        rec = {
            "objective": self.objective,
            "modes_clipped": self.modes_clipped,
            "modes_degenerate": self.modes_degenerate,
            "K": self.operator.K,
            "C": self.operator.C,
        }
        rec.update(self.diagnostics)
        if self.epoch_losses:
            rec["epoch_losses"] = list(self.epoch_losses)
        return rec


def batch_spectra(values: np.ndarray, spec: GridSpec) -> np.ndarray:
    """Normalized, exactly Hermitian DFTs of a stack of real fields ``(n,) + grid``."""
    axes = tuple(range(1, spec.d + 1))
    F = scipy.fft.fftn(values, axes=axes, workers=fft_workers()) / spec.size
    flipped = np.roll(np.flip(F, axis=axes), 1, axis=axes)
    return 0.5 * (F + np.conj(flipped))


def block_slots(spec: GridSpec, K: int):
    """Index tuple extracting the ``(2K+1)^d`` mode block from a grid-shaped array."""
    slots = np.arange(-K, K + 1) % spec.N
    return np.ix_(*([slots] * spec.d))


class ModeStatistics:
    """Running per-mode sums ``A``, ``G``, ``W`` over the full grid.

    Supports streaming accumulation so very large datasets never need to be
    held in memory, and extraction of any truncation block ``K < N/2``.
    """

    def __init__(self, spec: GridSpec):
        self.spec = spec
        self.n = 0
        self.energy = 0.0
        self.A = np.zeros(spec.shape)
        self.G = np.zeros(spec.shape, dtype=np.complex128)
        self.W = np.zeros(spec.shape)

    @classmethod
    def from_dataset(cls, data: Dataset, chunk: int = 64) -> "ModeStatistics":
        stats = cls(data.spec)
        for start in range(0, data.n, chunk):
            stats.update(data.v[start : start + chunk], data.w[start : start + chunk])
        return stats

    def update(self, v: np.ndarray, w: np.ndarray):
        """Add a stack of pairs (arrays ``(k,) + grid``, or single grid arrays)."""
        v = np.asarray(v, dtype=np.float64).reshape((-1,) + self.spec.shape)
        w = np.asarray(w, dtype=np.float64).reshape((-1,) + self.spec.shape)
        a = batch_spectra(v, self.spec)
        b = batch_spectra(w, self.spec)
        self.A += np.sum(a.real**2 + a.imag**2, axis=0)
        self.G += np.sum(b * np.conj(a), axis=0)
        self.W += np.sum(b.real**2 + b.imag**2, axis=0)
        self.energy += float(np.sum(v**2)) / self.spec.size
        self.n += len(v)

    def copy(self) -> "ModeStatistics":
        out = ModeStatistics(self.spec)
        out.n, out.energy = self.n, self.energy
        out.A, out.G, out.W = self.A.copy(), self.G.copy(), self.W.copy()
        return out

    def block(self, K: int):
        """``(A, G, W)`` restricted to ``|m|_inf <= K`` in lexicographic block order."""
        if self.spec.N <= 2 * K:
            raise ResolutionError(f"grid N={self.spec.N} too coarse for K={K} (need N > 2K)")
        sl = block_slots(self.spec, K)
        return self.A[sl], self.G[sl], self.W[sl]


def _degenerate_mask(A: np.ndarray, energy: float) -> np.ndarray:
    return A <= DEGENERATE_RTOL * energy


def objective_terms(lam: np.ndarray, A: np.ndarray, G: np.ndarray, W: np.ndarray, n: int) -> np.ndarray:
    """Per-mode contribution ``(1/n) sum_i |lambda a_i - b_i|^2`` from the sums."""
    lam = np.asarray(lam)
    quad = (lam.real**2 + lam.imag**2) * A
    cross = 2.0 * (lam.real * G.real + lam.imag * G.imag)
    return (quad - cross + W) / n


def solve_from_statistics(stats: ModeStatistics, K: int, C: float) -> FitResult:
    """Closed-form per-mode minimizer, projected onto the disk ``|lambda| <= C``."""
    A, G, W = stats.block(K)
    degenerate = _degenerate_mask(A, stats.energy)
    lam = np.zeros(A.shape, dtype=np.complex128)
    live = ~degenerate
    lam[live] = G[live] / A[live]
    mod = np.abs(lam)
    clipped = mod > C
    lam[clipped] *= C / mod[clipped]
    resid = objective_terms(lam, A, G, W, stats.n)
    op = DiagonalOperator(stats.spec.d, K, C, lam)
    return FitResult(
        operator=op,
        per_mode_residual=resid,
        objective=float(np.sum(resid)),
        modes_clipped=int(np.count_nonzero(clipped)),
        modes_degenerate=int(np.count_nonzero(degenerate)),
        diagnostics={"method": "closed_form", "n": stats.n, "N": stats.spec.N},
    )


def fit_closed_form(data: Dataset, cfg: FitConfig) -> FitResult:
    if data.n < 1:
        raise InvalidFieldError("cannot fit an empty dataset")
    cfg.check_resolution(data.spec.N)
    return solve_from_statistics(ModeStatistics.from_dataset(data), cfg.K, cfg.C)


def _project(lam: np.ndarray, C: float) -> np.ndarray:
    mod = np.abs(lam)
    over = mod > C
    if np.any(over):
        lam = lam.copy()
        lam[over] *= C / mod[over]
    return lam


def fit_projected_sgd(data: Dataset, cfg: FitConfig) -> FitResult:
    """Mini-batch projected gradient descent on the same objective.

    Each step uses a variance-reduced mini-batch gradient (an SVRG snapshot is
    refreshed every epoch), scaled per mode by the inverse full-data curvature
    ``A_m / n``, and is followed by projection onto ``|lambda_m| <= C``.
    Iterates start at zero. The effective step ``step_size * min(1, batch/n)``
    keeps every per-mode contraction factor inside (-1, 1).
    """
    if data.n < 1:
        raise InvalidFieldError("cannot fit an empty dataset")
    cfg.check_resolution(data.spec.N)
    spec, n, K, C = data.spec, data.n, cfg.K, cfg.C
    sl = (slice(None),) + block_slots(spec, K)
    a = batch_spectra(data.v, spec)[sl].reshape(n, -1)
    b = batch_spectra(data.w, spec)[sl].reshape(n, -1)
    shape = (2 * K + 1,) * spec.d

    A = np.sum(a.real**2 + a.imag**2, axis=0)
    G = np.sum(b * np.conj(a), axis=0)
    W = np.sum(b.real**2 + b.imag**2, axis=0)
    energy = float(np.sum(np.asarray(data.v) ** 2)) / spec.size
    degenerate = _degenerate_mask(A, energy)
    h = np.where(degenerate, 1.0, A / n)
    g = np.where(degenerate, 0.0, G / n)

    batch = min(cfg.batch_size, n)
    eta = cfg.step_size * min(1.0, batch / n)
    rng = make_rng(cfg.seed)
    lam = np.zeros(A.shape, dtype=np.complex128)
    max_modulus = 0.0
    losses = []
    loss = float(np.sum(objective_terms(lam, A, G, W, n)))
    steps = 0
    for epoch in range(cfg.epochs):
        snapshot = lam.copy()
        full_grad = h * snapshot - g
        order = rng.permutation(n)
        for start in range(0, n, batch):
            idx = order[start : start + batch]
            ab = a[idx]
            hb = np.where(degenerate, 0.0, np.mean(ab.real**2 + ab.imag**2, axis=0))
            grad = hb * (lam - snapshot) + full_grad
            lam = _project(lam - eta * grad / h, C)
            lam[degenerate] = 0.0
            max_modulus = max(max_modulus, float(np.max(np.abs(lam))))
            steps += 1
        new_loss = float(np.sum(objective_terms(lam, A, G, W, n)))
        losses.append(new_loss)
        if new_loss > loss * (1 + 1e-12) + 1e-300:
            if eta <= cfg.min_step:
                raise NonConvergenceError(
                    "objective increased over a full epoch at the minimal step",
                    {"epoch": epoch, "step": eta, "epoch_losses": losses},
                )
            eta = max(eta / 2, cfg.min_step)
            lam = snapshot
            continue
        converged = abs(loss - new_loss) <= 1e-15 * max(abs(new_loss), 1e-300)
        loss = new_loss
        if converged:
            break

    resid = objective_terms(lam, A, G, W, n)
    lam_block = lam.reshape(shape)
    op = DiagonalOperator(spec.d, K, C, lam_block)
    unconstrained = np.where(degenerate, 0.0, np.abs(G) / np.where(degenerate, 1.0, A))
    return FitResult(
        operator=op,
        per_mode_residual=resid.reshape(shape),
        objective=float(np.sum(resid)),
        modes_clipped=int(np.count_nonzero(unconstrained > C)),
        modes_degenerate=int(np.count_nonzero(degenerate)),
        epoch_losses=losses,
        diagnostics={
            "method": "projected_sgd",
            "n": n,
            "N": spec.N,
            "steps": steps,
            "final_step": eta,
            "max_iterate_modulus": max_modulus,
        },
    )


def fit(data: Dataset, cfg: FitConfig) -> FitResult:
    if cfg.method == "closed_form":
        return fit_closed_form(data, cfg)
    return fit_projected_sgd(data, cfg)


def dft_objective(T: DiagonalOperator, data: Dataset) -> float:
    """Empirical DFT least-squares loss of ``T``, evaluated directly from the data."""
    spec = data.spec
    T_mult = T.multiplier(spec)
    mask = np.zeros(spec.shape, dtype=bool)
    mask[block_slots(spec, T.K)] = True
    a = batch_spectra(data.v, spec)
    b = batch_spectra(data.w, spec)
    r = T_mult * a - b
    return float(np.sum(np.abs(r[:, mask]) ** 2) / data.n)


def predict(T_hat: DiagonalOperator, v: GridField) -> GridField:
    """Evaluate the fitted operator at the input's own resolution."""
    return apply(T_hat, v)


def _grid_sq(x: np.ndarray) -> float:
    return float(np.mean(np.square(x)))


def relative_mse(T_hat: DiagonalOperator, test: Dataset, *, squared: bool = False) -> float:
    """``(1/n) sum ||w_i - T_hat v_i||^2 / ||w_i||`` with grid L2 norms.

    ``squared=True`` divides by ``||w_i||^2`` instead.
    """
    total = 0.0
    for i, (v, w) in enumerate(test.pairs):
        wsq = _grid_sq(w.values)
        if wsq == 0.0:
            raise DegenerateTargetError(i)
        err = _grid_sq(w.values - predict(T_hat, v).values)
        total += err / (wsq if squared else math.sqrt(wsq))
    return total / test.n


def empirical_excess_risk(T_hat: DiagonalOperator, T_ref: DiagonalOperator, test: Dataset) -> float:
    """Mean of ``||T_hat v - w||^2 - ||T_ref v - w||^2`` over the test pairs."""
    return float(np.mean(excess_terms(T_hat, T_ref, test)))


def excess_terms(T_hat: DiagonalOperator, T_ref: DiagonalOperator, test: Dataset) -> np.ndarray:
    out = []
    for v, w in test.pairs:
        out.append(_grid_sq(apply(T_hat, v).values - w.values) - _grid_sq(apply(T_ref, v).values - w.values))
    return np.array(out)
