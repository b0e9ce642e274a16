"""Error sweeps over sample size, truncation level and training resolution.

Every sweep follows the same synthetic recipe: inputs are Gaussian random
fields, the target operator has ``lambda_m ~ Uniform(-bound, bound)`` on every
mode strictly below the generation grid's Nyquist, and training outputs carry
smooth additive noise. Test targets are noiseless unless ``test_noise`` is
set, so the reported number measures the estimator's error rather than the
noise floor.

Seeds are derived per run ``r`` as ``derive_seed(seed, r, tag)`` with tags
1 (operator), 2 (test set) and 3 (training stream). Training sets for
different sample sizes are nested prefixes of a single stream, and the test
set is shared by every point of a run.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable

import numpy as np

from ..errors import DegenerateTargetError, ResolutionError
from ..estimator import ModeStatistics, batch_spectra, solve_from_statistics
from ..operators import DiagonalOperator, iter_pairs, restrict_to_grid, synthesize_random_operator
from ..random_fields import GrfConfig, derive_seed
from ..spectral import GridSpec
from .curves import ErrorCurve


@dataclass(frozen=True)
class ExperimentConfig:
    d: int = 2
    N: int = 64
    K: int = 32
    gamma: float = 2.0
    sigma: float = 10.0
    bound: float = 2.0
    C: float = 2.0
    noise: bool = True
    test_noise: bool = False
    n_train: int = 500
    n_test: int = 100
    seeds: int = 5
    seed: int = 0
    redraw_operator: bool = True
    squared: bool = False
    K_star: int | None = None

    def as_dict(self) -> dict:
        return asdict(self)


def effective_K(K: int, N: int) -> int:
    """Truncation actually fitted on an ``N``-grid for a requested ``K``.

    ``K = N/2`` (the Nyquist limit) is accepted and fits every mode strictly
    below it, since the Nyquist slot cannot be told apart from its mirror.
    """
    if K < 0:
        raise ValueError(f"K must be >= 0, got {K}")
    if 2 * K < N:
        return K
    if 2 * K == N:
        return K - 1
    raise ResolutionError(f"K={K} exceeds the Nyquist limit of an N={N} grid")


def target_operator(cfg: ExperimentConfig, run: int, N_gen: int) -> DiagonalOperator:
    K_star = (N_gen - 1) // 2 if cfg.K_star is None else cfg.K_star
    key = run if cfg.redraw_operator else 0
    return synthesize_random_operator(cfg.d, K_star, cfg.bound, derive_seed(cfg.seed, key, 1))


class _Evaluator:
    """Streams test pairs and accumulates relative errors for several operators.

    Errors are computed spectrally: with normalized DFTs the grid L2 norm is
    the coefficient l2 norm, so no inverse transforms are needed.
    """

    def __init__(self, spec: GridSpec, ops: list[DiagonalOperator], squared: bool):
        self.spec = spec
        self.mult = [T.multiplier(spec) for T in ops]
        self.squared = squared
        self.total = np.zeros(len(ops))
        self.count = 0

    def add(self, v: np.ndarray, w: np.ndarray):
        a = batch_spectra(v[None], self.spec)[0]
        b = batch_spectra(w[None], self.spec)[0]
        wsq = float(np.sum(np.abs(b) ** 2))
        if wsq == 0.0:
            raise DegenerateTargetError(self.count)
        denom = wsq if self.squared else math.sqrt(wsq)
        for j, M in enumerate(self.mult):
            self.total[j] += float(np.sum(np.abs(b - M * a) ** 2)) / denom
        self.count += 1

    def result(self) -> np.ndarray:
        return self.total / self.count


def _test_pairs(cfg, T_star, grf, run):
    for v, w in iter_pairs(T_star, grf, cfg.test_noise, cfg.n_test, derive_seed(cfg.seed, run, 2)):
        yield v.values, w.values


def sweep_statistical(cfg: ExperimentConfig, n_list: Iterable[int], seeds: int | None = None) -> ErrorCurve:
    n_list = sorted(set(int(n) for n in n_list))
    if not n_list or n_list[0] < 1:
        raise ValueError("every n must be >= 1")
    seeds = cfg.seeds if seeds is None else seeds
    spec = GridSpec(cfg.d, cfg.N)
    K = effective_K(cfg.K, cfg.N)
    grf = GrfConfig(spec, cfg.gamma, cfg.sigma)
    errs = np.zeros((len(n_list), seeds))
    for r in range(seeds):
        T_star = target_operator(cfg, r, cfg.N)
        stats = ModeStatistics(spec)
        stream = iter_pairs(T_star, grf, cfg.noise, n_list[-1], derive_seed(cfg.seed, r, 3))
        fits = []
        for n in n_list:
            while stats.n < n:
                v, w = next(stream)
                stats.update(v.values, w.values)
            fits.append(solve_from_statistics(stats, K, cfg.C).operator)
        ev = _Evaluator(spec, fits, cfg.squared)
        for v, w in _test_pairs(cfg, T_star, grf, r):
            ev.add(v, w)
        errs[:, r] = ev.result()
    meta = cfg.as_dict() | {"sweep": "statistical", "K_effective": K, "seeds": seeds}
    return ErrorCurve("n", n_list, errs.tolist(), meta)


def sweep_truncation(cfg: ExperimentConfig, K_list: Iterable[int], seeds: int = 1) -> ErrorCurve:
    """One training/test set per run; every ``K`` is read off the same statistics.

    Valid because the objective separates over modes: the fit at ``K`` is the
    restriction of the fit at any larger truncation.
    """
    K_list = sorted(set(int(k) for k in K_list))
    K_eff = [effective_K(k, cfg.N) for k in K_list]
    spec = GridSpec(cfg.d, cfg.N)
    grf = GrfConfig(spec, cfg.gamma, cfg.sigma)
    errs = np.zeros((len(K_list), seeds))
    for r in range(seeds):
        T_star = target_operator(cfg, r, cfg.N)
        stats = ModeStatistics(spec)
        for v, w in iter_pairs(T_star, grf, cfg.noise, cfg.n_train, derive_seed(cfg.seed, r, 3)):
            stats.update(v.values, w.values)
        fits = [solve_from_statistics(stats, k, cfg.C).operator for k in K_eff]
        ev = _Evaluator(spec, fits, cfg.squared)
        for v, w in _test_pairs(cfg, T_star, grf, r):
            ev.add(v, w)
        errs[:, r] = ev.result()
    meta = cfg.as_dict() | {"sweep": "truncation", "K_effective": K_eff, "seeds": seeds}
    return ErrorCurve("K", K_list, errs.tolist(), meta)


def sweep_discretization(cfg: ExperimentConfig, N_list: Iterable[int], N_test: int, seeds: int = 1) -> ErrorCurve:
    """Train at each coarse resolution, test at ``N_test``.

    Data are generated once at ``N_test`` and subsampled, so every training
    grid sees the same underlying functions. Each grid uses ``K = N/2``.
    """
    N_list = sorted(set(int(n) for n in N_list))
    for N in N_list:
        if N < 1 or N_test % N:
            raise ResolutionError(f"training grid N={N} does not divide N_test={N_test}")
    K_eff = [effective_K(N // 2, N) for N in N_list]
    fine = GridSpec(cfg.d, N_test)
    grf = GrfConfig(fine, cfg.gamma, cfg.sigma)
    errs = np.zeros((len(N_list), seeds))
    for r in range(seeds):
        T_star = target_operator(cfg, r, N_test)
        stats = [ModeStatistics(GridSpec(cfg.d, N)) for N in N_list]
        for v, w in iter_pairs(T_star, grf, cfg.noise, cfg.n_train, derive_seed(cfg.seed, r, 3)):
            for st, N in zip(stats, N_list):
                st.update(restrict_to_grid(v, N).values, restrict_to_grid(w, N).values)
        fits = [solve_from_statistics(st, k, cfg.C).operator for st, k in zip(stats, K_eff)]
        ev = _Evaluator(fine, fits, cfg.squared)
        for v, w in _test_pairs(cfg, T_star, grf, r):
            ev.add(v, w)
        errs[:, r] = ev.result()
    meta = cfg.as_dict() | {"sweep": "discretization", "N_test": N_test, "K_effective": K_eff, "seeds": seeds}
    return ErrorCurve("N", N_list, errs.tolist(), meta)
