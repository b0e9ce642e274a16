"""Numerical checks of the Fourier-analytic inequalities behind the rates.

Each check takes a band-limited function (its coefficient array) and returns
a :class:`CheckReport` whose violations carry the witnessing mode and slack.
:func:`run_lemma_suite` bundles a default corpus of random and analytic cases.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.fft

from .. import spectral
from ..errors import ModeRangeError, PreconditionError, ResolutionError
from ..random_fields import make_rng, sample_spectrum
from ..spectral import GridField, GridSpec, SpectrumField, fft_workers, grid_character_sum
from .report import CheckReport, merge

ATOL = 1e-10


def _nonzero_linf(spec: GridSpec) -> np.ndarray:
    return np.broadcast_to(spec.linf_modes(), spec.shape)


def _witness(spec: GridSpec, flat_index: int) -> list[int]:
    return list(spectral.mode_of_index(np.unravel_index(flat_index, spec.shape), spec))


def check_coefficient_decay(u: SpectrumField, s: int, B: float | None = None) -> CheckReport:
    """``|c_m| <= H / ((2 pi)^s |m|_inf^s)`` for every represented ``m != 0``.

    ``H`` is the spectral Sobolev norm of ``u``, or ``B`` when given (after
    checking ``||u||_{H^s} <= B``).
    """
    spec = u.spec
    H = math.sqrt(spectral.sobolev_norm_sq(u, s))
    violations = []
    if B is not None:
        if H > B * (1 + 1e-9):
            violations.append({"reason": "norm exceeds budget", "norm": H, "B": B})
        H = B
    linf = _nonzero_linf(spec)
    live = linf > 0
    bound = np.full(spec.shape, np.inf)
    bound[live] = H / ((2 * math.pi) ** s * linf[live].astype(float) ** s)
    mag = np.abs(u.coeffs)
    slack = np.where(live, bound - mag, np.inf)
    bad = np.flatnonzero(slack < -ATOL)
    for i in bad[:10]:
        violations.append({"mode": _witness(spec, i), "coeff": float(mag.flat[i]), "bound": float(bound.flat[i])})
    min_slack = float(np.min(slack)) if np.any(live) else None
    return CheckReport("coefficient_decay", not violations, int(np.count_nonzero(live)), violations, min_slack, {"s": s})


def check_weighted_sum(u: SpectrumField, s: int) -> CheckReport:
    """``sum_m (1 + |m|_inf^{2s}) |c_m|^2 <= ||u||_{H^s}^2``."""
    linf = _nonzero_linf(u.spec).astype(float)
    lhs = float(np.sum((1 + linf ** (2 * s)) * np.abs(u.coeffs) ** 2))
    rhs = spectral.sobolev_norm_sq(u, s)
    ok = lhs <= rhs + ATOL * max(rhs, 1.0)
    viol = [] if ok else [{"lhs": lhs, "rhs": rhs}]
    return CheckReport("weighted_sum", ok, 1, viol, rhs - lhs, {"s": s})


def check_tail_sum(u: SpectrumField, s: int, K: int) -> CheckReport:
    """``sum_{|m|_inf > K} |c_m|^2 <= ||u||_{H^s}^2 / K^{2s}`` over represented modes."""
    if K < 1:
        raise PreconditionError(f"tail bound needs K >= 1, got {K}")
    linf = _nonzero_linf(u.spec)
    tail = float(np.sum(np.abs(u.coeffs[linf > K]) ** 2))
    bound = spectral.sobolev_norm_sq(u, s) / K ** (2 * s)
    ok = tail <= bound + ATOL * max(bound, 1.0)
    viol = [] if ok else [{"K": K, "tail": tail, "bound": bound}]
    ratio = tail / bound if bound > 0 else 0.0
    return CheckReport("tail_sum", ok, 1, viol, bound - tail, {"s": s, "K": K, "ratio": ratio})


def check_aliasing(u: SpectrumField, N_coarse: int, m) -> CheckReport:
    """Aliasing of the coarse-grid DFT for a band-limited ``u``.

    ``u`` is the trigonometric polynomial whose coefficients sit on a fine
    grid. Sampling it on the ``N_coarse`` grid gives a DFT value at ``m``
    equal to ``c_m`` plus every ``c_{m + l N_coarse}`` with ``l != 0``; the
    report checks ``|DFT - c_m| <= |alias sum|`` and records the identity
    residue. Fine-grid sampling is exact because ``u`` is band-limited there.
    """
    fine = u.spec
    m = tuple(int(c) for c in np.atleast_1d(m))
    if len(m) != fine.d:
        raise ModeRangeError("mode dimension does not match the field")
    if max(abs(c) for c in m) >= N_coarse:
        raise ModeRangeError(f"need |m|_inf < N_coarse={N_coarse}, got {m}")
    if fine.N <= 2 * N_coarse or fine.N % N_coarse:
        raise ResolutionError(f"fine grid N={fine.N} must exceed 2*N_coarse and be a multiple of {N_coarse}")
    stride = fine.N // N_coarse
    vals = scipy.fft.ifftn(u.coeffs, workers=fft_workers()) * fine.size
    coarse = vals[(slice(None, None, stride),) * fine.d]
    dft = complex(scipy.fft.fftn(coarse, workers=fft_workers())[tuple(c % N_coarse for c in m)]) / N_coarse**fine.d

    same_class = np.ones(fine.shape, dtype=bool)
    for ax, mj in zip(fine.mode_axes(), m):
        same_class = same_class & ((ax - mj) % N_coarse == 0)
    c_m = u.coeff(m)
    alias = complex(np.sum(u.coeffs[same_class])) - c_m
    lhs, rhs = abs(dft - c_m), abs(alias)
    residue = abs(dft - c_m - alias)
    tol = 1e-12 * max(1.0, float(np.sum(np.abs(u.coeffs))))
    ok = lhs <= rhs + tol and residue <= tol
    viol = [] if ok else [{"mode": list(m), "lhs": lhs, "rhs": rhs, "residue": residue}]
    return CheckReport(
        "aliasing", ok, 1, viol, rhs - lhs,
        {"N_coarse": N_coarse, "dft": [dft.real, dft.imag], "residue": residue},
    )


def lattice_tail_sum(s: int, d: int, cutoff: int | None = None) -> CheckReport:
    """Bracket ``sum_{k != 0} |k|_inf^{-2s}`` and compare with ``pi^2 3^{d-2}``.

    Shells ``|k|_inf = j`` hold ``(2j+1)^d - (2j-1)^d`` points. The partial sum
    runs to ``cutoff``; the remainder is bracketed by integral comparison.
    By default the cutoff is the smallest one with remainder bound below 1e-6.
    """
    if 2 * s <= d:
        raise PreconditionError(f"lattice sum diverges for 2s={2 * s} <= d={d}")
    p = 2 * s - d

    def upper(J):
        return 2 * d * (2 + 1 / J) ** (d - 1) * J ** (-p) / p

    def lower(J):
        return 2 * d * (2 - 1 / (J + 1)) ** (d - 1) * (J + 1) ** (-p) / p

    if cutoff is None:
        cutoff = max(1, math.ceil((2 * d * 3 ** (d - 1) / (p * 1e-6)) ** (1 / p)))
        while cutoff > 1 and upper(cutoff - 1) < 1e-6:
            cutoff -= 1
        while upper(cutoff) >= 1e-6:
            cutoff += 1
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    partial = 0.0
    # small terms first for accuracy
    for hi in range(cutoff, 0, -1_000_000):
        j = np.arange(max(1, hi - 999_999), hi + 1, dtype=np.float64)[::-1]
        count = (2 * j + 1) ** d - (2 * j - 1) ** d
        partial += float(np.sum(count / j ** (2 * s)))
    lo, hi_ = partial + lower(cutoff), partial + upper(cutoff)
    bound = math.pi**2 * 3.0 ** (d - 2)
    ok = lo <= bound * (1 + 1e-12)
    viol = [] if ok else [{"lower": lo, "bound": bound}]
    return CheckReport(
        "lattice_sum", ok, 1, viol, bound - lo,
        {"s": s, "d": d, "cutoff": cutoff, "partial": partial, "interval": [lo, hi_], "bound": bound},
    )


def check_character_sums(N_list=(3, 4, 5, 8), d_list=(1, 2), tol: float = 1e-12) -> CheckReport:
    """Grid character sums equal ``1[k == m mod N]`` for ``|k|, |m| <= 2N``."""
    violations, count, worst = [], 0, 0.0
    for d in d_list:
        for N in N_list:
            spec = GridSpec(d, N)
            R = np.arange(-2 * N, 2 * N + 1)
            if d == 1:
                pairs = (((k,), (m,)) for k in R for m in R)
            else:
                # the sum depends on k - m only; cover every difference class
                pairs = (((k1, k2), (0, 0)) for k1 in np.arange(-4 * N, 4 * N + 1) for k2 in np.arange(-4 * N, 4 * N + 1))
            for k, m in pairs:
                val = grid_character_sum(k, m, spec)
                want = float(all((a - b) % N == 0 for a, b in zip(k, m)))
                err = abs(val - want)
                worst = max(worst, err)
                count += 1
                if err > tol:
                    violations.append({"N": N, "k": list(map(int, k)), "m": list(map(int, m)), "value": [val.real, val.imag]})
    return CheckReport("character_sum", not violations, count, violations[:10], tol - worst, {"max_error": worst})


def check_parseval(draws: int = 20, seed: int = 0) -> CheckReport:
    """Discrete Parseval and inverse round trip for the forward transform."""
    rng = make_rng(seed, 99)
    violations, worst = [], 0.0
    for t in range(draws):
        d = 1 + t % 2
        spec = GridSpec(d, 16)
        u = GridField(spec, rng.standard_normal(spec.shape))
        c = spectral.dft_forward(u)
        energy = float(np.mean(u.values**2))
        parseval = abs(float(np.sum(np.abs(c.coeffs) ** 2)) - energy) / energy
        back = spectral.dft_inverse(c).values
        trip = float(np.max(np.abs(back - u.values))) / float(np.max(np.abs(u.values)))
        err = max(parseval, trip)
        worst = max(worst, err)
        if err > 1e-10:
            violations.append({"draw": t, "parseval_rel": parseval, "roundtrip_rel": trip})
    return CheckReport("parseval", not violations, draws, violations[:10], 1e-10 - worst, {"max_error": worst})


def _single_mode(spec: GridSpec, k) -> SpectrumField:
    return SpectrumField.from_modes(spec, {tuple(k): 1.0})


def run_lemma_suite(draws: int = 100, gamma: float = 2.0, s: int = 1, seed: int = 0) -> list[CheckReport]:
    """Default verification corpus: GRF draws for d in {1, 2} plus analytic cases."""
    reports = [check_parseval(seed=seed), check_character_sums()]
    decay, weighted, tail, alias = [], [], [], []
    grids = {1: GridSpec(1, 64), 2: GridSpec(2, 32)}
    for d, spec in grids.items():
        rng = make_rng(seed, d)
        for _ in range(draws):
            u = SpectrumField(spec, sample_spectrum(spec, gamma, 10.0, rng))
            decay.append(check_coefficient_decay(u, s))
            weighted.append(check_weighted_sum(u, s))
            for K in (1, 2, 4, spec.N // 4, spec.nyquist):
                tail.append(check_tail_sum(u, s, K))

        k = (3,) + (1,) * (d - 1)
        decay.append(check_coefficient_decay(_single_mode(spec, k), s))
        decay.append(check_coefficient_decay(_single_mode(spec, (0,) * d), s))
        weighted.append(check_weighted_sum(_single_mode(spec, k), s))
        tail.append(check_tail_sum(_single_mode(spec, k), s, spec.nyquist))
        tail.append(check_tail_sum(_single_mode(spec, (4,) + (0,) * (d - 1)), s, 3))

        fine, Nc = GridSpec(d, 64 if d == 1 else 32), 8
        rng = make_rng(seed, 10 + d)
        band = fine.linf_modes() < fine.N // 2
        for _ in range(max(1, draws // 10)):
            coeffs = np.where(band, sample_spectrum(fine, 1.0, 1.0, rng), 0)
            u = SpectrumField(fine, coeffs)
            for m in [(0,) * d, (1,) * d, (Nc - 1,) + (0,) * (d - 1), (-(Nc - 1),) * d]:
                alias.append(check_aliasing(u, Nc, m))
        low = np.where(fine.linf_modes() < Nc // 2, sample_spectrum(fine, 1.0, 1.0, rng), 0)
        r = check_aliasing(SpectrumField(fine, low), Nc, (1,) * d)
        r.passed = r.passed and abs(r.details["dft"][0] - SpectrumField(fine, low).coeff((1,) * d).real) <= 1e-12
        alias.append(r)
        m = (2,) + (1,) * (d - 1)
        shifted = (m[0] + Nc,) + m[1:]
        r = check_aliasing(_single_mode(fine, shifted), Nc, m)
        dft = complex(*r.details["dft"])
        if abs(dft - 1) > 1e-12:
            r.passed = False
            r.violations.append({"reason": "single aliased mode must give DFT 1", "dft": [dft.real, dft.imag]})
        alias.append(r)

    reports += [
        merge("coefficient_decay", decay),
        merge("weighted_sum", weighted),
        merge("tail_sum", tail),
        merge("aliasing", alias),
    ]
    lattice = [lattice_tail_sum(1, 1), lattice_tail_sum(2, 2), lattice_tail_sum(3, 2)]
    lo, hi = lattice[0].details["interval"]
    if not lo <= math.pi**2 / 3 <= hi:
        lattice[0].passed = False
        lattice[0].violations.append({"reason": "pi^2/3 outside interval", "interval": [lo, hi]})
    reports.append(merge("lattice_sum", lattice))
    return reports
