"""Finite-support distributions with exactly computable risk.

Fields here are finite sums of Fourier modes, so ``E ||T v - w||^2`` is a
finite sum over atoms and modes and needs no test set. Two constructions are
provided: a distribution supported only on high modes, where any truncated
estimator has unit excess risk, and the lower-bound family built from real
cosine atoms ``psi_m = (phi_m + phi_-m) / sqrt 2`` with random signs.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ..errors import PreconditionError, ResolutionError
from ..estimator import FitConfig, fit_closed_form
from ..operators import Dataset, DiagonalOperator, apply
from ..random_fields import make_rng
from ..spectral import GridField, GridSpec
from .report import CheckReport

Mode = tuple[int, ...]


@dataclass(frozen=True, eq=False)
class SparseField:
    """Trigonometric polynomial ``sum_m c_m phi_m`` with finitely many terms."""

    d: int
    coeffs: Mapping[Mode, complex]

    @classmethod
    def psi(cls, m: Mode, scale: float = 1.0) -> "SparseField":
        """Unit-norm real mode: ``phi_0``, or ``(phi_m + phi_-m)/sqrt 2``."""
        m = tuple(int(c) for c in m)
        if not any(m):
            return cls(len(m), {m: complex(scale)})
        neg = tuple(-c for c in m)
        return cls(len(m), {m: scale / math.sqrt(2), neg: scale / math.sqrt(2)})

    def modes(self) -> set[Mode]:
        return set(self.coeffs)

    def coeff(self, m: Mode) -> complex:
        return complex(self.coeffs.get(m, 0.0))

    def max_linf(self) -> int:
        return max((max(abs(c) for c in m) for m in self.coeffs), default=0)

    def l2_sq(self) -> float:
        return float(sum(abs(c) ** 2 for c in self.coeffs.values()))

    def sobolev_sq(self, s: int, freq_scale: float = 1.0) -> float:
        """``sum_m |c_m|^2 prod_j sum_{k<=s} (freq_scale m_j)^{2k}``."""
        total = 0.0
        for m, c in self.coeffs.items():
            w = 1.0
            for mj in m:
                w *= sum((freq_scale * mj) ** (2 * k) for k in range(s + 1))
            total += w * abs(c) ** 2
        return total

    def on_grid(self, spec: GridSpec) -> GridField:
        """Exact point values; phases use integer residues ``<m, j> mod N``."""
        if spec.d != self.d:
            raise ResolutionError("field and grid dimensions differ")
        idx = np.indices(spec.shape).reshape(spec.d, -1).T
        table = np.exp(2j * np.pi * np.arange(spec.N) / spec.N)
        out = np.zeros(spec.size, dtype=np.complex128)
        for m, c in self.coeffs.items():
            out += c * table[(idx @ np.array(m)) % spec.N]
        if np.max(np.abs(out.imag), initial=0.0) > 1e-12 * max(1.0, float(np.max(np.abs(out)))):
            raise ResolutionError("sparse field is not real-valued")
        return GridField(spec, out.real.reshape(spec.shape))


@dataclass
class Atom:
    weight: float
    v: SparseField
    w: SparseField
    label: str = ""


@dataclass
class FiniteSupportDistribution:
    atoms: list[Atom]
    params: dict = field(default_factory=dict)
    xi: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.atoms:
            raise ValueError("distribution needs at least one atom")
        total = math.fsum(a.weight for a in self.atoms)
        if abs(total - 1.0) > 1e-12 or any(a.weight < 0 for a in self.atoms):
            raise ValueError(f"atom weights must be non-negative and sum to 1, got {total}")

    @property
    def d(self) -> int:
        return self.atoms[0].v.d

    @property
    def weights(self) -> np.ndarray:
        return np.array([a.weight for a in self.atoms])

    def max_linf(self) -> int:
        return max(max(a.v.max_linf(), a.w.max_linf()) for a in self.atoms)

    def check_budget(self, s: int, B: float, freq_scale: float = 1.0, rtol: float = 1e-9) -> list[dict]:
        """Atoms whose input or output exceeds ``||.||_{H^s} <= B``."""
        bad = []
        for i, a in enumerate(self.atoms):
            for side, f in (("v", a.v), ("w", a.w)):
                norm = math.sqrt(f.sobolev_sq(s, freq_scale))
                if norm > B * (1 + rtol):
                    bad.append({"atom": i, "label": a.label, "side": side, "norm": norm, "B": B})
        return bad

    def sample(self, n: int, N: int, rng: np.random.Generator) -> Dataset:
        spec = GridSpec(self.d, N)
        picks = rng.choice(len(self.atoms), size=n, p=self.weights / self.weights.sum())
        cache: dict[int, tuple[GridField, GridField]] = {}
        pairs = []
        for i in picks:
            if i not in cache:
                cache[i] = (self.atoms[i].v.on_grid(spec), self.atoms[i].w.on_grid(spec))
            pairs.append(cache[i])
        return Dataset.from_pairs(pairs)


def _lam(T, m: Mode) -> complex:
    return T.lam(m) if hasattr(T, "lam") else complex(T(m))


def exact_risk(T, dist: FiniteSupportDistribution) -> float:
    """``sum_atoms weight * ||T v - w||^2``, evaluated mode by mode.

    ``T`` is a :class:`DiagonalOperator` or any callable ``mode -> lambda``.
    """
    if isinstance(T, DiagonalOperator) and T.d != dist.d:
        raise ResolutionError(f"operator is {T.d}-D, distribution is {dist.d}-D")
    total = []
    for a in dist.atoms:
        err = 0.0
        for m in a.v.modes() | a.w.modes():
            err += abs(_lam(T, m) * a.v.coeff(m) - a.w.coeff(m)) ** 2
        total.append(a.weight * err)
    return math.fsum(total)


def class_infimum(dist: FiniteSupportDistribution, C: float) -> tuple[float, dict[Mode, complex]]:
    """Smallest risk over diagonal operators with ``|lambda_m| <= C``, and a minimizer.

    The risk separates into per-mode quadratics ``A|l|^2 - 2 Re(l conj G) + W``
    with ``A = E|v_m|^2``, ``G = E w_m conj(v_m)``, ``W = E|w_m|^2``.
    """
    A: dict[Mode, float] = {}
    G: dict[Mode, complex] = {}
    W: dict[Mode, float] = {}
    for a in dist.atoms:
        for m in a.v.modes() | a.w.modes():
            vm, wm = a.v.coeff(m), a.w.coeff(m)
            A[m] = A.get(m, 0.0) + a.weight * abs(vm) ** 2
            G[m] = G.get(m, 0j) + a.weight * wm * vm.conjugate()
            W[m] = W.get(m, 0.0) + a.weight * abs(wm) ** 2
    lam, terms = {}, []
    for m in A:
        l = G[m] / A[m] if A[m] > 0 else 0j
        if abs(l) > C:
            l *= C / abs(l)
        lam[m] = l
        terms.append(A[m] * abs(l) ** 2 - 2 * (l * G[m].conjugate()).real + W[m])
    return max(math.fsum(terms), 0.0), lam


def monte_carlo_risk(T: DiagonalOperator, dist: FiniteSupportDistribution, n: int, N: int, seed: int = 0) -> tuple[float, float]:
    """Grid-based sample estimate of the risk: ``(mean, standard error)``."""
    if N <= 2 * max(dist.max_linf(), T.K):
        raise ResolutionError("evaluation grid must resolve every atom and the operator")
    data = dist.sample(n, N, make_rng(seed, 7))
    errs = np.array([float(np.mean((apply(T, v).values - w.values) ** 2)) for v, w in data.pairs])
    return float(errs.mean()), float(errs.std(ddof=1) / math.sqrt(n)) if n > 1 else float("inf")


# ---------------------------------------------------------------- high modes


def high_mode_distribution(K: int, d: int = 1) -> FiniteSupportDistribution:
    """Uniform over ``(psi_m, psi_m)`` with ``2^K < |m|_inf < 2^{K+1}``, one ``m`` per ``+-`` pair."""
    lo, hi = 2**K, 2 ** (K + 1)
    modes = []
    for m in itertools.product(range(-hi + 1, hi), repeat=d):
        if lo < max(abs(c) for c in m) < hi and m > tuple(-c for c in m):
            modes.append(m)
    if not modes:
        raise PreconditionError(f"no modes strictly between 2^{K} and 2^{K + 1}")
    p = 1.0 / len(modes)
    atoms = [Atom(p, SparseField.psi(m), SparseField.psi(m), f"psi{m}") for m in modes]
    return FiniteSupportDistribution(atoms, {"K": K, "d": d})


def high_mode_counterexample(K: int, n: int | list[int], seeds: int = 3, N: int | None = None, d: int = 1) -> CheckReport:
    """Excess risk of the truncated estimator on data it can never see.

    The target ``T* = identity`` fits every atom exactly, while the estimator
    truncated at ``K < 2^K`` predicts zero on the whole support, so its
    excess risk is exactly the mean squared target norm, 1.
    """
    if not 0 <= K <= 3:
        raise PreconditionError(f"K must be in 0..3 to keep the grid small, got {K}")
    N = 2 ** (K + 3) if N is None else N
    if N <= 2 ** (K + 2):
        raise ResolutionError(f"grid N={N} too coarse: Nyquist must exceed 2^{K + 1}")
    dist = high_mode_distribution(K, d)
    T_star = DiagonalOperator.from_function(d, 2 ** (K + 1), 1.0, lambda *ax: np.ones(ax[0].shape))
    star = exact_risk(T_star, dist)
    excess, violations = [], []
    for nn in [n] if isinstance(n, int) else list(n):
        for r in range(seeds):
            data = dist.sample(nn, N, make_rng(r, nn))
            T_hat = fit_closed_form(data, FitConfig(K=K, C=1.0)).operator
            e = exact_risk(T_hat, dist) - star
            excess.append(e)
            if e < 1 - 1e-9:
                violations.append({"n": nn, "seed": r, "excess": e})
    return CheckReport(
        "high_mode_counterexample", not violations, len(excess), violations, min(excess) - 1.0,
        {"K": K, "N": N, "support": len(dist.atoms), "target_risk": star, "excess": excess},
    )


# ---------------------------------------------------------------- lower bound


def _gamma(m1: int, s: int, B: float) -> float:
    return B / math.sqrt(s + 1) if m1 == 0 else B / (math.sqrt(s + 1) * abs(m1) ** s)


def build_adversarial_distribution(n: int, N: int, K: int, s: int, B: float, xi_seed: int = 0, d: int = 1) -> FiniteSupportDistribution:
    """Random-sign family on the first axis that is hard for any ``N``-grid learner.

    Thirds of the mass go to: cosines at axis modes ``1..2n`` not divisible
    by ``N`` (``w = xi_m v``), the constant input mapped to a sign times the
    mode-``N`` cosine (which the grid cannot tell from a constant), and one
    mode just above the truncation ``K``.
    """
    if n < 1 or K < 0 or N <= 1 or s < 1 or not B > 0:
        raise PreconditionError("need n >= 1, K >= 0, N > 1, integer s >= 1, B > 0")
    if N**s < math.sqrt(2) * B:
        raise PreconditionError(f"need N^s >= sqrt(2) B, got N^s={N**s}, B={B}")
    M = 2 * n
    J = [m for m in range(1, M + 1) if m % N]
    j = 1 if (K + 1) % N else 2
    t = K + j
    rng = make_rng(xi_seed)
    signs = rng.choice(np.array([-1, 1]), size=max(M, N, t) + 1)
    xi = {m: int(signs[m]) for m in sorted(set(J) | {N, t})}

    def axis(q):
        return (q,) + (0,) * (d - 1)

    atoms = []
    for m in J:
        g = _gamma(m, s, B)
        atoms.append(Atom(1.0 / (3 * len(J)), SparseField.psi(axis(m), g), SparseField.psi(axis(m), xi[m] * g), f"J{m}"))
    atoms.append(Atom(1.0 / 3, SparseField.psi(axis(0), _gamma(0, s, B)), SparseField.psi(axis(N), xi[N] * _gamma(N, s, B)), "zero"))
    atoms.append(Atom(1.0 / 3, SparseField.psi(axis(t), _gamma(t, s, B)), SparseField.psi(axis(t), xi[t] * _gamma(t, s, B)), f"high{t}"))
    dist = FiniteSupportDistribution(atoms, {"n": n, "N": N, "K": K, "s": s, "B": B, "M": M, "j": j, "d": d}, xi)
    bad = dist.check_budget(s, B)
    if bad:
        raise PreconditionError(f"Sobolev budget violated: {bad[:3]}")
    return dist


def comparator_operator(dist: FiniteSupportDistribution) -> DiagonalOperator:
    """``lambda = xi_m`` on the signed axis modes, zero at the origin."""
    d = dist.d
    Kt = dist.max_linf()
    lam = np.zeros((2 * Kt + 1,) * d)
    for m1, sign in dist.xi.items():
        for q in (m1, -m1):
            lam[(q + Kt,) + (Kt,) * (d - 1)] = sign
    return DiagonalOperator(d, Kt, 1.0, lam)


def lower_bound_rhs(n: int, N: int, K: int, s: int, B: float) -> float:
    return B**2 / (3 * (s + 1)) * (1 / (8 * n) + 1 / N ** (2 * s) + 2 / (K + 2) ** (2 * s))


def verify_lower_bound(n: int, N: int, K: int, s: int = 1, B: float = 1.0, trials: int = 200, seed: int = 0, d: int = 1, C: float = 1.0) -> CheckReport:
    """Sign-averaged exact excess risk of the grid estimator against the bound.

    Each trial draws fresh signs, samples ``n`` pairs on the ``N``-grid, fits
    with truncation ``K`` and bound ``C``, and computes the exact excess over
    the best operator in the class. The excess over the explicit sign
    comparator, whose risk bounds the infimum from above, must clear the
    bound as well.
    """
    excess, comp, vs_comp = [], [], []
    for t in range(trials):
        dist = build_adversarial_distribution(n, N, K, s, B, xi_seed=make_rng(seed, t, 0).integers(2**62), d=d)
        data = dist.sample(n, N, make_rng(seed, t, 1))
        T_hat = fit_closed_form(data, FitConfig(K=K, C=C)).operator
        inf, _ = class_infimum(dist, C)
        risk = exact_risk(T_hat, dist)
        excess.append(risk - inf)
        comp.append(exact_risk(comparator_operator(dist), dist))
        vs_comp.append(risk - comp[-1])
    mean = float(np.mean(excess))
    mean_comp = float(np.mean(vs_comp))
    se = float(np.std(excess, ddof=1) / math.sqrt(trials)) if trials > 1 else float("inf")
    rhs = lower_bound_rhs(n, N, K, s, B)
    ok = min(mean, mean_comp) >= rhs
    return CheckReport(
        "lower_bound", ok, trials, [] if ok else [{"mean_excess": mean, "vs_comparator": mean_comp, "rhs": rhs}],
        min(mean, mean_comp) - rhs,
        {"n": n, "N": N, "K": K, "s": s, "B": B, "C": C, "mean_excess": mean, "stderr": se, "rhs": rhs,
         "comparator_risk": float(np.mean(comp)), "mean_excess_vs_comparator": mean_comp},
    )
