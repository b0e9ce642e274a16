import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from fourlin.errors import DegenerateTargetError, InvalidFieldError, ResolutionError
from fourlin.estimator import (
    FitConfig,
    ModeStatistics,
    dft_objective,
    empirical_excess_risk,
    excess_terms,
    fit,
    fit_closed_form,
    fit_projected_sgd,
    predict,
    relative_mse,
)
from fourlin.operators import Dataset, DiagonalOperator, apply, generate_dataset, restrict_to_grid, synthesize_random_operator
from fourlin.random_fields import GrfConfig, sample_grf
from fourlin.spectral import GridField, GridSpec, SpectrumField, dft_forward, dft_inverse


def cos_field(spec, k=1, amp=1.0):
    return GridField.from_function(spec, lambda *x: amp * np.cos(2 * np.pi * k * x[0]))


def smooth_data(d=1, N=16, n=20, K_star=None, seed=0, noise=False, bound=2.0):
    spec = GridSpec(d, N)
    K_star = (N - 1) // 2 if K_star is None else K_star
    T = synthesize_random_operator(d, K_star, bound, seed)
    return T, generate_dataset(T, GrfConfig(spec, seed=seed), noise, n, seed + 1)


class TestClosedForm:
    def test_exact_recovery(self):
        T, data = smooth_data(d=2, N=16, K_star=5, n=10)
        res = fit_closed_form(data, FitConfig(K=5, C=2.0))
        assert np.max(np.abs(res.operator.lambdas - T.lambdas)) < 1e-8
        assert res.modes_clipped == 0 and res.modes_degenerate == 0

    def test_clip_example(self):
        spec = GridSpec(1, 8)
        data = Dataset.from_pairs([(cos_field(spec), cos_field(spec, amp=2.0))])
        res = fit_closed_form(data, FitConfig(K=1, C=1.0))
        assert res.operator.lam((1,)) == pytest.approx(1.0, abs=1e-12)
        assert res.operator.lam((-1,)) == pytest.approx(1.0, abs=1e-12)
        assert res.modes_clipped == 2

    def test_degenerate_mode(self):
        spec = GridSpec(1, 8)
        data = Dataset.from_pairs([(cos_field(spec), cos_field(spec, amp=0.5))])
        res = fit_closed_form(data, FitConfig(K=3, C=2.0))
        assert res.operator.lam((2,)) == 0 and res.operator.lam((0,)) == 0
        assert res.modes_degenerate == 5
        assert res.operator.lam((1,)) == pytest.approx(0.5)

    def test_errors(self):
        _, data = smooth_data(N=8, n=2)
        with pytest.raises(ResolutionError):
            fit_closed_form(data, FitConfig(K=4))
        with pytest.raises(ValueError):
            FitConfig(K=-1)
        with pytest.raises(ValueError):
            FitConfig(K=1, C=0.0)
        with pytest.raises(InvalidFieldError):
            Dataset.from_pairs([])

    @given(st.integers(0, 10_000))
    def test_objective_recomputable(self, seed):
        _, data = smooth_data(d=2, N=8, n=5, seed=seed, noise=True, bound=3.0)
        res = fit_closed_form(data, FitConfig(K=3, C=1.0))
        assert abs(res.objective - dft_objective(res.operator, data)) <= 1e-10 * max(1.0, res.objective)
        assert_allclose(res.per_mode_residual.sum(), res.objective, rtol=1e-12)

    @given(st.integers(0, 10_000))
    def test_separable(self, seed):
        _, data = smooth_data(d=2, N=12, n=4, seed=seed, noise=True)
        big = fit_closed_form(data, FitConfig(K=5, C=1.5)).operator
        small = fit_closed_form(data, FitConfig(K=2, C=1.5)).operator
        assert np.array_equal(big.truncated(2).lambdas, small.lambdas)

    @given(st.integers(0, 10_000), st.floats(0.1, 3.0))
    def test_constraint_and_conjugate_symmetry(self, seed, C):
        _, data = smooth_data(d=2, N=8, n=3, seed=seed, noise=True, bound=3.0)
        lam = fit_closed_form(data, FitConfig(K=3, C=C)).operator.lambdas
        assert np.max(np.abs(lam)) <= C + 1e-12
        assert np.max(np.abs(lam - np.conj(np.flip(lam)))) < 1e-10

    @settings(max_examples=20)
    @given(st.integers(0, 10_000))
    def test_projection_optimal(self, seed):
        _, data = smooth_data(d=1, N=8, n=3, seed=seed, noise=True, bound=3.0)
        C = 0.7
        lam = fit_closed_form(data, FitConfig(K=3, C=C)).operator.lambdas
        a = np.fft.fft(data.v, axis=1) / 8
        b = np.fft.fft(data.w, axis=1) / 8
        rng = np.random.default_rng(seed)
        for j, m in enumerate(range(-3, 4)):
            loss = lambda z: np.mean(np.abs(z * a[:, m % 8] - b[:, m % 8]) ** 2)
            probes = C * np.sqrt(rng.uniform(size=21)) * np.exp(2j * np.pi * rng.uniform(size=21))
            best = loss(lam[j])
            assert all(best <= loss(z) + 1e-12 for z in probes)

    def test_streaming_statistics_match(self):
        _, data = smooth_data(d=2, N=8, n=7, noise=True)
        whole = ModeStatistics.from_dataset(data, chunk=100)
        parts = ModeStatistics(data.spec)
        for i in range(data.n):
            parts.update(data.v[i], data.w[i])
        assert_allclose(parts.G, whole.G, atol=1e-13)
        assert parts.n == whole.n == 7


class TestSGD:
    def test_matches_closed_form(self):
        _, data = smooth_data(d=1, N=32, n=60, noise=True, seed=3)
        cf = fit_closed_form(data, FitConfig(K=8, C=2.0))
        sgd = fit_projected_sgd(data, FitConfig(K=8, C=2.0, method="projected_sgd", batch_size=16, epochs=300))
        assert abs(sgd.objective - cf.objective) <= 1e-6 * cf.objective
        assert sgd.diagnostics["max_iterate_modulus"] <= 2.0 + 1e-12
        assert len(sgd.epoch_losses) >= 1

    def test_clipped_case(self):
        _, data = smooth_data(d=2, N=8, n=20, noise=True, seed=5, bound=3.0)
        cfg = FitConfig(K=3, C=0.5, method="projected_sgd", batch_size=8, epochs=400)
        sgd = fit(data, cfg)
        cf = fit_closed_form(data, cfg)
        assert abs(sgd.objective - cf.objective) <= 1e-6 * cf.objective
        assert sgd.diagnostics["max_iterate_modulus"] <= 0.5 + 1e-12
        assert sgd.modes_clipped == cf.modes_clipped

    def test_zero_dataset(self):
        spec = GridSpec(1, 8)
        grf = GrfConfig(spec)
        data = generate_dataset(DiagonalOperator.zeros(1, 3), grf, False, 5, 0)
        res = fit_projected_sgd(data, FitConfig(K=3, method="projected_sgd", epochs=3))
        assert np.all(res.operator.lambdas == 0)

    def test_deterministic(self):
        _, data = smooth_data(n=10, noise=True)
        cfg = FitConfig(K=4, method="projected_sgd", epochs=5, seed=1)
        assert np.array_equal(fit(data, cfg).operator.lambdas, fit(data, cfg).operator.lambdas)


class TestPredict:
    def test_same_resolution(self):
        T = synthesize_random_operator(2, 3, 2.0, 0)
        v = sample_grf(GrfConfig(GridSpec(2, 8)))
        assert np.array_equal(predict(T, v).values, apply(T, v).values)

    def test_double_resolution(self):
        T = synthesize_random_operator(2, 3, 2.0, 1)
        coarse = GridSpec(2, 8)
        c = dft_forward(sample_grf(GrfConfig(coarse, seed=4))).coeffs.copy()
        c[:, 4] = 0
        c[4, :] = 0
        fine = GridSpec(2, 16)
        big = np.zeros(fine.shape, complex)
        for i in range(8):
            for j in range(8):
                mi, mj = (i if i < 4 else i - 8), (j if j < 4 else j - 8)
                big[mi % 16, mj % 16] = c[i, j]
        v_fine = dft_inverse(SpectrumField(fine, big))
        v_coarse = restrict_to_grid(v_fine, 8)
        assert_allclose(restrict_to_grid(predict(T, v_fine), 8).values, predict(T, v_coarse).values, atol=1e-12)

    def test_identity_on_band(self):
        spec = GridSpec(1, 16)
        T = DiagonalOperator(1, 2, 1.0, np.ones(5))
        v = GridField(spec, cos_field(spec, 1).values + cos_field(spec, 5).values)
        assert_allclose(predict(T, v).values, cos_field(spec, 1).values, atol=1e-13)

    def test_too_coarse(self):
        with pytest.raises(ResolutionError):
            predict(DiagonalOperator.zeros(1, 4), GridField.zeros(GridSpec(1, 8)))


class TestMetrics:
    def test_perfect_predictor(self):
        T, data = smooth_data(n=4)
        assert relative_mse(T, data) == pytest.approx(0.0, abs=1e-28)

    def test_zero_predictor_single_pair(self):
        spec = GridSpec(1, 8)
        w = cos_field(spec, amp=3.0)
        data = Dataset.from_pairs([(cos_field(spec), w)])
        # ||3 cos||_L2 = 3/sqrt(2)
        assert relative_mse(DiagonalOperator.zeros(1, 1), data) == pytest.approx(3 / math.sqrt(2), rel=1e-14)
        assert relative_mse(DiagonalOperator.zeros(1, 1), data, squared=True) == pytest.approx(1.0, rel=1e-14)

    def test_two_pair_hand_computation(self):
        spec = GridSpec(1, 4)
        v1, w1 = np.array([1.0, 0, -1, 0]), np.array([2.0, 1, 0, 1])
        v2, w2 = np.array([0.0, 1, 0, -1]), np.array([0.5, 0.5, 0.5, 0.5])
        data = Dataset.from_pairs([(GridField(spec, v1), GridField(spec, w1)), (GridField(spec, v2), GridField(spec, w2))])
        T = DiagonalOperator(1, 1, 1.0, [0.5, 0.0, 0.5])
        p1 = np.array([0.5, 0, -0.5, 0])
        p2 = np.array([0.0, 0.5, 0, -0.5])
        e1 = np.mean((w1 - p1) ** 2) / math.sqrt(np.mean(w1**2))
        e2 = np.mean((w2 - p2) ** 2) / math.sqrt(np.mean(w2**2))
        assert_allclose(apply(T, GridField(spec, v1)).values, p1, atol=1e-15)
        assert abs(relative_mse(T, data) - (e1 + e2) / 2) < 1e-12

    def test_zero_target(self):
        spec = GridSpec(1, 4)
        data = Dataset.from_pairs([(cos_field(spec), cos_field(spec)), (cos_field(spec), GridField.zeros(spec))])
        with pytest.raises(DegenerateTargetError) as info:
            relative_mse(DiagonalOperator.zeros(1, 1), data)
        assert info.value.index == 1

    def test_excess_risk_examples(self):
        T, data = smooth_data(n=6)
        assert empirical_excess_risk(T, T, data) == 0.0
        expect = np.mean([np.mean(w.values**2) for _, w in data.pairs])
        assert empirical_excess_risk(DiagonalOperator.zeros(1, 7), T, data) == pytest.approx(expect, rel=1e-10)

    def test_excess_risk_nonnegative_mc(self):
        T, train = smooth_data(d=1, N=16, n=30, noise=True, seed=11)
        T_hat = fit_closed_form(train, FitConfig(K=7)).operator
        test = generate_dataset(T, GrfConfig(GridSpec(1, 16)), True, 1000, 99)
        terms = excess_terms(T_hat, T, test)
        assert terms.mean() >= -3 * terms.std(ddof=1) / math.sqrt(len(terms))


def test_median_error_decreases_in_n():
    spec = GridSpec(2, 16)
    grf = GrfConfig(spec)
    ns = [10, 50, 100, 500]
    med = []
    table = np.zeros((len(ns), 5))
    for r in range(5):
        T = synthesize_random_operator(2, 7, 2.0, 100 + r)
        train = generate_dataset(T, grf, True, ns[-1], 200 + r)
        test = generate_dataset(T, grf, False, 30, 300 + r)
        for j, n in enumerate(ns):
            sub = Dataset(spec, train.v[:n], train.w[:n])
            table[j, r] = relative_mse(fit_closed_form(sub, FitConfig(K=7)).operator, test)
    med = np.median(table, axis=1)
    assert sum(med[i + 1] > med[i] for i in range(len(ns) - 1)) <= 1
    assert med[-1] < med[0]
