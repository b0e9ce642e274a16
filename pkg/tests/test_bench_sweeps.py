import numpy as np
import pytest

from fourlin.bench.curves import CSV_HEADER, ErrorCurve, count_inversions, is_monotone_decreasing, loglog_slope, read_curve_csv
from fourlin.bench.sweeps import (
    ExperimentConfig,
    _Evaluator,
    effective_K,
    sweep_discretization,
    sweep_statistical,
    sweep_truncation,
    target_operator,
)
from fourlin.errors import ResolutionError
from fourlin.estimator import relative_mse
from fourlin.operators import generate_dataset, synthesize_random_operator
from fourlin.random_fields import GrfConfig
from fourlin.spectral import GridSpec

SMALL = ExperimentConfig(d=1, N=32, K=8, n_train=40, n_test=20, seeds=2)


def test_effective_K():
    assert effective_K(3, 8) == 3 and effective_K(4, 8) == 3
    with pytest.raises(ResolutionError):
        effective_K(5, 8)
    with pytest.raises(ValueError):
        effective_K(-1, 8)


def test_evaluator_matches_relative_mse():
    spec = GridSpec(2, 8)
    T = synthesize_random_operator(2, 3, 2.0, 0)
    test = generate_dataset(T, GrfConfig(spec), True, 6, 1)
    ops = [synthesize_random_operator(2, k, 2.0, 5) for k in (1, 3)]
    for squared in (False, True):
        ev = _Evaluator(spec, ops, squared)
        for v, w in test.pairs:
            ev.add(v.values, w.values)
        want = [relative_mse(T_, test, squared=squared) for T_ in ops]
        np.testing.assert_allclose(ev.result(), want, rtol=1e-11)


def test_target_operator_redraw():
    a = target_operator(SMALL, 0, 32)
    assert a.K == 15
    assert not np.array_equal(a.lambdas, target_operator(SMALL, 1, 32).lambdas)
    fixed = ExperimentConfig(redraw_operator=False)
    assert np.array_equal(target_operator(fixed, 0, 8).lambdas, target_operator(fixed, 3, 8).lambdas)


def test_statistical_small():
    c = sweep_statistical(SMALL, [40, 5, 20])
    assert c.params == [5, 20, 40] and len(c.values[0]) == 2
    assert c.mean[-1] < c.mean[0]
    assert c.meta["sweep"] == "statistical"
    assert sweep_statistical(SMALL, [5, 20, 40]).values == c.values


def test_statistical_exact_regime():
    cfg = ExperimentConfig(d=1, N=16, K=7, noise=False, n_test=5, seeds=1)
    assert sweep_statistical(cfg, [30]).at(30) < 1e-20


def test_truncation_exact_monotone_and_K0():
    cfg = ExperimentConfig(d=1, N=32, K=15, n_train=60, n_test=20)
    c = sweep_truncation(cfg, [0, 1, 2, 4, 8, 15, 16])
    assert count_inversions(c.mean) == 0
    assert c.meta["K_effective"][-1] == 15 and c.at(16) == c.at(15)
    # K = 0 keeps only the mean mode; compare with refit + relative_mse
    from fourlin.estimator import FitConfig, fit_closed_form
    from fourlin.random_fields import derive_seed
    from fourlin.operators import Dataset, iter_pairs

    T = target_operator(cfg, 0, 32)
    grf = GrfConfig(GridSpec(1, 32), cfg.gamma, cfg.sigma)
    train = Dataset.from_pairs(list(iter_pairs(T, grf, True, 60, derive_seed(0, 0, 3))))
    test = Dataset.from_pairs(list(iter_pairs(T, grf, False, 20, derive_seed(0, 0, 2))))
    T0 = fit_closed_form(train, FitConfig(K=0)).operator
    assert c.at(0) == pytest.approx(relative_mse(T0, test), rel=1e-10)


def test_truncation_zero_operator_K0_matches_zero_predictor():
    cfg = ExperimentConfig(d=1, N=16, K=7, bound=2.0, n_train=30, n_test=10, noise=False, K_star=0)
    c = sweep_truncation(cfg, [0, 3])
    assert c.at(0) < 1e-20 and c.at(3) < 1e-20


def test_discretization_small():
    cfg = ExperimentConfig(d=1, n_train=40, n_test=10)
    c = sweep_discretization(cfg, [8, 16, 64], 64)
    assert c.meta["K_effective"] == [3, 7, 31]
    assert is_monotone_decreasing(c.mean, allowed_inversions=1)
    with pytest.raises(ResolutionError):
        sweep_discretization(cfg, [12], 64)


def test_band_limited_training_has_no_discretization_error():
    from fourlin.estimator import FitConfig, fit_closed_form
    from fourlin.operators import Dataset, apply, restrict_to_grid
    from fourlin.spectral import SpectrumField, dft_inverse

    fine = GridSpec(1, 64)
    T = synthesize_random_operator(1, 3, 2.0, 0)
    rng = np.random.default_rng(0)
    pairs = []
    for _ in range(6):
        c = np.zeros(64, complex)
        c[1:4] = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        c[0] = rng.standard_normal()
        c[-3:] = np.conj(c[1:4][::-1])
        v = dft_inverse(SpectrumField(fine, c))
        pairs.append((v, apply(T, v)))
    coarse = Dataset.from_pairs([(restrict_to_grid(v, 8), restrict_to_grid(w, 8)) for v, w in pairs])
    T_hat = fit_closed_form(coarse, FitConfig(K=3)).operator
    assert relative_mse(T_hat, Dataset.from_pairs(pairs)) < 1e-24


def test_curve_csv_round_trip(tmp_path):
    c = ErrorCurve("K", [4, 1], [[0.1, 0.3], [1 / 3, 1 / 3]], {"x": 1})
    assert c.params == [1, 4]
    c.to_csv(tmp_path / "c.csv")
    assert (tmp_path / "c.csv").read_text().splitlines()[0] == ",".join(CSV_HEADER)
    rows = read_curve_csv(tmp_path / "c.csv")
    assert rows[0] == ("K", 1, 1 / 3, 0.0, 2)
    assert rows[1][2] == pytest.approx(0.2) and rows[1][3] == pytest.approx(0.1)
    assert all(std >= 0 for _, _, std in c.points)
    with pytest.raises(ValueError):
        ErrorCurve("x", [1], [[1.0]])


def test_trend_helpers():
    xs = np.array([1, 2, 4, 8, 16, 32, 64, 128, 256])
    assert loglog_slope(xs, 3.0 * xs**-2.0) == pytest.approx(-2.0)
    assert loglog_slope([1, 2], [1, 0.5]) == pytest.approx(-1.0)
    assert count_inversions([3, 2, 2.5, 1]) == 1
    assert is_monotone_decreasing([3, 2, 2.5, 1], allowed_inversions=1)
    assert not is_monotone_decreasing([3, 2, 2.5, 1])
    assert is_monotone_decreasing([1.0, 1.0 + 1e-12], rtol=1e-9)
