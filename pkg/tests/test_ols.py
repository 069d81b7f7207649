import math

import numpy as np
import pytest
from _oracles import normal_equations_lstsq
from scipy import stats

from dpols import LeastSquaresInference, min_sample_size_baseline
from dpols.distributions import chi2_tail_interval, normal_cdf, trial_rng
from dpols.exceptions import (
    DegenerateFitError,
    InvalidParameterError,
    SingularMatrixError,
    UndefinedPowerError,
    UnderdeterminedSystemError,
)
from dpols.linalg import pseudoinverse_frobenius2


def simulate_fit(n, p, beta, sigma, rng, x=None):
    x = rng.standard_normal((n, p)) if x is None else x
    y = x @ beta + sigma * rng.standard_normal(n)
    return x, y, LeastSquaresInference().fit(x, y)


class TestFit:
    def test_noiseless_consistency(self):
        x = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        beta = np.array([1.0, 2.0])
        fit = LeastSquaresInference().fit(x, x @ beta)
        assert np.allclose(fit.coef_, beta, atol=1e-12)
        assert fit.residual_norm2_ <= 1e-20
        assert fit.degenerate_

    def test_matches_normal_equations_oracle(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((50, 5))
        y = rng.standard_normal(50)
        fit = LeastSquaresInference().fit(x, y)
        expected = normal_equations_lstsq(x, y)
        assert np.linalg.norm(fit.coef_ - expected) <= 1e-8 * np.linalg.norm(expected)

    def test_shift_linearity(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((40, 3))
        y = rng.standard_normal(40)
        v = np.array([0.5, -2.0, 1.0])
        base = LeastSquaresInference().fit(x, y)
        shifted = LeastSquaresInference().fit(x, y + x @ v)
        assert np.allclose(shifted.coef_, base.coef_ + v, atol=1e-10)

    def test_underdetermined(self):
        with pytest.raises(UnderdeterminedSystemError):
            LeastSquaresInference().fit(np.eye(3), [1.0, 2.0, 3.0])

    def test_rank_deficient(self):
        x = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
        with pytest.raises(SingularMatrixError):
            LeastSquaresInference().fit(x, [1.0, 2.0, 3.0])

    def test_residual_orthogonality(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            x, y, fit = simulate_fit(60, 4, np.zeros(4), 1.0, rng)
            residual = y - x @ fit.coef_
            assert np.linalg.norm(x.T @ residual) <= 1e-8 * np.linalg.norm(x) * np.linalg.norm(y)


class TestTValue:
    def test_zero_at_estimate(self):
        rng = np.random.default_rng(3)
        _, _, fit = simulate_fit(30, 2, np.array([1.0, -1.0]), 1.0, rng)
        assert fit.t_value(0, float(fit.coef_[0])) == pytest.approx(0.0, abs=1e-12)

    def test_affine_in_null_value(self):
        rng = np.random.default_rng(4)
        _, _, fit = simulate_fit(30, 2, np.array([1.0, -1.0]), 1.0, rng)
        delta = 0.7
        assert fit.t_value(1, delta) == pytest.approx(fit.t_value(1, 0.0) - delta / fit.scale(1), rel=1e-12)

    def test_degenerate_raises(self):
        x = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        fit = LeastSquaresInference().fit(x, x @ np.array([1.0, 2.0]))
        with pytest.raises(DegenerateFitError):
            fit.t_value(0)

    def test_pivot_is_student_t(self):
        # fixed design, resampled noise: the pivot follows T_{n-p}
        n, p, trials = 200, 3, 5000
        beta = np.array([0.5, -1.0, 2.0])
        design = trial_rng(10, 0).standard_normal((n, p))
        values = []
        for t in range(trials):
            rng = trial_rng(11, t)
            y = design @ beta + rng.standard_normal(n)
            fit = LeastSquaresInference().fit(design, y)
            values.append(fit.t_value(1, beta[1]))
        result = stats.kstest(values, stats.t(n - p).cdf)
        assert result.pvalue >= 1e-3


class TestConfidenceInterval:
    def test_width_vanishes_as_alpha_grows(self):
        rng = np.random.default_rng(5)
        _, _, fit = simulate_fit(50, 3, np.ones(3), 1.0, rng)
        wide = fit.confidence_interval(0, 0.05).half_width
        narrow = fit.confidence_interval(0, 0.9999).half_width
        assert narrow < 0.01 * wide

    def test_coverage(self):
        n, p, alpha, trials = 200, 3, 0.05, 2000
        beta = np.array([1.0, 0.0, -0.5])
        covered = 0
        for t in range(trials):
            rng = trial_rng(12, t)
            _, _, fit = simulate_fit(n, p, beta, 1.0, rng)
            covered += fit.confidence_interval(2, alpha).contains(beta[2])
        assert covered / trials >= 0.93

    def test_degenerate_zero_width(self):
        x = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        fit = LeastSquaresInference().fit(x, x @ np.array([1.0, 2.0]))
        report = fit.confidence_interval(0, 0.05)
        assert report.degenerate
        assert report.half_width == 0.0


class TestRejectNull:
    def test_constructed_t_of_two(self):
        # mean-only design chosen so the pivot is exactly 2.0
        x = np.ones((4, 1))
        y = np.array([0.5, 0.5, 0.5, 2.5])
        fit = LeastSquaresInference().fit(x, y)
        report = fit.reject_null(0, 0.05)
        assert report.t_stat == pytest.approx(2.0, abs=1e-12)
        assert report.p_value == pytest.approx(1.0 - normal_cdf(2.0), abs=1e-12)
        assert report.p_value == pytest.approx(0.02275, abs=1e-5)
        assert report.rejected

    def test_zero_statistic_never_rejected(self):
        x = np.ones((4, 1))
        y = np.array([-1.0, 1.0, -1.0, 1.0])
        report = LeastSquaresInference().fit(x, y).reject_null(0, 0.49)
        assert report.t_stat == pytest.approx(0.0, abs=1e-12)
        assert report.p_value == pytest.approx(0.5)
        assert not report.rejected

    def test_false_rejection_rate(self):
        n, p, alpha, trials = 120, 3, 0.05, 2000
        beta = np.array([1.0, 0.0, 2.0])
        rejected = 0
        for t in range(trials):
            rng = trial_rng(13, t)
            _, _, fit = simulate_fit(n, p, beta, 1.0, rng)
            rejected += bool(fit.reject_null(1, alpha).rejected)
        rate = rejected / trials
        # one-tailed p-value at |t| doubles the nominal false-positive rate
        nominal = 2.0 * alpha
        assert rate <= nominal + 3.0 * math.sqrt(nominal * (1 - nominal) / trials)

    def test_consistency_with_normal_interval_at_doubled_alpha(self):
        # rejected at alpha <=> the normal-quantile interval at 2*alpha excludes 0
        rng = np.random.default_rng(6)
        for _ in range(50):
            _, _, fit = simulate_fit(40, 3, np.array([0.2, 0.0, -0.1]), 1.0, rng)
            for alpha in (0.02, 0.05, 0.2):
                for j in range(3):
                    rejected = bool(fit.reject_null(j, alpha).rejected)
                    interval = fit.confidence_interval(j, 2.0 * alpha, quantile="normal")
                    assert rejected == (not interval.contains(0.0))


class TestModelInvariants:
    def test_residual_chi2_containment(self):
        n, p, sigma2, trials = 120, 3, 1.7, 1000
        lo, hi = chi2_tail_interval(n - p, 0.01)
        inside = 0
        for t in range(trials):
            rng = trial_rng(14, t)
            _, _, fit = simulate_fit(n, p, np.ones(p), math.sqrt(sigma2), rng)
            inside += lo <= fit.residual_norm2_ / sigma2 <= hi
        assert inside / trials >= 0.99

    def test_coefficient_error_magnitude(self):
        # ||beta - coef||^2 <= 16 sigma^2 log(p/nu) ||X^+||_F^2 w.p. >= 1 - nu
        n, p, nu, trials = 150, 4, 0.05, 400
        beta = np.array([1.0, -2.0, 0.0, 0.5])
        held = 0
        for t in range(trials):
            rng = trial_rng(15, t)
            x, _, fit = simulate_fit(n, p, beta, 1.0, rng)
            bound = 16.0 * math.log(p / nu) * pseudoinverse_frobenius2(x)
            held += np.sum((fit.coef_ - beta) ** 2) <= bound
        rate = held / trials
        assert rate >= 1.0 - nu - 3.0 * math.sqrt(nu * (1 - nu) / trials)


class TestMinSampleSize:
    def test_frozen_example(self):
        # unit constants, normal critical values: max(5 + ln 20, 5 + 6.547...) -> 12
        n = min_sample_size_baseline(1.0, 1.0, 1.0, 0.05, 0.05, 5, c1=1.0, c2=1.0)
        assert n == 12

    def test_strong_signal_leaves_only_first_term(self):
        n = min_sample_size_baseline(1.0, 1e9, 1.0, 0.05, 0.05, 5, c1=1.0, c2=1.0)
        assert n == math.ceil(5 + math.log(1 / 0.05))

    def test_zero_coefficient_rejected(self):
        with pytest.raises(UndefinedPowerError):
            min_sample_size_baseline(1.0, 0.0, 1.0, 0.05, 0.05, 5)

    def test_power_at_four_times_bound(self):
        p, alpha, nu = 5, 0.05, 0.05
        beta = np.zeros(p)
        beta[0] = 1.0
        required = min_sample_size_baseline(1.0, 1.0, 1.0, alpha, nu, p)
        n = 4 * required
        rejected = 0
        trials = 500
        for t in range(trials):
            rng = trial_rng(16, t)
            _, _, fit = simulate_fit(n, p, beta, 1.0, rng)
            rejected += bool(fit.reject_null(0, alpha).rejected)
        assert rejected / trials >= 0.90

    def test_invalid_alpha(self):
        with pytest.raises(InvalidParameterError):
            min_sample_size_baseline(1.0, 1.0, 1.0, 1.5, 0.05, 5)
