import json
import math

import numpy as np
import pytest

from dpols import (
    AnalyzeGauss,
    AnalyzeGaussInference,
    BoundedDataset,
    GramRelease,
    LeastSquaresInference,
    PrivacyBudget,
    gaussian_noise_scale,
    release_noisy_gram,
)
from dpols.analyze_gauss import NegativeResidualWarning
from dpols.distributions import rng_from_seed, trial_rng
from dpols.exceptions import NotPositiveDefiniteError, PreconditionFailedError
from dpols.linalg import gram


def make_dataset(n=400, p=3, seed=0, sigma=1.0, beta=None):
    rng = rng_from_seed(seed)
    x = rng.standard_normal((n, p))
    beta = np.ones(p) if beta is None else beta
    y = x @ beta + sigma * rng.standard_normal(n)
    bound = float(np.max(np.sqrt(np.sum(x**2, axis=1) + y**2))) + 1e-9
    return BoundedDataset.from_features_labels(x, y, bound), x, y, bound


class TestNoiseScale:
    def test_frozen_value(self):
        # delta = 1.25 e^{-8} makes the log term exactly 8, so the scale is 4 B^2 / eps
        budget = PrivacyBudget(2.0, 1.25 * math.exp(-8.0))
        assert gaussian_noise_scale(1.5, budget) == pytest.approx(1.5**2 * 4.0 / 2.0, rel=1e-12)

    def test_neighbor_sensitivity_exact(self):
        # swapping one norm-B row against a zero row moves the gram by exactly B^4
        rng = rng_from_seed(1)
        for _ in range(100):
            base = rng.standard_normal((10, 3))
            base /= np.maximum(np.linalg.norm(base, axis=1, keepdims=True), 1.0)
            row = rng.standard_normal(3)
            row *= 1.0 / np.linalg.norm(row)
            with_row = np.vstack([base, row])
            without = np.vstack([base, np.zeros(3)])
            gap2 = np.sum((gram(with_row) - gram(without)) ** 2)
            assert gap2 == pytest.approx(1.0, rel=1e-9)


class TestRelease:
    def test_zero_noise_hook_exact_moments(self):
        ds, x, y, _ = make_dataset()
        release = release_noisy_gram(ds, PrivacyBudget(1.0, 1e-6), seed=0, noise_scale=0.0)
        assert np.allclose(release.noisy_xtx, x.T @ x, atol=1e-10)
        assert np.allclose(release.noisy_xty, x.T @ y, atol=1e-10)
        assert release.noisy_yty == pytest.approx(float(y @ y), rel=1e-12)
        assert release.delta_noise == 0.0

    def test_noise_is_symmetric_to_the_bit(self):
        ds, _, _, _ = make_dataset()
        release = release_noisy_gram(ds, PrivacyBudget(1.0, 1e-6), seed=3)
        noise = release.assembled() - gram(ds.data)
        assert np.array_equal(noise, noise.T)

    def test_entry_variance(self):
        ds, _, _, _ = make_dataset(n=50)
        budget = PrivacyBudget(1.0, 1e-6)
        scale = gaussian_noise_scale(ds.row_bound, budget)
        exact = gram(ds.data)
        upper = np.triu_indices(4)
        samples = []
        for seed in range(10_000):
            noise = release_noisy_gram(ds, budget, seed=seed).assembled() - exact
            samples.append(noise[upper])
        samples = np.concatenate(samples)
        assert np.var(samples) == pytest.approx(scale**2, rel=0.03)

    def test_json_roundtrip(self):
        ds, _, _, _ = make_dataset()
        release = release_noisy_gram(ds, PrivacyBudget(0.5, 1e-5), seed=11)
        doc = json.loads(release.to_json())
        assert set(doc) == {
            "p", "n_public", "delta_noise", "epsilon", "delta",
            "noisy_xtx", "noisy_xty", "noisy_yty", "seed",
        }
        back = GramRelease.from_json(release.to_json())
        assert np.array_equal(back.noisy_xtx, release.noisy_xtx)
        assert np.array_equal(back.noisy_xty, release.noisy_xty)
        assert back.noisy_yty == release.noisy_yty
        assert back.seed == 11

    def test_estimator_wrapper(self):
        _, x, y, bound = make_dataset()
        est = AnalyzeGauss(epsilon=1.0, delta=1e-6, row_bound=bound, random_state=5)
        assembled = est.fit_transform(x, y)
        assert assembled.shape == (4, 4)
        assert np.array_equal(assembled, assembled.T)


class TestFitFromRelease:
    def test_zero_noise_reduces_to_ols(self):
        ds, x, y, _ = make_dataset()
        release = release_noisy_gram(ds, PrivacyBudget(1.0, 1e-6), seed=0, noise_scale=0.0)
        fit = AnalyzeGaussInference().fit(release)
        ols = LeastSquaresInference().fit(x, y)
        assert np.allclose(fit.coef_, ols.coef_, atol=1e-8)
        assert fit.residual_norm2_ == pytest.approx(ols.residual_norm2_, rel=1e-8)

    def test_perturbation_identity(self):
        # (G + N)^{-1} = G^{-1} - G^{-1}(I + N G^{-1})^{-1} N G^{-1}
        rng = rng_from_seed(4)
        for _ in range(20):
            q = rng.standard_normal((4, 4))
            g = q @ q.T + 4.0 * np.eye(4)
            n = rng.standard_normal((4, 4)) * 0.3
            n = 0.5 * (n + n.T)
            direct = np.linalg.inv(g + n)
            g_inv = np.linalg.inv(g)
            expanded = g_inv - g_inv @ np.linalg.inv(np.eye(4) + n @ g_inv) @ n @ g_inv
            assert np.allclose(direct, expanded, atol=1e-8)

    def test_negative_residual_kept_with_warning(self):
        ds, _, _, _ = make_dataset(n=30, sigma=0.01)
        # inflate only the label-energy noise so the residual proxy dips negative
        release = release_noisy_gram(ds, PrivacyBudget(1.0, 1e-6), seed=0, noise_scale=0.0)
        release = GramRelease(
            noisy_xtx=release.noisy_xtx,
            noisy_xty=release.noisy_xty,
            noisy_yty=release.noisy_yty - 10.0 * abs(release.noisy_yty),
            delta_noise=1.0,
            n_public=release.n_public,
            p=release.p,
            epsilon=1.0,
            delta=1e-6,
        )
        with pytest.warns(NegativeResidualWarning):
            fit = AnalyzeGaussInference().fit(release)
        assert fit.residual_norm2_ < 0.0
        assert fit.negative_residual_

    def test_not_positive_definite(self):
        release = GramRelease(
            noisy_xtx=np.diag([1.0, -0.5]),
            noisy_xty=np.zeros(2),
            noisy_yty=1.0,
            delta_noise=1.0,
            n_public=100,
            p=2,
            epsilon=1.0,
            delta=1e-6,
        )
        with pytest.raises(NotPositiveDefiniteError) as err:
            AnalyzeGaussInference().fit(release)
        assert err.value.smallest_pivot == pytest.approx(-0.5)


class TestVarianceBound:
    def test_zero_noise_closed_form(self):
        ds, _, _, bound = make_dataset(n=500)
        release = release_noisy_gram(ds, PrivacyBudget(1.0, 1e-6), seed=0, noise_scale=0.0)
        fit = AnalyzeGaussInference().fit(release)
        nu = 0.05
        denom = math.sqrt(500 - 3) - 2.0 * math.sqrt(math.log(16.0 / nu))
        assert fit.variance_upper_bound(bound, nu) == pytest.approx(
            fit.residual_norm2_ / denom**2, rel=1e-12
        )
        assert math.log(16.0 / nu) == pytest.approx(math.log(320.0))

    def test_monotone_in_noise_scale(self):
        ds, _, _, bound = make_dataset(n=500)
        base = release_noisy_gram(ds, PrivacyBudget(1.0, 1e-6), seed=0, noise_scale=0.0)
        values = []
        for delta_noise in (0.0, 0.5, 2.0, 8.0):
            release = GramRelease(
                noisy_xtx=base.noisy_xtx, noisy_xty=base.noisy_xty, noisy_yty=base.noisy_yty,
                delta_noise=delta_noise, n_public=base.n_public, p=base.p,
                epsilon=1.0, delta=1e-6,
            )
            values.append(AnalyzeGaussInference().fit(release).variance_upper_bound(bound, 0.05))
        assert all(b >= a for a, b in zip(values, values[1:]))

    def test_exceeds_model_variance(self):
        covered = 0
        trials = 300
        for t in range(trials):
            rng = trial_rng(100, t)
            x = rng.standard_normal((5000, 5))
            y = x @ np.array([1.0, 0, 0, 0, 0]) + rng.standard_normal(5000)
            bound = float(np.max(np.sqrt(np.sum(x**2, axis=1) + y**2)))
            ds = BoundedDataset.from_features_labels(x, y, bound)
            release = release_noisy_gram(ds, PrivacyBudget(1.0, 1e-6), seed=rng)
            fit = AnalyzeGaussInference().fit(release)
            covered += fit.variance_upper_bound(bound, 0.05) >= 1.0
        assert covered / trials >= 0.95

    def test_precondition_failure(self):
        ds, _, _, bound = make_dataset(n=30)
        release = release_noisy_gram(ds, PrivacyBudget(1.0, 1e-6), seed=0, noise_scale=0.0)
        release = GramRelease(
            noisy_xtx=release.noisy_xtx, noisy_xty=release.noisy_xty, noisy_yty=release.noisy_yty,
            delta_noise=1e6, n_public=release.n_public, p=release.p, epsilon=1.0, delta=1e-6,
        )
        fit = AnalyzeGaussInference().fit(release)
        with pytest.raises(PreconditionFailedError):
            fit.variance_upper_bound(bound, 0.05)


@pytest.mark.filterwarnings("ignore::dpols.analyze_gauss.NegativeResidualWarning")
class TestSigmaMle:
    def test_zero_noise_is_classical_scale(self):
        ds, x, y, _ = make_dataset(n=500)
        release = release_noisy_gram(ds, PrivacyBudget(1.0, 1e-6), seed=0, noise_scale=0.0)
        fit = AnalyzeGaussInference().fit(release)
        ols = LeastSquaresInference().fit(x, y)
        assert fit.sigma2_mle() == pytest.approx(ols.residual_norm2_ / ols.dof_, rel=1e-10)

    def test_below_variance_bound(self):
        # regime chosen so the spectral precondition holds in every trial
        trials = 200
        for t in range(trials):
            rng = trial_rng(101, t)
            x = rng.standard_normal((4000, 4))
            y = x @ np.array([1.0, 0, 0, 0]) + rng.standard_normal(4000)
            bound = float(np.max(np.sqrt(np.sum(x**2, axis=1) + y**2)))
            ds = BoundedDataset.from_features_labels(x, y, bound)
            release = release_noisy_gram(ds, PrivacyBudget(2.0, 1e-5), seed=rng)
            fit = AnalyzeGaussInference().fit(release)
            assert fit.sigma2_mle() <= fit.variance_upper_bound(bound, 0.05)

    def test_tracks_model_variance(self):
        estimates = []
        for t in range(2000):
            rng = trial_rng(102, t)
            x = rng.standard_normal((1500, 3))
            y = x @ np.array([1.0, -1.0, 0.5]) + rng.standard_normal(1500)
            bound = float(np.max(np.sqrt(np.sum(x**2, axis=1) + y**2)))
            ds = BoundedDataset.from_features_labels(x, y, bound)
            release = release_noisy_gram(ds, PrivacyBudget(2.0, 1e-5), seed=rng)
            estimates.append(AnalyzeGaussInference().fit(release).sigma2_mle())
        assert abs(np.mean(estimates) - 1.0) <= 0.1


class TestConfidenceInterval:
    def test_zero_noise_reduction(self):
        ds, _, _, bound = make_dataset(n=500)
        release = release_noisy_gram(ds, PrivacyBudget(1.0, 1e-6), seed=0, noise_scale=0.0)
        fit = AnalyzeGaussInference().fit(release)
        nu, constant = 0.05, 4.0
        report = fit.confidence_interval(0, bound, nu=nu, constant=constant)
        rho = math.sqrt(fit.variance_upper_bound(bound, nu, constant=constant))
        expected = constant * rho * math.sqrt(float(fit.inverse_[0, 0]) * math.log(1.0 / nu))
        assert report.half_width == pytest.approx(expected, rel=1e-12)

    def test_width_monotone_in_noise_scale(self):
        ds, _, _, bound = make_dataset(n=500)
        base = release_noisy_gram(ds, PrivacyBudget(1.0, 1e-6), seed=0, noise_scale=0.0)
        widths = []
        for delta_noise in (0.0, 0.5, 2.0):
            release = GramRelease(
                noisy_xtx=base.noisy_xtx, noisy_xty=base.noisy_xty, noisy_yty=base.noisy_yty,
                delta_noise=delta_noise, n_public=base.n_public, p=base.p,
                epsilon=1.0, delta=1e-6,
            )
            widths.append(
                AnalyzeGaussInference().fit(release).confidence_interval(0, bound, nu=0.05).half_width
            )
        assert all(b >= a for a, b in zip(widths, widths[1:]))


class TestNoiseTailFacts:
    @pytest.mark.parametrize("nu", [0.1, 0.01])
    def test_matrix_vector_tail(self, nu):
        p, scale = 5, 1.3
        m = rng_from_seed(6).standard_normal((p, p))
        frob = float(np.linalg.norm(m, "fro"))
        threshold = scale * frob * math.sqrt(2.0 * math.log(2.0 * p / nu))
        rng = rng_from_seed(7)
        exceed = 0
        draws = 10_000
        for _ in range(draws):
            v = scale * rng.standard_normal(p)
            exceed += np.linalg.norm(m @ v) > threshold
        assert exceed / draws <= nu

    @pytest.mark.parametrize("p", [5, 20])
    def test_spectral_norm_bound(self, p):
        nu, scale = 0.05, 0.7
        bound = 4.0 * scale * math.sqrt(p) * math.sqrt(math.log(1.0 / nu))
        rng = rng_from_seed(8)
        held = 0
        draws = 500
        for _ in range(draws):
            raw = scale * rng.standard_normal((p, p))
            noise = np.triu(raw) + np.triu(raw, 1).T
            held += np.linalg.norm(noise, 2) <= bound
        assert held / draws >= 1.0 - nu
