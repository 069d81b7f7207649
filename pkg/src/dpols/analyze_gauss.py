"""Additive-noise release of the second-moment matrix, with inference.

Instead of sketching, this mechanism releases A^T A plus a symmetric
Gaussian noise matrix whose entrywise scale is calibrated to the row
bound. Inference inverts the noisy feature block directly; the variance
proxy and interval widths carry explicit noise-dependent slack terms.
"""

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from . import linalg
from .distributions import rng_from_seed
from .exceptions import (
    InvalidParameterError,
    NotPositiveDefiniteError,
    PreconditionFailedError,
)
from .ledger import BudgetLedger
from .ols import _check_alpha
from .projection import BoundedDataset, PrivacyBudget
from .reports import IntervalReport


class NegativeResidualWarning(UserWarning):
    """The noisy residual proxy came out negative; it is kept unclamped."""


def gaussian_noise_scale(row_bound: float, budget: PrivacyBudget) -> float:
    """Entrywise noise scale B^2 sqrt(2 ln(1.25/delta)) / epsilon.

    The map A -> A^T A has l2-sensitivity B^2 under a row swap, and this
    is the standard Gaussian-mechanism calibration for that sensitivity.
    """
    b = float(row_bound)
    if not b > 0.0:
        raise InvalidParameterError(f"row_bound must be positive, got {row_bound!r}")
    return b * b * math.sqrt(2.0 * math.log(1.25 / budget.delta)) / budget.epsilon


@dataclass
class GramRelease:
    """Noisy second-moment blocks: feature gram, feature-label products, label energy."""

    noisy_xtx: np.ndarray
    noisy_xty: np.ndarray
    noisy_yty: float
    delta_noise: float
    n_public: int
    p: int
    epsilon: float
    delta: float
    seed: int | None = None

    def __post_init__(self):
        self.noisy_xtx = linalg.as_matrix(self.noisy_xtx, "noisy_xtx")
        if self.noisy_xtx.shape != (self.p, self.p):
            raise InvalidParameterError(
                f"noisy_xtx has shape {self.noisy_xtx.shape}, expected ({self.p}, {self.p})"
            )
        if not np.array_equal(self.noisy_xtx, self.noisy_xtx.T):
            raise InvalidParameterError("noisy_xtx must be exactly symmetric")
        self.noisy_xty = linalg.as_vector(self.noisy_xty, self.p, "noisy_xty")

    def assembled(self) -> np.ndarray:
        """The full (p+1) x (p+1) noisy gram with the label block last."""
        full = np.zeros((self.p + 1, self.p + 1))
        full[: self.p, : self.p] = self.noisy_xtx
        full[: self.p, self.p] = self.noisy_xty
        full[self.p, : self.p] = self.noisy_xty
        full[self.p, self.p] = self.noisy_yty
        return full

    def to_json(self) -> str:
        upper = self.noisy_xtx[np.triu_indices(self.p)]
        doc = {
            "p": self.p,
            "n_public": self.n_public,
            "delta_noise": self.delta_noise,
            "epsilon": self.epsilon,
            "delta": self.delta,
            "noisy_xtx": [float(v) for v in upper],
            "noisy_xty": [float(v) for v in self.noisy_xty],
            "noisy_yty": float(self.noisy_yty),
            "seed": self.seed,
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "GramRelease":
        doc = json.loads(text)
        p = int(doc["p"])
        xtx = np.zeros((p, p))
        xtx[np.triu_indices(p)] = np.asarray(doc["noisy_xtx"], dtype=float)
        xtx = xtx + np.triu(xtx, 1).T
        return cls(
            noisy_xtx=xtx,
            noisy_xty=np.asarray(doc["noisy_xty"], dtype=float),
            noisy_yty=float(doc["noisy_yty"]),
            delta_noise=float(doc["delta_noise"]),
            n_public=int(doc["n_public"]),
            p=p,
            epsilon=float(doc["epsilon"]),
            delta=float(doc["delta"]),
            seed=doc["seed"],
        )


def release_noisy_gram(
    dataset: BoundedDataset,
    budget: PrivacyBudget,
    seed: int | None = None,
    noise_scale: float | None = None,
    ledger: BudgetLedger | None = None,
) -> GramRelease:
    """Release the symmetric-noised second-moment matrix of [X; y].

    ``noise_scale`` overrides the calibrated scale (testing hook; 0 gives
    the exact moments and is of course not private).
    """
    scale = gaussian_noise_scale(dataset.row_bound, budget) if noise_scale is None else float(noise_scale)
    if scale < 0.0:
        raise InvalidParameterError(f"noise_scale must be nonnegative, got {noise_scale!r}")
    full = linalg.gram(dataset.data)
    d = dataset.d
    if scale > 0.0:
        draws = rng_from_seed(seed).standard_normal((d, d)) * scale
        noise = np.triu(draws) + np.triu(draws, 1).T
        full = full + noise
    label = dataset.label_column
    keep = [c for c in range(d) if c != label]
    if ledger is not None:
        ledger.spend("noisy_gram", budget.epsilon, budget.delta)
    return GramRelease(
        noisy_xtx=full[np.ix_(keep, keep)],
        noisy_xty=full[keep, label],
        noisy_yty=float(full[label, label]),
        delta_noise=scale,
        n_public=dataset.n,
        p=d - 1,
        epsilon=budget.epsilon,
        delta=budget.delta,
        seed=seed if isinstance(seed, (int, np.integer)) else None,
    )


class AnalyzeGauss(BaseEstimator):
    """Estimator wrapper around :func:`release_noisy_gram`.

    ``fit(X, y)`` releases the noisy moments of ``[X; y]``;
    ``fit_transform`` returns the assembled (p+1) x (p+1) noisy gram.
    """

    def __init__(
        self,
        epsilon: float = 1.0,
        delta: float = 1e-6,
        row_bound: float = 1.0,
        clip: bool = False,
        noise_scale: float | None = None,
        random_state: int | None = None,
        ledger: BudgetLedger | None = None,
    ):
        self.epsilon = epsilon
        self.delta = delta
        self.row_bound = row_bound
        self.clip = clip
        self.noise_scale = noise_scale
        self.random_state = random_state
        self.ledger = ledger

    def fit(self, X, y=None):
        if y is not None:
            dataset = BoundedDataset.from_features_labels(X, y, self.row_bound, clip=self.clip)
        elif isinstance(X, BoundedDataset):
            dataset = X
        else:
            dataset = BoundedDataset.from_matrix(X, self.row_bound, clip=self.clip)
        self.release_ = release_noisy_gram(
            dataset,
            PrivacyBudget(self.epsilon, self.delta),
            seed=self.random_state,
            noise_scale=self.noise_scale,
            ledger=self.ledger,
        )
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X, y).release_.assembled()


class AnalyzeGaussInference(BaseEstimator):
    """Coefficients, variance proxies, and intervals from a noisy-gram release.

    Attributes after ``fit``:

    coef_ : (p,) solution of the noisy normal equations
    residual_norm2_ : noisy residual proxy, possibly negative (never clamped)
    inverse_ : inverse of the noisy feature gram
    """

    def fit(self, release: GramRelease, y=None):
        sym = linalg.symmetrize(release.noisy_xtx)
        smallest = float(np.linalg.eigvalsh(sym)[0])
        if smallest <= 0.0:
            raise NotPositiveDefiniteError(
                "noisy feature gram is not positive definite", smallest_pivot=smallest
            )
        self.release_ = release
        self.n_, self.p_ = release.n_public, release.p
        self.coef_ = np.linalg.solve(sym, release.noisy_xty)
        self.residual_norm2_ = float(release.noisy_yty - release.noisy_xty @ self.coef_)
        self.negative_residual_ = self.residual_norm2_ < 0.0
        if self.negative_residual_:
            warnings.warn(
                "noisy residual proxy is negative; downstream bounds receive it unclamped",
                NegativeResidualWarning,
                stacklevel=2,
            )
        self.inverse_ = np.linalg.inv(sym)
        self.sigma_min_gram_ = smallest
        return self

    def _check_fitted(self):
        if not hasattr(self, "coef_"):
            raise NotFittedError("call fit before running inference")

    def _check_preconditions(self, nu: float, eta: float) -> None:
        if self.n_ <= self.p_:
            raise PreconditionFailedError(f"need n > p, got n={self.n_}, p={self.p_}")
        spectral_margin = self.sigma_min_gram_ - self.release_.delta_noise * math.sqrt(
            self.p_ * math.log(1.0 / nu)
        ) / eta
        if spectral_margin <= 0.0:
            raise PreconditionFailedError(
                f"spectral margin {spectral_margin:.4g} <= 0: the noisy gram is too close to singular"
            )
        if math.sqrt(self.n_ - self.p_) <= 2.0 * math.sqrt(math.log(16.0 / nu)):
            raise PreconditionFailedError(
                f"n - p = {self.n_ - self.p_} too small for the residual concentration bound"
            )

    def variance_upper_bound(
        self, row_bound: float, nu: float, eta: float = 0.5, constant: float = 4.0
    ) -> float:
        """A value exceeding the model noise variance w.p. >= 1 - nu.

        The noise-dependent slack is added to the residual proxy (the
        conservative direction) before rescaling by the lower chi-square
        tail of the residual's degrees of freedom.
        """
        self._check_fitted()
        nu_f = _check_alpha(nu)
        eta_f = float(eta)
        if not 0.0 < eta_f < 1.0:
            raise InvalidParameterError(f"eta must lie in (0, 1), got {eta!r}")
        self._check_preconditions(nu_f, eta_f)
        noise = self.release_.delta_noise
        b = float(row_bound)
        denom = math.sqrt(self.n_ - self.p_) - 2.0 * math.sqrt(math.log(16.0 / nu_f))
        slack = constant * (
            noise * (b * b * math.sqrt(self.p_) / (1.0 - eta_f)) * math.sqrt(math.log(1.0 / nu_f))
            + noise**2 * float(np.linalg.norm(self.inverse_, "fro")) * math.log(self.p_ / nu_f)
        )
        return (self.residual_norm2_ + slack) / denom**2

    def sigma2_mle(self) -> float:
        """Noise-variance point estimate: (residual + noise^2 ||inv||_F) / (n - p)."""
        self._check_fitted()
        if self.n_ <= self.p_:
            raise PreconditionFailedError(f"need n > p, got n={self.n_}, p={self.p_}")
        correction = self.release_.delta_noise**2 * float(np.linalg.norm(self.inverse_, "fro"))
        return (self.residual_norm2_ + correction) / (self.n_ - self.p_)

    def confidence_interval(
        self,
        j: int,
        row_bound: float,
        nu: float = 0.05,
        eta: float = 0.5,
        constant: float = 4.0,
    ) -> IntervalReport:
        """Interval for the true coefficient, holding w.p. >= 1 - nu.

        Assumes the model and fitted coefficient norms are within the row
        bound; the width combines a bias term from the gram noise with a
        variance term scaled by the ``variance_upper_bound`` proxy.
        """
        self._check_fitted()
        nu_f = _check_alpha(nu)
        if not 0 <= j < self.p_:
            raise InvalidParameterError(f"coordinate {j} out of range for p={self.p_}")
        rho2 = self.variance_upper_bound(row_bound, nu_f, eta=eta, constant=constant)
        rho = math.sqrt(max(rho2, 0.0))
        noise = self.release_.delta_noise
        b = float(row_bound)
        inv_jj = float(self.inverse_[j, j])
        inv2_jj = float(self.inverse_[j] @ self.inverse_[j])
        log_term = math.log(1.0 / nu_f)
        half = (
            constant
            * (
                b * noise * math.sqrt(self.p_ * inv2_jj)
                + rho * math.sqrt(inv_jj + noise * inv2_jj * math.sqrt(self.p_ * log_term))
            )
            * math.sqrt(log_term)
        )
        return IntervalReport(
            coordinate=int(j),
            center=float(self.coef_[j]),
            half_width=half,
            alpha=nu_f,
            path="analyze_gauss",
            degenerate=False,
            extra={"rho2": rho2, "negative_residual": self.negative_residual_},
        )

    def reports(self, row_bound: float, nu: float = 0.05, eta: float = 0.5, constant: float = 4.0):
        self._check_fitted()
        return [
            self.confidence_interval(j, row_bound, nu=nu, eta=eta, constant=constant)
            for j in range(self.p_)
        ]
