"""Inference from an altered sketch.

When the gate fails, the released sketch is of the data with a w-scaled
identity block appended, so least squares on it approximates the ridge
solution with penalty w^2. Exact T pivots are only available relative to
the non-private least-squares estimate; intervals for the true
coefficient require extra (non-private) inputs and are flagged as
diagnostics, as are the sufficient-condition checkers, which need model
truths that the released data cannot supply.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from . import linalg
from .distributions import student_t_quantile
from .exceptions import (
    DegenerateFitError,
    DiagnosticUnavailableError,
    InfeasibleRegimeError,
    InsufficientRowsError,
    InvalidParameterError,
    UndefinedPowerError,
    WrongPathError,
)
from .ols import _check_alpha
from .projection import PrivacyBudget, ProjectionRelease
from .reports import IntervalReport


class ProjectedRidgeInference(BaseEstimator):
    """Least-squares inference on an altered (regularized) sketch.

    Attributes after ``fit``:

    coef_ : (p,) coefficients fitted on the regularized sketch
    residual_norm2_ : squared norm of the scale-corrected sketch residual
    dof_ : r - p
    gram_inverse_diag_ : diagonal of (M'^T M')^{-1} for the sketched design M'
    w_ : the regularizer scale recorded in the release
    """

    def __init__(self, label_column: int = -1):
        self.label_column = label_column

    def fit(self, release: ProjectionRelease, y=None):
        if not release.altered:
            raise WrongPathError(
                "release is unaltered; fit it with projected.ProjectedLeastSquares instead"
            )
        sketch = release.sketch
        r, d = sketch.shape
        p = d - 1
        if r <= p:
            raise InsufficientRowsError(f"sketch needs r > p rows, got r={r}, p={p}")
        label = self.label_column if self.label_column >= 0 else self.label_column + d
        if not 0 <= label < d:
            raise InvalidParameterError(f"label_column out of range for d={d}")
        design = sketch[:, [c for c in range(d) if c != label]]
        target = sketch[:, label]
        beta, residual = linalg.least_squares_solve(design, target)
        self.r_, self.p_, self.n_ = r, p, release.n_public
        self.w_ = release.w
        self.coef_ = beta
        self.residual_norm2_ = float(residual @ residual) / r
        self.dof_ = r - p
        self.gram_inverse_diag_ = linalg.inverse_diag(linalg.gram(design))
        self.degenerate_ = self.residual_norm2_ <= 1e-24 * max(float(target @ target) / r, 1e-300)
        return self

    def _check_fitted(self):
        if not hasattr(self, "coef_"):
            raise NotFittedError("call fit before running inference")

    def _check_coordinate(self, j: int) -> int:
        self._check_fitted()
        if not 0 <= j < self.p_:
            raise InvalidParameterError(f"coordinate {j} out of range for p={self.p_}")
        return int(j)

    def scale(self, j: int) -> float:
        j = self._check_coordinate(j)
        return math.sqrt(self.residual_norm2_ * (self.r_ / self.dof_) * self.gram_inverse_diag_[j])

    def pivot(self, j: int, target_value: float) -> float:
        """(coef_j - target) / scale_j; an exact T_{r-p} pivot for the
        non-private least-squares coefficient."""
        j = self._check_coordinate(j)
        if self.degenerate_:
            raise DegenerateFitError("zero sketch residual: pivots are undefined")
        return (float(self.coef_[j]) - float(target_value)) / self.scale(j)

    def confidence_interval(self, j: int, alpha: float = 0.05) -> IntervalReport:
        """Interval covering the NON-PRIVATE least-squares estimate.

        The covered target is what least squares on the raw data would
        have produced, not the model coefficient; no t-value or p-value is
        defined on this path.
        """
        j = self._check_coordinate(j)
        a = _check_alpha(alpha)
        if self.degenerate_:
            return IntervalReport(
                coordinate=j,
                center=float(self.coef_[j]),
                half_width=0.0,
                alpha=a,
                path="ridge",
                degenerate=True,
                extra={"target": "ols_estimate"},
            )
        crit = student_t_quantile(1.0 - a / 2.0, self.dof_)
        return IntervalReport(
            coordinate=j,
            center=float(self.coef_[j]),
            half_width=crit * self.scale(j),
            alpha=a,
            path="ridge",
            extra={"target": "ols_estimate"},
        )

    def combined_interval(
        self,
        j: int,
        alpha: float = 0.05,
        ols_residual_norm2: float | None = None,
        ols_inverse_diag_j: float | None = None,
        ols_dof: int | None = None,
    ) -> IntervalReport:
        """Diagnostic interval for the TRUE coefficient.

        Adds the classical interval around the least-squares estimate to
        the sketch interval around it, each at confidence 1 - alpha/2 so
        the union bound gives 1 - alpha. The classical side needs raw-data
        quantities that are not private outputs, hence the diagnostic flag.
        """
        j = self._check_coordinate(j)
        a = _check_alpha(alpha)
        if ols_residual_norm2 is None or ols_inverse_diag_j is None or ols_dof is None:
            raise DiagnosticUnavailableError(
                "combined_interval needs ols_residual_norm2, ols_inverse_diag_j and ols_dof "
                "from a trusted (non-private) fit of the raw data"
            )
        c_data = student_t_quantile(1.0 - a / 4.0, int(ols_dof))
        c_sketch = student_t_quantile(1.0 - a / 4.0, self.dof_)
        data_term = c_data * math.sqrt(float(ols_residual_norm2) / int(ols_dof) * float(ols_inverse_diag_j))
        sketch_term = c_sketch * self.scale(j)
        return IntervalReport(
            coordinate=j,
            center=float(self.coef_[j]),
            half_width=data_term + sketch_term,
            alpha=a,
            path="ridge",
            diagnostic=True,
            degenerate=self.degenerate_,
            extra={"target": "model_coefficient"},
        )

    def reports(self, alpha: float = 0.05) -> list[IntervalReport]:
        self._check_fitted()
        return [self.confidence_interval(j, alpha) for j in range(self.p_)]


@dataclass
class ConditionReport:
    """Outcome of a sufficient-condition check, with per-inequality slack.

    ``margins`` maps inequality names to their slack; the condition is
    satisfied exactly when every margin is nonnegative.
    """

    condition_id: str
    eta: float
    margins: dict = field(default_factory=dict)

    @property
    def satisfied(self) -> bool:
        return all(m >= 0.0 for m in self.margins.values())

    def to_dict(self) -> dict:
        return {
            "condition_id": self.condition_id,
            "eta": self.eta,
            "satisfied": self.satisfied,
            "margins": dict(self.margins),
        }


def _check_eta(eta) -> float:
    e = float(eta)
    if not 0.0 < e < 1.0:
        raise InvalidParameterError(f"eta must lie in (0, 1), got {eta!r}")
    return e


def check_interval_condition(
    n: int,
    r: int,
    p: int,
    eta: float,
    row_bound: float,
    budget: PrivacyBudget,
    sigma_min_scaled_gram: float,
    constant: float = 64.0,
) -> ConditionReport:
    """Sufficient conditions for the sketch interval to cover the true coefficient.

    Checks ``n - p >= (2/eta^2)(r - p)`` and
    ``n^2 >= r^{3/2} * constant * B^2 ln(1/delta) / (eps eta^2 s)`` with
    ``s`` the smallest eigenvalue of the scaled gram (1/n) X^T X. The
    default constant comes from the sufficient-condition derivation and is
    heuristic.
    """
    e = _check_eta(eta)
    if not sigma_min_scaled_gram > 0.0:
        raise InvalidParameterError(
            f"sigma_min_scaled_gram must be positive, got {sigma_min_scaled_gram!r}"
        )
    margin_dof = (n - p) - (2.0 / e**2) * (r - p)
    needed = (
        r**1.5
        * constant
        * float(row_bound) ** 2
        * math.log(1.0 / budget.delta)
        / (budget.epsilon * e**2 * float(sigma_min_scaled_gram))
    )
    margin_sample = float(n) ** 2 - needed
    return ConditionReport(
        condition_id="interval_cond",
        eta=e,
        margins={"dof_ratio": margin_dof, "sample_size_sq": margin_sample},
    )


def check_sign_condition(
    beta,
    sigma2: float,
    pseudo_frob2: float,
    sigma_min_scaled_gram: float,
    r: int,
    n: int,
    p: int,
    alpha: float,
    nu: float,
    eta: float,
    j: int,
    constant: float = 1.0,
) -> ConditionReport:
    """Sufficient conditions for the ridge-path sign to match the true sign.

    Diagnostic only: needs the model coefficients and noise variance,
    which cannot be read off the released data. Three inequalities, each
    with the caller-supplied constant:

    (i)   n >= p + constant * ln(1/nu)
    (ii)  ||beta||^2 >= constant * sigma2 * ||X^+||_F^2 * ln(p/nu)
    (iii) r - p >= constant * c'^2 (1+eta)^2 / beta_j^2
                  * (1 + ||beta||^2 + sigma2 / s)
    """
    beta_vec = linalg.as_vector(beta, name="beta")
    if not 0 <= j < beta_vec.size:
        raise InvalidParameterError(f"coordinate {j} out of range for p={beta_vec.size}")
    if beta_vec[j] == 0.0:
        raise UndefinedPowerError("sign recovery is undefined when beta_j = 0")
    e = _check_eta(eta)
    a = _check_alpha(alpha)
    nu_f = _check_alpha(nu)
    if r <= p:
        raise InsufficientRowsError(f"need r > p, got r={r}, p={p}")
    if not sigma_min_scaled_gram > 0.0:
        raise InvalidParameterError(
            f"sigma_min_scaled_gram must be positive, got {sigma_min_scaled_gram!r}"
        )
    beta_norm2 = float(beta_vec @ beta_vec)
    margin_samples = n - (p + constant * math.log(1.0 / nu_f))
    margin_signal = beta_norm2 - constant * float(sigma2) * float(pseudo_frob2) * math.log(
        beta_vec.size / nu_f
    )
    crit = student_t_quantile(1.0 - a / 2.0, r - p)
    needed_rows = (
        constant
        * (crit**2)
        * (1.0 + e) ** 2
        / float(beta_vec[j]) ** 2
        * (1.0 + beta_norm2 + float(sigma2) / float(sigma_min_scaled_gram))
    )
    margin_rows = (r - p) - needed_rows
    return ConditionReport(
        condition_id="sign_cond",
        eta=e,
        margins={
            "sample_size": margin_samples,
            "signal_strength": margin_signal,
            "sketch_rows": margin_rows,
        },
    )


def select_r_ridge(
    n: int,
    p: int,
    eta: float,
    row_bound: float,
    budget: PrivacyBudget,
    sigma_min_scaled_gram: float,
    beta_norm2: float,
    beta_j: float,
    sigma2: float,
) -> int:
    """Largest sketch size satisfying the ridge-path upper bounds.

    Takes the smaller of ``p + eta^2 (n - p)`` and
    ``(eta^2 eps n^2 s / (B^2 ln(1/delta)))^{2/3}``, then verifies the
    model-dependent lower bound
    ``r - p >= (1 + ||beta||^2)/beta_j^2 + (sigma2/beta_j^2)/s``; raises
    when the bounds cannot be reconciled, naming the violated constraint.
    """
    e = _check_eta(eta)
    if beta_j == 0.0:
        raise UndefinedPowerError("sign recovery is undefined when beta_j = 0")
    if not sigma_min_scaled_gram > 0.0:
        raise InvalidParameterError(
            f"sigma_min_scaled_gram must be positive, got {sigma_min_scaled_gram!r}"
        )
    b = float(row_bound)
    upper_dof = p + int(math.floor(e**2 * (n - p)))
    upper_budget = int(
        math.floor(
            (e**2 * budget.epsilon * float(n) ** 2 * float(sigma_min_scaled_gram) / (b**2 * math.log(1.0 / budget.delta)))
            ** (2.0 / 3.0)
        )
    )
    r = min(upper_dof, upper_budget)
    needed = (1.0 + float(beta_norm2)) / beta_j**2 + (float(sigma2) / beta_j**2) / float(
        sigma_min_scaled_gram
    )
    failed = []
    if r < p + 2:
        failed.append("upper_bounds_below_p+2")
    if r - p < needed:
        failed.append("model_lower_bound")
    if failed:
        raise InfeasibleRegimeError(
            f"no sketch size fits: upper bounds give r={r} but the model needs r-p >= {needed:.2f}",
            failed=failed,
        )
    return r
