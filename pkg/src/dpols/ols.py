"""Classical least-squares inference: the non-private baseline.

Under the homoscedastic Gaussian model the pivot
``(coef_j - beta_j) / sqrt((X^T X)^{-1}_{jj} * rss / (n - p))`` follows a
Student-T with n - p degrees of freedom, which is what every interval and
test here is built on.
"""

import math

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from . import linalg
from .distributions import (
    normal_cdf,
    normal_quantile,
    student_t_quantile,
    upper_tail_quantile,
)
from .exceptions import (
    DegenerateFitError,
    InvalidParameterError,
    SingularMatrixError,
    UndefinedPowerError,
    UnderdeterminedSystemError,
)
from .reports import IntervalReport

_DEGENERATE_REL_TOL = 1e-24


def _check_alpha(alpha) -> float:
    a = float(alpha)
    if not 0.0 < a < 1.0:
        raise InvalidParameterError(f"alpha must lie in (0, 1), got {alpha!r}")
    return a


class LeastSquaresInference(BaseEstimator):
    """Ordinary least squares with t-values, intervals, and null tests.

    Attributes after ``fit``:

    coef_ : (p,) least-squares coefficients
    residual_norm2_ : squared norm of the residual vector
    dof_ : n - p
    xtx_inverse_diag_ : diagonal of (X^T X)^{-1}
    degenerate_ : True when the residual is numerically zero
    """

    def fit(self, X, y):
        mat = linalg.as_matrix(X, "X")
        vec = linalg.as_vector(y, mat.shape[0], "y")
        n, p = mat.shape
        if n <= p:
            raise UnderdeterminedSystemError(f"need n > p observations, got n={n}, p={p}")
        s = np.linalg.svd(mat, compute_uv=False)
        if s[-1] <= linalg.rank_threshold(s, mat.shape):
            raise SingularMatrixError("design matrix is rank deficient", smallest_pivot=float(s[-1]))
        beta, residual = linalg.least_squares_solve(mat, vec)
        self.n_, self.p_ = n, p
        self.coef_ = beta
        self.residual_norm2_ = float(residual @ residual)
        self.dof_ = n - p
        self.xtx_ = linalg.gram(mat)
        self.xtx_inverse_diag_ = linalg.inverse_diag(self.xtx_)
        ynorm2 = float(vec @ vec)
        self.degenerate_ = self.residual_norm2_ <= _DEGENERATE_REL_TOL * max(ynorm2, 1e-300)
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
        """Standard error of coefficient j: sqrt((X^T X)^{-1}_{jj} rss / dof)."""
        j = self._check_coordinate(j)
        return math.sqrt(self.xtx_inverse_diag_[j] * self.residual_norm2_ / self.dof_)

    def t_value(self, j: int, null_value: float = 0.0) -> float:
        """The pivot (coef_j - null_value) / scale_j."""
        j = self._check_coordinate(j)
        if self.degenerate_:
            raise DegenerateFitError("zero residual: t-values are undefined")
        return (float(self.coef_[j]) - float(null_value)) / self.scale(j)

    def confidence_interval(self, j: int, alpha: float = 0.05, quantile: str = "student") -> IntervalReport:
        """Two-sided interval for coefficient j at confidence level 1 - alpha."""
        j = self._check_coordinate(j)
        a = _check_alpha(alpha)
        if quantile == "student":
            crit = student_t_quantile(1.0 - a / 2.0, self.dof_)
        elif quantile == "normal":
            crit = normal_quantile(1.0 - a / 2.0)
        else:
            raise InvalidParameterError(f"quantile must be 'student' or 'normal', got {quantile!r}")
        if self.degenerate_:
            return self._degenerate_report(j, a)
        t0 = self.t_value(j, 0.0)
        p0 = 1.0 - normal_cdf(abs(t0))
        return IntervalReport(
            coordinate=j,
            center=float(self.coef_[j]),
            half_width=crit * self.scale(j),
            alpha=a,
            path="ols",
            t_stat=t0,
            p_value=p0,
            rejected=p0 < a,
        )

    def reject_null(self, j: int, alpha: float = 0.05, two_sided: bool = False) -> IntervalReport:
        """Test coefficient j against zero.

        The default p-value is the single upper normal tail at |t0|
        compared against alpha; ``two_sided=True`` doubles the tail.
        """
        j = self._check_coordinate(j)
        a = _check_alpha(alpha)
        if self.degenerate_:
            return self._degenerate_report(j, a)
        t0 = self.t_value(j, 0.0)
        tail = 1.0 - normal_cdf(abs(t0))
        p0 = 2.0 * tail if two_sided else tail
        crit = student_t_quantile(1.0 - a / 2.0, self.dof_)
        return IntervalReport(
            coordinate=j,
            center=float(self.coef_[j]),
            half_width=crit * self.scale(j),
            alpha=a,
            path="ols",
            t_stat=t0,
            p_value=p0,
            rejected=p0 < a,
        )

    def _degenerate_report(self, j: int, alpha: float) -> IntervalReport:
        center = float(self.coef_[j])
        if center == 0.0:
            t0, p0 = 0.0, 0.5
        else:
            t0 = math.copysign(math.inf, center)
            p0 = 0.0
        return IntervalReport(
            coordinate=j,
            center=center,
            half_width=0.0,
            alpha=alpha,
            path="ols",
            t_stat=t0,
            p_value=p0,
            rejected=p0 < alpha,
            degenerate=True,
        )

    def reports(self, alpha: float = 0.05) -> list[IntervalReport]:
        self._check_fitted()
        return [self.reject_null(j, alpha) for j in range(self.p_)]


def min_sample_size_baseline(
    sigma2: float,
    beta_j: float,
    sigma_min_sigma: float,
    alpha: float,
    nu: float,
    p: int,
    c1: float = 25.0,
    c2: float = 8.0,
    dof: int | None = None,
) -> int:
    """Samples sufficient to reject the null for coordinate j, w.p. >= 1 - nu.

    Evaluates ``max(c1 (p + ln(1/nu)), p + c2 (sigma2/beta_j^2)
    (c_a^2 + tau_a^2) / sigma_min_sigma)`` rounded up, where ``c_a`` is the
    two-sided critical value (normal when ``dof`` is None, Student-T at
    ``dof`` otherwise) and ``tau_a`` the upper-alpha normal quantile. The
    default constants are calibrated so that simulated power at the
    returned size clears 90 percent.
    """
    if beta_j == 0.0:
        raise UndefinedPowerError("power against the null is undefined when beta_j = 0")
    if not sigma_min_sigma > 0.0:
        raise InvalidParameterError(f"sigma_min_sigma must be positive, got {sigma_min_sigma!r}")
    a = _check_alpha(alpha)
    nu_f = _check_alpha(nu)
    if dof is None:
        c_alpha = normal_quantile(1.0 - a / 2.0)
    else:
        c_alpha = student_t_quantile(1.0 - a / 2.0, dof)
    tau_alpha = upper_tail_quantile(a)
    first = c1 * (p + math.log(1.0 / nu_f))
    second = p + c2 * (float(sigma2) / beta_j**2) * (c_alpha**2 + tau_alpha**2) / float(sigma_min_sigma)
    return int(math.ceil(max(first, second)))
