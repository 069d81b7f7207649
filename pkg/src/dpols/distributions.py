"""Scalar distribution kernels: Student-T, standard normal, chi-square, Laplace.

Every CDF here is a lower-tail CDF. Rejection rules elsewhere in the
package are phrased as upper-tail masses, so explicit upper-tail helpers
are provided instead of letting callers juggle ``1 - cdf`` by hand.

The Student-T CDF is evaluated through the regularized incomplete beta
function (continued fraction, tolerance ~1e-15); quantiles invert the CDF
with safeguarded bisection plus a Newton polish.
"""

import math

import numpy as np

from .exceptions import InvalidParameterError

_CF_MAX_ITER = 500
_CF_EPS = 1e-15
_CF_FPMIN = 1e-300
_NEWTON_STEPS = 4


def _check_dof(k) -> float:
    kf = float(k)
    if not kf >= 1.0 or not math.isfinite(kf):
        raise InvalidParameterError(f"degrees of freedom must be >= 1, got {k!r}")
    return kf


def _check_tail_mass(q, name: str = "q") -> float:
    qf = float(q)
    if not 0.0 < qf < 1.0:
        raise InvalidParameterError(f"{name} must lie in the open interval (0, 1), got {q!r}")
    return qf


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    # Lentz's algorithm for the continued fraction in the regularized
    # incomplete beta; standard even/odd coefficient recurrence.
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_FPMIN:
        d = _CF_FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_FPMIN:
            d = _CF_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _CF_FPMIN:
            c = _CF_FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_FPMIN:
            d = _CF_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _CF_FPMIN:
            c = _CF_FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    return h


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b), the regularized incomplete beta function."""
    if a <= 0.0 or b <= 0.0:
        raise InvalidParameterError("incomplete beta requires a > 0 and b > 0")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b


def student_t_pdf(x, k) -> float:
    """Density of the Student-T distribution with k degrees of freedom."""
    kf = _check_dof(k)
    xf = float(x)
    ln_norm = math.lgamma((kf + 1.0) / 2.0) - math.lgamma(kf / 2.0) - 0.5 * math.log(kf * math.pi)
    return math.exp(ln_norm - ((kf + 1.0) / 2.0) * math.log1p(xf * xf / kf))


def student_t_cdf(x, k) -> float:
    """Lower-tail CDF of the Student-T distribution with k degrees of freedom."""
    kf = _check_dof(k)
    xf = float(x)
    if xf == 0.0:
        return 0.5
    if math.isinf(xf):
        return 1.0 if xf > 0 else 0.0
    tail = 0.5 * regularized_incomplete_beta(kf / 2.0, 0.5, kf / (kf + xf * xf))
    return 1.0 - tail if xf > 0 else tail


def normal_pdf(x, scale: float = 1.0) -> float:
    """Density of a centered normal with the given standard deviation."""
    if scale <= 0.0:
        raise InvalidParameterError(f"scale must be positive, got {scale!r}")
    z = float(x) / scale
    return math.exp(-0.5 * z * z) / (scale * math.sqrt(2.0 * math.pi))


def normal_cdf(x) -> float:
    """Lower-tail CDF of the standard normal distribution."""
    return 0.5 * (1.0 + math.erf(float(x) / math.sqrt(2.0)))


def _invert_symmetric_cdf(cdf, pdf, q: float) -> float:
    # Solves cdf(x) = q for a symmetric, zero-median distribution:
    # bracket by doubling, bisect, then Newton polish.
    if q == 0.5:
        return 0.0
    if q < 0.5:
        return -_invert_symmetric_cdf(cdf, pdf, 1.0 - q)
    lo, hi = 0.0, 1.0
    while cdf(hi) < q:
        lo = hi
        hi *= 2.0
        if hi > 1e300:
            raise InvalidParameterError(f"quantile bracket escaped for q={q!r}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if cdf(mid) < q:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * max(1.0, mid):
            break
    x = 0.5 * (lo + hi)
    for _ in range(_NEWTON_STEPS):
        density = pdf(x)
        if density <= 0.0:
            break
        step = (cdf(x) - q) / density
        x_next = x - step
        if not lo <= x_next <= hi:
            break
        x = x_next
        if abs(step) <= 1e-15 * max(1.0, abs(x)):
            break
    return x


def student_t_quantile(q, k) -> float:
    """Inverse of ``student_t_cdf`` in its first argument."""
    kf = _check_dof(k)
    qf = _check_tail_mass(q)
    return _invert_symmetric_cdf(lambda x: student_t_cdf(x, kf), lambda x: student_t_pdf(x, kf), qf)


def normal_quantile(q) -> float:
    """Inverse of the standard normal lower-tail CDF."""
    qf = _check_tail_mass(q)
    return _invert_symmetric_cdf(normal_cdf, normal_pdf, qf)


def upper_tail_quantile(alpha) -> float:
    """The point with upper-tail mass alpha under the standard normal.

    Rejection thresholds in this package are defined through upper-tail
    masses; this helper removes the 1 - alpha bookkeeping at call sites.
    """
    alpha_f = _check_tail_mass(alpha, "alpha")
    return normal_quantile(1.0 - alpha_f)


def student_t_upper_quantile(mass, k) -> float:
    """The point with upper-tail mass ``mass`` under the Student-T with k dof."""
    mass_f = _check_tail_mass(mass, "mass")
    return student_t_quantile(1.0 - mass_f, k)


def chi2_tail_interval(k, nu) -> tuple[float, float]:
    """Interval containing a chi-square_k draw with probability >= 1 - nu.

    Returns ``((sqrt(k) - s)_+^2, (sqrt(k) + s)^2)`` with
    ``s = sqrt(2 ln(2/nu))``; the lower endpoint clamps at zero.
    """
    kf = _check_dof(k)
    nu_f = _check_tail_mass(nu, "nu")
    spread = math.sqrt(2.0 * math.log(2.0 / nu_f))
    root_k = math.sqrt(kf)
    lo = max(root_k - spread, 0.0) ** 2
    hi = (root_k + spread) ** 2
    return lo, hi


def student_t_tail_bound(k, nu, constant: float = 2.0) -> float:
    """Upper-tail point bound C*sqrt(k((1/nu)^(2/k) - 1)) for the T_k tail."""
    kf = _check_dof(k)
    nu_f = _check_tail_mass(nu, "nu")
    return constant * math.sqrt(kf * ((1.0 / nu_f) ** (2.0 / kf) - 1.0))


def rng_from_seed(seed) -> np.random.Generator:
    """Build a seeded generator; passes through an existing Generator unchanged."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def spawn_rngs(seed, n: int) -> list[np.random.Generator]:
    """n independent generators derived from one seed, one per parallel trial."""
    if n < 1:
        raise InvalidParameterError(f"need n >= 1 streams, got {n!r}")
    seq = np.random.SeedSequence(seed)
    return [np.random.default_rng(child) for child in seq.spawn(n)]


def trial_rng(seed, trial_index: int) -> np.random.Generator:
    """The generator for one (seed, trial) cell, independent across trials."""
    # offsets keep the entropy words nonnegative (SeedSequence requirement)
    # while staying injective for any sane seed / index
    words = [int(seed) + 2**62, int(trial_index) + 2**62]
    return np.random.default_rng(np.random.SeedSequence(words))


def sample_laplace(scale, rng: np.random.Generator, size=None):
    """Centered Laplace draws with variance 2*scale^2, by inverse-CDF sampling."""
    scale_f = float(scale)
    if not scale_f > 0.0:
        raise InvalidParameterError(f"Laplace scale must be positive, got {scale!r}")
    u = rng.random(size) - 0.5
    # 1 - 2|u| lies in (0, 1]; the floor guards the u = -0.5 edge case.
    inner = np.maximum(1.0 - 2.0 * np.abs(u), np.finfo(float).tiny)
    draws = -scale_f * np.sign(u) * np.log(inner)
    return float(draws) if size is None else draws


def sample_gaussian_matrix(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """rows x cols matrix of i.i.d. standard normal entries."""
    if rows < 1 or cols < 1:
        raise InvalidParameterError(f"matrix dimensions must be positive, got {rows}x{cols}")
    return rng.standard_normal((int(rows), int(cols)))
