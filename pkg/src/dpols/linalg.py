"""Dense linear-algebra primitives on top of LAPACK (via numpy).

Singular values below ``max(rows, cols) * eps * s_max`` are treated as
zero throughout, so rank-deficient inputs degrade to pseudo-inverse
behaviour instead of blowing up.
"""

import math
import warnings
from typing import NamedTuple

import numpy as np

from .exceptions import InvalidInputError, SingularMatrixError


class SvdFactors(NamedTuple):
    u: np.ndarray
    singular_values: np.ndarray
    vt: np.ndarray


class RankDeficientWarning(UserWarning):
    """An unregularized solve fell back to the pseudo-inverse."""


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2 or arr.size == 0:
        raise InvalidInputError(f"{name} must be a nonempty 2-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return arr


def as_vector(v, length: int | None = None, name: str = "vector") -> np.ndarray:
    arr = np.asarray(v, dtype=float).reshape(-1)
    if arr.size == 0:
        raise InvalidInputError(f"{name} must be nonempty")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    if length is not None and arr.size != length:
        raise InvalidInputError(f"{name} has length {arr.size}, expected {length}")
    return arr


def svd_factors(a) -> SvdFactors:
    """Full SVD with singular values sorted nonincreasing."""
    arr = as_matrix(a)
    u, s, vt = np.linalg.svd(arr, full_matrices=False)
    return SvdFactors(u, s, vt)


def rank_threshold(s: np.ndarray, shape: tuple[int, int]) -> float:
    return max(shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)


def min_singular_value(a) -> float:
    """Smallest singular value; equals sqrt(lambda_min(A^T A)) for tall full-rank A."""
    arr = as_matrix(a)
    s = np.linalg.svd(arr, compute_uv=False)
    return float(s[-1])


def least_squares_solve(x, y) -> tuple[np.ndarray, np.ndarray]:
    """Minimum-norm least-squares solution and its residual vector.

    Returns ``(beta, residual)`` with ``beta`` the pseudo-inverse solve and
    ``residual = y - X beta``, which is orthogonal to the columns of X.
    """
    mat = as_matrix(x, "X")
    vec = as_vector(y, mat.shape[0], "y")
    beta, *_ = np.linalg.lstsq(mat, vec, rcond=None)
    residual = vec - mat @ beta
    return beta, residual


def ridge_solve(x, y, w2) -> np.ndarray:
    """Solve (X^T X + w2 I) beta = X^T y.

    Defined for singular X whenever w2 > 0. With w2 = 0 and a
    rank-deficient X this falls back to the pseudo-inverse solution and
    emits a ``RankDeficientWarning``.
    """
    mat = as_matrix(x, "X")
    vec = as_vector(y, mat.shape[0], "y")
    w2f = float(w2)
    if w2f < 0.0:
        raise InvalidInputError(f"ridge weight w2 must be nonnegative, got {w2!r}")
    s = np.linalg.svd(mat, compute_uv=False)
    if w2f == 0.0:
        if mat.shape[0] < mat.shape[1] or s[-1] <= rank_threshold(s, mat.shape):
            warnings.warn(
                "w2 = 0 with rank-deficient design: returning the pseudo-inverse solution",
                RankDeficientWarning,
                stacklevel=2,
            )
        beta, _ = least_squares_solve(mat, vec)
        return beta
    gram_reg = mat.T @ mat + w2f * np.eye(mat.shape[1])
    return np.linalg.solve(gram_reg, mat.T @ vec)


def gram(a) -> np.ndarray:
    """A^T A, exactly symmetric (upper triangle mirrored)."""
    arr = as_matrix(a)
    g = arr.T @ arr
    upper = np.triu(g)
    return upper + np.triu(g, 1).T


def symmetrize(s) -> np.ndarray:
    arr = as_matrix(s, "S")
    if arr.shape[0] != arr.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {arr.shape}")
    return 0.5 * (arr + arr.T)


def min_eigenvalue(s) -> float:
    """Smallest eigenvalue of a symmetric matrix (symmetrized first)."""
    return float(np.linalg.eigvalsh(symmetrize(s))[0])


def _solve_spd_row(s, j: int) -> np.ndarray:
    sym = symmetrize(s)
    p = sym.shape[0]
    if not 0 <= j < p:
        raise InvalidInputError(f"index {j} out of range for a {p}x{p} matrix")
    smallest = float(np.linalg.eigvalsh(sym)[0])
    if smallest <= 0.0 or not math.isfinite(smallest):
        raise SingularMatrixError("matrix is not positive definite", smallest_pivot=smallest)
    unit = np.zeros(p)
    unit[j] = 1.0
    return np.linalg.solve(sym, unit)


def inverse_diag_entry(s, j: int) -> float:
    """(S^{-1})_{j,j} for symmetric positive-definite S, via one linear solve."""
    return float(_solve_spd_row(s, j)[j])


def inverse_row(s, j: int) -> np.ndarray:
    """Row j of S^{-1} for symmetric positive-definite S."""
    return _solve_spd_row(s, j)


def inverse_diag(s) -> np.ndarray:
    """All diagonal entries of S^{-1} for symmetric positive-definite S."""
    sym = symmetrize(s)
    smallest = float(np.linalg.eigvalsh(sym)[0])
    if smallest <= 0.0 or not math.isfinite(smallest):
        raise SingularMatrixError("matrix is not positive definite", smallest_pivot=smallest)
    return np.diag(np.linalg.inv(sym)).copy()


def pseudoinverse_frobenius2(x) -> float:
    """Squared Frobenius norm of the pseudo-inverse, sum of 1/s_i^2 over nonzero s_i."""
    arr = as_matrix(x, "X")
    s = np.linalg.svd(arr, compute_uv=False)
    keep = s > rank_threshold(s, arr.shape)
    return float(np.sum(1.0 / s[keep] ** 2))
