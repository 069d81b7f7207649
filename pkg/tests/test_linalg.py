import numpy as np
import pytest
from _oracles import (
    gauss_jordan_inverse,
    gaussian_elimination_solve,
    naive_matmul,
    normal_equations_lstsq,
    symmetric_eigenvalues_via_charpoly,
)

from dpols import linalg
from dpols.exceptions import InvalidInputError, SingularMatrixError


class TestMinSingularValue:
    def test_identity(self):
        assert linalg.min_singular_value(np.eye(3)) == pytest.approx(1.0, abs=1e-12)

    def test_diagonal(self):
        assert linalg.min_singular_value(np.diag([3.0, 2.0])) == pytest.approx(2.0, abs=1e-12)

    def test_matches_gram_eigen_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            a = rng.standard_normal((6, 3))
            smallest_eig = symmetric_eigenvalues_via_charpoly(a.T @ a)[0]
            assert linalg.min_singular_value(a) == pytest.approx(np.sqrt(smallest_eig), abs=1e-8)

    def test_rejects_non_finite(self):
        with pytest.raises(InvalidInputError):
            linalg.min_singular_value(np.array([[1.0, np.nan], [0.0, 1.0]]))


class TestLeastSquares:
    def test_identity_design(self):
        beta, residual = linalg.least_squares_solve(np.eye(2), [3.0, 5.0])
        assert np.allclose(beta, [3.0, 5.0])
        assert np.allclose(residual, 0.0)

    def test_exact_single_column(self):
        beta, residual = linalg.least_squares_solve(np.array([[1.0], [2.0]]), [2.0, 4.0])
        assert beta == pytest.approx([2.0])
        assert np.allclose(residual, 0.0, atol=1e-14)

    def test_matches_normal_equations_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            x = rng.standard_normal((50, 5))
            y = rng.standard_normal(50)
            beta, residual = linalg.least_squares_solve(x, y)
            expected = normal_equations_lstsq(x, y)
            assert np.linalg.norm(beta - expected) <= 1e-8 * max(1.0, np.linalg.norm(expected))
            # residual orthogonal to the column span
            assert np.linalg.norm(x.T @ residual) <= 1e-8 * np.linalg.norm(x) * np.linalg.norm(y)

    def test_pythagoras(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((40, 4))
        y = rng.standard_normal(40)
        beta, residual = linalg.least_squares_solve(x, y)
        lhs = y @ y
        rhs = np.sum((x @ beta) ** 2) + residual @ residual
        assert lhs == pytest.approx(rhs, rel=1e-8)

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidInputError):
            linalg.least_squares_solve(np.eye(3), [1.0, 2.0])


class TestRidgeSolve:
    def test_zero_penalty_full_rank_equals_lstsq(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((30, 4))
        y = rng.standard_normal(30)
        beta, _ = linalg.least_squares_solve(x, y)
        assert np.allclose(linalg.ridge_solve(x, y, 0.0), beta, atol=1e-10)

    def test_identity_shrinkage(self):
        beta = linalg.ridge_solve(np.eye(2), [2.0, 2.0], 1.0)
        assert np.allclose(beta, [1.0, 1.0])

    @pytest.mark.parametrize("w2", [0.5, 4.0, 100.0])
    def test_appended_system_identity(self, w2):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((25, 3))
        y = rng.standard_normal(25)
        stacked = np.vstack([x, np.sqrt(w2) * np.eye(3)])
        padded = np.concatenate([y, np.zeros(3)])
        expected, _ = linalg.least_squares_solve(stacked, padded)
        assert np.allclose(linalg.ridge_solve(x, y, w2), expected, atol=1e-8)

    def test_rank_deficient_with_penalty(self):
        x = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
        beta = linalg.ridge_solve(x, [1.0, 2.0, 3.0], 0.5)
        assert np.all(np.isfinite(beta))

    def test_rank_deficient_zero_penalty_warns(self):
        x = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
        with pytest.warns(linalg.RankDeficientWarning):
            beta = linalg.ridge_solve(x, [1.0, 2.0, 3.0], 0.0)
        # pseudo-inverse solution: minimum norm
        expected, _ = linalg.least_squares_solve(x, [1.0, 2.0, 3.0])
        assert np.allclose(beta, expected)


class TestGram:
    def test_identity(self):
        assert np.array_equal(linalg.gram(np.eye(3)), np.eye(3))

    def test_single_column(self):
        assert np.array_equal(linalg.gram(np.array([[1.0], [2.0]])), [[5.0]])

    def test_matches_naive_multiply(self):
        rng = np.random.default_rng(5)
        a = rng.standard_normal((4, 3))
        expected = naive_matmul(a.T, a)
        got = linalg.gram(a)
        assert np.allclose(got, expected, atol=1e-12)
        assert np.array_equal(got, got.T)


class TestInverseEntries:
    def test_diagonal(self):
        assert linalg.inverse_diag_entry(np.diag([2.0, 4.0]), 0) == pytest.approx(0.5)
        assert linalg.inverse_diag_entry(np.diag([2.0, 4.0]), 1) == pytest.approx(0.25)

    def test_identity(self):
        for j in range(3):
            assert linalg.inverse_diag_entry(np.eye(3), j) == pytest.approx(1.0)

    def test_matches_gauss_jordan_oracle(self):
        rng = np.random.default_rng(6)
        for _ in range(10):
            q = rng.standard_normal((5, 5))
            spd = q @ q.T + 5.0 * np.eye(5)
            inverse = gauss_jordan_inverse(spd)
            for j in range(5):
                assert linalg.inverse_diag_entry(spd, j) == pytest.approx(inverse[j, j], abs=1e-9)
                assert np.allclose(linalg.inverse_row(spd, j), inverse[j], atol=1e-9)
        assert np.allclose(linalg.inverse_diag(spd), np.diag(inverse), atol=1e-9)

    def test_singular_reports_pivot(self):
        with pytest.raises(SingularMatrixError) as err:
            linalg.inverse_diag_entry(np.diag([1.0, 0.0]), 0)
        assert err.value.smallest_pivot is not None
        assert err.value.smallest_pivot <= 0.0


class TestSvdFactors:
    def test_reconstruction_and_orthonormality(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            rows = int(rng.integers(3, 200))
            cols = int(rng.integers(2, min(rows, 20) + 1))
            a = rng.standard_normal((rows, cols))
            u, s, vt = linalg.svd_factors(a)
            assert np.all(np.diff(s) <= 1e-12)
            rebuilt = (u * s) @ vt
            assert np.linalg.norm(rebuilt - a) <= 1e-8 * np.linalg.norm(a)
            assert np.allclose(u.T @ u, np.eye(cols), atol=1e-8)
            assert np.allclose(vt @ vt.T, np.eye(cols), atol=1e-8)


class TestSolveOracleAgreement:
    def test_gaussian_elimination_oracle_self_check(self):
        rng = np.random.default_rng(8)
        a = rng.standard_normal((6, 6)) + 6.0 * np.eye(6)
        b = rng.standard_normal(6)
        assert np.allclose(gaussian_elimination_solve(a, b), np.linalg.solve(a, b), atol=1e-10)


def test_pseudoinverse_frobenius2():
    rng = np.random.default_rng(9)
    x = rng.standard_normal((30, 4))
    expected = np.trace(gauss_jordan_inverse(x.T @ x))
    assert linalg.pseudoinverse_frobenius2(x) == pytest.approx(expected, rel=1e-10)
