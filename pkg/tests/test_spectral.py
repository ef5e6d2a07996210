import numpy as np
import pytest
import scipy.linalg

from schottky_lab.errors import ConvergenceError
from schottky_lab.spectral import circulant_norm, largest_singular_value, leading_eigenvalue


def with_singular_values(values, shape, seed=0):
    rng = np.random.default_rng(seed)
    u, _ = np.linalg.qr(rng.standard_normal((shape[0], shape[0])))
    v, _ = np.linalg.qr(rng.standard_normal((shape[1], shape[1])))
    sigma = np.zeros(shape)
    sigma[: len(values), : len(values)] = np.diag(values)
    return u @ sigma @ v.T


class TestLeadingEigenvalue:

    def test_diagonal(self):
        estimate = leading_eigenvalue(np.diag([3.0, 1.0, 0.5]))
        assert estimate.value == pytest.approx(3.0, abs=1e-10)
        assert estimate.residual <= 1e-12

    def test_positive_matrix(self):
        matrix = np.array([[2.0, 1.0], [1.0, 2.0]])
        assert leading_eigenvalue(matrix).value.real == pytest.approx(3.0, abs=1e-10)

    def test_stall_raises(self):
        matrix = np.diag([1.0, 0.999999, 0.5])
        with pytest.raises(ConvergenceError):
            leading_eigenvalue(matrix, max_iter=5)


class TestLargestSingularValue:

    def test_matches_svd(self):
        matrix = with_singular_values([5.0, 3.0, 2.0, 1.0], (30, 20))
        estimate = largest_singular_value(matrix)
        assert estimate.value == pytest.approx(5.0, rel=1e-9)
        assert estimate.spread <= 1e-8
        assert len(estimate.restarts) == 2

    def test_complex_matrix(self):
        rng = np.random.default_rng(3)
        matrix = with_singular_values([2.0, 1.0, 0.5], (12, 12), seed=1) * np.exp(
            1j * rng.uniform(0.0, 0.1)
        )
        assert largest_singular_value(matrix).value == pytest.approx(2.0, rel=1e-9)

    def test_empty_matrix(self):
        assert largest_singular_value(np.zeros((0, 4))).value == 0.0

    def test_seed_reproducible(self):
        matrix = with_singular_values([4.0, 1.0], (10, 10), seed=7)
        first = largest_singular_value(matrix, seed=11)
        second = largest_singular_value(matrix, seed=11)
        assert first == second

    def test_stops_on_residual(self):
        matrix = with_singular_values([3.0, 2.0, 1.0], (16, 16), seed=2)
        estimate = largest_singular_value(matrix, tol=1e-9)
        assert estimate.residual <= 1e-9
        assert estimate.value == pytest.approx(3.0, rel=1e-12)

    def test_stagnant_value_is_not_convergence(self):
        matrix = with_singular_values([2.0, 2.0 * (1.0 - 1e-6), 0.5], (12, 12), seed=4)
        with pytest.raises(ConvergenceError):
            largest_singular_value(matrix, tol=1e-12, max_iter=200)


def test_circulant_norm():
    column = np.array([1.0, 0.5j, -0.25, 0.1])
    expected = np.linalg.norm(scipy.linalg.circulant(column), 2)
    assert circulant_norm(column) == pytest.approx(expected, rel=1e-12)
