import numpy as np
import pytest

from schottky_lab.collocation import (
    CollocationGrid,
    barycentric_matrix,
    chebyshev_nodes,
    chebyshev_weights,
    to_interval,
)
from schottky_lab.errors import InvalidParameterError


def test_nodes_interior_and_decreasing():
    nodes = chebyshev_nodes(16)
    assert nodes.shape == (16,)
    assert np.all(np.abs(nodes) < 1.0)
    assert np.all(np.diff(nodes) < 0.0)


def test_interpolation_exact_for_polynomials():
    M = 12
    nodes, weights = chebyshev_nodes(M), chebyshev_weights(M)
    coefficients = np.arange(1, M + 1, dtype=float)
    poly = np.polynomial.Polynomial(coefficients[: M - 1])
    y = np.linspace(-1.0, 1.0, 37)
    assert np.max(np.abs(barycentric_matrix(y, nodes, weights) @ poly(nodes) - poly(y))) < 1e-9


def test_interpolation_spectral_for_analytic_function():
    M = 24
    nodes, weights = chebyshev_nodes(M), chebyshev_weights(M)
    y = np.linspace(-1.0, 1.0, 101)
    error = np.max(np.abs(barycentric_matrix(y, nodes, weights) @ np.exp(nodes) - np.exp(y)))
    assert error < 1e-13


def test_node_hits_give_unit_rows():
    nodes, weights = chebyshev_nodes(8), chebyshev_weights(8)
    matrix = barycentric_matrix(nodes[[2, 5]], nodes, weights)
    assert np.array_equal(matrix, np.eye(8)[[2, 5]])


def test_to_interval_maps_endpoints():
    assert to_interval([-1.0, 0.0, 1.0], 2.0, 6.0) == pytest.approx([2.0, 4.0, 6.0])


class TestCollocationGrid:

    @pytest.fixture
    def grid(self, symmetric):
        return CollocationGrid.for_data(symmetric, 16)

    def test_too_few_nodes(self, symmetric):
        with pytest.raises(InvalidParameterError):
            CollocationGrid.for_data(symmetric, 3)

    def test_blocks_cover_vector(self, grid):
        assert grid.size == 64
        assert grid.block(3) == slice(32, 48)
        assert len(grid.split(np.arange(grid.size))) == 4

    def test_nodes_inside_intervals(self, grid, symmetric):
        for a in symmetric.letters:
            left, right = symmetric.interval(a)
            nodes = grid.nodes(a)
            assert np.all((nodes > left) & (nodes < right))
        assert grid.all_nodes().shape == (grid.size,)

    def test_evaluate_block(self, grid, symmetric):
        values = np.cos(grid.all_nodes())
        left, right = symmetric.interval(2)
        y = np.linspace(left, right, 9)
        assert grid.evaluate(values, 2, y) == pytest.approx(np.cos(y), abs=1e-12)
