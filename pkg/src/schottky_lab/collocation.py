"""Chebyshev collocation on the base intervals.

Nodes are Chebyshev points of the first kind mapped to each ``I_a``; values
off the nodes come from the second (true) barycentric formula.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from schottky_lab.errors import InvalidParameterError
from schottky_lab.schottky import SchottkyData

MIN_NODES = 4


def chebyshev_nodes(M: int) -> NDArray[np.float64]:
    """``cos((2j+1)π / 2M)`` on ``[-1, 1]``, all strictly interior."""
    j = np.arange(M)
    return np.cos((2 * j + 1) * np.pi / (2 * M))


def chebyshev_weights(M: int) -> NDArray[np.float64]:
    """Barycentric weights ``(-1)^j sin((2j+1)π / 2M)`` for first-kind nodes."""
    j = np.arange(M)
    return (-1.0) ** j * np.sin((2 * j + 1) * np.pi / (2 * M))


def to_interval(t: ArrayLike, left: float, right: float) -> NDArray[np.float64]:
    return (left + right) / 2.0 + (right - left) / 2.0 * np.asarray(t, dtype=float)


def barycentric_matrix(
    y: ArrayLike, nodes: NDArray[np.float64], weights: NDArray[np.float64]
) -> NDArray[np.float64]:
    """Rows interpolate node values at the points ``y``.

    A point that coincides with a node gets the corresponding unit row.
    """
    y = np.atleast_1d(np.asarray(y))
    diff = y[:, None] - nodes[None, :]
    hit = diff == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = weights[None, :] / diff
        matrix = terms / np.sum(terms, axis=1, keepdims=True)
    rows = np.any(hit, axis=1)
    if np.any(rows):
        matrix[rows] = hit[rows].astype(matrix.dtype)
    return matrix


@dataclass(frozen=True)
class CollocationGrid:
    """``M`` Chebyshev nodes on every base interval, letters in order.

    A function on the union of the intervals is the vector of its node
    values, block ``a`` holding the values on ``I_a``.
    """

    M: int
    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        if self.M < MIN_NODES:
            raise InvalidParameterError(f"need at least {MIN_NODES} nodes per interval, got {self.M!r}")

    @classmethod
    def for_data(cls, data: SchottkyData, M: int) -> "CollocationGrid":
        return cls(M, tuple(data.interval(a) for a in data.letters))

    @property
    def size(self) -> int:
        return self.M * len(self.intervals)

    @property
    def reference_nodes(self) -> NDArray[np.float64]:
        return chebyshev_nodes(self.M)

    @property
    def weights(self) -> NDArray[np.float64]:
        return chebyshev_weights(self.M)

    def block(self, a: int) -> slice:
        return slice((a - 1) * self.M, a * self.M)

    def nodes(self, a: int) -> NDArray[np.float64]:
        return to_interval(self.reference_nodes, *self.intervals[a - 1])

    def all_nodes(self) -> NDArray[np.float64]:
        return np.concatenate([self.nodes(a) for a in range(1, len(self.intervals) + 1)])

    def interpolation_matrix(self, a: int, y: ArrayLike) -> NDArray[np.float64]:
        """Map node values on ``I_a`` to values at ``y``."""
        return barycentric_matrix(y, self.nodes(a), self.weights)

    def evaluate(self, values: ArrayLike, a: int, y: ArrayLike) -> NDArray[np.generic]:
        """Interpolate block ``a`` of a grid function at ``y``."""
        block = np.asarray(values)[self.block(a)]
        return self.interpolation_matrix(a, y) @ block

    def split(self, values: ArrayLike) -> Sequence[NDArray[np.generic]]:
        vector = np.asarray(values)
        return [vector[self.block(a)] for a in range(1, len(self.intervals) + 1)]
