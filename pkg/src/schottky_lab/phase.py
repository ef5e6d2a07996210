"""The phase ``Φ(x, x') = -2 log |x - x'|_S`` and the stationary point of the composed phase.

``Ψ(x', x''; x, ξ) = Φ(x, x') - Φ(x', x'') + (x'' - x)ξ`` has a single
critical point ``x'' = x``, ``x' = x'(x, ξ)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from schottky_lab.errors import DegenerateStationaryPointError, InvalidParameterError


def phase(x: float, x2: float) -> float:
    """``-2 log|x - x'| + 2 log<x> + 2 log<x'>``."""
    if x == x2:
        raise InvalidParameterError("the phase is singular on the diagonal")
    return -2.0 * math.log(abs(x - x2)) + math.log1p(x * x) + math.log1p(x2 * x2)


def composed_phase(x1: float, x2: float, x: float, xi: float) -> float:
    """``Ψ`` at ``x' = x1``, ``x'' = x2``."""
    return phase(x, x1) - phase(x1, x2) + (x2 - x) * xi


def composed_gradient(x1: float, x2: float, x: float, xi: float) -> tuple[float, float]:
    """``(∂_{x'}Ψ, ∂_{x''}Ψ)`` in closed form."""
    d1 = 2.0 * (x2 - x) / ((x - x1) * (x2 - x1))
    d2 = xi - 2.0 * x2 / (1.0 + x2 * x2) + 2.0 / (x2 - x1)
    return d1, d2


def critical_point(x: float, xi: float) -> float:
    """``x'(x, ξ) = x + 2<x>² / (<x>²ξ - 2x)``.

    Raises:
        DegenerateStationaryPointError: If ``<x>²ξ = 2x``.
    """
    bracket2 = 1.0 + x * x
    denominator = bracket2 * xi - 2.0 * x
    if abs(denominator) <= 1e-14 * max(1.0, abs(bracket2 * xi), abs(2.0 * x)):
        raise DegenerateStationaryPointError(
            f"<x>^2 xi = 2x at x={x!r}, xi={xi!r}; the critical point is at infinity"
        )
    return x + 2.0 * bracket2 / denominator


@dataclass(frozen=True)
class StationaryPointCheck:
    x: float
    xi: float
    critical: float
    gradient_residual: float
    hessian_det: float
    expected_det: float

    @property
    def residual(self) -> float:
        return self.gradient_residual

    @property
    def hessian_relative_error(self) -> float:
        return abs(abs(self.hessian_det) - self.expected_det) / self.expected_det

    @property
    def signature(self) -> int:
        """Zero: the Hessian has one positive and one negative eigenvalue."""
        return 0 if self.hessian_det < 0.0 else (2 if self.hessian_det > 0.0 else 1)


def stationary_point_check(x: float, xi: float, *, step: float | None = None) -> StationaryPointCheck:
    """Gradient of ``Ψ`` at the critical point and its Hessian by centred differences.

    ``expected_det`` is ``4(x - x')^{-4}``, compared with ``|det|``; the
    determinant itself is negative.
    """
    x1 = critical_point(x, xi)
    gradient = composed_gradient(x1, x, x, xi)
    separation = abs(x - x1)
    delta = step if step is not None else 1e-4 * separation
    hessian = np.empty((2, 2))
    for j, offset in enumerate(((delta, 0.0), (0.0, delta))):
        plus = composed_gradient(x1 + offset[0], x + offset[1], x, xi)
        minus = composed_gradient(x1 - offset[0], x - offset[1], x, xi)
        hessian[:, j] = (np.array(plus) - np.array(minus)) / (2.0 * delta)
    hessian = 0.5 * (hessian + hessian.T)
    return StationaryPointCheck(
        x=x,
        xi=xi,
        critical=x1,
        gradient_residual=float(max(abs(g) for g in gradient)),
        hessian_det=float(np.linalg.det(hessian)),
        expected_det=4.0 / separation**4,
    )
