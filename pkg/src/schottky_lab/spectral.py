"""Power iteration for leading eigenvalues and largest singular values."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from schottky_lab.errors import ConvergenceError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EigenEstimate:
    value: complex
    vector: NDArray[np.generic]
    residual: float
    iterations: int


@dataclass(frozen=True)
class SingularValueEstimate:
    value: float
    residual: float
    iterations: int
    restarts: tuple[float, ...]

    @property
    def spread(self) -> float:
        """Largest relative disagreement between restarts."""
        top = max(self.restarts)
        if top == 0.0:
            return 0.0
        return (top - min(self.restarts)) / top


def leading_eigenvalue(
    matrix: ArrayLike,
    *,
    tol: float = 1e-12,
    max_iter: int = 10_000,
    seed: int = 0,
) -> EigenEstimate:
    """Dominant eigenpair by power iteration with Rayleigh quotients.

    The start vector is positive plus a small seeded perturbation, which
    suits the Perron-type operators this is used on.

    Raises:
        ConvergenceError: If the relative residual ``|Av - λv| / |λ|`` does
            not reach ``tol`` within ``max_iter`` steps.
    """
    a = np.asarray(matrix)
    rng = np.random.default_rng(seed)
    v = np.ones(a.shape[0]) + 0.1 * rng.standard_normal(a.shape[0])
    v = v.astype(np.result_type(a, v))
    v /= np.linalg.norm(v)
    residual = np.inf
    for iteration in range(1, max_iter + 1):
        w = a @ v
        value = np.vdot(v, w)
        if value == 0:
            raise ConvergenceError("power iteration hit a zero Rayleigh quotient")
        residual = float(np.linalg.norm(w - value * v) / abs(value))
        if residual <= tol:
            if np.isrealobj(a):
                value = value.real
            return EigenEstimate(complex(value), v, residual, iteration)
        v = w / np.linalg.norm(w)
    raise ConvergenceError(
        f"power iteration stalled at residual {residual:.3e} after {max_iter} steps"
    )


def _top_singular_value(
    a: NDArray[np.generic], rng: np.random.Generator, tol: float, max_iter: int
) -> tuple[float, float, int]:
    n = a.shape[1]
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)
    residual = np.inf
    for iteration in range(1, max_iter + 1):
        w = a.conj().T @ (a @ v)
        value = float(np.vdot(v, w).real)
        if value == 0.0:
            return 0.0, 0.0, iteration
        residual = float(np.linalg.norm(w - value * v) / value)
        if residual <= tol:
            return float(np.sqrt(value)), residual, iteration
        v = w / np.linalg.norm(w)
    raise ConvergenceError(
        f"singular value iteration stalled at residual {residual:.3e} after {max_iter} steps"
    )


def largest_singular_value(
    matrix: ArrayLike,
    *,
    tol: float = 1e-7,
    restarts: int = 2,
    seed: int = 0,
    max_iter: int = 20_000,
    agreement: float = 1e-8,
) -> SingularValueEstimate:
    """``‖A‖₂`` by power iteration on ``A^H A`` from independent random starts.

    Each start iterates until ``|A^H A v - σ²v| / σ² <= tol``; the Rayleigh
    quotient ``σ²`` is then accurate to about ``tol²`` relative to the gap.

    Raises:
        ConvergenceError: If an iteration stalls or two restarts disagree by
            more than ``agreement`` (relative).
    """
    a = np.asarray(matrix)
    if a.size == 0:
        return SingularValueEstimate(0.0, 0.0, 0, (0.0,))
    values: list[float] = []
    worst_residual = 0.0
    total_iterations = 0
    for restart in range(restarts):
        rng = np.random.default_rng([seed, restart])
        value, residual, iterations = _top_singular_value(a, rng, tol, max_iter)
        values.append(value)
        worst_residual = max(worst_residual, residual)
        total_iterations += iterations
    estimate = SingularValueEstimate(max(values), worst_residual, total_iterations, tuple(values))
    if estimate.spread > agreement:
        raise ConvergenceError(
            f"restarts disagree: {values} (relative spread {estimate.spread:.3e})"
        )
    logger.debug("singular value %.6g after %d iterations", estimate.value, total_iterations)
    return estimate


def circulant_norm(column: ArrayLike) -> float:
    """Spectral norm of the circulant matrix with first column ``column``."""
    return float(np.max(np.abs(np.fft.fft(np.asarray(column)))))
