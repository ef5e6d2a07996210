"""Collocation discretisation of the (refined) transfer operator and the zeta determinant.

For a finite word set ``Z`` the refined operator acts on functions on the
base intervals by

    (L_{Z,s} f)(z) = sum over a in Z ending in b of γ'_{a'}(z)^s f(γ_{a'}(z)),  z in I_b.

``Z = W_2`` gives the usual transfer operator ``L_s`` and
``det(I - L_s)`` is the Selberg zeta function.
"""
from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.optimize
from numpy.typing import ArrayLike, NDArray

from schottky_lab.collocation import CollocationGrid, barycentric_matrix, chebyshev_nodes, to_interval
from schottky_lab.errors import (
    BracketError,
    BranchTrackingError,
    ConvergenceError,
    InvalidParameterError,
)
from schottky_lab.schottky import SchottkyData
from schottky_lab.spectral import leading_eigenvalue
from schottky_lab.words import Alphabet, Partition, Word, enumerate_partition, word_map

logger = logging.getLogger(__name__)

RESOLUTION_WARNING = 1e-8
_MAX_ARG_STEP = math.pi / 2


def tracked_log(gprime: ArrayLike, base_point_value: float = 1.0) -> NDArray[np.complex128]:
    """``log γ'`` along a path of values, continued from a positive real base value.

    Raises:
        InvalidParameterError: If ``base_point_value`` is not positive.
        BranchTrackingError: If a value vanishes or consecutive values turn by
            more than a quarter turn, where continuation is ambiguous.
    """
    if not base_point_value > 0.0:
        raise InvalidParameterError(f"base point value must be positive, got {base_point_value!r}")
    g = np.atleast_1d(np.asarray(gprime, dtype=complex))
    if np.any(g == 0) or not np.all(np.isfinite(g)):
        raise BranchTrackingError("derivative vanishes or is not finite on the path")
    args = np.angle(np.concatenate([[complex(base_point_value)], g]))
    steps = np.angle(np.exp(1j * np.diff(args)))
    if np.any(np.abs(steps) > _MAX_ARG_STEP):
        raise BranchTrackingError(
            f"argument jumps by {float(np.max(np.abs(steps))):.3f} rad; path too coarse to track the branch"
        )
    return np.log(np.abs(g)) + 1j * np.cumsum(steps)


def complex_power(
    gprime: complex | ArrayLike, s: complex, base_point_value: float = 1.0
) -> complex | NDArray[np.complex128]:
    """``γ'^s = exp(s log γ')`` on the branch that is real and positive on the real line.

    Args:
        gprime: A value, or a path of values starting next to the base point.
        s: The exponent.
        base_point_value: Positive value of ``γ'`` at the real point the path
            starts from; fixes the branch.

    Returns:
        A complex number for scalar input, an array otherwise.
    """
    powers = np.exp(s * tracked_log(gprime, base_point_value))
    if np.ndim(gprime) == 0:
        return complex(powers[0])
    return powers


@dataclass(frozen=True)
class _Contribution:
    target: int
    source: int
    log_weight: NDArray[np.float64]
    log_weight_mid: NDArray[np.float64]
    interpolation: NDArray[np.float64]


@dataclass(frozen=True)
class TransferStencil:
    """The ``s``-independent part of ``L_{Z,s}``.

    For every word: the target letter ``b``, the source letter ``a_1``, the
    barycentric matrix evaluating source node values at ``γ_{a'}`` of the
    target nodes, and ``log γ'_{a'}`` at the target nodes (real, the nodes
    are real). Midpoint data backs the resolution diagnostic.
    """

    grid: CollocationGrid
    words: tuple[Word, ...]
    contributions: tuple[_Contribution, ...]
    midpoint_interpolation: NDArray[np.float64]

    def matrix(self, s: complex) -> NDArray[np.complex128]:
        size = self.grid.size
        entries = np.zeros((size, size), dtype=complex)
        for c in self.contributions:
            rows, cols = self.grid.block(c.target), self.grid.block(c.source)
            entries[rows, cols] += np.exp(s * c.log_weight)[:, None] * c.interpolation
        return entries

    def resolution_residual(self, s: complex) -> float:
        """How well ``M`` nodes resolve the weights ``γ'^s``.

        Interpolates each weight from the nodes to the interleaved midpoints
        and returns the worst error relative to the weight's size.
        """
        worst = 0.0
        for c in self.contributions:
            weight = np.exp(s * c.log_weight)
            exact = np.exp(s * c.log_weight_mid)
            scale = max(float(np.max(np.abs(weight))), 1e-300)
            error = float(np.max(np.abs(self.midpoint_interpolation @ weight - exact)))
            worst = max(worst, error / scale)
        return worst


def _midpoints(M: int) -> NDArray[np.float64]:
    nodes = chebyshev_nodes(M)
    return np.cos((np.arccos(nodes[:-1]) + np.arccos(nodes[1:])) / 2.0)


@functools.lru_cache(maxsize=64)
def _stencil(data: SchottkyData, words: tuple[Word, ...], M: int) -> TransferStencil:
    alphabet = Alphabet.of(data)
    grid = CollocationGrid.for_data(data, M)
    reference = chebyshev_nodes(M)
    mid_reference = _midpoints(M)
    contributions = []
    for w in words:
        word = alphabet.check(w)
        b, source = word[-1], word[0]
        prefix = word_map(data, word[:-1])
        left, right = data.interval(b)
        z = to_interval(reference, left, right)
        z_mid = to_interval(mid_reference, left, right)
        contributions.append(
            _Contribution(
                target=b,
                source=source,
                log_weight=-2.0 * np.log(np.abs(prefix.c * z + prefix.d)),
                log_weight_mid=-2.0 * np.log(np.abs(prefix.c * z_mid + prefix.d)),
                interpolation=grid.interpolation_matrix(source, prefix(z)),
            )
        )
    return TransferStencil(
        grid=grid,
        words=words,
        contributions=tuple(contributions),
        midpoint_interpolation=barycentric_matrix(
            mid_reference, reference, grid.weights
        ),
    )


def transfer_stencil(data: SchottkyData, words: Sequence[Sequence[int]], M: int) -> TransferStencil:
    return _stencil(data, tuple(tuple(w) for w in words), M)


@dataclass(frozen=True)
class TransferMatrix:
    s: complex
    words: tuple[Word, ...]
    grid: CollocationGrid
    entries: NDArray[np.complex128]
    interpolation_residual: float

    def leading_eigenvalue(self, tol: float = 1e-10) -> complex:
        return leading_eigenvalue(self.entries, tol=tol).value


def _assemble(data: SchottkyData, words: tuple[Word, ...], s: complex, M: int) -> TransferMatrix:
    stencil = _stencil(data, words, M)
    residual = stencil.resolution_residual(s)
    if residual > RESOLUTION_WARNING:
        logger.warning(
            "M=%d leaves interpolation residual %.2e at s=%s; increase M", M, residual, s
        )
    return TransferMatrix(complex(s), words, stencil.grid, stencil.matrix(s), residual)


def assemble_transfer(data: SchottkyData, Z: Partition, s: complex, M: int) -> TransferMatrix:
    """Matrix of ``L_{Z,s}`` on the collocation grid.

    The alphabet partition gives the identity; ``W_2`` gives ``L_s``; ``W_N``
    gives ``L_s^{N-1}`` up to discretisation error.

    Raises:
        InvalidPartitionError: If ``Z`` is not a partition for ``data``.
        InvalidParameterError: If ``M`` is below the minimum.
    """
    if Z.r != data.r:
        Z = Partition(Z.words, data.r)
    return _assemble(data, tuple(Z.words), s, M)


def assemble_refined(
    data: SchottkyData, words: Sequence[Sequence[int]], s: complex, M: int
) -> TransferMatrix:
    """Same as ``assemble_transfer`` for any finite set of admissible words (e.g. ``Z̄``)."""
    return _assemble(data, tuple(Alphabet.of(data).check(w) for w in words), s, M)


def _second_level(data: SchottkyData) -> tuple[Word, ...]:
    return tuple(Alphabet.of(data).words_of_length(2))


def zeta_det(data: SchottkyData, s: complex, M: int) -> complex:
    """``det(I - L_s)`` discretised with ``M`` nodes per interval."""
    stencil = _stencil(data, _second_level(data), M)
    return complex(scipy.linalg.det(np.eye(stencil.grid.size) - stencil.matrix(s)))


@dataclass(frozen=True)
class ZetaCertificate:
    s: complex
    M: int
    value: complex
    doubled: complex

    @property
    def delta(self) -> float:
        return abs(self.value - self.doubled)


def zeta_certificate(data: SchottkyData, s: complex, M: int) -> ZetaCertificate:
    """Determinant at ``M`` and ``2M`` nodes; their difference certifies convergence."""
    return ZetaCertificate(complex(s), M, zeta_det(data, s, M), zeta_det(data, s, 2 * M))


def cylinder_zeta(ell: float, s: complex) -> complex:
    """``prod_k (1 - e^{-(s+k)ℓ})^2``: zeta of the cylinder of core length ``ell``.

    Both orientations of the closed geodesic contribute, hence the square.
    """
    product = 1.0 + 0j
    k = 0
    while True:
        term = np.exp(-(s + k) * ell)
        product *= (1.0 - term) ** 2
        if abs(term) < 1e-18 and k > 0:
            return complex(product)
        k += 1


@dataclass(frozen=True)
class BowenEstimate:
    dimension: float
    eigenvalue: float
    residual: float
    M: int


def bowen_dimension(data: SchottkyData, tol: float = 1e-10, M: int = 24) -> BowenEstimate:
    """Root ``δ`` of ``λ(s) = 1`` for the leading eigenvalue of ``L_s``, ``s`` in ``[0, 1)``.

    Raises:
        InvalidParameterError: If ``tol < 1e-10``.
        BracketError: If ``λ(0) < 1`` or ``λ(1) >= 1`` numerically.
        ConvergenceError: If bisection ends with ``|λ - 1| > tol``.
    """
    if tol < 1e-10:
        raise InvalidParameterError(f"tol must be at least 1e-10, got {tol!r}")
    stencil = _stencil(data, _second_level(data), M)

    def eigen(s: float) -> tuple[float, float]:
        estimate = leading_eigenvalue(stencil.matrix(s).real, tol=1e-12)
        return estimate.value.real, estimate.residual

    at_zero, residual = eigen(0.0)
    if abs(at_zero - 1.0) <= tol:
        return BowenEstimate(0.0, at_zero, residual, M)
    if at_zero < 1.0:
        raise BracketError(f"leading eigenvalue at s=0 is {at_zero!r} < 1")
    at_one, _ = eigen(1.0)
    if at_one >= 1.0:
        raise BracketError(f"leading eigenvalue at s=1 is {at_one!r} >= 1")

    root = scipy.optimize.bisect(
        lambda s: eigen(s)[0] - 1.0, 0.0, 1.0, xtol=tol * 1e-2, maxiter=200
    )
    value, residual = eigen(root)
    if abs(value - 1.0) > tol:
        raise ConvergenceError(f"bisection ended at s={root!r} with eigenvalue {value!r}")
    logger.info("Bowen dimension %.12f (M=%d)", root, M)
    return BowenEstimate(float(root), value, residual, M)


@dataclass(frozen=True)
class Eigenfunction:
    """Null vector of ``I - L_{s0}`` in node values (unit Euclidean norm)."""

    s: complex
    grid: CollocationGrid
    values: NDArray[np.complex128] | None
    singular_values: tuple[float, ...]
    multiplicity: int

    @property
    def residual(self) -> float:
        return self.singular_values[-1]

    @property
    def is_null(self) -> bool:
        return self.values is not None

    @property
    def isolated(self) -> bool:
        return self.multiplicity == 1

    def evaluate(self, a: int, x: ArrayLike) -> NDArray[np.complex128]:
        if self.values is None:
            raise InvalidParameterError(f"s={self.s} is not a zero; there is no eigenfunction")
        return self.grid.evaluate(self.values, a, x)


def eigenfunction_at_zero(
    data: SchottkyData, s0: complex, M: int, *, null_tol: float = 1e-6
) -> Eigenfunction:
    """Right singular vector of the smallest singular value of ``I - L_{s0}``.

    When that singular value exceeds ``null_tol`` there is no null vector and
    ``values`` is ``None``. Singular values within ``null_tol`` of zero are
    counted as the multiplicity; more than one is logged.
    """
    stencil = _stencil(data, _second_level(data), M)
    system = np.eye(stencil.grid.size) - stencil.matrix(s0)
    _, sigma, vh = scipy.linalg.svd(system)
    small = int(np.sum(sigma <= null_tol))
    tail = tuple(float(x) for x in sigma[-3:])
    if sigma[-1] > null_tol:
        logger.info("s=%s is not a zero: smallest singular value %.3e", s0, sigma[-1])
        return Eigenfunction(complex(s0), stencil.grid, None, tail, 0)
    if small > 1:
        logger.warning("null space at s=%s has dimension %d; returning one vector", s0, small)
    return Eigenfunction(complex(s0), stencil.grid, vh[-1].conj(), tail, small)


def refined_invariance_residual(data: SchottkyData, eigen: Eigenfunction, tau: float) -> float:
    """``‖L_{Z̄(τ), s0} u - u‖ / ‖u‖`` for the eigenfunction ``u`` at a zero ``s0``."""
    if eigen.values is None:
        raise InvalidParameterError("eigenfunction has no values; s0 is not a zero")
    partition = enumerate_partition(data, tau)
    refined = assemble_refined(data, partition.bar(), eigen.s, eigen.grid.M)
    u = eigen.values
    return float(np.linalg.norm(refined.entries @ u - u) / np.linalg.norm(u))
