"""The extended real line as a circle: a uniform grid, kernel cutoffs and bumps.

A point ``x`` sits at the angle ``θ = 2 arctan x``; the measure
``dP = 2<x>^{-2} dx`` is ``dθ`` and the chord ``|x - x'|_S`` is
``2|sin((θ - θ')/2)|``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Protocol, Sequence, runtime_checkable

import numpy as np
from numpy.typing import ArrayLike, NDArray

from schottky_lab.errors import CutoffError, GridResolutionError, InvalidParameterError
from schottky_lab.schottky import SchottkyData

DEFAULT_GRID_FACTOR = 40.0
MIN_POINTS_PER_H = 20.0


def wrap_angle(theta: ArrayLike) -> NDArray[np.float64]:
    """Representative in ``[-π, π)``."""
    return np.mod(np.asarray(theta, dtype=float) + math.pi, 2.0 * math.pi) - math.pi


def chord(theta: ArrayLike, theta2: ArrayLike) -> NDArray[np.float64]:
    return 2.0 * np.abs(np.sin(0.5 * (np.asarray(theta, dtype=float) - np.asarray(theta2, dtype=float))))


@dataclass(frozen=True)
class CircleGrid:
    """``N`` equispaced angles ``θ_j = -π + (j + 1/2)·2π/N``, each of weight ``2π/N``.

    No grid point falls on ``θ = π`` (the point at infinity), so every point
    has a finite real coordinate.
    """

    N: int

    def __post_init__(self) -> None:
        if self.N < 8:
            raise InvalidParameterError(f"circle grid needs at least 8 points, got {self.N!r}")

    @classmethod
    def for_h(cls, h: float, grid_factor: float = DEFAULT_GRID_FACTOR) -> "CircleGrid":
        """``N = ceil(grid_factor / h)``.

        Raises:
            GridResolutionError: If ``N·h < 20`` so the kernel phase is unresolved.
        """
        if not h > 0.0:
            raise InvalidParameterError(f"h must be positive, got {h!r}")
        grid = cls(math.ceil(grid_factor / h))
        grid.check_resolution(h)
        return grid

    def check_resolution(self, h: float) -> None:
        if self.N * h < MIN_POINTS_PER_H:
            raise GridResolutionError(
                f"N={self.N} gives N*h={self.N * h:.3g} < {MIN_POINTS_PER_H:g}; kernel oscillation unresolved"
            )

    @property
    def weight(self) -> float:
        return 2.0 * math.pi / self.N

    @cached_property
    def theta(self) -> NDArray[np.float64]:
        return -math.pi + (np.arange(self.N) + 0.5) * self.weight

    @cached_property
    def x(self) -> NDArray[np.float64]:
        return np.tan(0.5 * self.theta)

    def doubled(self) -> "CircleGrid":
        return CircleGrid(2 * self.N)

    def integrate(self, values: ArrayLike) -> complex:
        """``∫ f dP`` for samples at the grid points."""
        return complex(np.sum(np.asarray(values)) * self.weight)

    def indices_in(self, intervals: Sequence[tuple[float, float]]) -> NDArray[np.intp]:
        """Grid indices whose real coordinate lies in one of the closed intervals."""
        picked = []
        for left, right in intervals:
            lo = np.searchsorted(self.theta, 2.0 * math.atan(left), side="left")
            hi = np.searchsorted(self.theta, 2.0 * math.atan(right), side="right")
            picked.append(np.arange(lo, hi))
        if not picked:
            return np.empty(0, dtype=np.intp)
        return np.unique(np.concatenate(picked))


def _smooth_step(t: NDArray[np.float64]) -> NDArray[np.float64]:
    """0 for ``t <= 0``, 1 for ``t >= 1``, smooth in between."""
    t = np.clip(t, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        rise = np.where(t > 0.0, np.exp(-1.0 / np.where(t > 0.0, t, 1.0)), 0.0)
        fall = np.where(t < 1.0, np.exp(-1.0 / np.where(t < 1.0, 1.0 - t, 1.0)), 0.0)
    return rise / (rise + fall)


@runtime_checkable
class KernelCutoff(Protocol):
    """Smooth ``χ(θ, θ')`` multiplying an integral kernel."""

    translation_invariant: bool

    def __call__(self, theta: ArrayLike, theta2: ArrayLike) -> NDArray[np.float64]: ...


def check_off_diagonal(chi: KernelCutoff, grid: CircleGrid) -> None:
    """Raise ``CutoffError`` if ``chi`` does not vanish on the diagonal."""
    diagonal = np.asarray(chi(grid.theta, grid.theta))
    if np.any(diagonal != 0.0):
        raise CutoffError(
            f"cutoff is nonzero on the diagonal (max {float(np.max(np.abs(diagonal))):.3g})"
        )


@dataclass(frozen=True)
class ChordCutoff:
    """Function of the chord: 0 up to ``inner``, 1 from ``outer`` on."""

    inner: float
    outer: float
    translation_invariant: bool = True

    def __post_init__(self) -> None:
        if not 0.0 < self.inner < self.outer <= 2.0:
            raise InvalidParameterError(
                f"need 0 < inner < outer <= 2, got inner={self.inner!r}, outer={self.outer!r}"
            )

    def profile(self, distance: ArrayLike) -> NDArray[np.float64]:
        d = np.asarray(distance, dtype=float)
        return _smooth_step((d - self.inner) / (self.outer - self.inner))

    def __call__(self, theta: ArrayLike, theta2: ArrayLike) -> NDArray[np.float64]:
        return self.profile(chord(theta, theta2))


@dataclass(frozen=True)
class PowerWeightedCutoff:
    """``|x - x'|_S^{exponent}·base``; zero wherever ``base`` is."""

    base: ChordCutoff
    exponent: float

    @property
    def translation_invariant(self) -> bool:
        return self.base.translation_invariant

    def profile(self, distance: ArrayLike) -> NDArray[np.float64]:
        d = np.asarray(distance, dtype=float)
        base = self.base.profile(d)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(base > 0.0, base * d**self.exponent, 0.0)

    def __call__(self, theta: ArrayLike, theta2: ArrayLike) -> NDArray[np.float64]:
        return self.profile(chord(theta, theta2))


@dataclass(frozen=True)
class ArcBump:
    """``exp(1 - 1/(1 - t²))`` with ``t`` the angular offset over ``half_width``; peak value 1."""

    center: float
    half_width: float

    def __post_init__(self) -> None:
        if not 0.0 < self.half_width < math.pi:
            raise InvalidParameterError(f"half_width must lie in (0, π), got {self.half_width!r}")

    def __call__(self, theta: ArrayLike) -> NDArray[np.float64]:
        t = wrap_angle(np.asarray(theta, dtype=float) - self.center) / self.half_width
        inside = np.abs(t) < 1.0
        safe = np.where(inside, t, 0.0)
        return np.where(inside, np.exp(1.0 - 1.0 / (1.0 - safe**2)), 0.0)

    def support(self, grid: CircleGrid) -> NDArray[np.intp]:
        return np.flatnonzero(self(grid.theta) > 0.0)


def min_interval_chord(data: SchottkyData) -> float:
    """Smallest chord distance between two distinct base intervals."""
    ends = [tuple(2.0 * math.atan(v) for v in data.interval(a)) for a in data.letters]
    best = math.inf
    for i, first in enumerate(ends):
        for second in ends[i + 1:]:
            for u in first:
                for v in second:
                    best = min(best, float(chord(u, v)))
    return best


def default_chi0(data: SchottkyData) -> ChordCutoff:
    """Equal to 1 on every ``I_a × I_b`` with ``a ≠ b``, 0 within half that gap of the diagonal."""
    outer = min_interval_chord(data)
    return ChordCutoff(outer / 2.0, outer)
