"""Zeros of the zeta determinant by the argument principle.

A rectangle is split until each box holds one cluster of zeros (counted by
the winding number of ``det(I - L_s)`` along its boundary); each cluster is
polished by modified Newton and re-checked at twice the node count.
"""
from __future__ import annotations

import functools
import logging
import math
from concurrent.futures import Executor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from schottky_lab.errors import ConvergenceError, InvalidParameterError
from schottky_lab.schottky import SchottkyData
from schottky_lab.transfer import zeta_det

logger = logging.getLogger(__name__)

MIN_EDGE_SAMPLES = 64
MAX_EDGE_SAMPLES = 4096
VERIFY_TOLERANCE = 1e-8
ZETA_CACHE_SIZE = 8192
_SPLIT_FRACTIONS = (0.5 - 1.0 / (2.0 * math.pi**3), 0.4339, 0.5539, 0.3861, 0.6127)
_JITTER = (0.0, 1.3e-7, -2.9e-7, 6.1e-7, -1.7e-6)


@dataclass(frozen=True)
class Rectangle:
    """Closed box ``[re_min, re_max] × [im_min, im_max]`` in the ``s``-plane."""

    re_min: float
    re_max: float
    im_min: float
    im_max: float

    def __post_init__(self) -> None:
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise InvalidParameterError(f"degenerate rectangle {self!r}")

    @classmethod
    def of(cls, bounds: Sequence[float]) -> "Rectangle":
        if len(bounds) != 4:
            raise InvalidParameterError(f"rectangle needs four bounds, got {list(bounds)!r}")
        return cls(*map(float, bounds))

    @property
    def width(self) -> float:
        return self.re_max - self.re_min

    @property
    def height(self) -> float:
        return self.im_max - self.im_min

    @property
    def center(self) -> complex:
        return complex((self.re_min + self.re_max) / 2.0, (self.im_min + self.im_max) / 2.0)

    def corners(self) -> tuple[complex, complex, complex, complex]:
        """Counter-clockwise from the lower left."""
        return (
            complex(self.re_min, self.im_min),
            complex(self.re_max, self.im_min),
            complex(self.re_max, self.im_max),
            complex(self.re_min, self.im_max),
        )

    def contains(self, s: complex, pad: float = 0.0) -> bool:
        return (
            self.re_min - pad <= s.real <= self.re_max + pad
            and self.im_min - pad <= s.imag <= self.im_max + pad
        )

    def expanded(self, fraction: float) -> "Rectangle":
        dx, dy = fraction * self.width, fraction * self.height
        return Rectangle(self.re_min - dx, self.re_max + dx, self.im_min - dy, self.im_max + dy)

    def split(self, fraction: float) -> tuple["Rectangle", "Rectangle"]:
        """Cut across the longer side at ``fraction`` of its length."""
        if self.width >= self.height:
            cut = self.re_min + fraction * self.width
            return (
                Rectangle(self.re_min, cut, self.im_min, self.im_max),
                Rectangle(cut, self.re_max, self.im_min, self.im_max),
            )
        cut = self.im_min + fraction * self.height
        return (
            Rectangle(self.re_min, self.re_max, self.im_min, cut),
            Rectangle(self.re_min, self.re_max, cut, self.im_max),
        )

    @classmethod
    def around(cls, s: complex, half: float) -> "Rectangle":
        return cls(s.real - half, s.real + half, s.imag - half, s.imag + half)


class ZetaFunction:
    """``s ↦ det(I - L_s)`` at fixed ``M``, memoised on exact ``s``.

    The memo keeps the ``cache_size`` most recently used values.
    """

    def __init__(self, data: SchottkyData, M: int, *, cache_size: int = ZETA_CACHE_SIZE) -> None:
        self.data = data
        self.M = M
        self._cached = functools.lru_cache(maxsize=cache_size)(self._evaluate)

    def _evaluate(self, s: complex) -> complex:
        return zeta_det(self.data, s, self.M)

    def __call__(self, s: complex) -> complex:
        return self._cached(complex(s))

    def derivative(self, s: complex) -> complex:
        step = 1e-6 * (1.0 + abs(s))
        return (self(s + step) - self(s - step)) / (2.0 * step)

    @property
    def evaluations(self) -> int:
        """Determinants computed so far; a value evicted and asked for again counts twice."""
        return self._cached.cache_info().misses

    @property
    def cached(self) -> int:
        return self._cached.cache_info().currsize


class _UnstableWinding(Exception):
    pass


def _boundary(rect: Rectangle, n: int) -> list[complex]:
    t = np.arange(n) / n
    corners = rect.corners()
    points: list[complex] = []
    for k in range(4):
        start, end = corners[k], corners[(k + 1) % 4]
        points.extend(start + t * (end - start))
    return points


def _winding_once(f: Callable[[complex], complex], rect: Rectangle, n: int) -> tuple[int, float]:
    values = np.array([f(s) for s in _boundary(rect, n)])
    if not np.all(np.isfinite(values)) or np.any(values == 0):
        raise _UnstableWinding(f"zeta vanishes or overflows on the boundary of {rect}")
    steps = np.angle(np.roll(values, -1) / values)
    return int(round(float(np.sum(steps)) / (2.0 * math.pi))), float(np.max(np.abs(steps)))


def winding_number(
    f: Callable[[complex], complex],
    rect: Rectangle,
    *,
    min_samples: int = MIN_EDGE_SAMPLES,
    max_samples: int = MAX_EDGE_SAMPLES,
) -> int:
    """Winding number of ``f`` along the boundary of ``rect``.

    Samples per edge double until two consecutive counts agree and no
    argument step exceeds a quarter turn.

    Raises:
        ConvergenceError: If the count is still unstable at ``max_samples``.
    """
    try:
        return _stable_winding(f, rect, min_samples, max_samples)
    except _UnstableWinding as exc:
        raise ConvergenceError(str(exc)) from None


def _stable_winding(
    f: Callable[[complex], complex], rect: Rectangle, min_samples: int, max_samples: int
) -> int:
    n = min_samples
    previous, _ = _winding_once(f, rect, n)
    while 2 * n <= max_samples:
        n *= 2
        current, largest_step = _winding_once(f, rect, n)
        if current == previous and largest_step < math.pi / 2:
            return current
        previous = current
    raise _UnstableWinding(f"winding number along {rect} did not settle at {max_samples} samples per edge")


def _jittered_winding(f: Callable[[complex], complex], rect: Rectangle) -> tuple[Rectangle, int]:
    for jitter in _JITTER:
        box = rect.expanded(jitter) if jitter else rect
        try:
            return box, _stable_winding(f, box, MIN_EDGE_SAMPLES, MAX_EDGE_SAMPLES)
        except _UnstableWinding:
            logger.debug("unstable winding on %s; jittering", box)
    raise ConvergenceError(f"winding number unstable on {rect} after jittering its edges")


def count_zeros(data: SchottkyData, rect: Rectangle, M: int) -> int:
    """Zeros of ``det(I - L_s)`` inside ``rect``, with multiplicity."""
    return _jittered_winding(ZetaFunction(data, M), rect)[1]


@dataclass(frozen=True)
class Zero:
    s: complex
    abs_det: float
    iterations: int
    M: int
    multiplicity: int = 1
    delta_2m: float = math.nan

    @property
    def verified(self) -> bool:
        return self.delta_2m <= VERIFY_TOLERANCE


@dataclass(frozen=True)
class UnresolvedBox:
    rect: Rectangle
    winding: int
    reason: str


@dataclass(frozen=True)
class ZeroList:
    zeros: tuple[Zero, ...]
    rect: Rectangle
    M: int
    unresolved: tuple[UnresolvedBox, ...] = field(default=())

    def __len__(self) -> int:
        return len(self.zeros)

    def __iter__(self) -> Iterator[Zero]:
        return iter(self.zeros)

    @property
    def count(self) -> int:
        """Zeros with multiplicity."""
        return sum(z.multiplicity for z in self.zeros)

    def strip_bound(self, min_abs_imag: float = 0.0) -> float | None:
        """Largest ``Re s`` among zeros with ``|Im s| >= min_abs_imag``."""
        eligible = [z.s.real for z in self.zeros if abs(z.s.imag) >= min_abs_imag]
        return max(eligible) if eligible else None


@dataclass(frozen=True)
class _Outcome:
    zeros: tuple[Zero, ...] = ()
    children: tuple[tuple[Rectangle, int], ...] = ()
    unresolved: tuple[UnresolvedBox, ...] = ()


def _newton(
    f: ZetaFunction,
    start: complex,
    multiplicity: int,
    region: Rectangle,
    tol: float,
    max_iter: int,
) -> tuple[complex, int] | None:
    s = start
    pad = 0.25 * max(region.width, region.height)
    for iteration in range(1, max_iter + 1):
        value = f(s)
        if value == 0:
            return s, iteration
        slope = f.derivative(s)
        if slope == 0 or not np.isfinite(slope):
            return None
        delta = multiplicity * value / slope
        s -= delta
        if not region.contains(s, pad):
            return None
        if abs(delta) <= tol * (1.0 + abs(s)):
            return s, iteration
    # Accept a noise-limited stall close to the tolerance.
    if abs(delta) <= 1e3 * tol * (1.0 + abs(s)):
        return s, max_iter
    return None


def _resolve(
    f: ZetaFunction,
    box: Rectangle,
    n: int,
    *,
    newton_tol: float,
    max_newton: int,
    min_box: float,
) -> _Outcome:
    refined = _newton(f, box.center, n, box, newton_tol, max_newton)
    if refined is not None and box.contains(refined[0]):
        s, iterations = refined
        confirmed = n == 1
        if not confirmed:
            half = min(1e-5 * (1.0 + abs(s)), 0.25 * min(box.width, box.height))
            try:
                confirmed = _stable_winding(f, Rectangle.around(s, half), MIN_EDGE_SAMPLES, MAX_EDGE_SAMPLES) == n
            except _UnstableWinding:
                confirmed = False
        if confirmed:
            logger.debug("zero %s (multiplicity %d) in %d Newton steps", s, n, iterations)
            return _Outcome(zeros=(Zero(s, abs(f(s)), iterations, f.M, n),))

    if max(box.width, box.height) < min_box:
        return _Outcome(unresolved=(UnresolvedBox(box, n, "Newton did not converge in a minimal box"),))

    for fraction in _SPLIT_FRACTIONS:
        first, second = box.split(fraction)
        try:
            counts = (
                _stable_winding(f, first, MIN_EDGE_SAMPLES, MAX_EDGE_SAMPLES),
                _stable_winding(f, second, MIN_EDGE_SAMPLES, MAX_EDGE_SAMPLES),
            )
        except _UnstableWinding:
            continue
        if sum(counts) == n:
            return _Outcome(
                children=tuple((child, k) for child, k in zip((first, second), counts) if k > 0)
            )
    return _Outcome(unresolved=(UnresolvedBox(box, n, "winding unstable at every split"),))


def _verify(data: SchottkyData, zero: Zero, newton_tol: float, max_newton: int) -> Zero:
    doubled = ZetaFunction(data, 2 * zero.M)
    region = Rectangle.around(zero.s, 1e-3 * (1.0 + abs(zero.s)))
    refined = _newton(doubled, zero.s, zero.multiplicity, region, newton_tol, max_newton)
    delta = abs(refined[0] - zero.s) if refined is not None else math.inf
    if delta > VERIFY_TOLERANCE:
        logger.warning("zero %s moved by %.2e at M=%d", zero.s, delta, 2 * zero.M)
    return Zero(zero.s, zero.abs_det, zero.iterations, zero.M, zero.multiplicity, delta)


def find_zeros(
    data: SchottkyData,
    rect: Rectangle,
    M: int,
    *,
    newton_tol: float = 1e-12,
    max_newton: int = 50,
    min_box: float = 1e-6,
    verify: bool = True,
    executor: Executor | None = None,
) -> ZeroList:
    """Zeros of ``det(I - L_s)`` in ``rect``.

    Boxes of one subdivision level are independent and run on ``executor``
    when given. Boxes that cannot be resolved are kept in ``unresolved``
    rather than raising.

    Raises:
        ConvergenceError: If even the jittered outer boundary gives no
            stable winding number.
    """
    f = ZetaFunction(data, M)
    outer, total = _jittered_winding(f, rect)
    logger.info("%d zeros (with multiplicity) in %s at M=%d", total, outer, M)

    def mapper(fn: Callable[[tuple[Rectangle, int]], _Outcome], items: Iterable[tuple[Rectangle, int]]) -> Iterable[_Outcome]:
        return executor.map(fn, items) if executor is not None else map(fn, items)

    def work(item: tuple[Rectangle, int]) -> _Outcome:
        return _resolve(f, item[0], item[1], newton_tol=newton_tol, max_newton=max_newton, min_box=min_box)

    zeros: list[Zero] = []
    unresolved: list[UnresolvedBox] = []
    wave = [(outer, total)] if total > 0 else []
    while wave:
        next_wave: list[tuple[Rectangle, int]] = []
        for outcome in mapper(work, wave):
            zeros.extend(outcome.zeros)
            unresolved.extend(outcome.unresolved)
            next_wave.extend(outcome.children)
        wave = next_wave

    if verify:
        zeros = list(
            executor.map(lambda z: _verify(data, z, newton_tol, max_newton), zeros)
            if executor is not None
            else (_verify(data, z, newton_tol, max_newton) for z in zeros)
        )
    for box in unresolved:
        logger.warning("unresolved box %s (winding %d): %s", box.rect, box.winding, box.reason)
    zeros.sort(key=lambda z: (round(z.s.imag, 9), round(z.s.real, 9)))
    return ZeroList(tuple(zeros), outer, M, tuple(unresolved))


@dataclass(frozen=True)
class ZetaGrid:
    re: NDArray[np.float64]
    im: NDArray[np.float64]
    log_abs: NDArray[np.float64]
    M: int


def zeta_grid(
    data: SchottkyData,
    re_values: ArrayLike,
    im_values: ArrayLike,
    M: int,
    *,
    executor: Executor | None = None,
) -> ZetaGrid:
    """``log|det(I - L_s)|`` on the product grid; rows follow ``im_values``."""
    re = np.asarray(re_values, dtype=float)
    im = np.asarray(im_values, dtype=float)

    def row(y: float) -> NDArray[np.float64]:
        values = np.abs([zeta_det(data, complex(x, y), M) for x in re])
        with np.errstate(divide="ignore"):
            return np.log(values)

    rows = list(executor.map(row, im)) if executor is not None else [row(y) for y in im]
    return ZetaGrid(re, im, np.array(rows).reshape(len(im), len(re)), M)
