"""Möbius maps of the extended plane and the circle metric on the real line.

Real points are parametrised by the circle angle ``theta`` through
``x = tan(theta / 2)``, i.e. the Cayley image ``(i - x) / (i + x) = e^{i theta}``.
The point at infinity is the angle ``pi``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TypeAlias, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from schottky_lab.errors import InvalidParameterError, PoleError


class Infinity:
    """
    Singleton marker for the point at infinity of the extended plane.
    """
    _instance = None

    def __new__(cls) -> "Infinity":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INFINITY"

    def __reduce__(self) -> str:
        return "INFINITY"


INFINITY = Infinity()

ExtendedPoint: TypeAlias = Union[complex, float, Infinity]

DET_TOLERANCE = 1e-12


def is_infinity(z: object) -> bool:
    return z is INFINITY


def bracket(x: ArrayLike) -> NDArray[np.float64]:
    """Japanese bracket <x> = sqrt(1 + x^2)."""
    return np.hypot(1.0, np.asarray(x, dtype=float))


@dataclass(slots=True, frozen=True)
class MobiusMap:
    """A real matrix ``(a, b; c, d)`` with unit determinant.

    The determinant is checked relative to the squared Frobenius norm: long
    words have large entries and ``ad - bc`` then loses digits to
    cancellation, while the entries themselves stay accurate.
    """

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self) -> None:
        scale = max(1.0, self.a**2 + self.b**2 + self.c**2 + self.d**2)
        if abs(self.det - 1.0) > DET_TOLERANCE * scale:
            raise InvalidParameterError(
                f"Möbius map must have unit determinant, got {self.det!r}"
            )

    @classmethod
    def from_entries(cls, a: float, b: float, c: float, d: float) -> "MobiusMap":
        """Build a map from any matrix with positive determinant.

        The entries are scaled to unit determinant and the sign is fixed so
        that the trace is positive (first nonzero of ``a, c`` positive when
        the trace vanishes).

        Raises:
            InvalidParameterError: If ``ad - bc <= 0``.
        """
        det = a * d - b * c
        if not det > 0.0:
            raise InvalidParameterError(
                f"determinant {det!r} is not positive; map does not preserve the upper half-plane"
            )
        k = 1.0 / math.sqrt(det)
        return _signed(a * k, b * k, c * k, d * k)

    @classmethod
    def identity(cls) -> "MobiusMap":
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def scaling(cls, k: float) -> "MobiusMap":
        """``z -> k z``, i.e. ``diag(k^{1/2}, k^{-1/2})``."""
        if not k > 0.0:
            raise InvalidParameterError(f"scaling factor must be positive, got {k!r}")
        root = math.sqrt(k)
        return cls(root, 0.0, 0.0, 1.0 / root)

    @property
    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    @property
    def trace(self) -> float:
        return self.a + self.d

    @property
    def entries(self) -> tuple[float, float, float, float]:
        return (self.a, self.b, self.c, self.d)

    def __matmul__(self, other: "MobiusMap") -> "MobiusMap":
        return _signed(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def inverse(self) -> "MobiusMap":
        return _signed(self.d, -self.b, -self.c, self.a)

    def is_close(self, other: "MobiusMap", tol: float = 1e-12) -> bool:
        """Entrywise comparison up to the global sign of the matrix."""
        mine = np.array(self.entries)
        theirs = np.array(other.entries)
        return bool(
            np.max(np.abs(mine - theirs)) <= tol or np.max(np.abs(mine + theirs)) <= tol
        )

    @property
    def pole(self) -> ExtendedPoint:
        if self.c == 0.0:
            return INFINITY
        return -self.d / self.c

    def __call__(self, z: ArrayLike) -> NDArray[np.generic]:
        """Vectorised action on finite points away from the pole."""
        z = np.asarray(z)
        with np.errstate(divide="ignore", invalid="ignore"):
            return (self.a * z + self.b) / (self.c * z + self.d)

    def derivative(self, z: ArrayLike) -> NDArray[np.generic]:
        """Vectorised ``(cz + d)^{-2}``."""
        z = np.asarray(z)
        with np.errstate(divide="ignore"):
            return 1.0 / (self.c * z + self.d) ** 2

    def circle_action(self, theta: ArrayLike) -> NDArray[np.float64]:
        """Action on circle angles; total, including the point ``theta = pi``."""
        half = 0.5 * np.asarray(theta, dtype=float)
        sin, cos = np.sin(half), np.cos(half)
        return 2.0 * np.arctan2(self.a * sin + self.b * cos, self.c * sin + self.d * cos)

    def circle_derivative(self, theta: ArrayLike) -> NDArray[np.float64]:
        """``|γ'(x)|_S`` in terms of the angle of ``x``."""
        half = 0.5 * np.asarray(theta, dtype=float)
        sin, cos = np.sin(half), np.cos(half)
        return 1.0 / ((self.a * sin + self.b * cos) ** 2 + (self.c * sin + self.d * cos) ** 2)

    def fixed_points(self) -> tuple[ExtendedPoint, ExtendedPoint]:
        """Fixed points of a hyperbolic map, attracting first.

        Raises:
            InvalidParameterError: If the map is not hyperbolic.
        """
        if abs(self.trace) <= 2.0:
            raise InvalidParameterError(f"map with trace {self.trace!r} is not hyperbolic")
        if self.c == 0.0:
            finite = self.b / (self.d - self.a)
            # z -> (a z + b)/d: infinity attracts when a/d > 1
            if abs(self.a) > abs(self.d):
                return (INFINITY, finite)
            return (finite, INFINITY)
        root = math.sqrt(self.trace**2 - 4.0)
        candidates = [(self.a - self.d + sign * root) / (2.0 * self.c) for sign in (1.0, -1.0)]
        candidates.sort(key=lambda x: abs(self.c * x + self.d), reverse=True)
        return (candidates[0], candidates[1])

    def translation_length(self) -> float:
        """``2 arccosh(|tr| / 2)``: length of the closed geodesic of a hyperbolic map."""
        return 2.0 * math.acosh(max(1.0, abs(self.trace) / 2.0))


def _signed(a: float, b: float, c: float, d: float) -> MobiusMap:
    trace = a + d
    first = a if a != 0.0 else c
    if trace < 0.0 or (trace == 0.0 and first < 0.0):
        a, b, c, d = -a, -b, -c, -d
    return MobiusMap(float(a), float(b), float(c), float(d))


def mobius_apply(m: MobiusMap, z: ExtendedPoint) -> ExtendedPoint:
    """Apply ``m`` to a point of the extended plane.

    Args:
        m: The map.
        z: A finite real or complex number, or ``INFINITY``.

    Returns:
        ``(az + b) / (cz + d)``, with ``INFINITY`` at the pole and ``a / c``
        at infinity. Real input gives real output.

    Examples:
        >>> mobius_apply(MobiusMap(0.0, 1.0, -1.0, 0.0), 0.0)
        INFINITY
    """
    if is_infinity(z):
        if m.c == 0.0:
            return INFINITY
        return m.a / m.c
    assert not isinstance(z, Infinity)
    den = m.c * z + m.d
    if den == 0:
        return INFINITY
    value = (m.a * z + m.b) / den
    if isinstance(z, complex):
        return complex(value)
    return float(value.real) if isinstance(value, complex) else float(value)


def mobius_derivative(m: MobiusMap, z: ExtendedPoint) -> complex:
    """Derivative ``(cz + d)^{-2}`` at a finite point.

    Raises:
        InvalidParameterError: If ``z`` is infinity.
        PoleError: If ``cz + d = 0``.
    """
    if is_infinity(z):
        raise InvalidParameterError("derivative is only defined at finite points")
    assert not isinstance(z, Infinity)
    den = m.c * z + m.d
    if den == 0:
        raise PoleError(f"{z!r} is the pole of {m!r}")
    return complex(1.0 / den**2)


def sphere_distance(x: ExtendedPoint, x2: ExtendedPoint) -> float:
    """Chord distance ``2|x - x'| / (<x><x'>)`` between points of the extended real line."""
    if is_infinity(x) and is_infinity(x2):
        return 0.0
    if is_infinity(x) or is_infinity(x2):
        finite = x2 if is_infinity(x) else x
        assert not isinstance(finite, Infinity)
        return float(2.0 / bracket(_real(finite)))
    assert not isinstance(x, Infinity) and not isinstance(x2, Infinity)
    u, v = _real(x), _real(x2)
    return float(2.0 * abs(u - v) / (bracket(u) * bracket(v)))


def sphere_derivative(m: MobiusMap, x: ExtendedPoint) -> float:
    """``|γ'(x)|_S = <x>^2 <γx>^{-2} γ'(x)``, extended by limits.

    Equals ``<x>^2 / ((cx + d)^2 + (ax + b)^2)``, which is finite at the pole,
    and ``1 / (a^2 + c^2)`` at infinity.
    """
    if is_infinity(x):
        return 1.0 / (m.a**2 + m.c**2)
    assert not isinstance(x, Infinity)
    u = _real(x)
    return float((1.0 + u * u) / ((m.c * u + m.d) ** 2 + (m.a * u + m.b) ** 2))


def point_to_angle(x: ExtendedPoint) -> float:
    if is_infinity(x):
        return math.pi
    assert not isinstance(x, Infinity)
    return 2.0 * math.atan(_real(x))


def angle_to_point(theta: float) -> ExtendedPoint:
    wrapped = math.remainder(theta, 2.0 * math.pi)
    if abs(abs(wrapped) - math.pi) < 1e-15:
        return INFINITY
    return math.tan(wrapped / 2.0)


def _real(z: complex | float) -> float:
    if isinstance(z, complex):
        if z.imag != 0.0:
            raise InvalidParameterError(f"expected a point of the real line, got {z!r}")
        return z.real
    return float(z)
