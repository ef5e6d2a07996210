"""Semiclassical Fourier transform and the frequency localisation of eigenfunction pieces."""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from schottky_lab.errors import InvalidParameterError
from schottky_lab.schottky import SchottkyData
from schottky_lab.transfer import Eigenfunction, eigenfunction_at_zero
from schottky_lab.words import Alphabet, Interval, enumerate_partition, word_interval, word_interval_prime

logger = logging.getLogger(__name__)

EDGE_TOLERANCE = 1e-12
_XI_CHUNK = 512


class WindowClippingWarning(UserWarning):
    """The sampled function does not vanish at the ends of its window."""


def trapezoid_weights(x: ArrayLike) -> NDArray[np.float64]:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 2 or np.any(np.diff(x) <= 0.0):
        raise InvalidParameterError("sample points must be a strictly increasing 1-d array")
    spacing = np.diff(x)
    weights = np.zeros_like(x)
    weights[:-1] += spacing / 2.0
    weights[1:] += spacing / 2.0
    return weights


def semiclassical_fourier(
    values: ArrayLike, x: ArrayLike, h: float, xi: ArrayLike
) -> NDArray[np.complex128]:
    """``F_h f(ξ) = ∫ f(x) e^{-ixξ/h} dx`` by the trapezoid rule on the samples.

    Warns ``WindowClippingWarning`` when ``|f|`` exceeds ``1e-12`` at either end
    of the window.
    """
    if not h > 0.0:
        raise InvalidParameterError(f"h must be positive, got {h!r}")
    f = np.asarray(values, dtype=complex)
    points = np.asarray(x, dtype=float)
    weighted = f * trapezoid_weights(points)
    edge = max(abs(f[0]), abs(f[-1]))
    if edge > EDGE_TOLERANCE:
        warnings.warn(
            f"|f| = {edge:.3g} at the window edge; the transform sees a clipped function",
            WindowClippingWarning,
            stacklevel=2,
        )
    frequencies = np.atleast_1d(np.asarray(xi, dtype=float))
    out = np.empty(frequencies.shape, dtype=complex)
    for start in range(0, frequencies.size, _XI_CHUNK):
        chunk = frequencies[start:start + _XI_CHUNK]
        out[start:start + _XI_CHUNK] = np.exp((-1j / h) * chunk[:, None] * points[None, :]) @ weighted
    return out


def outside_mass_fraction(values: ArrayLike, x: ArrayLike, h: float, K: float) -> float:
    """Share of ``∫|F_h f|² dξ`` carried by ``|ξ| > K``.

    The total comes from Plancherel, ``2πh ∫|f|² dx``; the inner part is
    integrated on a ``ξ`` grid fine enough for the window length.
    """
    if not K > 0.0:
        raise InvalidParameterError(f"K must be positive, got {K!r}")
    f = np.asarray(values, dtype=complex)
    points = np.asarray(x, dtype=float)
    total = 2.0 * math.pi * h * float(np.sum(np.abs(f) ** 2 * trapezoid_weights(points)))
    if total == 0.0:
        return 0.0
    window = points[-1] - points[0]
    n_xi = 2 * math.ceil(4.0 * K * window / (2.0 * math.pi * h)) + 65
    xi = np.linspace(-K, K, n_xi)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", WindowClippingWarning)
        transform = semiclassical_fourier(f, points, h, xi)
    inside = float(np.sum(np.abs(transform) ** 2 * trapezoid_weights(xi)))
    return max(0.0, 1.0 - inside / total)


def plateau_bump(x: ArrayLike, support: Interval, plateau: Interval) -> NDArray[np.float64]:
    """Smooth, 1 on ``plateau``, 0 outside the open ``support``."""
    (a, b), (c, d) = support, plateau
    if not a < c <= d < b:
        raise InvalidParameterError(f"plateau {plateau} must sit inside support {support}")
    points = np.asarray(x, dtype=float)
    up = _step((points - a) / (c - a))
    down = _step((b - points) / (b - d))
    return up * down


def _step(t: NDArray[np.float64]) -> NDArray[np.float64]:
    t = np.clip(t, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        rise = np.where(t > 0.0, np.exp(-1.0 / np.where(t > 0.0, t, 1.0)), 0.0)
        fall = np.where(t < 1.0, np.exp(-1.0 / np.where(t < 1.0, 1.0 - t, 1.0)), 0.0)
    return rise / (rise + fall)


@dataclass(frozen=True)
class PieceProfile:
    """``|F_h u_a|`` for one word of ``Z(h^ρ)``."""

    word: tuple[int, ...]
    xi: NDArray[np.float64]
    magnitude: NDArray[np.float64]
    outside_fraction: float


@dataclass(frozen=True)
class LocalizationProfile:
    s0: complex
    h: float
    K: float
    pieces: tuple[PieceProfile, ...]
    eigenfunction: Eigenfunction

    @property
    def max_outside_fraction(self) -> float:
        return max(piece.outside_fraction for piece in self.pieces)

    @property
    def localized(self) -> bool:
        return self.max_outside_fraction <= 0.1


def localization_pieces(
    data: SchottkyData, eigen: Eigenfunction, h: float, rho: float, n_x: int = 4096
) -> list[tuple[tuple[int, ...], NDArray[np.float64], NDArray[np.complex128]]]:
    """``u_a = <x>^{2s} χ_a u`` sampled on ``I_ā`` for every ``a`` in ``Z(h^ρ)``."""
    alphabet = Alphabet.of(data)
    partition = enumerate_partition(data, h**rho)
    pieces = []
    for word in partition:
        reverse = alphabet.bar_word(word)
        support = word_interval(data, reverse)
        plateau = word_interval_prime(data, reverse)
        x = np.linspace(support[0], support[1], n_x)
        u = eigen.evaluate(reverse[0], x)
        weight = np.exp(eigen.s * np.log1p(x**2))
        pieces.append((word, x, weight * plateau_bump(x, support, plateau) * u))
    return pieces


def eigenfunction_localization(
    data: SchottkyData,
    s0: complex,
    M: int,
    h: float,
    K_threshold: float,
    *,
    rho: float = 0.5,
    n_x: int | None = None,
    n_xi: int = 801,
) -> LocalizationProfile:
    """Frequency profile of the pieces ``u_a`` of the eigenfunction at the zero ``s0``.

    Raises:
        InvalidParameterError: If ``Im s0`` is not within 5% of ``1/h`` or
            ``s0`` is not a zero at this ``M``.
    """
    s0 = complex(s0)
    if abs(s0.imag * h - 1.0) > 0.05:
        raise InvalidParameterError(
            f"Im s0 = {s0.imag!r} does not match the scale 1/h = {1.0 / h!r}"
        )
    eigen = eigenfunction_at_zero(data, s0, M)
    if not eigen.is_null:
        raise InvalidParameterError(f"no zero of the zeta determinant at s0 = {s0}")
    # The pieces oscillate at frequencies up to about 1/h on windows of length O(1).
    samples = n_x if n_x is not None else max(4096, 8 * math.ceil(4.0 * K_threshold / (2.0 * math.pi * h)))
    xi = np.linspace(-4.0 * K_threshold, 4.0 * K_threshold, n_xi)
    pieces = []
    for word, x, values in localization_pieces(data, eigen, h, rho, samples):
        magnitude = np.abs(semiclassical_fourier(values, x, h, xi))
        fraction = outside_mass_fraction(values, x, h, K_threshold)
        logger.info("piece %s: %.3g of the mass beyond |xi| = %g", word, fraction, K_threshold)
        pieces.append(PieceProfile(word, xi, magnitude, fraction))
    return LocalizationProfile(s0, h, K_threshold, tuple(pieces), eigen)
