"""Fractal uncertainty measurements on the circle.

``B_χ(h)`` has kernel ``(2πh)^{-1/2} |y - y'|^{-2i/h} χ(y, y')`` and ``B(s)``
has kernel ``|Im s / 2π|^{1/2} |x - x'|_S^{-2s}``; both act on functions on
the circle grid with weights ``dP``. The restricted norm is the norm of
``B_χ(h)`` between indicators of a neighbourhood of the limit set.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import Executor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Literal, Sequence

import numpy as np
from numpy.typing import NDArray

from schottky_lab.circle import (
    DEFAULT_GRID_FACTOR,
    ArcBump,
    CircleGrid,
    KernelCutoff,
    PowerWeightedCutoff,
    check_off_diagonal,
    chord,
    default_chi0,
    wrap_angle,
)
from schottky_lab.errors import (
    CutoffError,
    GridResolutionError,
    InsufficientSamplesError,
    InvalidParameterError,
)
from schottky_lab.mobius import MobiusMap, point_to_angle
from schottky_lab.schottky import SchottkyData
from schottky_lab.spectral import circulant_norm, largest_singular_value
from schottky_lab.words import limit_set_cover

logger = logging.getLogger(__name__)

MIN_FIT_SAMPLES = 5
FIT_RESIDUAL_LIMIT = 0.05
MAX_DROPPED = 2
_ROW_CHUNK = 1024

Indices = NDArray[np.intp]


@dataclass(frozen=True)
class FupOperator:
    """Dense block of ``B_χ(h)`` or ``B(s)`` on grid rows ``rows`` and columns ``cols``."""

    kind: Literal["B_chi", "B_s"]
    h: float
    s: complex | None
    grid: CircleGrid
    rows: Indices
    cols: Indices
    entries: NDArray[np.complex128]

    def norm(self, seed: int = 0) -> float:
        return largest_singular_value(self.entries, seed=seed).value


def _indices(grid: CircleGrid, picked: Indices | None) -> Indices:
    return np.arange(grid.N) if picked is None else np.asarray(picked, dtype=np.intp)


def _assemble(
    grid: CircleGrid,
    rows: Indices,
    cols: Indices,
    block: Callable[[NDArray[np.float64], NDArray[np.float64]], NDArray[np.complex128]],
) -> NDArray[np.complex128]:
    entries = np.empty((len(rows), len(cols)), dtype=complex)
    theta_cols = grid.theta[cols]
    for start in range(0, len(rows), _ROW_CHUNK):
        stop = min(start + _ROW_CHUNK, len(rows))
        entries[start:stop] = block(grid.theta[rows[start:stop]][:, None], theta_cols[None, :])
    return entries


def _oscillation(distance: NDArray[np.float64], exponent: complex) -> NDArray[np.complex128]:
    """``distance^{exponent}``, zero where ``distance`` is zero."""
    positive = distance > 0.0
    log = np.log(np.where(positive, distance, 1.0))
    return np.where(positive, np.exp(exponent * log), 0.0)


def build_B_chi(
    h: float,
    chi: KernelCutoff,
    grid: CircleGrid,
    rows: Indices | None = None,
    cols: Indices | None = None,
) -> FupOperator:
    """Quadrature matrix of ``B_χ(h)``.

    Raises:
        CutoffError: If ``chi`` is nonzero on the diagonal.
    """
    if not h > 0.0:
        raise InvalidParameterError(f"h must be positive, got {h!r}")
    check_off_diagonal(chi, grid)
    scale = grid.weight / math.sqrt(2.0 * math.pi * h)
    exponent = -2j / h

    def block(theta: NDArray[np.float64], theta2: NDArray[np.float64]) -> NDArray[np.complex128]:
        return scale * chi(theta, theta2) * _oscillation(chord(theta, theta2), exponent)

    r, c = _indices(grid, rows), _indices(grid, cols)
    return FupOperator("B_chi", h, None, grid, r, c, _assemble(grid, r, c, block))


def _singular_bands(s: complex, spacing: float) -> tuple[complex, complex]:
    power = 1.0 - 2.0 * s
    half = (spacing / 2.0) ** power
    diagonal = 2.0 * half / power
    neighbour = ((1.5 * spacing) ** power - half) / power
    return diagonal, neighbour


def build_B_s(
    s: complex,
    grid: CircleGrid,
    chi0: KernelCutoff | None = None,
    rows: Indices | None = None,
    cols: Indices | None = None,
) -> FupOperator:
    """Quadrature matrix of ``B(s)``, optionally multiplied by ``chi0``.

    Without ``chi0`` the full matrix is built and the diagonal and its two
    neighbouring bands carry the exact cell integrals of ``|θ - θ'|^{-2s}``.

    Raises:
        CutoffError: If there is no cutoff and ``Re s >= 1/2``.
        InvalidParameterError: If a sub-block is requested without a cutoff.
    """
    s = complex(s)
    scale = math.sqrt(abs(s.imag) / (2.0 * math.pi))
    if chi0 is not None:
        check_off_diagonal(chi0, grid)

        def block(theta: NDArray[np.float64], theta2: NDArray[np.float64]) -> NDArray[np.complex128]:
            return scale * grid.weight * chi0(theta, theta2) * _oscillation(chord(theta, theta2), -2.0 * s)

        r, c = _indices(grid, rows), _indices(grid, cols)
        h = 1.0 / abs(s.imag) if s.imag else math.inf
        return FupOperator("B_s", h, s, grid, r, c, _assemble(grid, r, c, block))

    if s.real >= 0.5:
        raise CutoffError(f"Re s = {s.real!r} >= 1/2 needs an off-diagonal cutoff")
    if rows is not None or cols is not None:
        raise InvalidParameterError("the uncut B(s) is only built on the full grid")
    offsets = np.arange(grid.N)
    distance = chord(offsets * grid.weight, 0.0)
    column = grid.weight * _oscillation(distance, -2.0 * s)
    diagonal, neighbour = _singular_bands(s, grid.weight)
    column[0] = diagonal
    column[1] = column[-1] = neighbour
    index = (offsets[:, None] - offsets[None, :]) % grid.N
    h = 1.0 / abs(s.imag) if s.imag else math.inf
    return FupOperator("B_s", h, s, grid, offsets, offsets, scale * column[index])


def whole_norm(h: float, chi: KernelCutoff, grid: CircleGrid, *, seed: int = 0) -> float:
    """``‖B_χ(h)‖`` on the whole circle.

    A translation invariant ``χ`` makes the matrix circulant and the norm is
    read off its FFT; otherwise the full matrix goes through power iteration.
    """
    profile = getattr(chi, "profile", None)
    if chi.translation_invariant and profile is not None:
        check_off_diagonal(chi, grid)
        distance = chord(np.arange(grid.N) * grid.weight, 0.0)
        column = profile(distance) * _oscillation(distance, -2j / h)
        return circulant_norm(column) * grid.weight / math.sqrt(2.0 * math.pi * h)
    return build_B_chi(h, chi, grid).norm(seed)


def cover_mask(
    data: SchottkyData,
    grid: CircleGrid,
    h: float,
    rho: float,
    C0: float,
    *,
    cover_scale: float = 1.0,
) -> Indices:
    """Grid indices inside ``Λ_Γ(C₀h^ρ)``, covered by ``Z(cover_scale·h^ρ)`` widened by ``C₀h^ρ``."""
    if not 0.0 < rho < 1.0:
        raise InvalidParameterError(f"rho must lie in (0, 1), got {rho!r}")
    if not C0 > 0.0:
        raise InvalidParameterError(f"C0 must be positive, got {C0!r}")
    scale = h**rho
    cover = limit_set_cover(data, cover_scale * scale, margin=C0 * scale)
    return grid.indices_in(cover.merged())


def restricted_norm(
    data: SchottkyData,
    h: float,
    rho: float,
    C0: float,
    chi: KernelCutoff | None = None,
    *,
    grid: CircleGrid | None = None,
    grid_factor: float = DEFAULT_GRID_FACTOR,
    cover_scale: float = 1.0,
    seed: int = 0,
) -> float:
    """``‖1_Λ B_χ(h) 1_Λ‖`` with ``Λ = Λ_Γ(C₀h^ρ)``.

    Only the masked block is assembled. ``chi`` defaults to ``default_chi0(data)``.

    Raises:
        GridResolutionError: If ``N·h < 20``.
        ConvergenceError: If the two power-iteration restarts disagree.
    """
    if grid is None:
        grid = CircleGrid.for_h(h, grid_factor)
    else:
        grid.check_resolution(h)
    chi = default_chi0(data) if chi is None else chi
    mask = cover_mask(data, grid, h, rho, C0, cover_scale=cover_scale)
    if len(mask) == 0:
        return 0.0
    operator = build_B_chi(h, chi, grid, rows=mask, cols=mask)
    value = operator.norm(seed)
    logger.debug("restricted norm %.6g at h=%.3g (N=%d, %d masked points)", value, h, grid.N, len(mask))
    return value


def cutoff_pair_norm(
    s: complex, grid: CircleGrid, chi1: ArcBump, chi2: ArcBump, *, seed: int = 0
) -> float:
    """``‖χ₁ B(s) χ₂‖`` assembled on the supports of the two bumps.

    Raises:
        CutoffError: If the supports overlap.
    """
    rows, cols = chi1.support(grid), chi2.support(grid)
    if np.intersect1d(rows, cols).size:
        raise CutoffError("chi1 and chi2 must have disjoint supports")
    s = complex(s)
    scale = math.sqrt(abs(s.imag) / (2.0 * math.pi)) * grid.weight

    def block(theta: NDArray[np.float64], theta2: NDArray[np.float64]) -> NDArray[np.complex128]:
        return scale * chi1(theta) * chi2(theta2) * _oscillation(chord(theta, theta2), -2.0 * s)

    return largest_singular_value(_assemble(grid, rows, cols, block), seed=seed).value


# ---- equivariance

MIN_SUPPORT_POINTS = 16
_SHORT_ARC_LIMIT = 1.2


def _separated_arc(gamma: MobiusMap, chi2: ArcBump) -> ArcBump:
    samples = chi2.center + np.linspace(-chi2.half_width, chi2.half_width, 257)
    avoid = np.concatenate([samples, gamma.inverse().circle_action(samples)])
    candidates = -math.pi + (np.arange(64) + 0.5) * (2.0 * math.pi / 64)
    distance = np.min(chord(candidates[:, None], avoid[None, :]), axis=1)
    best = int(np.argmax(distance))
    gap = 2.0 * math.asin(min(1.0, distance[best] / 2.0))
    if gap < 0.05:
        raise InvalidParameterError("no arc of the circle stays away from chi2 and its pull-back")
    return ArcBump(float(candidates[best]), min(chi2.half_width, 0.5 * gap))


def equivariance_cutoffs(gamma: MobiusMap, half_width: float = 0.3) -> tuple[ArcBump, ArcBump]:
    """``(χ₁, χ₂)`` with antipodal centres on arcs that ``γ`` maps into themselves.

    The fixed points of a hyperbolic ``γ`` cut the circle into two invariant
    arcs. When the shorter one is wide, ``χ₂`` sits at its middle and ``χ₁``
    opposite it on the longer arc. Otherwise both sit on the longer arc,
    ``χ₁`` half a turn downstream of ``χ₂`` towards the attracting point.
    Either way ``γ`` moves ``supp χ₁`` away from ``supp χ₂`` and the
    reference kernel has a stationary point inside the supports. Maps that
    are not hyperbolic get an arc at ``θ = 0`` and the arc furthest from it.
    """
    if abs(gamma.trace) <= 2.0:
        chi2 = ArcBump(0.0, half_width)
        return _separated_arc(gamma, chi2), chi2
    attracting, repelling = (point_to_angle(p) for p in gamma.fixed_points())
    ccw = (attracting - repelling) % (2.0 * math.pi)
    short = min(ccw, 2.0 * math.pi - ccw)
    if short >= _SHORT_ARC_LIMIT:
        middle = repelling + 0.5 * ccw if ccw <= math.pi else attracting + 0.5 * (2.0 * math.pi - ccw)
        width = min(half_width, 0.25 * short)
        return ArcBump(float(wrap_angle(middle + math.pi)), width), ArcBump(float(wrap_angle(middle)), width)
    direction = 1.0 if ccw >= math.pi else -1.0
    offset = 0.5 * (2.0 * math.pi - short - math.pi)
    width = min(half_width, 0.5 * offset)
    start = repelling + direction * offset
    return (
        ArcBump(float(wrap_angle(start + direction * math.pi)), width),
        ArcBump(float(wrap_angle(start)), width),
    )


def equivariance_residual(
    gamma: MobiusMap,
    s: complex,
    grid: CircleGrid,
    chi1: ArcBump | None = None,
    chi2: ArcBump | None = None,
    *,
    n_test: int = 8,
) -> float:
    """Relative size of ``χ₁(T_{γ,s}B(s) - B(s)T_{γ,1-s})χ₂`` on trigonometric test functions.

    ``T_{γ,s}f(x) = |γ'(x)|_S^s f(γx)``. Cutoffs default to
    ``equivariance_cutoffs(gamma)``; a ``chi2`` given alone gets a ``chi1``
    away from it and from its pull-back by ``γ``.

    ``B(s)T_{γ,1-s}χ₂f`` is integrated over whichever of ``supp χ₂`` and its
    pull-back holds more grid points. On ``supp χ₂`` the substitution
    ``y = γx'`` turns the weight into ``|(γ⁻¹)'(y)|_S^s``.

    Raises:
        GridResolutionError: If a cutoff support or the integration support
            holds fewer than ``MIN_SUPPORT_POINTS`` grid points.
        CutoffError: If the supports of ``chi1`` and ``chi2`` meet.
    """
    s = complex(s)
    if chi1 is None and chi2 is None:
        chi1, chi2 = equivariance_cutoffs(gamma)
    elif chi2 is None:
        raise InvalidParameterError("chi1 needs an explicit chi2")
    elif chi1 is None:
        chi1 = _separated_arc(gamma, chi2)
    scale = math.sqrt(abs(s.imag) / (2.0 * math.pi)) * grid.weight
    modes = np.arange(-n_test, n_test + 1)
    inverse = gamma.inverse()

    def kernel(theta: NDArray[np.float64], theta2: NDArray[np.float64]) -> NDArray[np.complex128]:
        return scale * _oscillation(chord(theta[:, None], theta2[None, :]), -2.0 * s)

    def tests(theta: NDArray[np.float64]) -> NDArray[np.complex128]:
        return np.exp(1j * theta[:, None] * modes[None, :])

    rows = chi1.support(grid)
    inner = chi2.support(grid)
    moved = wrap_angle(gamma.circle_action(grid.theta))
    pulled = np.flatnonzero(chi2(moved) > 0.0)
    for label, support in (("chi1", rows), ("chi2", inner), ("integration", max(inner, pulled, key=len))):
        if len(support) < MIN_SUPPORT_POINTS:
            raise GridResolutionError(
                f"{label} support holds {len(support)} of N={grid.N} grid points; need {MIN_SUPPORT_POINTS}"
            )
    if np.intersect1d(rows, inner).size:
        raise CutoffError("chi1 and chi2 must have disjoint supports")

    theta_rows = grid.theta[rows]
    cutoff_rows = chi1(theta_rows)[:, None]
    theta_inner = grid.theta[inner]
    weighted = chi2(theta_inner)[:, None] * tests(theta_inner)
    left = (gamma.circle_derivative(theta_rows) ** s)[:, None] * (
        kernel(gamma.circle_action(theta_rows), theta_inner) @ weighted
    )
    reference = kernel(theta_rows, theta_inner) @ weighted

    if len(pulled) > len(inner):
        theta_pulled = grid.theta[pulled]
        image = moved[pulled]
        transported = (gamma.circle_derivative(theta_pulled) ** (1.0 - s) * chi2(image))[:, None] * tests(image)
        right = kernel(theta_rows, theta_pulled) @ transported
    else:
        jacobian = inverse.circle_derivative(theta_inner) ** s
        right = kernel(theta_rows, wrap_angle(inverse.circle_action(theta_inner))) @ (jacobian[:, None] * weighted)

    denominator = np.linalg.norm(cutoff_rows * reference, 2)
    if denominator == 0.0:
        return 0.0
    residual = float(np.linalg.norm(cutoff_rows * (left - right), 2) / denominator)
    logger.debug("equivariance residual %.3e at N=%d", residual, grid.N)
    return residual


# ---- exponent fit


@dataclass(frozen=True)
class ExponentFit:
    samples: tuple[tuple[float, float], ...]
    beta: float
    intercept: float
    residual: float
    dropped: tuple[tuple[float, float], ...] = field(default=())

    @property
    def points_used(self) -> int:
        return len(self.samples) - len(self.dropped)


def _line(samples: Sequence[tuple[float, float]]) -> tuple[float, float, float]:
    x = np.log([h for h, _ in samples])
    y = np.log([n for _, n in samples])
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return float(slope), float(intercept), residual


def fit_beta(samples: Iterable[tuple[float, float]]) -> ExponentFit:
    """Least-squares slope of ``log norm`` against ``log h``.

    When the residual exceeds 0.05 the largest ``h`` values are dropped one
    at a time (at most two, keeping five points) and reported in ``dropped``.

    Raises:
        InsufficientSamplesError: If there are fewer than five samples.
        InvalidParameterError: If ``h`` is not strictly decreasing or a value is not positive.
    """
    points = tuple((float(h), float(n)) for h, n in samples)
    if len(points) < MIN_FIT_SAMPLES:
        raise InsufficientSamplesError(
            f">= {MIN_FIT_SAMPLES} samples required, got {len(points)}"
        )
    hs = np.array([h for h, _ in points])
    if np.any(np.diff(hs) >= 0.0):
        raise InvalidParameterError("h values must be strictly decreasing")
    if any(h <= 0.0 or n <= 0.0 for h, n in points):
        raise InvalidParameterError("h values and norms must be positive")

    used = list(points)
    slope, intercept, residual = _line(used)
    dropped: list[tuple[float, float]] = []
    while residual > FIT_RESIDUAL_LIMIT and len(dropped) < MAX_DROPPED and len(used) > MIN_FIT_SAMPLES:
        dropped.append(used.pop(0))
        slope, intercept, residual = _line(used)
    if dropped:
        logger.warning("dropped %d largest h values from the fit: %s", len(dropped), dropped)
    return ExponentFit(points, slope, intercept, residual, tuple(dropped))


# ---- scans


@dataclass(frozen=True)
class FupRow:
    h: float
    rho: float
    C0: float
    N: int
    restricted_norm: float
    whole_norm: float
    restricted_norm_2n: float | None = None

    @property
    def delta_2n(self) -> float | None:
        if self.restricted_norm_2n is None:
            return None
        return abs(self.restricted_norm_2n - self.restricted_norm)


@dataclass(frozen=True)
class FupScan:
    rows: tuple[FupRow, ...]
    fits: dict[float, ExponentFit]
    whole_fit: ExponentFit | None


def scan_cutoff(data: SchottkyData, nu: float | None = None) -> KernelCutoff:
    """``χ₀`` for the data, or ``|x - x'|_S^{2ν-1}χ₀`` when ``nu`` is given."""
    chi0 = default_chi0(data)
    if nu is None:
        return chi0
    return PowerWeightedCutoff(chi0, 2.0 * nu - 1.0)


def _scan_row(
    data: SchottkyData,
    h: float,
    rho: float,
    C0: float,
    chi: KernelCutoff,
    grid_factor: float,
    certify: bool,
    cover_scale: float,
    seed: int,
) -> FupRow:
    grid = CircleGrid.for_h(h, grid_factor)
    norm = restricted_norm(data, h, rho, C0, chi, grid=grid, cover_scale=cover_scale, seed=seed)
    whole = whole_norm(h, chi, grid, seed=seed)
    doubled = None
    if certify:
        doubled = restricted_norm(
            data, h, rho, C0, chi, grid=grid.doubled(), cover_scale=cover_scale, seed=seed
        )
    return FupRow(h, rho, C0, grid.N, norm, whole, doubled)


def fup_scan(
    data: SchottkyData,
    hs: Sequence[float],
    rho: float,
    C0s: Sequence[float] = (1.0,),
    chi: KernelCutoff | None = None,
    *,
    grid_factor: float = DEFAULT_GRID_FACTOR,
    certify: bool = True,
    cover_scale: float = 1.0,
    seed: int = 0,
    executor: Executor | None = None,
) -> FupScan:
    """Restricted and whole norms over an ``h`` ladder, one exponent fit per ``C₀``.

    Raises:
        InsufficientSamplesError: If fewer than five ``h`` values are given.
    """
    if len(hs) < MIN_FIT_SAMPLES:
        raise InsufficientSamplesError(f">= {MIN_FIT_SAMPLES} samples required, got {len(hs)}")
    chi = default_chi0(data) if chi is None else chi
    ladder = sorted(hs, reverse=True)
    jobs = [(h, C0) for C0 in C0s for h in ladder]

    def work(job: tuple[float, float]) -> FupRow:
        h, C0 = job
        return _scan_row(data, h, rho, C0, chi, grid_factor, certify, cover_scale, seed)

    rows = list(executor.map(work, jobs)) if executor is not None else [work(job) for job in jobs]
    fits = {
        C0: fit_beta((row.h, row.restricted_norm) for row in rows if row.C0 == C0)
        for C0 in C0s
    }
    first = [row for row in rows if row.C0 == C0s[0]]
    whole_fit = fit_beta((row.h, row.whole_norm) for row in first)
    for C0, fit in fits.items():
        logger.info("C0=%g: beta=%.4f residual=%.3g (%d points)", C0, fit.beta, fit.residual, fit.points_used)
    return FupScan(tuple(rows), fits, whole_fit)
