"""Schottky data: paired disks on the real line and the generators pairing them."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from schottky_lab.errors import InvalidParameterError, SchottkyValidationError
from schottky_lab.mobius import ExtendedPoint, MobiusMap

logger = logging.getLogger(__name__)

GAP_TOLERANCE = 1e-12
PAIRING_TOLERANCE = 1e-10
BOUNDARY_TOLERANCE = 1e-9
_BOUNDARY_SAMPLES = 16


@dataclass(slots=True, frozen=True)
class Disk:
    """A closed disk centred on the real axis; ``D ∩ R`` is its diameter."""

    center: float
    radius: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.center) and math.isfinite(self.radius)):
            raise InvalidParameterError(f"disk must be finite, got {self!r}")
        if not self.radius > 0.0:
            raise InvalidParameterError(f"disk radius must be positive, got {self.radius!r}")

    @property
    def interval(self) -> tuple[float, float]:
        return (self.center - self.radius, self.center + self.radius)

    @property
    def length(self) -> float:
        return 2.0 * self.radius

    def gap_to(self, other: "Disk") -> float:
        """Distance between the two closed disks (negative when they overlap)."""
        return abs(self.center - other.center) - self.radius - other.radius


@dataclass(slots=True, frozen=True)
class SchottkyData:
    """Alphabet ``1..2r`` with disks ``D_a`` and generators ``γ_a``.

    Letter ``a`` is paired with ``a + r`` (``ā``). Use ``validate_schottky``
    to check the geometric invariants; construction only checks shapes.
    """

    r: int
    disks: tuple[Disk, ...]
    generators: tuple[MobiusMap, ...]

    def __post_init__(self) -> None:
        if self.r < 1:
            raise InvalidParameterError(f"r must be a positive integer, got {self.r!r}")
        if len(self.disks) != 2 * self.r or len(self.generators) != 2 * self.r:
            raise InvalidParameterError(
                f"expected {2 * self.r} disks and generators, got "
                f"{len(self.disks)} and {len(self.generators)}"
            )

    @property
    def letters(self) -> range:
        return range(1, 2 * self.r + 1)

    def bar(self, a: int) -> int:
        return a + self.r if a <= self.r else a - self.r

    def disk(self, a: int) -> Disk:
        return self.disks[a - 1]

    def generator(self, a: int) -> MobiusMap:
        return self.generators[a - 1]

    def interval(self, a: int) -> tuple[float, float]:
        return self.disks[a - 1].interval


@dataclass(slots=True, frozen=True)
class ValidationReport:
    disjoint: bool
    paired: bool
    maps_disks: bool
    min_gap: float
    max_pairing_residual: float
    max_boundary_residual: float
    failures: tuple[str, ...] = field(default=())

    @property
    def passed(self) -> bool:
        return not self.failures


def validate_schottky(data: SchottkyData) -> ValidationReport:
    """Check disjointness, the pairing rule and the disk mapping of the generators.

    Never raises on bad geometry; every violated invariant is listed in
    ``failures`` together with the measured margins.
    """
    failures: list[str] = []

    min_gap = math.inf
    for i, first in enumerate(data.disks):
        for second in data.disks[i + 1:]:
            min_gap = min(min_gap, first.gap_to(second))
    disjoint = min_gap >= GAP_TOLERANCE
    if not disjoint:
        failures.append("disks not disjoint")

    pairing_residual = 0.0
    boundary_residual = 0.0
    interior_ok = True
    angles = np.linspace(0.0, 2.0 * np.pi, _BOUNDARY_SAMPLES, endpoint=False)
    for a in data.letters:
        gamma = data.generator(a)
        abar = data.bar(a)
        inverse = gamma.inverse()
        other = data.generator(abar)
        scale = max(1.0, *map(abs, gamma.entries))
        diff = np.array(other.entries) - np.array(inverse.entries)
        total = np.array(other.entries) + np.array(inverse.entries)
        pairing_residual = max(
            pairing_residual,
            float(min(np.max(np.abs(diff)), np.max(np.abs(total)))) / scale,
        )

        source, target = data.disk(abar), data.disk(a)
        boundary = source.center + source.radius * np.exp(1j * angles)
        image = gamma(boundary)
        with np.errstate(invalid="ignore"):
            residual = np.abs(np.abs(image - target.center) - target.radius) / target.radius
        boundary_residual = max(
            boundary_residual,
            float(np.max(residual)) if np.all(np.isfinite(residual)) else math.inf,
        )

        samples = [complex(source.center, 2.0 * source.radius), complex(source.center + 3.0 * source.radius)]
        for point in samples:
            value = complex(gamma(point))
            if not abs(value - target.center) < target.radius:
                interior_ok = False

    paired = pairing_residual <= PAIRING_TOLERANCE
    if not paired:
        failures.append("pairing violated")
    maps_disks = boundary_residual <= BOUNDARY_TOLERANCE and interior_ok
    if not maps_disks:
        failures.append("generator does not map the exterior of D_abar onto D_a")

    report = ValidationReport(
        disjoint=disjoint,
        paired=paired,
        maps_disks=maps_disks,
        min_gap=float(min_gap),
        max_pairing_residual=pairing_residual,
        max_boundary_residual=boundary_residual,
        failures=tuple(failures),
    )
    if failures:
        logger.info("Schottky validation failed: %s", ", ".join(failures))
    return report


def paired_schottky(disks: Sequence[Disk]) -> SchottkyData:
    """Schottky data whose generators pair disk ``a`` with disk ``a + r``.

    ``γ_a(z) = c_a - r_a r_ā / (z - c_ā)`` sends the circle of ``D_ā`` onto
    the circle of ``D_a`` and the exterior of ``D_ā`` into ``D_a``; the
    formula for ``ā`` is its inverse.
    """
    if len(disks) < 2 or len(disks) % 2:
        raise InvalidParameterError(f"need an even, positive number of disks, got {len(disks)}")
    r = len(disks) // 2
    generators: list[MobiusMap | None] = [None] * (2 * r)
    for a in range(1, r + 1):
        target, source = disks[a - 1], disks[a + r - 1]
        gamma = MobiusMap.from_entries(
            target.center,
            -target.center * source.center - target.radius * source.radius,
            1.0,
            -source.center,
        )
        generators[a - 1] = gamma
        generators[a + r - 1] = gamma.inverse()
    return SchottkyData(r=r, disks=tuple(disks), generators=tuple(g for g in generators if g is not None))


def elementary_schottky(ell: float) -> SchottkyData:
    """The cyclic group generated by a hyperbolic map of translation length ``ell``.

    ``γ_1 = (cosh(ℓ/2), sinh(ℓ/2); sinh(ℓ/2), cosh(ℓ/2))`` fixes ``±1``. The
    disks are the isometric circles of ``γ_1^{±1}``: ``D_1`` (centre
    ``+coth(ℓ/2)``) contains the attracting fixed point ``+1`` and ``D_2``
    (centre ``-coth(ℓ/2)``) the repelling one.

    Raises:
        InvalidParameterError: If ``ell`` is not a positive finite number.
    """
    if not (math.isfinite(ell) and ell > 0.0):
        raise InvalidParameterError(f"ell must be positive, got {ell!r}")
    ch, sh = math.cosh(ell / 2.0), math.sinh(ell / 2.0)
    center, radius = ch / sh, 1.0 / sh
    gamma = MobiusMap(ch, sh, sh, ch)
    return SchottkyData(
        r=1,
        disks=(Disk(center, radius), Disk(-center, radius)),
        generators=(gamma, gamma.inverse()),
    )


def symmetric_schottky(r: int, gap_angle: float) -> SchottkyData:
    """``2r`` equally spaced disks, opposite ones paired.

    On the unit circle the disks cut arcs centred at ``(k + 1/2)π/r`` of
    half-width ``π/(2r) - gap_angle/2``; ``x = tan(θ/2)`` carries them to real
    intervals. No arc contains ``θ = π``, so every disk is bounded.

    Raises:
        InvalidParameterError: If ``r < 2`` or ``gap_angle`` is outside ``[0, π/r)``.
        SchottkyValidationError: If the disks touch (``gap_angle`` at or near 0).
    """
    if r < 2:
        raise InvalidParameterError(f"symmetric family needs r >= 2, got {r!r}")
    if not 0.0 <= gap_angle < math.pi / r:
        raise InvalidParameterError(f"gap_angle must lie in [0, pi/{r}), got {gap_angle!r}")
    half_width = math.pi / (2 * r) - gap_angle / 2.0
    disks = []
    for k in range(2 * r):
        phi = (k + 0.5) * math.pi / r
        if phi > math.pi:
            phi -= 2.0 * math.pi
        left = math.tan((phi - half_width) / 2.0)
        right = math.tan((phi + half_width) / 2.0)
        disks.append(Disk((left + right) / 2.0, (right - left) / 2.0))
    data = paired_schottky(disks)
    report = validate_schottky(data)
    if not report.passed:
        raise SchottkyValidationError(report)
    return data


def limit_points(data: SchottkyData) -> tuple[ExtendedPoint, ExtendedPoint]:
    """Limit set of a cyclic group: the fixed points of its generator, attracting first.

    Raises:
        InvalidParameterError: If ``r >= 2``; the limit set is then a Cantor set
            and is only available through ``limit_set_cover``.
    """
    if data.r != 1:
        raise InvalidParameterError(f"limit set of a rank {data.r} group is not a finite set")
    return data.generator(1).fixed_points()
