"""One function per subcommand: run the computation, return results and tables.

Every command receives the validated Schottky data, its parameter section
and the run context, and returns a ``CommandOutcome``. Files are written by
the caller.
"""
from __future__ import annotations

import inspect
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Awaitable, Callable, Dict, List, Sequence, Tuple, TypeVar, Union, cast

import numpy as np
from expression import Result

from schottky_lab.circle import CircleGrid
from schottky_lab.config import (
    DimensionParams,
    EquivarianceParams,
    FupParams,
    LocalizationParams,
    PartitionParams,
    WordsParams,
    ZerosParams,
    ZetaGridParams,
)
from schottky_lab.context import RunContext
from schottky_lab.errors import ConvergenceError, InvalidParameterError
from schottky_lab.fourier import LocalizationProfile, eigenfunction_localization
from schottky_lab.fup import equivariance_residual, fup_scan, scan_cutoff
from schottky_lab.pipeline import gather_map, step
from schottky_lab.schottky import SchottkyData
from schottky_lab.transfer import (
    BowenEstimate,
    bowen_dimension,
    eigenfunction_at_zero,
    refined_invariance_residual,
    zeta_certificate,
)
from schottky_lab.words import (
    Alphabet,
    DimensionEstimate,
    box_counting_dimension,
    contraction_profile,
    derivative_bound_check,
    enumerate_partition,
    format_word,
    limit_set_cover,
    multiplicity_check,
    word_interval,
    word_interval_prime,
    word_map,
)
from schottky_lab.zeros import Rectangle, find_zeros, zeta_grid

logger = logging.getLogger(__name__)

T = TypeVar("T")


@dataclass(frozen=True)
class Table:
    filename: str
    columns: Tuple[str, ...]
    rows: Tuple[Tuple[Any, ...], ...]


@dataclass(frozen=True)
class CommandOutcome:
    results: Dict[str, Any] = field(default_factory=dict)
    certificates: Dict[str, Any] = field(default_factory=dict)
    tables: Tuple[Table, ...] = ()


CommandFn = Callable[[SchottkyData, Any, RunContext], Union[CommandOutcome, Awaitable[CommandOutcome]]]

COMMANDS: Dict[str, CommandFn] = {}


def command(name: str) -> Callable[[CommandFn], CommandFn]:
    def _register(fn: CommandFn) -> CommandFn:
        COMMANDS[name] = fn
        return fn

    return _register


async def dispatch(name: str, data: SchottkyData, params: Any, context: RunContext) -> CommandOutcome:
    """Run the command ``name``, awaiting it when it is a coroutine."""
    outcome = COMMANDS[name](data, params, context)
    if inspect.isawaitable(outcome):
        return await outcome
    return cast(CommandOutcome, outcome)


def _unwrap(result: Result[T, Exception]) -> T:
    if result.is_error():
        raise result.error
    return cast(T, result.default_value(None))


@command("validate")
def run_validate(data: SchottkyData, params: None, context: RunContext) -> CommandOutcome:
    return CommandOutcome(results={"r": data.r, "letters": 2 * data.r})


@command("words")
def run_words(data: SchottkyData, params: WordsParams, context: RunContext) -> CommandOutcome:
    alphabet = Alphabet.of(data)
    rows: List[Tuple[Any, ...]] = []
    for n in range(1, params.depth + 1):
        for word in alphabet.words_of_length(n):
            left, right = word_interval(data, word)
            inner_left, inner_right = word_interval_prime(data, word)
            rows.append((format_word(word, data.r), n, left, right, right - left, inner_left, inner_right))
    profile = contraction_profile(data, max(2, params.depth))
    bounds = derivative_bound_check(data, max(2, params.depth))
    return CommandOutcome(
        results={
            "words": len(rows),
            "contraction": {
                "max_lengths": list(profile.max_lengths),
                "rate": profile.rate,
                "constant": profile.constant,
            },
            "derivative_bound": {
                "ratio_min": bounds.ratio_min,
                "ratio_max": bounds.ratio_max,
                "spread": bounds.spread,
                "per_depth": [list(entry) for entry in bounds.per_depth],
            },
        },
        tables=(
            Table(
                "words.csv",
                ("word", "length", "left", "right", "interval_length", "prime_left", "prime_right"),
                tuple(rows),
            ),
        ),
    )


@command("partition")
def run_partition(data: SchottkyData, params: PartitionParams, context: RunContext) -> CommandOutcome:
    partition = enumerate_partition(data, params.tau)
    cover = limit_set_cover(data, params.tau, params.margin)
    multiplicity = multiplicity_check(data, params.tau, params.C1)
    rows = tuple(
        (format_word(e.word, data.r), len(e.word), e.left, e.right, e.length) for e in cover.entries
    )
    return CommandOutcome(
        results={
            "tau": params.tau,
            "words": len(partition),
            "scale_ratio": cover.scale_ratio,
            "cover_total_length": cover.total_length,
            "cover_pieces": len(cover.merged()),
            "multiplicity": {
                "C1": params.C1,
                "max_count": multiplicity.max_count,
                "intervals": multiplicity.intervals,
                "bound_constant": multiplicity.bound_constant,
            },
        },
        tables=(Table("partition.csv", ("word", "length", "left", "right", "interval_length"), rows),),
    )


@command("dimension")
async def run_dimension(data: SchottkyData, params: DimensionParams, context: RunContext) -> CommandOutcome:
    @step(offload=True, name="bowen_dimension")
    def bowen_step(group: SchottkyData) -> BowenEstimate:
        return bowen_dimension(group, params.tol, params.M)

    @step(offload=True, name="box_counting_dimension")
    def box_step(group: SchottkyData) -> DimensionEstimate:
        return box_counting_dimension(group, params.target_count, params.scales)

    bowen, box = _unwrap(await (bowen_step & box_step).execute(data, context=context))
    certificate = zeta_certificate(data, bowen.dimension, params.M)
    return CommandOutcome(
        results={
            "bowen_dimension": bowen.dimension,
            "leading_eigenvalue": bowen.eigenvalue,
            "box_dimension": box.dimension,
            "box_counts": list(box.counts),
            "box_taus": list(box.taus),
            "box_residual": box.residual,
            "difference": abs(bowen.dimension - box.dimension),
            "abs_zeta_at_dimension": abs(certificate.value),
        },
        certificates={
            "zeta_at_dimension": {"M": params.M, "delta_2m": certificate.delta},
            "power_iteration_residual": bowen.residual,
        },
    )


def _axis(spec: Sequence[float]) -> np.ndarray:
    lo, hi, n = spec
    return np.linspace(float(lo), float(hi), int(n))


@command("zeta-grid")
def run_zeta_grid(data: SchottkyData, params: ZetaGridParams, context: RunContext) -> CommandOutcome:
    re, im = _axis(params.re), _axis(params.im)
    grid = zeta_grid(data, re, im, params.M, executor=context.executor)
    doubled = zeta_grid(data, re, im, 2 * params.M, executor=context.executor)
    rows = []
    for i, y in enumerate(im):
        for j, x in enumerate(re):
            a, b = grid.log_abs[i, j], doubled.log_abs[i, j]
            rows.append((x, y, a, b, abs(a - b)))
    finite = [row[4] for row in rows if math.isfinite(row[4])]
    return CommandOutcome(
        results={"points": len(rows)},
        certificates={"max_log_delta_2m": max(finite) if finite else None, "M": params.M},
        tables=(
            Table("zeta_grid.csv", ("re_s", "im_s", "log_abs_det", "log_abs_det_2m", "delta"), tuple(rows)),
        ),
    )


@command("zeros")
def run_zeros(data: SchottkyData, params: ZerosParams, context: RunContext) -> CommandOutcome:
    zeros = find_zeros(data, Rectangle.of(params.rect), params.M, executor=context.executor)
    unverified = [zero.s for zero in zeros if not zero.verified]
    if zeros.unresolved or unverified:
        raise ConvergenceError(
            f"{len(zeros.unresolved)} unresolved boxes and {len(unverified)} zeros failing the "
            f"M={2 * params.M} check in {zeros.rect}"
        )
    rows = []
    invariance: List[float] = []
    for zero in zeros:
        row: Tuple[Any, ...] = (
            zero.s.real,
            zero.s.imag,
            zero.abs_det,
            zero.M,
            zero.iterations,
            zero.multiplicity,
            zero.delta_2m,
            zero.verified,
        )
        if params.check_invariance:
            eigen = eigenfunction_at_zero(data, zero.s, params.M)
            residual = refined_invariance_residual(data, eigen, params.tau) if eigen.is_null else math.nan
            invariance.append(residual)
            row += (residual,)
        rows.append(row)
    columns = ("re_s", "im_s", "abs_det", "M", "newton_iters", "multiplicity", "delta_2m", "verified")
    if params.check_invariance:
        columns += ("invariance_residual",)
    results: Dict[str, Any] = {
        "zeros": len(zeros),
        "count_with_multiplicity": zeros.count,
        "unresolved": [
            {
                "rect": [b.rect.re_min, b.rect.re_max, b.rect.im_min, b.rect.im_max],
                "winding": b.winding,
                "reason": b.reason,
            }
            for b in zeros.unresolved
        ],
        "strip_bound": zeros.strip_bound(0.5),
    }
    if invariance:
        results["max_invariance_residual"] = max(invariance)
    return CommandOutcome(
        results=results,
        certificates={
            "max_delta_2m": max((z.delta_2m for z in zeros if math.isfinite(z.delta_2m)), default=None),
            "all_verified": all(z.verified for z in zeros),
        },
        tables=(Table("zeros.csv", columns, tuple(rows)),),
    )


@command("fup")
def run_fup(data: SchottkyData, params: FupParams, context: RunContext) -> CommandOutcome:
    scan = fup_scan(
        data,
        params.h,
        params.rho,
        params.C0,
        scan_cutoff(data, params.nu),
        grid_factor=params.grid_factor,
        certify=params.certify,
        cover_scale=params.cover_scale,
        seed=context.task_seed(1),
        executor=context.executor,
    )
    rows = tuple(
        (row.h, row.rho, row.C0, row.N, row.restricted_norm, row.whole_norm, row.restricted_norm_2n, row.delta_2n)
        for row in scan.rows
    )
    fits = {
        format(C0, "g"): {
            "beta_fit": fit.beta,
            "residual": fit.residual,
            "points_used": fit.points_used,
            "dropped": [list(p) for p in fit.dropped],
        }
        for C0, fit in scan.fits.items()
    }
    deltas = [row.delta_2n for row in scan.rows if row.delta_2n is not None]
    return CommandOutcome(
        results={
            "fits": fits,
            "whole_beta_fit": scan.whole_fit.beta if scan.whole_fit else None,
        },
        certificates={"max_delta_2n": max(deltas) if deltas else None},
        tables=(
            Table(
                "fup_scan.csv",
                ("h", "rho", "C0", "N_grid", "restricted_norm", "whole_norm", "restricted_norm_2n", "delta_2n"),
                rows,
            ),
        ),
    )


@command("equivariance")
async def run_equivariance(data: SchottkyData, params: EquivarianceParams, context: RunContext) -> CommandOutcome:
    gamma = word_map(data, Alphabet.of(data).check(params.word))
    s = complex(0.5 - params.nu, 1.0 / params.h)
    grid = CircleGrid(params.N)

    def residual(g: CircleGrid) -> float:
        return equivariance_residual(gamma, s, g)

    coarse, fine = await gather_map(context, residual, (grid, grid.doubled()))
    return CommandOutcome(
        results={"s": s, "N": params.N, "residual": coarse},
        certificates={"residual_2n": fine, "ratio": coarse / fine if fine else None},
    )


@command("localization")
async def run_localization(data: SchottkyData, params: LocalizationParams, context: RunContext) -> CommandOutcome:
    s0 = complex(*params.s0)
    if s0.imag == 0.0:
        raise InvalidParameterError(f"localization needs Im s0 != 0, got s0 = {s0}")
    h = 1.0 / abs(s0.imag)

    def profile_at(M: int) -> LocalizationProfile:
        return eigenfunction_localization(data, s0, M, h, params.K, rho=params.rho)

    profile, doubled = await gather_map(context, profile_at, (params.M, 2 * params.M))
    rows = []
    deltas: List[float] = []
    for piece, check in zip(profile.pieces, doubled.pieces):
        delta = abs(piece.outside_fraction - check.outside_fraction)
        deltas.append(delta)
        rows.extend(
            (format_word(piece.word, data.r), xi, magnitude, piece.outside_fraction, check.outside_fraction, delta)
            for xi, magnitude in zip(piece.xi, piece.magnitude)
        )
    return CommandOutcome(
        results={
            "h": h,
            "K": params.K,
            "outside_fraction": {format_word(p.word, data.r): p.outside_fraction for p in profile.pieces},
            "max_outside_fraction": profile.max_outside_fraction,
            "localized": profile.localized,
        },
        certificates={
            "eigenfunction_residual": profile.eigenfunction.residual,
            "null_multiplicity": profile.eigenfunction.multiplicity,
            "M": params.M,
            "max_outside_fraction_delta_2m": max(deltas, default=0.0),
        },
        tables=(
            Table(
                "localization.csv",
                ("word", "xi", "abs_transform", "outside_fraction", "outside_fraction_2m", "delta_2m"),
                tuple(rows),
            ),
        ),
    )
