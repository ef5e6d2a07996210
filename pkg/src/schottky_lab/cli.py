"""Command-line entry point.

``schottky-lab [COMMAND] --config run.toml [--out DIR] [--threads N] [--seed U]``

A run is the pipeline ``build_group >> validate_group >> run_command >> emit``.
Exceptions raised inside it come back as ``Error`` and are mapped to exit
status 1 (rejected input) or 2 (numerical non-convergence).
"""
from __future__ import annotations

import argparse
import asyncio
import dataclasses
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from schottky_lab import __version__
from schottky_lab.commands import CommandOutcome, dispatch
from schottky_lab.config import COMMANDS as COMMAND_NAMES
from schottky_lab.config import RunConfig, load_config, with_overrides
from schottky_lab.context import RunContext
from schottky_lab.errors import ConfigError, SchottkyValidationError, exit_code_for
from schottky_lab.export import RunReport, write_csv, write_report, write_timings
from schottky_lab.pipeline import Step, step
from schottky_lab.schottky import SchottkyData, ValidationReport, validate_schottky

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


@dataclass
class RunState:
    """What the pipeline has produced so far; kept when a later step fails."""

    config: RunConfig
    data: Optional[SchottkyData] = None
    validation: Optional[ValidationReport] = None
    outcome: Optional[CommandOutcome] = None
    outputs: List[str] = field(default_factory=list)
    timings: Dict[str, float] = field(default_factory=dict)


def _timed(state: RunState, name: str, started: float) -> None:
    state.timings[name] = time.perf_counter() - started


@step(name="build_group")
def build_group(state: RunState) -> RunState:
    started = time.perf_counter()
    state.data = state.config.group.build()
    _timed(state, "build_group", started)
    return state


@step(name="validate_group")
def validate_group(state: RunState) -> RunState:
    assert state.data is not None
    started = time.perf_counter()
    state.validation = validate_schottky(state.data)
    _timed(state, "validate_group", started)
    if not state.validation.passed:
        raise SchottkyValidationError(state.validation)
    return state


@step(context=True, name="run_command")
async def run_command(state: RunState, context: RunContext) -> RunState:
    assert state.data is not None
    command = state.config.command
    logger.info("running %s", command)
    started = time.perf_counter()
    state.outcome = await dispatch(command, state.data, state.config.params(), context)
    _timed(state, command, started)
    return state


@step(context=True, name="emit")
def emit(state: RunState, context: RunContext) -> RunState:
    assert state.outcome is not None
    for table in state.outcome.tables:
        path = write_csv(context.out_dir / table.filename, table.columns, table.rows)
        logger.info("wrote %s (%d rows)", path, len(table.rows))
        state.outputs.append(table.filename)
    return state


RUN_PIPELINE: Step[RunState] = Step.sequence([build_group, validate_group, run_command, emit])


def _validation_payload(report: Optional[ValidationReport]) -> Dict[str, Any]:
    if report is None:
        return {}
    payload = dataclasses.asdict(report)
    payload["passed"] = report.passed
    return payload


async def run(config: RunConfig, context: RunContext) -> RunReport:
    """Execute validate → command for ``config`` and write the CSV tables.

    Wall times are left in ``context.metadata["timings"]``.

    Raises:
        Exception: Anything that is neither a validation nor a numerical failure.
    """
    state = RunState(config)
    result = await RUN_PIPELINE.execute(state, context=context)
    context.metadata["timings"] = dict(state.timings)
    report = RunReport(
        command=config.command,
        config=config.echo(),
        validation=_validation_payload(state.validation),
        outputs=sorted(state.outputs),
    )
    if result.is_error():
        exc = result.error
        code = exit_code_for(exc)
        logger.error("%s failed: %s", config.command, exc)
        return report.model_copy(update={"exit_code": code, "error": f"{type(exc).__name__}: {exc}"})
    assert state.outcome is not None
    return report.model_copy(
        update={"results": state.outcome.results, "certificates": state.outcome.certificates}
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="schottky-lab",
        description="Numerical experiments on Schottky groups: zeta zeros, transfer operators, FUP scans.",
    )
    parser.add_argument(
        "command",
        nargs="?",
        choices=COMMAND_NAMES,
        help="subcommand; defaults to the 'command' key of the config",
    )
    parser.add_argument("--config", type=Path, required=True, help="TOML run configuration")
    parser.add_argument("--out", type=str, default=None, help="output directory")
    parser.add_argument("--threads", type=int, default=None, help="worker pool size")
    parser.add_argument("--seed", type=int, default=None, help="run seed (unsigned 64-bit)")
    parser.add_argument(
        "--log-level",
        default="WARNING",
        choices=("DEBUG", "INFO", "WARNING", "ERROR"),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return parser


def _report_config_error(error: ConfigError) -> int:
    for issue in error.issues:
        logger.error("config %s: %s", issue.path, issue.message)
        print(f"{issue.path}: {issue.message}", file=sys.stderr)
    return exit_code_for(error)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format=LOG_FORMAT)

    loaded = load_config(args.config)
    if loaded.is_error():
        return _report_config_error(loaded.error)
    merged = with_overrides(
        loaded.default_value(None),
        command=args.command,
        output=args.out,
        threads=args.threads,
        seed=args.seed,
    )
    if merged.is_error():
        return _report_config_error(merged.error)
    config: RunConfig = merged.default_value(None)

    context_fields: Dict[str, Any] = {"seed": config.seed, "out_dir": Path(config.output)}
    if config.threads is not None:
        context_fields["threads"] = config.threads
    with RunContext(**context_fields) as context:
        report = asyncio.run(run(config, context))
        write_report(context.out_dir, report)
        write_timings(context.out_dir, context.metadata.get("timings", {}))
    if report.error:
        print(report.error, file=sys.stderr)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
