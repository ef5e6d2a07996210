"""Exception hierarchy.

Library code raises these; the pipeline captures them into ``Error`` results
and the command line maps the two branches onto exit codes 1 and 2.
"""
from __future__ import annotations

from typing import TYPE_CHECKING, Any, Sequence

if TYPE_CHECKING:
    from schottky_lab.schottky import ValidationReport


class SchottkyLabError(Exception):
    """Base class for every error raised by the lab."""


class ValidationFailure(SchottkyLabError):
    """An input or precondition was rejected."""


class NumericalError(SchottkyLabError):
    """A numerical procedure did not reach its tolerance."""


class InvalidParameterError(ValidationFailure, ValueError):
    pass


class InadmissibleWordError(ValidationFailure):
    def __init__(self, word: Sequence[int], reason: str) -> None:
        super().__init__(f"inadmissible word {tuple(word)}: {reason}")
        self.word = tuple(word)


class InvalidPartitionError(ValidationFailure):
    pass


class SchottkyValidationError(ValidationFailure):
    def __init__(self, report: "ValidationReport") -> None:
        failures = "; ".join(report.failures) or "unknown failure"
        super().__init__(f"Schottky data rejected: {failures}")
        self.report = report


class InsufficientSamplesError(ValidationFailure):
    pass


class CutoffError(ValidationFailure):
    pass


class GridResolutionError(ValidationFailure):
    pass


class DegenerateStationaryPointError(ValidationFailure):
    pass


class ConfigError(ValidationFailure):
    """Raised (or returned inside ``Error``) when a config does not validate."""

    def __init__(self, issues: Sequence[Any]) -> None:
        self.issues = tuple(issues)
        lines = [f"{issue.path}: {issue.message}" for issue in self.issues]
        super().__init__("invalid configuration: " + "; ".join(lines))


class PoleError(SchottkyLabError, ZeroDivisionError):
    """Evaluation of a derivative at the pole of a Möbius map."""


class ConvergenceError(NumericalError):
    pass


class BranchTrackingError(NumericalError):
    pass


class BracketError(NumericalError):
    pass


def exit_code_for(exc: BaseException) -> int:
    """Exit status the command line reports for ``exc``.

    Raises:
        The exception itself when it is not one of ours.
    """
    if isinstance(exc, NumericalError):
        return 2
    if isinstance(exc, (ValidationFailure, PoleError)):
        return 1
    raise exc
