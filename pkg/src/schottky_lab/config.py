"""Run configuration: a TOML document validated into ``RunConfig``."""
from __future__ import annotations

import tomllib
from dataclasses import dataclass
from pathlib import Path
from typing import Any, List, Literal, Optional, Tuple, Union

from expression import Error, Ok, Result
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from schottky_lab.errors import ConfigError
from schottky_lab.mobius import MobiusMap
from schottky_lab.schottky import (
    Disk,
    SchottkyData,
    elementary_schottky,
    paired_schottky,
    symmetric_schottky,
)


Command = Literal[
    "validate",
    "words",
    "partition",
    "dimension",
    "zeta-grid",
    "zeros",
    "fup",
    "equivariance",
    "localization",
]


COMMANDS: Tuple[str, ...] = (
    "validate",
    "words",
    "partition",
    "dimension",
    "zeta-grid",
    "zeros",
    "fup",
    "equivariance",
    "localization",
)


@dataclass(frozen=True)
class FieldIssue:
    path: str
    message: str


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class DiskSpec(_Section):
    center: float
    radius: float = Field(gt=0)


class GeneratorSpec(_Section):
    a: float
    b: float
    c: float
    d: float


class GroupSpec(_Section):
    """Either a preset with its parameters or explicit disks (and optional generators)."""

    preset: Optional[Literal["elementary", "symmetric"]] = None
    ell: Optional[float] = Field(default=None, gt=0)
    r: Optional[int] = Field(default=None, ge=2)
    gap_angle: Optional[float] = Field(default=None, gt=0)
    disks: Optional[List[DiskSpec]] = None
    generators: Optional[List[GeneratorSpec]] = None

    @model_validator(mode="after")
    def _one_group_spec(self) -> "GroupSpec":
        if (self.preset is None) == (self.disks is None):
            raise ValueError("exactly one group spec: give either preset or disks")
        if self.preset == "elementary" and self.ell is None:
            raise ValueError("preset 'elementary' needs ell")
        if self.preset == "symmetric" and (self.r is None or self.gap_angle is None):
            raise ValueError("preset 'symmetric' needs r and gap_angle")
        if self.preset is not None and self.generators is not None:
            raise ValueError("generators are only accepted together with disks")
        if self.disks is not None:
            if len(self.disks) < 2 or len(self.disks) % 2:
                raise ValueError(f"need an even, positive number of disks, got {len(self.disks)}")
            if self.generators is not None and len(self.generators) != len(self.disks):
                raise ValueError("need one generator per disk")
        return self

    def build(self) -> SchottkyData:
        """Construct the Schottky data; validation is a separate step."""
        if self.preset == "elementary":
            assert self.ell is not None
            return elementary_schottky(self.ell)
        if self.preset == "symmetric":
            assert self.r is not None and self.gap_angle is not None
            return symmetric_schottky(self.r, self.gap_angle)
        assert self.disks is not None
        disks = [Disk(d.center, d.radius) for d in self.disks]
        if self.generators is None:
            return paired_schottky(disks)
        return SchottkyData(
            r=len(disks) // 2,
            disks=tuple(disks),
            generators=tuple(MobiusMap.from_entries(g.a, g.b, g.c, g.d) for g in self.generators),
        )


class ZerosParams(_Section):
    rect: Tuple[float, float, float, float]
    M: int = Field(default=24, ge=4)
    check_invariance: bool = False
    tau: float = Field(default=0.1, gt=0)


class ZetaGridParams(_Section):
    re: Tuple[float, float, int]
    im: Tuple[float, float, int]
    M: int = Field(default=24, ge=4)


class WordsParams(_Section):
    depth: int = Field(default=6, ge=1, le=14)


class PartitionParams(_Section):
    tau: float = Field(default=0.1, gt=0)
    margin: float = Field(default=0.0, ge=0)
    C1: float = Field(default=4.0, ge=2)


class DimensionParams(_Section):
    tol: float = Field(default=1e-10, ge=1e-10)
    target_count: int = Field(default=10_000, ge=10)
    scales: int = Field(default=5, ge=2)
    M: int = Field(default=24, ge=4)


class FupParams(_Section):
    h: List[float] = Field(min_length=1)
    rho: float = Field(default=0.8, gt=0, lt=1)
    C0: List[float] = Field(default_factory=lambda: [1.0], min_length=1)
    grid_factor: float = Field(default=40.0, gt=0)
    certify: bool = True
    nu: Optional[float] = None
    cover_scale: float = Field(default=1.0, gt=0)


class EquivarianceParams(_Section):
    h: float = Field(default=2.0**-8, gt=0)
    N: int = Field(default=4096, ge=64)
    nu: float = 0.0
    word: List[int] = Field(default_factory=lambda: [1], min_length=1)


class LocalizationParams(_Section):
    s0: Tuple[float, float]
    M: int = Field(default=600, ge=4)
    K: float = Field(default=10.0, gt=0)
    rho: float = Field(default=0.5, gt=0, lt=1)


_SECTIONS = {
    "words": ("words", WordsParams),
    "partition": ("partition", PartitionParams),
    "dimension": ("dimension", DimensionParams),
    "zeta-grid": ("zeta_grid", ZetaGridParams),
    "zeros": ("zeros", ZerosParams),
    "fup": ("fup", FupParams),
    "equivariance": ("equivariance", EquivarianceParams),
    "localization": ("localization", LocalizationParams),
}


class RunConfig(_Section):
    command: Command
    seed: int = Field(default=0, ge=0, lt=2**64)
    threads: Optional[int] = Field(default=None, ge=1)
    output: str = "out"
    group: GroupSpec

    words: Optional[WordsParams] = None
    partition: Optional[PartitionParams] = None
    dimension: Optional[DimensionParams] = None
    zeta_grid: Optional[ZetaGridParams] = None
    zeros: Optional[ZerosParams] = None
    fup: Optional[FupParams] = None
    equivariance: Optional[EquivarianceParams] = None
    localization: Optional[LocalizationParams] = None

    @model_validator(mode="after")
    def _command_section(self) -> "RunConfig":
        entry = _SECTIONS.get(self.command)
        if entry is None:
            return self
        key, model = entry
        if getattr(self, key) is None:
            try:
                model()
            except ValidationError:
                raise ValueError(f"command {self.command!r} needs a [{key}] section") from None
        return self

    def params(self) -> Union[BaseModel, None]:
        """Parameters of the selected command (defaults filled in)."""
        entry = _SECTIONS.get(self.command)
        if entry is None:
            return None
        key, model = entry
        section = getattr(self, key)
        return section if section is not None else model()

    def echo(self) -> dict[str, Any]:
        return self.model_dump(mode="json", exclude_none=True)


def _path(loc: Tuple[Union[str, int], ...]) -> str:
    path = ""
    for part in loc:
        if isinstance(part, int):
            path += f"[{part}]"
        else:
            path += f".{part}" if path else str(part)
    return path or "<root>"


def _issues(error: ValidationError) -> List[FieldIssue]:
    issues = []
    for item in error.errors():
        message = str(item["msg"]).removeprefix("Value error, ")
        issues.append(FieldIssue(_path(tuple(item["loc"])), message))
    return issues


def parse_config(text: str) -> Result[RunConfig, ConfigError]:
    """Parse and validate a TOML run configuration.

    Returns:
        ``Ok(RunConfig)`` or ``Error(ConfigError)`` listing every field issue.
    """
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        return Error(ConfigError([FieldIssue("<root>", f"not valid TOML: {exc}")]))
    try:
        return Ok(RunConfig.model_validate(raw))
    except ValidationError as exc:
        return Error(ConfigError(_issues(exc)))


def load_config(path: Path) -> Result[RunConfig, ConfigError]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        return Error(ConfigError([FieldIssue("<file>", f"cannot read {path}: {exc.strerror}")]))
    return parse_config(text)


def with_overrides(config: RunConfig, **overrides: Any) -> Result[RunConfig, ConfigError]:
    """Revalidate ``config`` with command-line values on top; ``None`` means keep."""
    updates = {key: value for key, value in overrides.items() if value is not None}
    if not updates:
        return Ok(config)
    try:
        return Ok(RunConfig.model_validate({**config.model_dump(exclude_none=True), **updates}))
    except ValidationError as exc:
        return Error(ConfigError(_issues(exc)))
