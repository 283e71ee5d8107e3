"""Run configuration models; unknown keys are rejected everywhere."""

import json
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from app.services.dg_core import DEFAULT_TAU, FluxParams, GeometryMode
from app.services.refelem import MAX_DEGREE, MIN_DEGREE

SCHEMA_VERSION = 1

Preset = Literal["snell", "scholte", "scholte-km", "aniso-demo", "random"]
Scenario = Literal["snell", "scholte", "scholte-km", "curved-scholte"]


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


def _check_degree(v: int) -> int:
    if not MIN_DEGREE <= v <= MAX_DEGREE:
        raise ValueError(f"N must be between {MIN_DEGREE} and {MAX_DEGREE}")
    return v


class MeshConfig(StrictModel):
    n: int = 8
    path: str | None = None
    warped: bool = False

    @field_validator("n")
    @classmethod
    def validate_n(cls, v):
        if v < 1:
            raise ValueError("n must be at least 1")
        return v


class FluxConfig(StrictModel):
    kind: Literal["penalty", "central"] = "penalty"
    tau_p: float = DEFAULT_TAU
    tau_u: float = DEFAULT_TAU

    @field_validator("tau_p", "tau_u")
    @classmethod
    def validate_tau(cls, v):
        if v < 0:
            raise ValueError("penalty parameters must be non-negative")
        return v

    def to_params(self) -> FluxParams:
        if self.kind == "central":
            return FluxParams(0.0, 0.0)
        return FluxParams(self.tau_p, self.tau_u)


class TimeSettings(StrictModel):
    t_final: float | None = None
    cfl: float = 0.5
    dt_override: float | None = None
    snapshot_times: list[float] | None = None

    @field_validator("cfl")
    @classmethod
    def validate_cfl(cls, v):
        if not 0 < v <= 1:
            raise ValueError("cfl must lie in (0, 1]")
        return v


class InlineMedia(StrictModel):
    """Homogeneous media for a loaded mesh."""

    c_acoustic: float
    lam: float
    mu: float
    rho: float = 1.0

    @model_validator(mode="after")
    def validate_positive(self):
        if self.c_acoustic <= 0 or self.mu <= 0 or self.rho <= 0:
            raise ValueError("c_acoustic, mu and rho must be positive")
        return self


class MaterialConfig(StrictModel):
    preset: Preset = "scholte"
    heterogeneous: bool = False
    inline: InlineMedia | None = None


class SimulateConfig(StrictModel):
    N: int = 3
    mesh: MeshConfig = MeshConfig()
    flux: FluxConfig = FluxConfig()
    time: TimeSettings = TimeSettings()
    material: MaterialConfig = MaterialConfig()
    geometry_mode: GeometryMode | None = None
    seed: int = 0
    output_dir: str | None = None
    vtk: bool = True

    @field_validator("N")
    @classmethod
    def validate_degree(cls, v):
        return _check_degree(v)


class ConvergenceConfig(StrictModel):
    scenario: Scenario = "scholte"
    degrees: list[int] = [1, 2, 3]
    divisions: list[int] = [8, 16, 32]
    flux: FluxConfig = FluxConfig()
    cfl: float = 0.5
    t_final: float | None = None
    consistency: bool = False
    output_dir: str | None = None

    @field_validator("degrees")
    @classmethod
    def validate_degrees(cls, v):
        if not v:
            raise ValueError("degrees must not be empty")
        return [_check_degree(d) for d in v]

    @field_validator("divisions")
    @classmethod
    def validate_divisions(cls, v):
        if len(v) < 2 or any(n < 1 for n in v):
            raise ValueError("divisions needs at least two positive entries")
        return v


class SpectraConfig(StrictModel):
    N: int = 3
    mesh: MeshConfig = MeshConfig()
    preset: Preset = "random"
    taus: list[float] = [0.0, 0.5, 1.0]
    seed: int = 0
    output_dir: str | None = None

    @field_validator("N")
    @classmethod
    def validate_degree(cls, v):
        return _check_degree(v)

    @field_validator("taus")
    @classmethod
    def validate_taus(cls, v):
        if not v or any(t < 0 for t in v):
            raise ValueError("taus must be a non-empty list of non-negative values")
        return v


class PatConfig(StrictModel):
    N: int = 3
    mesh: MeshConfig = MeshConfig(n=32)
    t_final: float = 2.0
    max_iter: int = 5
    mode: Literal["coupled", "acoustic"] = "coupled"
    band: float | None = None
    cfl: float = 0.5
    output_dir: str | None = None
    vtk: bool = True

    @field_validator("N")
    @classmethod
    def validate_degree(cls, v):
        return _check_degree(v)

    @field_validator("max_iter")
    @classmethod
    def validate_max_iter(cls, v):
        if v < 1:
            raise ValueError("max_iter must be at least 1")
        return v


class RunConfig(StrictModel):
    """Top-level config file: one optional payload per subcommand."""

    schema_version: Literal[1] = SCHEMA_VERSION
    simulate: SimulateConfig = SimulateConfig()
    convergence: ConvergenceConfig = ConvergenceConfig()
    spectra: SpectraConfig = SpectraConfig()
    pat: PatConfig = PatConfig()


def load_run_config(path: str | Path | None) -> RunConfig:
    """Parse and validate a JSON config file; None gives the defaults."""
    if path is None:
        return RunConfig()
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Config file not found: {path}")
    return RunConfig.model_validate(json.loads(path.read_text()))


def with_overrides(model: StrictModel, overrides: dict) -> StrictModel:
    """
    Re-validate a payload with command-line values applied.

    Keys with value None are skipped; dotted keys address nested models.
    """
    data = model.model_dump()
    for key, value in overrides.items():
        if value is None:
            continue
        target = data
        *parents, leaf = key.split(".")
        for p in parents:
            target = target[p]
        target[leaf] = value
    return type(model).model_validate(data)
