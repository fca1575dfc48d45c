"""Run configuration: a YAML document validated by pydantic.

Every field has a default, so an empty file is a valid configuration.
Unknown keys anywhere in the document are rejected.
"""

from __future__ import annotations

from pathlib import Path
from typing import Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .errors import ConfigError
from .grid import Grid
from .propagators import EvolutionSpec, PotentialSpec
from .state import PhysicalConstants, WaveFunction, cat_state, coherent_state, gaussian, gausson, \
    harmonic_eigenstate, plane_wave

CHECK_IDS = (
    "madelung_equivalence",      # 1
    "madelung_residuals",        # 2
    "correlation_pde",           # 3
    "energy_decomposition",      # 4
    "compatibility",             # 5
    "second_moment_balance",     # 6
    "wigner",                    # 7
    "characteristic_equation",   # 8
    "brackets",                  # 9
    "propagator_physics",        # 10
    "uncertainty",               # 11
    "reproducibility",           # 12
    "propagation",               # Strang order on the configured state
)


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GridConfig(_Section):
    n_dims: Literal[1, 2] = 1
    points: int = 256
    extent: float = Field(20.0, gt=0)

    @field_validator("points")
    @classmethod
    def _power_of_two(cls, n):
        if n < 8 or n & (n - 1):
            raise ValueError(f"points must be a power of two >= 8, got {n}")
        return n

    def build(self) -> Grid:
        return Grid(self.n_dims, self.points, self.extent)


class ConstantsConfig(_Section):
    hbar: float = Field(1.0, gt=0)
    mass: float = Field(1.0, gt=0)

    def build(self) -> PhysicalConstants:
        return PhysicalConstants(self.hbar, self.mass)


class PotentialConfig(_Section):
    kind: Literal["free", "harmonic", "quartic"] = "harmonic"
    omega: float = Field(1.0, gt=0)
    gamma: float = 0.1
    seam: float = Field(0.0, ge=0)

    def build(self, grid: Grid, constants: PhysicalConstants) -> PotentialSpec:
        if self.kind == "harmonic":
            return PotentialSpec.harmonic(grid, self.omega, constants.mass, self.seam)
        if self.kind == "quartic":
            return PotentialSpec.quartic(grid, self.gamma)
        return PotentialSpec.free(grid)


class EvolutionConfig(_Section):
    dt: float = Field(0.01, gt=0)
    n_steps: int = Field(200, ge=1)
    b: float = 0.0

    def build(self) -> EvolutionSpec:
        return EvolutionSpec(self.dt, self.n_steps, self.b)


class StateConfig(_Section):
    kind: Literal["gaussian", "coherent", "eigenstate", "gausson", "cat", "plane_wave"] = "coherent"
    sigma: float = Field(1.0, gt=0)
    center: float = 1.0
    momentum: float = 0.5
    omega: float = Field(1.0, gt=0)
    level: int = Field(0, ge=0)
    b: float = -1.0
    separation: float = 4.0
    mode: int = 1

    def build(self, grid: Grid, c: PhysicalConstants) -> WaveFunction:
        n = grid.n_dims
        if self.kind == "gaussian":
            return gaussian(grid, c, self.sigma, (self.center,) * n, (self.momentum,) * n)
        if self.kind == "coherent":
            return coherent_state(grid, c, self.omega, (self.center,) * n, (self.momentum,) * n)
        if self.kind == "eigenstate":
            return harmonic_eigenstate(grid, c, self.omega, self.level)
        if self.kind == "gausson":
            return gausson(grid, c, self.b, (self.center,) * n)
        if self.kind == "cat":
            return cat_state(grid, c, self.sigma, self.separation, self.momentum)
        return plane_wave(grid, c, self.mode)


class RunConfig(_Section):
    grid: GridConfig = GridConfig()
    constants: ConstantsConfig = ConstantsConfig()
    potential: PotentialConfig = PotentialConfig()
    evolution: EvolutionConfig = EvolutionConfig()
    state: StateConfig = StateConfig()
    output_dir: str = "results"
    checks: tuple[str, ...] = CHECK_IDS
    threads: int = Field(1, ge=1)

    @field_validator("checks", mode="before")
    @classmethod
    def _known_checks(cls, value):
        if isinstance(value, str):
            value = [value]
        value = list(value)
        if "all" in value:
            return CHECK_IDS
        unknown = sorted(set(value) - set(CHECK_IDS))
        if unknown:
            raise ValueError(f"unknown check ids {unknown}; choose from {list(CHECK_IDS)}")
        # suite order, duplicates dropped
        return tuple(c for c in CHECK_IDS if c in value)


def parse_config(data: dict | None) -> RunConfig:
    try:
        return RunConfig.model_validate(data or {})
    except ValidationError as err:
        raise ConfigError(str(err)) from err


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except (OSError, yaml.YAMLError) as err:
        raise ConfigError(f"cannot read {path}: {err}") from err
    if data is not None and not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return parse_config(data)
