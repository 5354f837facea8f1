"""JSON run configuration: strict schema, unit conversion and solver defaults.

A config is either *physical* (particle or mass, barrier height, lattice
constant, temperature, friction; SI with Å / eV conveniences) or
*dimensionless* (``beta_u`` + ``theta`` for the thermal mode,
``lambda_param`` for the zero-temperature modes). Dimensionless configs run
in reduced units (see ``ModelParams.reduced_thermal`` and
``ModelParams.reduced_zero_temperature``); their time fields are in the
same reduced units.
"""

from __future__ import annotations

import json
import math
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .fields import Grid, periodic_grid
from .model import ANGSTROM, ELECTRON_VOLT, PARTICLE_MASSES, ModelParams
from .pde_solver import FIXED, HALVING, SolverConfig

Mode = Literal["semiclassical", "quantum-temp", "bohm", "fourth-order"]


class ConfigError(ValueError):
    pass


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridSettings(_Strict):
    periods: int = Field(64, ge=1)
    cells_per_period: int = Field(64, ge=2)


class TimeSettings(_Strict):
    t_max: Optional[float] = Field(None, gt=0)
    dt: Optional[float] = Field(None, gt=0)
    output_stride: Optional[int] = Field(None, ge=1)
    adaptivity: Optional[Literal["fixed", "halving"]] = None
    dt_growth: Optional[float] = Field(None, ge=1.0)
    sigma0: Optional[float] = Field(None, gt=0)
    boundary_mass_tolerance: float = Field(1e-6, gt=0)
    max_relative_change: float = Field(1e-3, gt=0)


class OutputSettings(_Strict):
    csv: Optional[str] = None
    summary: Optional[str] = None


class RunConfig(_Strict):
    mode: Mode
    particle: Optional[Literal["proton", "electron"]] = None
    mass_kg: Optional[float] = Field(None, gt=0)
    temperature_K: Optional[float] = Field(None, ge=0)
    friction: Optional[float] = Field(None, gt=0)
    U_J: Optional[float] = Field(None, ge=0)
    U_eV: Optional[float] = Field(None, ge=0)
    lattice_m: Optional[float] = Field(None, gt=0)
    lattice_A: Optional[float] = Field(None, gt=0)
    beta_u: Optional[float] = Field(None, ge=0)
    theta: Optional[float] = Field(None, ge=0)
    lambda_param: Optional[float] = Field(None, gt=0)
    include_nonlinear: bool = False
    initial: Literal["packet", "equilibrium"] = "packet"
    grid: GridSettings = GridSettings()
    time: TimeSettings = TimeSettings()
    output: OutputSettings = OutputSettings()

    @model_validator(mode="after")
    def _exclusive(self) -> "RunConfig":
        dimensionless = [k for k in ("beta_u", "theta", "lambda_param") if getattr(self, k) is not None]
        physical = [
            k
            for k in ("particle", "mass_kg", "temperature_K", "friction", "U_J", "U_eV", "lattice_m", "lattice_A")
            if getattr(self, k) is not None
        ]
        if dimensionless and physical:
            raise ValueError(
                f"mix of dimensionless {dimensionless} and physical {physical} parameters; use one parametrization"
            )
        if not dimensionless and not physical:
            raise ValueError("no model parameters given")
        if self.particle is not None and self.mass_kg is not None:
            raise ValueError("give either particle or mass_kg, not both")
        if self.U_J is not None and self.U_eV is not None:
            raise ValueError("give either U_J or U_eV, not both")
        if self.lattice_m is not None and self.lattice_A is not None:
            raise ValueError("give either lattice_m or lattice_A, not both")
        if dimensionless:
            if self.mode == "semiclassical":
                if self.beta_u is None or self.lambda_param is not None:
                    raise ValueError("semiclassical dimensionless configs take beta_u and theta")
            elif self.lambda_param is None or self.beta_u is not None or self.theta is not None:
                raise ValueError(f"{self.mode} dimensionless configs take lambda_param only")
        else:
            missing = []
            if self.particle is None and self.mass_kg is None:
                missing.append("particle or mass_kg")
            if self.lattice_m is None and self.lattice_A is None:
                missing.append("lattice_m or lattice_A")
            if self.friction is None:
                missing.append("friction")
            if self.temperature_K is None:
                missing.append("temperature_K")
            if missing:
                raise ValueError("missing " + ", ".join(missing))
        if self.initial == "equilibrium" and self.mode != "semiclassical":
            raise ValueError("initial='equilibrium' is only defined for the semiclassical mode")
        return self

    @property
    def dimensionless(self) -> bool:
        return self.beta_u is not None or self.lambda_param is not None

    def model_params(self) -> ModelParams:
        if self.dimensionless:
            if self.mode == "semiclassical":
                return ModelParams.reduced_thermal(self.beta_u, self.theta or 0.0)
            return ModelParams.reduced_zero_temperature(self.lambda_param)
        mass = self.mass_kg if self.mass_kg is not None else PARTICLE_MASSES[self.particle]
        lattice = self.lattice_m if self.lattice_m is not None else self.lattice_A * ANGSTROM
        if self.U_J is not None:
            U = self.U_J
        elif self.U_eV is not None:
            U = self.U_eV * ELECTRON_VOLT
        else:
            U = 0.0
        return ModelParams(
            mass=mass,
            friction=self.friction,
            temperature=self.temperature_K,
            barrier_amplitude=U,
            wavenumber=2.0 * math.pi / lattice,
        )

    def build_grid(self, params: ModelParams) -> Grid:
        return periodic_grid(params.wavenumber, self.grid.periods, self.grid.cells_per_period)

    def solver_config(self, params: ModelParams) -> SolverConfig:
        """Fill time defaults from the mode's natural time scale."""
        q = params.wavenumber
        if self.mode == "semiclassical":
            scale = params.friction / (params.k_b * params.temperature * q * q)
            defaults = dict(dt=0.5, t_max=1e5, output_stride=10, adaptivity=FIXED, dt_growth=1.0)
        elif self.mode == "fourth-order":
            scale = 4.0 * params.mass * params.friction / (params.hbar ** 2 * q ** 4)
            defaults = dict(dt=1.0, t_max=100.0, output_stride=1, adaptivity=FIXED, dt_growth=1.0)
        else:
            energy = params.barrier_amplitude
            if energy <= 0:
                energy = params.hbar ** 2 * q * q / (8.0 * params.mass)
            scale = params.friction / (energy * q * q)
            if self.mode == "quantum-temp":
                defaults = dict(dt=1e-4, t_max=1e3, output_stride=20, adaptivity=HALVING, dt_growth=1.05)
            else:
                defaults = dict(dt=1e-5, t_max=1e4, output_stride=5, adaptivity=HALVING, dt_growth=1.2)
        t = self.time
        return SolverConfig(
            dt_initial=t.dt if t.dt is not None else defaults["dt"] * scale,
            t_max=t.t_max if t.t_max is not None else defaults["t_max"] * scale,
            output_stride=t.output_stride or defaults["output_stride"],
            adaptivity=t.adaptivity or defaults["adaptivity"],
            sigma0=t.sigma0 if t.sigma0 is not None else 0.5 / q,
            boundary_mass_tolerance=t.boundary_mass_tolerance,
            dt_growth=t.dt_growth if t.dt_growth is not None else defaults["dt_growth"],
            max_relative_change=t.max_relative_change,
        )


class SweepConfig(_Strict):
    beta_u: list[float]
    theta: Optional[list[float]] = None
    lambda_param: Optional[list[float]] = None
    include_nonlinear: bool = False
    workers: Optional[int] = Field(None, ge=1)
    output: Optional[str] = None

    @model_validator(mode="after")
    def _one_axis(self) -> "SweepConfig":
        if (self.theta is None) == (self.lambda_param is None):
            raise ValueError("a sweep takes beta_u with exactly one of theta or lambda_param")
        if not self.beta_u or not (self.theta or self.lambda_param):
            raise ValueError("sweep lists must be non-empty")
        return self


def _format_validation(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"{loc}: {err['msg']}")
    return "; ".join(lines)


def _load_json(text: str) -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def parse_config(text: str) -> RunConfig:
    """Parse and validate a run configuration (JSON text)."""
    data = _load_json(text)
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_validation(exc)) from None


def parse_sweep_config(text: str) -> SweepConfig:
    data = _load_json(text)
    try:
        return SweepConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_validation(exc)) from None
