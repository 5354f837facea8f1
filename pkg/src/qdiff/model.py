"""Physical parameters, fundamental constants and derived dimensionless groups.

All quantities are SI. The constants may be overridden on a ``ModelParams``
instance, which is how reduced (dimensionless) unit systems are expressed:
e.g. ``hbar = sqrt(8 * lambda_param)`` with ``mass = barrier_amplitude =
friction = wavenumber = 1`` describes a zero-temperature run with a given
quantum parameter.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

# CODATA 2018
HBAR = 1.054571817e-34  # J s
K_B = 1.380649e-23  # J/K
PROTON_MASS = 1.67262192369e-27  # kg
ELECTRON_MASS = 9.1093837015e-31  # kg
ELECTRON_VOLT = 1.602176634e-19  # J
ANGSTROM = 1e-10  # m

ROOM_TEMPERATURE = 298.15  # K

PARTICLE_MASSES = {"proton": PROTON_MASS, "electron": ELECTRON_MASS}


def _check_finite(**values: float) -> None:
    for name, value in values.items():
        if not math.isfinite(value):
            raise ValueError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class ModelParams:
    """Inputs of the overdamped model ``V(x) = U cos(q x)``.

    ``temperature == 0`` selects the zero-temperature (purely quantum) mode.
    """

    mass: float
    friction: float
    temperature: float
    barrier_amplitude: float
    wavenumber: float
    hbar: float = HBAR
    k_b: float = K_B

    def __post_init__(self) -> None:
        _check_finite(
            mass=self.mass,
            friction=self.friction,
            temperature=self.temperature,
            barrier_amplitude=self.barrier_amplitude,
            wavenumber=self.wavenumber,
            hbar=self.hbar,
            k_b=self.k_b,
        )
        if self.mass <= 0:
            raise ValueError("mass must be > 0")
        if self.friction <= 0:
            raise ValueError("friction must be > 0")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.barrier_amplitude < 0:
            raise ValueError("barrier_amplitude must be >= 0")
        if self.wavenumber <= 0:
            raise ValueError("wavenumber must be > 0")
        if self.hbar < 0 or self.k_b <= 0:
            raise ValueError("hbar must be >= 0 and k_b > 0")

    @property
    def zero_temperature(self) -> bool:
        return self.temperature == 0.0

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.wavenumber

    @classmethod
    def for_particle(
        cls,
        particle: str,
        temperature: float,
        lattice_constant: float,
        barrier_amplitude: float = 0.0,
        friction: float = 1.0,
    ) -> "ModelParams":
        """Build parameters for a named particle (``proton`` or ``electron``)."""
        try:
            mass = PARTICLE_MASSES[particle]
        except KeyError:
            raise ValueError(f"unknown particle {particle!r}") from None
        return cls(
            mass=mass,
            friction=friction,
            temperature=temperature,
            barrier_amplitude=barrier_amplitude,
            wavenumber=2.0 * math.pi / lattice_constant,
        )

    @classmethod
    def reduced_thermal(cls, beta_u: float, theta: float) -> "ModelParams":
        """Reduced units ``k_B T = q = b = m = 1`` with ``hbar`` set by ``theta``."""
        if theta < 0:
            raise ValueError("theta must be >= 0")
        return cls(
            mass=1.0,
            friction=1.0,
            temperature=1.0,
            barrier_amplitude=beta_u,
            wavenumber=1.0,
            hbar=math.sqrt(8.0 * theta),
            k_b=1.0,
        )

    @classmethod
    def reduced_zero_temperature(cls, lambda_param: float) -> "ModelParams":
        """Reduced units ``U = q = b = m = 1`` at ``T = 0`` with ``hbar`` set by ``lambda_param``."""
        if lambda_param <= 0:
            raise ValueError("lambda_param must be > 0")
        return cls(
            mass=1.0,
            friction=1.0,
            temperature=0.0,
            barrier_amplitude=1.0,
            wavenumber=1.0,
            hbar=math.sqrt(8.0 * lambda_param),
            k_b=1.0,
        )


@dataclass(frozen=True)
class DimensionlessGroups:
    """Derived numbers; thermal ones are ``None`` at T = 0, barrier ones at U = 0."""

    beta: Optional[float]
    lambda_T: Optional[float]
    theta: Optional[float]
    beta_u: Optional[float]
    lambda_param: Optional[float]
    omega_u: Optional[float]

    def as_dict(self) -> dict:
        return {
            "beta": self.beta,
            "lambda_T": self.lambda_T,
            "theta": self.theta,
            "beta_u": self.beta_u,
            "lambda_param": self.lambda_param,
            "omega_u": self.omega_u,
        }


def thermal_wavelength(mass: float, temperature: float, hbar: float = HBAR, k_b: float = K_B) -> float:
    """Thermal de Broglie wavelength ``hbar / (2 sqrt(m k_B T))``."""
    if mass <= 0 or temperature <= 0:
        raise ValueError("mass and temperature must be > 0")
    return hbar / (2.0 * math.sqrt(mass * k_b * temperature))


def derive_groups(params: ModelParams) -> DimensionlessGroups:
    q = params.wavenumber
    U = params.barrier_amplitude
    if params.temperature > 0:
        beta = 1.0 / (params.k_b * params.temperature)
        lam_t = thermal_wavelength(params.mass, params.temperature, params.hbar, params.k_b)
        theta = lam_t * lam_t * q * q / 2.0
        beta_u = beta * U
    else:
        beta = lam_t = theta = beta_u = None
    if U > 0:
        lambda_param = params.hbar ** 2 * q * q / (8.0 * params.mass * U)
        omega_u = 4.0 * U / params.hbar if params.hbar > 0 else math.inf
    else:
        lambda_param = omega_u = None
    return DimensionlessGroups(
        beta=beta,
        lambda_T=lam_t,
        theta=theta,
        beta_u=beta_u,
        lambda_param=lambda_param,
        omega_u=omega_u,
    )


def temperature_for_theta(
    target_theta: float,
    mass: float,
    wavenumber: float,
    hbar: float = HBAR,
    k_b: float = K_B,
) -> float:
    """Temperature at which ``lambda_T**2 q**2 / 2`` equals ``target_theta``."""
    _check_finite(target_theta=target_theta, mass=mass, wavenumber=wavenumber)
    if target_theta <= 0 or mass <= 0 or wavenumber <= 0:
        raise ValueError("target_theta, mass and wavenumber must be > 0")
    return hbar ** 2 * wavenumber ** 2 / (8.0 * target_theta * mass * k_b)


class Applicability(str, enum.Enum):
    SEMICLASSICAL = "semiclassical"
    MARGINAL = "marginal"
    QUANTUM = "quantum"


SEMICLASSICAL_THETA_MAX = 0.5
MARGINAL_THETA_MAX = 1.0


def semiclassical_applicability(groups: DimensionlessGroups) -> Applicability:
    """Classify how trustworthy the quasi-equilibrium correction is.

    Zero temperature is quantum by definition.
    """
    if groups.theta is None:
        return Applicability.QUANTUM
    if groups.theta < SEMICLASSICAL_THETA_MAX:
        return Applicability.SEMICLASSICAL
    if groups.theta < MARGINAL_THETA_MAX:
        return Applicability.MARGINAL
    return Applicability.QUANTUM
