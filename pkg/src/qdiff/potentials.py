"""External potentials, the quasi-equilibrium quantum potential and the effective potential W.

The effective potential is the temperature-integrated external plus
quantum potential evaluated on the classical Boltzmann density:

    W = (1 - theta) V + (theta * beta / 3) V**2

with ``theta = lambda_T**2 q**2 / 2``. The additive constant
``-theta * beta * U**2 / 3`` that the integration also produces is dropped;
nothing observable depends on it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Union

import numpy as np

from .fields import DensityField, Grid
from .model import HBAR, DimensionlessGroups

ArrayLike = Union[float, np.ndarray]

DENSITY_FLOOR_FRACTION = 1e-14


@dataclass(frozen=True)
class CosinePotential:
    amplitude: float
    wavenumber: float

    def __post_init__(self) -> None:
        if self.amplitude < 0 or self.wavenumber <= 0:
            raise ValueError("amplitude must be >= 0 and wavenumber > 0")

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.wavenumber

    def value(self, x: ArrayLike) -> ArrayLike:
        return self.amplitude * np.cos(self.wavenumber * np.asarray(x))

    def gradient(self, x: ArrayLike) -> ArrayLike:
        return -self.amplitude * self.wavenumber * np.sin(self.wavenumber * np.asarray(x))

    def curvature(self, x: ArrayLike) -> ArrayLike:
        return -self.amplitude * self.wavenumber ** 2 * np.cos(self.wavenumber * np.asarray(x))

    def force(self, x: ArrayLike) -> ArrayLike:
        return -self.gradient(x)


@dataclass(frozen=True)
class HarmonicPotential:
    mass: float
    omega0: float

    def __post_init__(self) -> None:
        if self.mass <= 0 or self.omega0 <= 0:
            raise ValueError("mass and omega0 must be > 0")

    @property
    def stiffness(self) -> float:
        return self.mass * self.omega0 ** 2

    def value(self, x: ArrayLike) -> ArrayLike:
        return 0.5 * self.stiffness * np.asarray(x) ** 2

    def gradient(self, x: ArrayLike) -> ArrayLike:
        return self.stiffness * np.asarray(x)

    def curvature(self, x: ArrayLike) -> ArrayLike:
        return self.stiffness * np.ones_like(np.asarray(x, dtype=float))

    def force(self, x: ArrayLike) -> ArrayLike:
        return -self.gradient(x)


Potential = Union[CosinePotential, HarmonicPotential]


def evaluate_potential(potential: Potential, x: ArrayLike) -> ArrayLike:
    return potential.value(x)


def evaluate_force(potential: Potential, x: ArrayLike) -> ArrayLike:
    return potential.force(x)


class QuasiEquilibriumQ(NamedTuple):
    general: ArrayLike
    closed_form: ArrayLike


def quasi_equilibrium_Q(
    potential: CosinePotential, groups: DimensionlessGroups, x: ArrayLike
) -> QuasiEquilibriumQ:
    """Quantum potential of the Boltzmann density ``exp(-beta V)``.

    Returns the derivative form ``lambda_T**2 [V'' - beta V'**2 / 2]`` and the
    cosine closed form ``-lambda_T**2 q**2 [V + beta (U**2 - V**2) / 2]``,
    after checking that they agree pointwise.
    """
    if groups.beta is None or groups.lambda_T is None:
        raise ValueError("the quasi-equilibrium quantum potential needs T > 0")
    beta = groups.beta
    lam2 = groups.lambda_T ** 2
    U = potential.amplitude
    q = potential.wavenumber
    V = potential.value(x)
    general = lam2 * (potential.curvature(x) - 0.5 * beta * potential.gradient(x) ** 2)
    closed = -lam2 * q * q * (V + 0.5 * beta * (U * U - V * V))
    scale = lam2 * q * q * U * (1.0 + beta * U)
    if scale > 0 and np.max(np.abs(np.asarray(general) - np.asarray(closed))) > 1e-12 * scale:
        raise ArithmeticError("derivative and closed forms of Q disagree")
    return QuasiEquilibriumQ(general, closed)


@dataclass(frozen=True)
class EffectivePotentialSpec:
    base: CosinePotential
    theta: float
    beta: float
    include_nonlinear: bool = False

    def __post_init__(self) -> None:
        if self.theta < 0:
            raise ValueError("theta must be >= 0")

    @property
    def period(self) -> float:
        return self.base.period

    def value(self, x: ArrayLike) -> ArrayLike:
        V = self.base.value(x)
        W = (1.0 - self.theta) * V
        if self.include_nonlinear:
            W = W + (self.theta * self.beta / 3.0) * V * V
        return W

    __call__ = value


def effective_potential(spec: EffectivePotentialSpec, x: ArrayLike) -> ArrayLike:
    return spec.value(x)


def harmonic_effective_potential(potential: HarmonicPotential, beta: float, hbar: float = HBAR) -> Callable:
    """``W = [1 - (beta hbar omega0 / 2)**2 / 3] V`` for the harmonic well."""
    factor = 1.0 - (0.5 * beta * hbar * potential.omega0) ** 2 / 3.0
    return lambda x: factor * potential.value(x)


class HarmonicDispersion(NamedTuple):
    semiclassical: float
    exact: float
    classical: float


def harmonic_effective_dispersion(
    potential: HarmonicPotential, beta: float, hbar: float = HBAR
) -> HarmonicDispersion:
    """Equilibrium position dispersion in a harmonic well.

    ``semiclassical`` follows from the Boltzmann density of the effective
    potential; ``exact`` is ``(hbar / 2 m w0) coth(beta hbar w0 / 2)``.
    """
    m, w0 = potential.mass, potential.omega0
    u = beta * hbar * w0
    if u >= math.sqrt(3.0):
        raise ValueError(f"beta*hbar*omega0 = {u:.4g} >= sqrt(3): semiclassical dispersion undefined")
    classical = 1.0 / (beta * m * w0 * w0)
    semiclassical = classical / (1.0 - (0.5 * u) ** 2 / 3.0)
    if u > 0:
        exact = hbar / (2.0 * m * w0) / math.tanh(0.5 * u)
    else:
        exact = classical
    return HarmonicDispersion(semiclassical, exact, classical)


class QuantumPotentialField(NamedTuple):
    values: np.ndarray
    floor: float
    floored_cells: int


def bohm_quantum_potential(rho: DensityField, mass: float, hbar: float = HBAR) -> QuantumPotentialField:
    """Discrete ``Q = -(hbar**2 / 2m) (sqrt rho)'' / sqrt rho``.

    Cells below ``1e-14 * max(rho)`` are raised to that floor before taking
    the root; the number of such cells is reported. No-flux walls use a
    mirrored ghost cell.
    """
    values = rho.values
    floor = DENSITY_FLOOR_FRACTION * float(np.max(values))
    low = values < floor
    psi = np.sqrt(np.where(low, floor, values))
    h = rho.grid.cell_width
    if rho.grid.periodic:
        lap = np.roll(psi, -1) - 2.0 * psi + np.roll(psi, 1)
    else:
        padded = np.concatenate(([psi[0]], psi, [psi[-1]]))
        lap = padded[2:] - 2.0 * psi + padded[:-2]
    Q = -(hbar ** 2 / (2.0 * mass)) * lap / (h * h * psi)
    return QuantumPotentialField(Q, floor, int(np.count_nonzero(low)))


def equilibrium_density(W: Union[Callable, np.ndarray], beta: float, grid: Grid) -> DensityField:
    """Boltzmann density ``exp(-beta W)`` on the grid, unit mass under the midpoint rule."""
    w = W(grid.centers) if callable(W) else np.asarray(W, dtype=float)
    if w.shape != (grid.cell_count,) or not np.all(np.isfinite(w)):
        raise ValueError("W must be finite on every grid cell")
    exponent = -beta * w
    values = np.exp(exponent - np.max(exponent))
    return DensityField(grid, values).normalized()
