"""Uniform 1D grids, cell-centred density fields and observable time series."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

PERIODIC = "periodic"
NO_FLUX = "no_flux"


@dataclass(frozen=True)
class Grid:
    """``cell_count`` cells of equal width covering ``[origin, origin + domain_length)``."""

    cell_count: int
    domain_length: float
    boundary: str = PERIODIC
    origin: float = 0.0

    def __post_init__(self) -> None:
        n = self.cell_count
        if n < 16 or n & (n - 1):
            raise ValueError(f"cell_count must be a power of two >= 16, got {n}")
        if not (math.isfinite(self.domain_length) and self.domain_length > 0):
            raise ValueError("domain_length must be finite and > 0")
        if self.boundary not in (PERIODIC, NO_FLUX):
            raise ValueError(f"unknown boundary {self.boundary!r}")

    @property
    def cell_width(self) -> float:
        return self.domain_length / self.cell_count

    @property
    def centers(self) -> np.ndarray:
        return self.origin + (np.arange(self.cell_count) + 0.5) * self.cell_width

    @property
    def midpoint(self) -> float:
        return self.origin + 0.5 * self.domain_length

    @property
    def periodic(self) -> bool:
        return self.boundary == PERIODIC

    def check_commensurate(self, period: float, rtol: float = 1e-9) -> int:
        """Return the number of whole periods in the domain or raise."""
        ratio = self.domain_length / period
        periods = round(ratio)
        if periods < 1 or abs(ratio - periods) > rtol * ratio:
            raise ValueError(
                f"periodic domain of length {self.domain_length} is not an integer "
                f"number of potential periods ({ratio:.6g})"
            )
        return periods


def periodic_grid(wavenumber: float, periods: int = 64, cells_per_period: int = 64) -> Grid:
    """Periodic grid whose midpoint sits on the minimum ``x = pi/q`` of ``cos(q x)``."""
    period = 2.0 * math.pi / wavenumber
    length = periods * period
    return Grid(
        cell_count=periods * cells_per_period,
        domain_length=length,
        boundary=PERIODIC,
        origin=0.5 * period - 0.5 * length,
    )


@dataclass(frozen=True)
class DensityField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.cell_count,):
            raise ValueError("values do not match the grid")
        object.__setattr__(self, "values", values)

    def mass(self) -> float:
        return float(np.sum(self.values) * self.grid.cell_width)

    def normalized(self) -> "DensityField":
        return DensityField(self.grid, self.values / self.mass())


def gaussian_density(grid: Grid, center: float, sigma: float) -> DensityField:
    """Gaussian packet sampled at cell centres, normalised to unit discrete mass."""
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    x = grid.centers - center
    values = np.exp(-0.5 * (x / sigma) ** 2)
    return DensityField(grid, values).normalized()


def uniform_density(grid: Grid) -> DensityField:
    return DensityField(grid, np.full(grid.cell_count, 1.0 / grid.domain_length))


class Observables(NamedTuple):
    mass: float
    mean: float
    dispersion: float
    min_density: float


def observables(rho: DensityField) -> Observables:
    """Midpoint-rule moments.

    On periodic grids the cell-centre coordinate is used as is, i.e. the seam
    sits at the domain edges; the result is meaningful only while the packet
    has not reached the seam (runs enforce this with a contamination guard).
    """
    h = rho.grid.cell_width
    x = rho.grid.centers
    v = rho.values
    mass = float(np.sum(v) * h)
    mean = float(np.sum(x * v) * h / mass)
    dispersion = float(np.sum((x - mean) ** 2 * v) * h / mass)
    return Observables(mass, mean, dispersion, float(np.min(v)))


@dataclass
class TimeSeries:
    """Per-output-step observables of a run (or of a closure integration).

    ``usable_until`` is the last time at which moments are trustworthy;
    ``stop_reason`` is one of ``t_max``, ``contamination``, ``aborted``.
    """

    t: np.ndarray
    mass: np.ndarray
    mean: np.ndarray
    sigma2: np.ndarray
    min_rho: np.ndarray
    beta_q_inv: Optional[np.ndarray] = None
    usable_until: float = math.inf
    stop_reason: str = "t_max"
    diagnostics: dict = field(default_factory=dict)

    COLUMNS = ("t", "mass", "mean", "sigma2", "min_rho", "beta_q_inv")

    def __post_init__(self) -> None:
        for name in ("t", "mass", "mean", "sigma2", "min_rho"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        if self.beta_q_inv is not None:
            self.beta_q_inv = np.asarray(self.beta_q_inv, dtype=float)
        n = len(self.t)
        if any(len(getattr(self, c)) != n for c in ("mass", "mean", "sigma2", "min_rho")):
            raise ValueError("column lengths differ")
        if n > 1 and np.any(np.diff(self.t) <= 0):
            raise ValueError("times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.t)

    def usable(self) -> "TimeSeries":
        """Rows with ``t <= usable_until``."""
        keep = self.t <= self.usable_until
        return TimeSeries(
            t=self.t[keep],
            mass=self.mass[keep],
            mean=self.mean[keep],
            sigma2=self.sigma2[keep],
            min_rho=self.min_rho[keep],
            beta_q_inv=None if self.beta_q_inv is None else self.beta_q_inv[keep],
            usable_until=self.usable_until,
            stop_reason=self.stop_reason,
            diagnostics=dict(self.diagnostics),
        )

    def rows(self):
        for i in range(len(self.t)):
            bq = None if self.beta_q_inv is None else float(self.beta_q_inv[i])
            yield (
                float(self.t[i]),
                float(self.mass[i]),
                float(self.mean[i]),
                float(self.sigma2[i]),
                float(self.min_rho[i]),
                bq,
            )


class SeriesRecorder:
    """Accumulates rows during a run."""

    def __init__(self, with_beta_q: bool = False):
        self._rows: list[tuple] = []
        self._with_beta_q = with_beta_q

    def record(self, t: float, obs: Observables, beta_q_inv: Optional[float] = None) -> None:
        self._rows.append((t, obs.mass, obs.mean, obs.dispersion, obs.min_density, beta_q_inv))

    @property
    def last_time(self) -> float:
        return self._rows[-1][0] if self._rows else -math.inf

    def build(self, **meta) -> TimeSeries:
        cols = list(zip(*self._rows)) if self._rows else [()] * 6
        return TimeSeries(
            t=cols[0],
            mass=cols[1],
            mean=cols[2],
            sigma2=cols[3],
            min_rho=cols[4],
            beta_q_inv=cols[5] if self._with_beta_q else None,
            **meta,
        )
