"""Dispersion of a zero-temperature quantum packet under the Gaussian closure.

With the quantum temperature ``1/beta_Q = hbar**2 / (4 m sigma**2)`` the
dispersion obeys

    d(sigma**2)/dt = 2 / (beta_Q b I_0**2(beta_Q U)),

whose exact integral is

    x**2 [I_0**2(x) - I_1**2(x)] = 16 m U**2 t / (hbar**2 b),   x = beta_Q U.

Both routes are implemented; agreement between them is the check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .fields import TimeSeries
from .model import HBAR, ModelParams
from .special_functions import bessel_i0, i0_minus_i1_scaled, i0e, i1e


class ClosureError(ArithmeticError):
    pass


@dataclass(frozen=True)
class ClosureParams:
    mass: float
    friction: float
    barrier_amplitude: float
    hbar: float = HBAR

    def __post_init__(self) -> None:
        if self.mass <= 0 or self.friction <= 0 or self.hbar <= 0:
            raise ValueError("mass, friction and hbar must be > 0")
        if self.barrier_amplitude < 0:
            raise ValueError("barrier_amplitude must be >= 0")

    @classmethod
    def from_model(cls, params: ModelParams) -> "ClosureParams":
        return cls(params.mass, params.friction, params.barrier_amplitude, params.hbar)

    @property
    def rhs_rate(self) -> float:
        """``16 m U**2 / (hbar**2 b)``: right-hand side of the implicit relation per unit time."""
        return 16.0 * self.mass * self.barrier_amplitude ** 2 / (self.hbar ** 2 * self.friction)

    @property
    def dispersion_scale(self) -> float:
        """``lambda_U**2 = hbar**2 / (8 m U)``."""
        return self.hbar ** 2 / (8.0 * self.mass * self.barrier_amplitude)

    @property
    def omega_u(self) -> float:
        return 4.0 * self.barrier_amplitude / self.hbar

    @property
    def relaxation_time(self) -> float:
        """``b / (m omega_U**2)``."""
        return self.friction / (self.mass * self.omega_u ** 2)

    @property
    def log_unit_time(self) -> float:
        """Time unit inside the logarithm of the asymptotic law, ``hbar**2 b / (32 pi m U**2)``."""
        return self.hbar ** 2 * self.friction / (32.0 * math.pi * self.mass * self.barrier_amplitude ** 2)

    def beta_q_u(self, sigma2: float) -> float:
        return 4.0 * self.mass * sigma2 * self.barrier_amplitude / self.hbar ** 2


def closure_lhs(x: float) -> float:
    """``x**2 [I_0**2(x) - I_1**2(x)]``; overflows to inf beyond x ~ 350."""
    if x == 0.0:
        return 0.0
    log_val = log_closure_lhs(x)
    return math.exp(log_val) if log_val < 709.0 else math.inf


def log_closure_lhs(x: float) -> float:
    if x < 0 or not math.isfinite(x):
        raise ValueError("x must be finite and >= 0")
    if x == 0.0:
        return -math.inf
    return 2.0 * math.log(x) + 2.0 * x + math.log(i0_minus_i1_scaled(x)) + math.log(i0e(x) + i1e(x))


def _dlog_lhs(x: float) -> float:
    """d/dx ln closure_lhs = 2 x I_0**2 / lhs."""
    return math.exp(math.log(2.0 * x) + 2.0 * math.log(i0e(x)) + 2.0 * x - log_closure_lhs(x))


def solve_closure(log_rhs: float, rtol: float = 1e-13) -> float:
    """Root of ``ln closure_lhs(x) = log_rhs`` by safeguarded Newton in log space.

    The bracket comes from the small-x law ``lhs >= x**2`` (upper bound
    ``sqrt(rhs)``) and from the large-x asymptote ``lhs ~ exp(2x) / 2 pi``.
    """
    if log_rhs == -math.inf:
        return 0.0
    # capped: for large rhs the log-law bound is the tight one
    x_free = math.exp(min(0.5 * log_rhs, 700.0))
    x_log = 0.5 * (log_rhs + math.log(2.0 * math.pi))
    hi = x_free
    if x_log > 0:
        hi = min(hi, 1.2 * x_log)
    lo = 0.0
    for _ in range(200):
        if log_closure_lhs(hi) >= log_rhs:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise ClosureError("could not bracket the closure root")
    candidate = min(x_free, x_log) if x_log > 0 else 0.5 * x_free
    if 0 < candidate < hi and log_closure_lhs(candidate) <= log_rhs:
        lo = max(lo, candidate)
    x = 0.5 * (lo + hi)
    for _ in range(200):
        g = log_closure_lhs(x) - log_rhs
        if g > 0:
            hi = x
        else:
            lo = x
        step = g / _dlog_lhs(x)
        x_new = x - step
        if not (lo < x_new < hi):
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= rtol * x_new or hi - lo <= rtol * hi:
            return x_new
        x = x_new
    raise ClosureError("closure root did not converge")


def free_dispersion(t: float, mass: float, friction: float, hbar: float = HBAR) -> float:
    """``hbar sqrt(t / (m b))``."""
    if t < 0:
        raise ValueError("t must be >= 0")
    return hbar * math.sqrt(t / (mass * friction))


def dispersion_at_time(t: float, params: ClosureParams) -> float:
    """Dispersion from the implicit Bessel relation; falls back to the free law at U = 0."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0:
        return 0.0
    if params.barrier_amplitude == 0:
        return free_dispersion(t, params.mass, params.friction, params.hbar)
    x = solve_closure(math.log(params.rhs_rate) + math.log(t))
    return params.hbar ** 2 * x / (4.0 * params.mass * params.barrier_amplitude)


def asymptotic_dispersion(t: float, params: ClosureParams) -> float:
    """Deep-barrier log law ``(hbar**2 / 8 m U) ln(32 pi m U**2 t / hbar**2 b)``."""
    if params.barrier_amplitude <= 0:
        raise ValueError("the logarithmic law needs U > 0")
    arg = t / params.log_unit_time
    if arg <= 1.0:
        raise ValueError(f"log argument {arg:.4g} <= 1: outside the asymptotic regime")
    return params.dispersion_scale * math.log(arg)


def _closure_rate(params: ClosureParams):
    """d(sigma**4)/dt as a function of sigma**4; smooth at zero."""
    base = params.hbar ** 2 / (params.mass * params.friction)
    k = 4.0 * params.mass * params.barrier_amplitude / params.hbar ** 2

    def rate(_t, y):
        s = max(float(y[0]), 0.0)
        x = k * math.sqrt(s)
        return [base / bessel_i0(x).value ** 2]

    return rate


def integrate_closure_ode(
    params: ClosureParams,
    t_max: float,
    sigma0: float = 0.0,
    times: Optional[Sequence[float]] = None,
    n_points: int = 50,
    rtol: float = 1e-10,
) -> TimeSeries:
    """Integrate the closure ODE with an adaptive Dormand-Prince 8(5,3) scheme.

    The state is ``sigma**4``: its rate ``hbar**2 / (m b I_0**2(beta_Q U))``
    is finite at sigma = 0, so no special start-up step is needed, and the
    free case is integrated exactly.
    """
    if t_max <= 0 or sigma0 < 0:
        raise ValueError("t_max must be > 0 and sigma0 >= 0")
    if times is None:
        start = t_max * 1e-6
        times = np.geomspace(start, t_max, n_points)
    times = np.asarray(times, dtype=float)
    if np.any(times <= 0) or np.any(np.diff(times) <= 0):
        raise ValueError("output times must be positive and increasing")
    # absolute floor well below sigma**4 at the first output time
    atol = 1e-3 * rtol * max(sigma0 ** 4, params.hbar ** 2 / (params.mass * params.friction) * times[0])
    sol = solve_ivp(
        _closure_rate(params),
        (0.0, float(times[-1])),
        [sigma0 ** 4],
        method="DOP853",
        t_eval=times,
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        raise ClosureError(f"closure ODE failed: {sol.message}")
    sigma2 = np.sqrt(sol.y[0])
    beta_q_inv = params.hbar ** 2 / (4.0 * params.mass * sigma2)
    n = len(times)
    return TimeSeries(
        t=times,
        mass=np.ones(n),
        mean=np.zeros(n),
        sigma2=sigma2,
        min_rho=np.full(n, np.nan),
        beta_q_inv=beta_q_inv,
        diagnostics={"rhs_evaluations": int(sol.nfev), "sigma0": sigma0},
    )
