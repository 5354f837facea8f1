"""Effective diffusion coefficient in a periodic potential.

    1/D = beta b <exp(beta W)> <exp(-beta W)>

with ``<.>`` the average over one period. Three evaluations are provided:
periodic trapezoid quadrature for any W, the Bessel closed form for the
simplified W = (1 - theta) U cos(qx), and its deep-barrier Arrhenius limit.
Everything is carried in log space so that barriers far beyond exp(700)
remain representable.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .model import DimensionlessGroups
from .special_functions import bessel_i0, log_i0

QUADRATURE = "quadrature"
CLOSED_FORM = "closed_form"
ARRHENIUS = "arrhenius"
MSD_FIT = "msd_fit"

QUADRATURE_START_NODES = 64
QUADRATURE_MAX_NODES = 2 ** 20
QUADRATURE_RTOL = 1e-12


class QuadratureError(ArithmeticError):
    pass


class RegimeWarning(UserWarning):
    pass


@dataclass(frozen=True)
class DiffusionEstimate:
    value: float
    log_value: float
    method: str
    params_echo: Optional[DimensionlessGroups] = None
    diagnostics: dict = field(default_factory=dict)

    @classmethod
    def from_log(cls, log_value: float, method: str, **kwargs) -> "DiffusionEstimate":
        value = math.exp(log_value) if log_value < 709.0 else math.inf
        return cls(value=value, log_value=log_value, method=method, **kwargs)


def _log_period_mean_exp(values: np.ndarray) -> float:
    """ln of the mean of exp(values), shifted by the maximum."""
    top = float(np.max(values))
    return top + math.log(float(np.mean(np.exp(values - top))))


def log_boltzmann_product(W: Callable, period: float, beta: float, n: int) -> float:
    """ln(<exp(beta W)> <exp(-beta W)>) with an n-node periodic trapezoid."""
    x = np.arange(n) * (period / n)
    bw = beta * np.asarray(W(x), dtype=float)
    return _log_period_mean_exp(bw) + _log_period_mean_exp(-bw)


def dcoef_quadrature(
    W: Callable,
    beta: float,
    friction: float,
    period: Optional[float] = None,
    groups: Optional[DimensionlessGroups] = None,
) -> DiffusionEstimate:
    """Lifson-Jackson coefficient by periodic trapezoid with node doubling.

    ``W`` is any callable periodic potential; its period is taken from the
    ``period`` argument or from ``W.period``.
    """
    if period is None:
        period = getattr(W, "period", None)
        if period is None:
            raise ValueError("period of W is required")
    if beta <= 0 or friction <= 0 or period <= 0:
        raise ValueError("beta, friction and period must be > 0")
    n = QUADRATURE_START_NODES
    previous = log_boltzmann_product(W, period, beta, n)
    while True:
        n *= 2
        if n > QUADRATURE_MAX_NODES:
            raise QuadratureError(
                f"periodic quadrature did not converge with {QUADRATURE_MAX_NODES} nodes "
                f"(last log-product {previous!r})"
            )
        current = log_boltzmann_product(W, period, beta, n)
        # relative change of the product itself
        if abs(math.expm1(current - previous)) < QUADRATURE_RTOL:
            break
        previous = current
    log_d = -math.log(beta * friction) - current
    value = 1.0 / (beta * friction * math.exp(current)) if current < 700.0 else math.exp(log_d)
    return DiffusionEstimate(value, log_d, QUADRATURE, params_echo=groups, diagnostics={"nodes": n})


def _effective_barrier_argument(groups: DimensionlessGroups) -> float:
    if groups.theta is None or groups.beta_u is None:
        raise ValueError("theta and beta_u are required (T > 0)")
    return abs(1.0 - groups.theta) * groups.beta_u


def dcoef_closed_form(groups: DimensionlessGroups, friction: float) -> DiffusionEstimate:
    """``D = 1 / (beta b I_0**2((1 - theta) beta U))``."""
    if friction <= 0:
        raise ValueError("friction must be > 0")
    arg = _effective_barrier_argument(groups)
    log_i = log_i0(arg)
    log_d = -math.log(groups.beta * friction) - 2.0 * log_i
    if log_i < 350.0:
        value = 1.0 / (groups.beta * friction * bessel_i0(arg).value ** 2)
    else:
        value = math.exp(log_d)
    return DiffusionEstimate(value, log_d, CLOSED_FORM, params_echo=groups, diagnostics={"bessel_argument": arg})


@dataclass(frozen=True)
class ArrheniusEstimate:
    estimate: DiffusionEstimate
    activation_energy: float
    prefactor: float


def dcoef_arrhenius(groups: DimensionlessGroups, friction: float) -> ArrheniusEstimate:
    """Deep-barrier limit ``D = pi (2 - lambda_T**2 q**2) (U/b) exp[-beta (2 - lambda_T**2 q**2) U]``.

    Outside ``(1 - theta) beta U > 1`` the asymptote is unreliable and a
    ``RegimeWarning`` is issued; the value is still returned.
    """
    if friction <= 0:
        raise ValueError("friction must be > 0")
    theta = groups.theta
    beta_u = groups.beta_u
    if theta is None or beta_u is None:
        raise ValueError("theta and beta_u are required (T > 0)")
    arg = (1.0 - theta) * beta_u
    if arg <= 1.0:
        warnings.warn(
            f"Arrhenius asymptote used at (1-theta)*beta*U = {arg:.4g} <= 1", RegimeWarning, stacklevel=2
        )
    U = beta_u / groups.beta
    reduction = 2.0 - 2.0 * theta  # 2 - lambda_T^2 q^2
    activation = reduction * U
    prefactor = math.pi * reduction * U / friction
    if prefactor > 0:
        log_d = math.log(prefactor) - groups.beta * activation
    else:
        log_d = -math.inf
    est = DiffusionEstimate.from_log(
        log_d,
        ARRHENIUS,
        params_echo=groups,
        diagnostics={"activation_energy": activation, "prefactor": prefactor},
    )
    return ArrheniusEstimate(est, activation, prefactor)
