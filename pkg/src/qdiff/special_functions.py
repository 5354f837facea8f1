r"""Modified Bessel functions of the first kind, orders 0 and 1.

Two regimes are used on the exponentially scaled value
:math:`\tilde I_\nu(x) = e^{-x} I_\nu(x)`:

* ``x <= SERIES_MAX``: the ascending power series. All terms are positive, so
  the sum carries no cancellation error.
* ``x > SERIES_MAX``: the Hankel asymptotic expansion

  .. math::
      \tilde I_\nu(x) \simeq \frac{1}{\sqrt{2\pi x}}
      \sum_k (-1)^k \frac{\prod_{j=1}^k (4\nu^2 - (2j-1)^2)}{k!\,(8x)^k}

  summed until the terms drop below machine precision (well before the
  divergent tail starts, since the smallest term is about ``exp(-2x)``).

The scaled and log forms never overflow, which the diffusion formulas need
at deep barriers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

SERIES_MAX = 20.0
_EPS = 1e-17
_MAX_TERMS = 500


@dataclass(frozen=True)
class BesselEval:
    value: float
    scaled: float
    log_value: float


def _validate(x: float) -> float:
    x = float(x)
    if not math.isfinite(x) or x < 0:
        raise ValueError(f"argument must be finite and >= 0, got {x!r}")
    return x


def _series(nu: int, x: float) -> float:
    """Unscaled power series of I_nu."""
    half = 0.5 * x
    term = 1.0 if nu == 0 else half
    total = term
    q = half * half
    k = 0
    while True:
        k += 1
        term *= q / (k * (k + nu))
        total += term
        if term < _EPS * total or k > _MAX_TERMS:
            return total


def _asymptotic_coeffs(nu: int, x: float):
    """Yield successive terms of the scaled asymptotic series (without the 1/sqrt(2 pi x))."""
    mu = 4.0 * nu * nu
    term = 1.0
    yield term
    for k in range(1, _MAX_TERMS):
        term *= -(mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        yield term


def _asymptotic_scaled(nu: int, x: float) -> float:
    total = 0.0
    prev = math.inf
    for term in _asymptotic_coeffs(nu, x):
        if abs(term) > prev:
            break  # divergent tail
        total += term
        if abs(term) < _EPS * abs(total):
            break
        prev = abs(term)
    return total / math.sqrt(2.0 * math.pi * x)


def _scaled(nu: int, x: float) -> float:
    if x <= SERIES_MAX:
        return _series(nu, x) * math.exp(-x)
    return _asymptotic_scaled(nu, x)


def _evaluate(nu: int, x: float) -> BesselEval:
    x = _validate(x)
    if nu == 1 and x == 0.0:
        return BesselEval(0.0, 0.0, -math.inf)
    if x <= SERIES_MAX:
        value = _series(nu, x)
        scaled = value * math.exp(-x)
        # I_1 underflows for subnormal x
        return BesselEval(value, scaled, math.log(value) if value > 0 else -math.inf)
    scaled = _asymptotic_scaled(nu, x)
    log_value = math.log(scaled) + x
    if x < 709.0:
        value = scaled * math.exp(x)
    else:
        value = math.exp(log_value) if log_value < 709.0 else math.inf
    return BesselEval(value, scaled, log_value)


def bessel_i0(x: float) -> BesselEval:
    """I_0(x) with scaled and log companions."""
    return _evaluate(0, x)


def bessel_i1(x: float) -> BesselEval:
    """I_1(x) with scaled and log companions."""
    return _evaluate(1, x)


def i0e(x: float) -> float:
    return _scaled(0, _validate(x))


def i1e(x: float) -> float:
    return _scaled(1, _validate(x))


def log_i0(x: float) -> float:
    """ln I_0(x), finite for any finite x >= 0."""
    x = _validate(x)
    if x <= SERIES_MAX:
        return math.log(_series(0, x))
    return math.log(_asymptotic_scaled(0, x)) + x


def i0_minus_i1_scaled(x: float) -> float:
    """``exp(-x) * (I_0(x) - I_1(x))`` without cancellation at large x.

    In the asymptotic regime the two expansions are differenced term by term,
    so the leading ``1/(2x)`` behaviour is produced directly.
    """
    x = _validate(x)
    if x <= SERIES_MAX:
        return (_series(0, x) - _series(1, x)) * math.exp(-x)
    total = 0.0
    prev = math.inf
    for t0, t1 in zip(_asymptotic_coeffs(0, x), _asymptotic_coeffs(1, x)):
        term = t0 - t1
        if term == 0.0:
            continue
        if abs(term) > prev:
            break
        total += term
        if abs(term) < _EPS * abs(total):
            break
        prev = abs(term)
    return total / math.sqrt(2.0 * math.pi * x)
