"""Diffusion coefficients and log-law parameters from simulated time series."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .fields import TimeSeries
from .lifson_jackson import MSD_FIT, QUADRATURE, DiffusionEstimate

MIN_FIT_POINTS = 8
REPORT_WINDOWS = (0.25, 0.5, 0.75)


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    window: tuple[float, float]
    n_points: int


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    xm = x.mean()
    ym = y.mean()
    dx = x - xm
    dy = y - ym
    sxx = float(dx @ dx)
    if sxx == 0:
        raise FitError("degenerate abscissa")
    slope = float(dx @ dy) / sxx
    intercept = float(ym - slope * xm)
    ss_tot = float(dy @ dy)
    resid = y - (intercept + slope * x)
    ss_res = float(resid @ resid)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return slope, intercept, min(max(r2, 0.0), 1.0)


def _window(series: TimeSeries, window_fraction: float, log_time: bool):
    if not 0 < window_fraction <= 1:
        raise FitError("window_fraction must lie in (0, 1]")
    usable = series.usable()
    t = usable.t
    if log_time:
        keep = t > 0
        t = t[keep]
        s = usable.sigma2[keep]
        if len(t) == 0:
            raise FitError("no positive times")
        u = np.log(t)
    else:
        s = usable.sigma2
        u = t
    if len(u) == 0:
        raise FitError("empty series")
    start = u[-1] - window_fraction * (u[-1] - u[0])
    sel = u >= start * (1 - 1e-15) if start > 0 else u >= start
    if np.count_nonzero(sel) < MIN_FIT_POINTS:
        raise FitError(f"only {np.count_nonzero(sel)} points in the fit window (need {MIN_FIT_POINTS})")
    return t[sel], u[sel], s[sel]


def fit_msd_slope(
    series: TimeSeries, window_fraction: float = 0.5
) -> tuple[FitResult, DiffusionEstimate]:
    """OLS of sigma**2 against t over the last ``window_fraction`` of the usable time span.

    Returns the fit and ``D = slope / 2``.
    """
    t, u, s = _window(series, window_fraction, log_time=False)
    slope, intercept, r2 = _ols(u, s)
    fit = FitResult(slope, intercept, r2, (float(t[0]), float(t[-1])), len(t))
    d = 0.5 * slope
    est = DiffusionEstimate(
        value=d,
        log_value=math.log(d) if d > 0 else -math.inf,
        method=MSD_FIT,
        diagnostics={"r_squared": r2, "n_points": len(t), "window": fit.window},
    )
    return fit, est


def fit_log_law(series: TimeSeries, window_fraction: float = 0.5) -> FitResult:
    """OLS of sigma**2 against ln t over the last ``window_fraction`` of the usable ln t span."""
    t, u, s = _window(series, window_fraction, log_time=True)
    slope, intercept, r2 = _ols(u, s)
    return FitResult(slope, intercept, r2, (float(t[0]), float(t[-1])), len(t))


def window_spread(series: TimeSeries, log_time: bool = False, fractions: Sequence[float] = REPORT_WINDOWS) -> dict:
    """Fits at several window fractions; their spread is the systematic-error indicator."""
    out = {}
    for frac in fractions:
        try:
            if log_time:
                out[frac] = fit_log_law(series, frac)
            else:
                out[frac] = fit_msd_slope(series, frac)[0]
        except FitError:
            continue
    return out


def compare_report(
    estimates: Sequence[DiffusionEstimate],
    fits: Sequence[FitResult] = (),
    reference: Optional[DiffusionEstimate] = None,
) -> dict:
    """Tabulate estimates against a reference (the quadrature one if present, else the first)."""
    if not estimates:
        raise ValueError("at least one estimate is required")
    if reference is None:
        reference = next((e for e in estimates if e.method == QUADRATURE), estimates[0])
    rows = []
    for est in estimates:
        deviation = math.expm1(est.log_value - reference.log_value)
        rows.append(
            {
                "method": est.method,
                "value": est.value,
                "log_value": est.log_value,
                "relative_deviation": deviation,
            }
        )
    fit_rows = [
        {
            "slope": f.slope,
            "intercept": f.intercept,
            "r_squared": f.r_squared,
            "window": list(f.window),
            "n_points": f.n_points,
        }
        for f in fits
    ]
    return {"reference_method": reference.method, "estimates": rows, "fits": fit_rows}
