"""Finite-volume and spectral solvers for the four overdamped evolution equations.

Modes
-----
semiclassical
    d_t rho = d_x(beta rho d_x W + d_x rho) / (beta b), quantum-corrected W.
quantum-temp
    the same operator at T = 0 with the temperature replaced by
    ``hbar**2 / (4 m sigma**2)``, re-evaluated from the field every step.
bohm
    d_t rho = d_x[rho d_x(V + Q)] / b with the Bohm potential of rho.
fourth-order
    d_t rho = -hbar**2 d_x**4 rho / (4 m b), integrated exactly per Fourier mode.

The parabolic modes use backward Euler with exponentially fitted
(Scharfetter-Gummel) face fluxes: each face flux is exact for the local
two-cell Boltzmann problem, so ``exp(-beta W)`` is a discrete fixed point
and the step matrix is an M-matrix (positivity, exact mass balance).

Internally x is measured in units of 1/q. Thermal runs measure time in
``beta b / q**2``; zero-temperature runs in ``b / (E q**2)`` with ``E = U``
(or ``hbar**2 q**2 / 8m`` when U = 0). Inputs and outputs are SI.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sps
from scipy.sparse.linalg import splu, spsolve

from .fields import (
    DensityField,
    Grid,
    SeriesRecorder,
    TimeSeries,
    gaussian_density,
    observables,
)
from .model import DimensionlessGroups, ModelParams, derive_groups
from .potentials import CosinePotential, EffectivePotentialSpec

log = logging.getLogger(__name__)

FIXED = "fixed"
HALVING = "halving"

EDGE_CELLS = 2


class SolverError(RuntimeError):
    """A run could not continue; ``partial`` holds the rows produced so far."""

    def __init__(self, message: str, partial: Optional[TimeSeries] = None, diagnostics: Optional[dict] = None):
        super().__init__(message)
        self.partial = partial
        self.diagnostics = diagnostics or {}


class StepRejected(ArithmeticError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    """Time-stepping controls (SI seconds / metres).

    ``adaptivity="halving"`` halves ``dt`` on a rejected step and multiplies
    it by ``dt_growth`` after an accepted one, within ``[dt_min, dt_max]``.
    """

    dt_initial: float
    t_max: float
    output_stride: int = 1
    adaptivity: str = FIXED
    sigma0: Optional[float] = None
    boundary_mass_tolerance: float = 1e-6
    dt_growth: float = 1.0
    dt_max: float = math.inf
    dt_min: Optional[float] = None
    max_relative_change: float = 1e-3
    max_steps: int = 10_000_000

    def __post_init__(self) -> None:
        if not (self.dt_initial > 0 and self.t_max > 0):
            raise ValueError("dt_initial and t_max must be > 0")
        if self.output_stride < 1:
            raise ValueError("output_stride must be >= 1")
        if self.adaptivity not in (FIXED, HALVING):
            raise ValueError(f"unknown adaptivity {self.adaptivity!r}")
        if self.sigma0 is not None and self.sigma0 <= 0:
            raise ValueError("sigma0 must be > 0")
        if self.boundary_mass_tolerance <= 0 or self.dt_growth < 1.0:
            raise ValueError("boundary_mass_tolerance must be > 0 and dt_growth >= 1")

    @property
    def minimum_dt(self) -> float:
        return self.dt_min if self.dt_min is not None else self.dt_initial * 1e-9


# --------------------------------------------------------------------------
# drift-diffusion operator


def bernoulli(z: np.ndarray) -> np.ndarray:
    """``z / (exp(z) - 1)``, continuous at 0 and overflow-safe."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = np.abs(z) < 1e-6
    zs = z[small]
    out[small] = 1.0 - 0.5 * zs + zs * zs / 12.0
    zl = z[~small]
    with np.errstate(over="ignore"):
        out[~small] = zl / np.expm1(zl)
    return out


class DriftDiffusionOperator:
    """Backward-Euler operator for ``d_t rho = d_x(D (d_x rho + rho d_x w))``.

    ``w`` is the potential in units of the thermal energy on the cell
    centres, ``D`` a constant diffusivity and ``h`` the cell width, all in
    one consistent unit system.

    Steps are taken in the Slotboom variable ``u = rho exp(w)``, where the
    fitted face flux is ``k_f (u_f - u_{f+1})`` with a single symmetric
    weight: a constant u carries exactly zero flux in floating point, so
    ``exp(-w)`` is a fixed point for any dt. When the range of w would
    underflow ``exp(-w)`` the density form is used instead.
    """

    SLOTBOOM_MAX_RANGE = 600.0

    def __init__(self, w: np.ndarray, diffusivity: float, h: float, periodic: bool):
        w = np.asarray(w, dtype=float)
        n = w.size
        self.n = n
        self.periodic = periodic
        if periodic:
            dw = np.roll(w, -1) - w
        else:
            dw = np.diff(w)
        coef = diffusivity / (h * h)
        nf = dw.size
        self._left = np.arange(nf)
        self._right = (self._left + 1) % n
        # density form; flux across face f over h: a*rho_f - c*rho_{f+1}
        a = coef * bernoulli(dw)
        c = coef * bernoulli(-dw)
        self.generator = self._assemble(-a, c, a, -c)
        shifted = w - np.min(w)
        self.slotboom = bool(np.max(shifted) < self.SLOTBOOM_MAX_RANGE)
        if self.slotboom:
            self.weight = np.exp(-shifted)
            self._k = a * self.weight[self._left]
            self._slotboom_laplacian = self._assemble(-self._k, self._k, self._k, -self._k)
        self._cache: dict[float, object] = {}

    def _assemble(self, ll, lr, rl, rr):
        left, right = self._left, self._right
        rows = np.concatenate([left, left, right, right])
        cols = np.concatenate([left, right, left, right])
        return sps.csc_matrix((np.concatenate([ll, lr, rl, rr]), (rows, cols)), shape=(self.n, self.n))

    def apply(self, values: np.ndarray) -> np.ndarray:
        return self.generator @ values

    def _face_divergence(self, u: np.ndarray) -> np.ndarray:
        """``L_u u`` evaluated face by face, exact zero for constant u."""
        flux = self._k * (u[self._left] - u[self._right])
        out = np.zeros(self.n)
        np.add.at(out, self._left, -flux)
        np.add.at(out, self._right, flux)
        return out

    def _factor(self, dt: float):
        lu = self._cache.get(dt)
        if lu is None:
            if self.slotboom:
                m = (sps.diags(self.weight, format="csc") - dt * self._slotboom_laplacian).tocsc()
            else:
                m = (sps.identity(self.n, format="csc") - dt * self.generator).tocsc()
            # natural ordering, no pivoting: the LU of an M-matrix keeps signs,
            # so a non-negative right-hand side yields a non-negative solution
            lu = splu(m, permc_spec="NATURAL", diag_pivot_thresh=0.0, options={"SymmetricMode": True})
            if len(self._cache) > 8:
                self._cache.clear()
            self._cache[dt] = lu
        return lu

    def step(self, values: np.ndarray, dt: float) -> np.ndarray:
        lu = self._factor(dt)
        if self.slotboom:
            new = self._step_slotboom(lu, values, dt)
        else:
            new = self._step_density(lu, values, dt)
        # the exact step conserves the cell sum; remove the round-off part
        total = math.fsum(new)
        if total > 0:
            new = new * (math.fsum(values) / total)
        return new

    def _step_slotboom(self, lu, values: np.ndarray, dt: float) -> np.ndarray:
        def residual(u):
            return values - self.weight * u + dt * self._face_divergence(u)

        # increment form from the old state: the residual of an equilibrium is round-off only
        u = values / self.weight
        u = u + lu.solve(residual(u))
        if not (np.all(np.isfinite(u)) and np.all(u >= 0)):
            # direct solve: M-matrix, non-negative by construction
            u = lu.solve(values)
            _check_solution(u)
        refined = u + lu.solve(residual(u))
        if np.all(refined >= 0):
            u = refined
        return self.weight * u

    def _step_density(self, lu, values: np.ndarray, dt: float) -> np.ndarray:
        new = values + lu.solve(dt * (self.generator @ values))
        if not (np.all(np.isfinite(new)) and np.all(new >= 0)):
            new = lu.solve(values)
            _check_solution(new)
        refined = new + lu.solve(values - new + dt * (self.generator @ new))
        if np.all(refined >= 0):
            new = refined
        return new


def _check_solution(values: np.ndarray) -> None:
    if not np.all(np.isfinite(values)):
        raise StepRejected("non-finite density after implicit solve")
    if np.any(values < 0):
        raise StepRejected(f"negative density {float(np.min(values)):.3e} after implicit solve")


def step_drift_diffusion(
    rho: DensityField,
    potential_on_grid: np.ndarray,
    inv_temperature: float,
    friction: float,
    dt: float,
) -> DensityField:
    """One backward-Euler step of ``d_t rho = d_x(beta rho d_x W + d_x rho) / (beta b)``.

    Units are whatever ``rho.grid``, ``W``, ``beta``, ``b`` and ``dt`` share
    (SI in normal use). Raises ``StepRejected`` on a failed solve.
    """
    if dt <= 0 or inv_temperature <= 0 or friction <= 0:
        raise ValueError("dt, inv_temperature and friction must be > 0")
    w = inv_temperature * np.asarray(potential_on_grid, dtype=float)
    if w.shape != rho.values.shape:
        raise ValueError("potential does not match the grid")
    op = DriftDiffusionOperator(w, 1.0 / (inv_temperature * friction), rho.grid.cell_width, rho.grid.periodic)
    return DensityField(rho.grid, op.step(rho.values, dt))


# --------------------------------------------------------------------------
# Bohm (zero-temperature) implicit step


class BohmOperator:
    """Backward-Euler step of ``d_t rho = d_x[rho d_x(v + q)]`` on a periodic grid.

    ``q = -4 lam (sqrt rho)'' / sqrt rho`` in reduced units. The nonlinear
    system is solved by Newton's method in rho; the residual is in flux
    form, so every full Newton update conserves mass to round-off.
    """

    def __init__(self, v: np.ndarray, lam: float, h: float, newton_tol: float = 1e-10, max_newton: int = 12):
        self.v = np.asarray(v, dtype=float)
        n = self.v.size
        self.n = n
        self.lam = lam
        self.h = h
        self.newton_tol = newton_tol
        self.max_newton = max_newton
        idx = np.arange(n)
        nxt = (idx + 1) % n
        ones = np.ones(n)
        self.G = sps.csr_matrix((np.concatenate([-ones, ones]) / h, (np.concatenate([idx, idx]), np.concatenate([idx, nxt]))), shape=(n, n))
        self.GT = self.G.T.tocsr()
        self.A = sps.csr_matrix((np.full(2 * n, 0.5), (np.concatenate([idx, idx]), np.concatenate([idx, nxt]))), shape=(n, n))
        self._idx = idx
        self._nxt = nxt
        self._prv = (idx - 1) % n
        self.last_iterations = 0

    def quantum_potential(self, rho: np.ndarray) -> np.ndarray:
        psi = np.sqrt(rho)
        lap = np.roll(psi, -1) - 2.0 * psi + np.roll(psi, 1)
        return -4.0 * self.lam * lap / (self.h * self.h * psi)

    def chemical_potential(self, rho: np.ndarray) -> np.ndarray:
        return self.v + self.quantum_potential(rho)

    def rate(self, rho: np.ndarray) -> np.ndarray:
        """Right-hand side ``d_x[rho d_x mu]``."""
        mu = self.chemical_potential(rho)
        return -(self.GT @ ((self.A @ rho) * (self.G @ mu)))

    def _jacobian(self, rho: np.ndarray, dt: float):
        psi = np.sqrt(rho)
        k = 4.0 * self.lam / (self.h * self.h)
        psi_n = psi[self._nxt]
        psi_p = psi[self._prv]
        # d q_i / d rho_j via d psi_j / d rho_j = 1 / (2 psi_j)
        diag = k * (psi_n + psi_p) / psi ** 2 / (2.0 * psi)
        upper = -k / psi / (2.0 * psi_n)
        lower = -k / psi / (2.0 * psi_p)
        rows = np.concatenate([self._idx, self._idx, self._idx])
        cols = np.concatenate([self._idx, self._nxt, self._prv])
        Jq = sps.csr_matrix((np.concatenate([diag, upper, lower]), (rows, cols)), shape=(self.n, self.n))
        mu = self.chemical_potential(rho)
        M = sps.diags(self.A @ rho)
        term = self.GT @ (M @ (self.G @ Jq)) + self.GT @ (sps.diags(self.G @ mu) @ self.A)
        return (sps.identity(self.n, format="csr") + dt * term).tocsc()

    def step(self, rho_old: np.ndarray, dt: float) -> np.ndarray:
        rho = rho_old.copy()
        scale = float(np.max(rho_old))
        for it in range(1, self.max_newton + 1):
            mu = self.chemical_potential(rho)
            resid = rho - rho_old + dt * (self.GT @ ((self.A @ rho) * (self.G @ mu)))
            if it > 1 and np.max(np.abs(resid)) <= self.newton_tol * scale:
                self.last_iterations = it - 1
                return rho
            delta = spsolve(self._jacobian(rho, dt), -resid)
            if not np.all(np.isfinite(delta)):
                raise StepRejected("non-finite Newton update")
            rho = rho + delta
            if np.any(rho <= 0):
                raise StepRejected("Newton iterate left the positive cone")
        mu = self.chemical_potential(rho)
        resid = rho - rho_old + dt * (self.GT @ ((self.A @ rho) * (self.G @ mu)))
        if np.max(np.abs(resid)) <= self.newton_tol * scale:
            self.last_iterations = self.max_newton
            return rho
        raise StepRejected("Newton iteration did not converge")


# --------------------------------------------------------------------------
# run helpers


def _contaminated(values: np.ndarray, h: float, tol: float) -> bool:
    edge = (np.sum(values[:EDGE_CELLS]) + np.sum(values[-EDGE_CELLS:])) * h
    return edge > tol


def _packet_center(grid: Grid, W: Callable, period: float) -> float:
    """Minimum of W among the extrema nearest the grid midpoint."""
    mid = grid.midpoint
    # cos-based potentials have extrema on the half-period lattice
    base = math.floor(mid / (0.5 * period))
    candidates = [(base + k) * 0.5 * period for k in (-1, 0, 1, 2)]
    return min(candidates, key=lambda x: (float(W(np.array([x]))[0]), abs(x - mid)))


def _initial_packet(grid: Grid, center: float, sigma0: float) -> DensityField:
    if sigma0 < 2.0 * grid.cell_width:
        raise ValueError(f"sigma0 = {sigma0:.3g} is below two cell widths ({2 * grid.cell_width:.3g})")
    return gaussian_density(grid, center, sigma0)


def _check_periodic(grid: Grid, params: ModelParams) -> None:
    if not grid.periodic:
        raise ValueError("this mode needs a periodic grid")
    grid.check_commensurate(params.period)


class _Controller:
    """dt bookkeeping shared by the adaptive runs."""

    def __init__(self, config: SolverConfig, time_scale: float):
        self.adaptive = config.adaptivity == HALVING
        self.dt = config.dt_initial / time_scale
        self.dt_min = config.minimum_dt / time_scale
        self.dt_max = config.dt_max / time_scale
        self.growth = config.dt_growth if self.adaptive else 1.0

    def reject(self, reason: str) -> None:
        if not self.adaptive:
            raise StepRejected(reason)
        self.dt *= 0.5
        if self.dt < self.dt_min:
            raise StepRejected(f"dt fell below dt_min after: {reason}")

    def accept(self) -> None:
        self.dt = min(self.dt * self.growth, self.dt_max)


def _time_loop(
    rho: DensityField,
    config: SolverConfig,
    time_scale: float,
    advance: Callable[[np.ndarray, float], np.ndarray],
    beta_q_inv: Optional[Callable[[np.ndarray], float]] = None,
    validate: Optional[Callable[[np.ndarray, np.ndarray], Optional[str]]] = None,
    diagnostics: Optional[dict] = None,
) -> TimeSeries:
    """Generic stepping loop in reduced time; records SI rows."""
    grid = rho.grid
    h = grid.cell_width
    t_end = config.t_max / time_scale
    recorder = SeriesRecorder(with_beta_q=beta_q_inv is not None)
    values = rho.values.copy()

    def record(t_red: float) -> None:
        obs = observables(DensityField(grid, values))
        recorder.record(t_red * time_scale, obs, None if beta_q_inv is None else beta_q_inv(values))

    diagnostics = dict(diagnostics or {})
    ctrl = _Controller(config, time_scale)
    t = 0.0
    steps = rejected = 0
    # the seam guard only makes sense for a packet that starts clear of the seam
    guard = grid.periodic and not _contaminated(values, h, config.boundary_mass_tolerance)
    record(t)
    stop_reason = "t_max"
    usable_until = math.inf
    while t < t_end * (1 - 1e-12):
        if steps >= config.max_steps:
            stop_reason = "max_steps"
            break
        dt = min(ctrl.dt, t_end - t)
        try:
            new = advance(values, dt)
            problem = validate(values, new) if validate is not None else None
            if problem:
                raise StepRejected(problem)
        except StepRejected as exc:
            rejected += 1
            try:
                ctrl.reject(str(exc))
            except StepRejected as fatal:
                if recorder.last_time < t * time_scale:
                    record(t)
                diagnostics.update(steps=steps, rejected_steps=rejected, dt_last=ctrl.dt * time_scale)
                partial = recorder.build(stop_reason="aborted", diagnostics=diagnostics)
                raise SolverError(str(fatal), partial=partial, diagnostics=diagnostics) from exc
            continue
        values = new
        t += dt
        steps += 1
        ctrl.accept()
        if guard and _contaminated(values, h, config.boundary_mass_tolerance):
            stop_reason = "contamination"
            usable_until = recorder.last_time
            break
        if steps % config.output_stride == 0:
            record(t)
    if stop_reason != "contamination" and recorder.last_time < t * time_scale:
        record(t)
    diagnostics.update(steps=steps, rejected_steps=rejected, dt_last=ctrl.dt * time_scale)
    if stop_reason == "contamination":
        log.info("run stopped at contamination; usable until t=%g", usable_until)
    return recorder.build(usable_until=usable_until, stop_reason=stop_reason, diagnostics=diagnostics)


# --------------------------------------------------------------------------
# runs


def run_semiclassical(
    params: ModelParams,
    groups: Optional[DimensionlessGroups],
    grid: Grid,
    config: SolverConfig,
    include_nonlinear: bool = False,
    initial: Optional[DensityField] = None,
) -> TimeSeries:
    """Evolve a packet under the semiclassical equation with the effective potential W.

    The packet starts at the W-minimum nearest the domain midpoint. The run
    stops at ``t_max`` or as soon as more than ``boundary_mass_tolerance`` of
    mass sits within two cells of the periodic seam.
    """
    if params.zero_temperature:
        raise ValueError("the semiclassical mode needs T > 0")
    groups = groups or derive_groups(params)
    _check_periodic(grid, params)
    q = params.wavenumber
    spec = EffectivePotentialSpec(
        CosinePotential(params.barrier_amplitude, q), groups.theta, groups.beta, include_nonlinear
    )
    w = groups.beta * spec.value(grid.centers)
    time_scale = groups.beta * params.friction / q ** 2
    if initial is None:
        sigma0 = config.sigma0 if config.sigma0 is not None else 0.5 / q
        initial = _initial_packet(grid, _packet_center(grid, spec.value, params.period), sigma0)
    op = DriftDiffusionOperator(w, 1.0, q * grid.cell_width, grid.periodic)
    return _time_loop(
        initial,
        config,
        time_scale,
        op.step,
        diagnostics={"mode": "semiclassical", "include_nonlinear": include_nonlinear},
    )


def _zero_t_scales(params: ModelParams) -> tuple[float, float, float]:
    """(energy scale E, reduced quantum parameter hbar**2 q**2 / 8 m E, time scale b / (E q**2))."""
    q = params.wavenumber
    if params.hbar <= 0:
        raise ValueError("zero-temperature modes need hbar > 0")
    quantum = params.hbar ** 2 * q * q / (8.0 * params.mass)
    energy = params.barrier_amplitude if params.barrier_amplitude > 0 else quantum
    return energy, quantum / energy, params.friction / (energy * q * q)


def run_quantum_temperature(
    params: ModelParams,
    grid: Grid,
    config: SolverConfig,
    initial: Optional[DensityField] = None,
) -> TimeSeries:
    """Drift-diffusion at the self-consistent quantum temperature ``hbar**2 / (4 m sigma**2)``.

    The temperature is lagged by one step: sigma**2 is taken from the field
    at the start of each step. In ``halving`` mode steps that change sigma**2
    by more than ``max_relative_change`` are retried with half the step.
    """
    if not params.zero_temperature:
        raise ValueError("the quantum-temperature mode is a T = 0 mode")
    _check_periodic(grid, params)
    q = params.wavenumber
    energy, lam, time_scale = _zero_t_scales(params)
    V = CosinePotential(params.barrier_amplitude, q)
    v = V.value(grid.centers) / energy
    h_red = q * grid.cell_width
    if initial is None:
        sigma0 = config.sigma0 if config.sigma0 is not None else 0.5 / q
        initial = _initial_packet(grid, _packet_center(grid, V.value, params.period), sigma0)

    def reduced_sigma2(values: np.ndarray) -> float:
        return observables(DensityField(grid, values)).dispersion * q * q

    def advance(values: np.ndarray, dt: float) -> np.ndarray:
        eps = 2.0 * lam / reduced_sigma2(values)
        op = DriftDiffusionOperator(v / eps, eps, h_red, True)
        return op.step(values, dt)

    def validate(old: np.ndarray, new: np.ndarray) -> Optional[str]:
        if config.adaptivity != HALVING:
            return None
        s_old, s_new = reduced_sigma2(old), reduced_sigma2(new)
        if abs(s_new - s_old) > config.max_relative_change * s_old:
            return "dispersion changed too fast"
        return None

    def beta_q_inv(values: np.ndarray) -> float:
        sigma2 = observables(DensityField(grid, values)).dispersion
        return params.hbar ** 2 / (4.0 * params.mass * sigma2)

    return _time_loop(
        initial,
        config,
        time_scale,
        advance,
        beta_q_inv=beta_q_inv,
        validate=validate,
        diagnostics={"mode": "quantum-temp", "lambda_reduced": lam, "energy_scale": energy},
    )


def run_bohm_zero_T(
    params: ModelParams,
    grid: Grid,
    config: SolverConfig,
    initial: Optional[DensityField] = None,
    dispersion_drop_tolerance: float = 0.1,
) -> TimeSeries:
    """Zero-temperature Bohm equation, implicit in both the drift and the quantum potential.

    A step is rejected (and dt halved in ``halving`` mode) when Newton fails,
    leaves the positive cone, or sigma**2 drops by more than
    ``dispersion_drop_tolerance`` in one step.
    """
    if not params.zero_temperature:
        raise ValueError("the Bohm mode is a T = 0 mode")
    _check_periodic(grid, params)
    q = params.wavenumber
    energy, lam, time_scale = _zero_t_scales(params)
    V = CosinePotential(params.barrier_amplitude, q)
    v = V.value(grid.centers) / energy
    if initial is None:
        sigma0 = config.sigma0 if config.sigma0 is not None else 0.5 / q
        initial = _initial_packet(grid, _packet_center(grid, V.value, params.period), sigma0)
    # keep the initial field strictly positive: the Bohm potential needs sqrt(rho) > 0
    floor = 1e-14 * float(np.max(initial.values))
    initial = DensityField(grid, np.maximum(initial.values, floor)).normalized()
    op = BohmOperator(v, lam, q * grid.cell_width)
    newton_counts: list[int] = []

    def advance(values: np.ndarray, dt: float) -> np.ndarray:
        new = op.step(values, dt)
        newton_counts.append(op.last_iterations)
        return new

    def validate(old: np.ndarray, new: np.ndarray) -> Optional[str]:
        s_old = observables(DensityField(grid, old)).dispersion
        s_new = observables(DensityField(grid, new)).dispersion
        if s_new < (1.0 - dispersion_drop_tolerance) * s_old:
            return "dispersion dropped"
        return None

    def beta_q_inv(values: np.ndarray) -> float:
        sigma2 = observables(DensityField(grid, values)).dispersion
        return params.hbar ** 2 / (4.0 * params.mass * sigma2)

    series = _time_loop(
        initial,
        config,
        time_scale,
        advance,
        beta_q_inv=beta_q_inv,
        validate=validate,
        diagnostics={"mode": "bohm", "lambda_reduced": lam, "energy_scale": energy, "initial_floor": floor},
    )
    series.diagnostics["newton_iterations_max"] = max(newton_counts, default=0)
    return series


def fourth_order_decay(params: ModelParams) -> float:
    """Coefficient ``hbar**2 / (4 m b)`` of the fourth-order equation."""
    return params.hbar ** 2 / (4.0 * params.mass * params.friction)


def evolve_fourth_order(rho: DensityField, coefficient: float, t: float) -> DensityField:
    """Exact solution of ``d_t rho = -c d_x**4 rho`` on a periodic grid after time t."""
    if not rho.grid.periodic:
        raise ValueError("the spectral path needs a periodic grid")
    n = rho.grid.cell_count
    k = 2.0 * math.pi * np.fft.rfftfreq(n, d=rho.grid.cell_width)
    spectrum = np.fft.rfft(rho.values) * np.exp(-coefficient * k ** 4 * t)
    return DensityField(rho.grid, np.fft.irfft(spectrum, n=n))


def run_fourth_order(
    params: ModelParams,
    grid: Grid,
    config: SolverConfig,
    initial: Optional[DensityField] = None,
    negativity_threshold: float = 1e-4,
) -> TimeSeries:
    """Spectral run of the fourth-order equation from a Gaussian at the grid midpoint.

    Each output row is computed directly from the initial spectrum, so there
    is no time-stepping error. ``diagnostics["negativity_onset"]`` is the
    first row time with ``min rho < -negativity_threshold * max rho``.
    """
    if not grid.periodic:
        raise ValueError("the spectral path needs a periodic grid")
    if initial is None:
        sigma0 = config.sigma0 if config.sigma0 is not None else 0.5 / params.wavenumber
        initial = _initial_packet(grid, grid.midpoint, sigma0)
    c = fourth_order_decay(params)
    dt_row = config.dt_initial * config.output_stride
    n_rows = int(math.floor(config.t_max / dt_row * (1 + 1e-12)))
    times = [j * dt_row for j in range(n_rows + 1)]
    if times[-1] < config.t_max * (1 - 1e-12):
        times.append(config.t_max)
    recorder = SeriesRecorder()
    onset = None
    for t in times:
        field = evolve_fourth_order(initial, c, t) if t > 0 else initial
        obs = observables(field)
        recorder.record(t, obs)
        if onset is None and obs.min_density < -negativity_threshold * float(np.max(field.values)):
            onset = t
    return recorder.build(
        diagnostics={"mode": "fourth-order", "coefficient": c, "negativity_onset": onset}
    )
