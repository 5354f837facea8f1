"""``qdiff`` command line: dcoef, simulate, closure, check-paper, sweep.

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 published-claim failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path
from typing import Iterable, Optional, Sequence, TextIO

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, parse_config, parse_sweep_config
from .fields import TimeSeries
from .gaussian_closure import (
    ClosureError,
    ClosureParams,
    asymptotic_dispersion,
    dispersion_at_time,
    free_dispersion,
    integrate_closure_ode,
)
from .lifson_jackson import (
    QuadratureError,
    RegimeWarning,
    dcoef_arrhenius,
    dcoef_closed_form,
    dcoef_quadrature,
)
from .model import (
    ANGSTROM,
    ELECTRON_MASS,
    ELECTRON_VOLT,
    PARTICLE_MASSES,
    PROTON_MASS,
    ROOM_TEMPERATURE,
    ModelParams,
    derive_groups,
    temperature_for_theta,
)
from .pde_solver import (
    SolverError,
    run_bohm_zero_T,
    run_fourth_order,
    run_quantum_temperature,
    run_semiclassical,
)
from .potentials import CosinePotential, EffectivePotentialSpec, equilibrium_density

log = logging.getLogger("qdiff")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_CLAIMS = 3

SWEEP_COLUMNS = (
    "index",
    "beta_u",
    "theta",
    "lambda_param",
    "D_quadrature",
    "D_closed",
    "D_arrhenius",
    "log_D_closed",
    "E_a",
    "error",
)


def fmt(value) -> str:
    """Locale-independent 17-significant-digit formatting; None -> empty."""
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    if isinstance(value, str):
        return value
    return format(float(value), ".17g")


def _groups_echo(groups) -> str:
    return " ".join(f"{k}={fmt(v)}" for k, v in groups.as_dict().items())


def write_timeseries_csv(series: TimeSeries, out: TextIO, header: Sequence[str] = ()) -> None:
    for line in header:
        out.write(f"# {line}\n")
    out.write(",".join(TimeSeries.COLUMNS) + "\n")
    for row in series.rows():
        out.write(",".join(fmt(v) for v in row) + "\n")


# --------------------------------------------------------------------------
# dcoef


def _thermal_params_from_args(args) -> tuple[ModelParams, bool]:
    physical = any(
        getattr(args, k) is not None for k in ("particle", "mass_kg", "lattice_A", "temperature", "U_eV", "U_J")
    )
    if args.beta_u is not None or args.theta is not None:
        if physical:
            raise ConfigError("use either --beta-u/--theta or physical parameters, not both")
        if args.beta_u is None:
            raise ConfigError("--beta-u is required")
        return ModelParams.reduced_thermal(args.beta_u, args.theta or 0.0), True
    if not physical:
        raise ConfigError("give --beta-u/--theta or physical parameters")
    return _physical_params(args, thermal=True), False


def _physical_params(args, thermal: bool) -> ModelParams:
    if args.particle and args.mass_kg:
        raise ConfigError("give either --particle or --mass-kg")
    mass = args.mass_kg or PARTICLE_MASSES.get(args.particle or "proton")
    if args.U_eV is not None and args.U_J is not None:
        raise ConfigError("give either --U-eV or --U-J")
    U = args.U_J if args.U_J is not None else (args.U_eV or 0.0) * ELECTRON_VOLT
    temperature = args.temperature if args.temperature is not None else (ROOM_TEMPERATURE if thermal else 0.0)
    lattice = (args.lattice_A or 3.0) * ANGSTROM
    try:
        return ModelParams(
            mass=mass,
            friction=args.friction,
            temperature=temperature,
            barrier_amplitude=U,
            wavenumber=2.0 * math.pi / lattice,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def dcoef_table(params: ModelParams, include_nonlinear: bool = False) -> list[dict]:
    groups = derive_groups(params)
    spec = EffectivePotentialSpec(
        CosinePotential(params.barrier_amplitude, params.wavenumber), groups.theta, groups.beta, include_nonlinear
    )
    quad = dcoef_quadrature(spec, groups.beta, params.friction, groups=groups)
    closed = dcoef_closed_form(groups, params.friction)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegimeWarning)
        arr = dcoef_arrhenius(groups, params.friction)
    einstein = 1.0 / (groups.beta * params.friction)
    rows = []
    for est in (quad, closed, arr.estimate):
        rows.append(
            {
                "method": est.method,
                "D": est.value,
                "log_D": est.log_value,
                "D_beta_b": est.value / einstein,
                "E_a": arr.activation_energy,
                "prefactor": arr.prefactor,
            }
        )
    return rows


def cmd_dcoef(args) -> int:
    params, reduced = _thermal_params_from_args(args)
    rows = dcoef_table(params, args.include_nonlinear)
    groups = derive_groups(params)
    out = sys.stdout
    cols = ("method", "D", "log_D", "D_beta_b", "E_a", "prefactor")
    out.write(f"# qdiff {__version__} mode=dcoef units={'reduced' if reduced else 'SI'} {_groups_echo(groups)}\n")
    if args.csv:
        out.write(",".join(cols) + "\n")
        for r in rows:
            out.write(",".join(fmt(r[c]) for c in cols) + "\n")
    else:
        out.write(f"{'method':<12} {'D':>24} {'ln D':>24} {'D*beta*b':>24}\n")
        for r in rows:
            out.write(f"{r['method']:<12} {r['D']:>24.17g} {r['log_D']:>24.17g} {r['D_beta_b']:>24.17g}\n")
        out.write(f"E_a = {rows[0]['E_a']:.17g}   prefactor = {rows[0]['prefactor']:.17g}\n")
    return EXIT_OK


# --------------------------------------------------------------------------
# simulate


def run_from_config(cfg: RunConfig) -> tuple[TimeSeries, dict]:
    """Dispatch a validated config to its solver; returns the series and the summary."""
    params = cfg.model_params()
    groups = derive_groups(params)
    grid = cfg.build_grid(params)
    solver = cfg.solver_config(params)
    summary = {
        "tool": f"qdiff {__version__}",
        "mode": cfg.mode,
        "parameters": cfg.model_dump(mode="json"),
        "model": {
            "mass": params.mass,
            "friction": params.friction,
            "temperature": params.temperature,
            "barrier_amplitude": params.barrier_amplitude,
            "wavenumber": params.wavenumber,
            "hbar": params.hbar,
            "k_b": params.k_b,
        },
        "groups": groups.as_dict(),
        "grid": {"cell_count": grid.cell_count, "domain_length": grid.domain_length, "origin": grid.origin},
        "solver": {
            "dt_initial": solver.dt_initial,
            "t_max": solver.t_max,
            "adaptivity": solver.adaptivity,
            "sigma0": solver.sigma0,
        },
    }
    if cfg.mode == "semiclassical":
        initial = None
        if cfg.initial == "equilibrium":
            spec = EffectivePotentialSpec(
                CosinePotential(params.barrier_amplitude, params.wavenumber),
                groups.theta,
                groups.beta,
                cfg.include_nonlinear,
            )
            initial = equilibrium_density(spec, groups.beta, grid)
        series = run_semiclassical(
            params, groups, grid, solver, include_nonlinear=cfg.include_nonlinear, initial=initial
        )
    elif cfg.mode == "quantum-temp":
        series = run_quantum_temperature(params, grid, solver)
    elif cfg.mode == "bohm":
        series = run_bohm_zero_T(params, grid, solver)
    else:
        series = run_fourth_order(params, grid, solver)
    return series, summary


def _finish_summary(summary: dict, series: Optional[TimeSeries], status: str, exit_code: int) -> dict:
    summary["exit_status"] = status
    summary["exit_code"] = exit_code
    if series is not None and len(series):
        summary["rows"] = len(series)
        summary["stop_reason"] = series.stop_reason
        summary["usable_range"] = [
            float(series.t[0]),
            float(min(series.usable_until, series.t[-1])),
        ]
        summary["final"] = dict(zip(TimeSeries.COLUMNS, next(iter(reversed(list(series.rows()))))))
        summary["min_density"] = float(np.min(series.min_rho))
        summary["diagnostics"] = {k: v for k, v in series.diagnostics.items() if _jsonable(v)}
    return summary


def _jsonable(value) -> bool:
    try:
        json.dumps(value)
        return True
    except TypeError:
        return False


def cmd_simulate(args) -> int:
    cfg = parse_config(Path(args.config).read_text())
    csv_path = args.csv or cfg.output.csv
    summary_path = args.summary or cfg.output.summary
    if csv_path and not summary_path:
        summary_path = str(Path(csv_path).with_suffix(".summary.json"))
    exit_code = EXIT_OK
    status = "ok"
    try:
        series, summary = run_from_config(cfg)
    except SolverError as exc:
        series = exc.partial
        params = cfg.model_params()
        summary = {"tool": f"qdiff {__version__}", "mode": cfg.mode, "groups": derive_groups(params).as_dict()}
        summary["error"] = str(exc)
        summary["partial"] = True
        exit_code = EXIT_NUMERICAL
        status = "solver_abort"
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    groups_line = " ".join(f"{k}={fmt(v)}" for k, v in summary["groups"].items())
    header = [f"qdiff {__version__} mode={cfg.mode}", f"groups {groups_line}"]
    if exit_code != EXIT_OK:
        header.append(f"PARTIAL: {summary['error']}")
    if series is not None:
        if csv_path:
            with open(csv_path, "w", newline="") as fh:
                write_timeseries_csv(series, fh, header)
        else:
            write_timeseries_csv(series, sys.stdout, header)
    summary = _finish_summary(summary, series, status, exit_code)
    text = json.dumps(summary, indent=2, sort_keys=True, default=str)
    if summary_path:
        Path(summary_path).write_text(text + "\n")
    elif csv_path:
        sys.stdout.write(text + "\n")
    return exit_code


# --------------------------------------------------------------------------
# closure


def closure_rows(params: ClosureParams, times: Iterable[float], sigma0: float = 0.0) -> list[tuple]:
    times = np.asarray(list(times), dtype=float)
    ode = integrate_closure_ode(params, float(times[-1]), sigma0=sigma0, times=times)
    rows = []
    for t, s_ode in zip(times, ode.sigma2):
        implicit = dispersion_at_time(float(t), params) if sigma0 == 0 else None
        asym = None
        bqu = None
        if params.barrier_amplitude > 0:
            bqu = params.beta_q_u(float(s_ode))
            if t / params.log_unit_time > 1.0:
                asym = asymptotic_dispersion(float(t), params)
        rows.append((float(t), float(s_ode), implicit, asym, bqu))
    return rows


def cmd_closure(args) -> int:
    if args.lambda_param is not None:
        if any(getattr(args, k) is not None for k in ("particle", "mass_kg", "U_eV", "U_J", "lattice_A")):
            raise ConfigError("use either --lambda-param or physical parameters")
        params = ClosureParams(1.0, 1.0, 1.0, hbar=math.sqrt(8.0 * args.lambda_param))
        units = "reduced"
    else:
        mp = _physical_params(args, thermal=False)
        params = ClosureParams.from_model(mp)
        units = "SI"
    if args.t_max <= args.t_min or args.t_min <= 0:
        raise ConfigError("need 0 < --t-min < --t-max")
    times = np.geomspace(args.t_min, args.t_max, args.points)
    rows = closure_rows(params, times, sigma0=args.sigma0)
    out = sys.stdout
    out.write(
        f"# qdiff {__version__} mode=closure units={units} mass={fmt(params.mass)} friction={fmt(params.friction)} "
        f"U={fmt(params.barrier_amplitude)} hbar={fmt(params.hbar)}\n"
    )
    out.write("t,sigma2_ode,sigma2_implicit,sigma2_asymptote,beta_q_u\n")
    for row in rows:
        out.write(",".join(fmt(v) for v in row) + "\n")
    return EXIT_OK


# --------------------------------------------------------------------------
# check-paper


def paper_claims() -> list[dict]:
    """Evaluate the numeric claims; each row carries value, target, band and verdict."""
    rows = []

    def add(name: str, value: float, target: str, ok: bool) -> None:
        rows.append({"claim": name, "value": value, "target": target, "pass": bool(ok)})

    lattice = 3.0 * ANGSTROM
    proton = ModelParams.for_particle("proton", ROOM_TEMPERATURE, lattice, friction=1e-12)
    electron = ModelParams.for_particle("electron", ROOM_TEMPERATURE, lattice, friction=1e-12)
    gp = derive_groups(proton)
    ge = derive_groups(electron)

    lam_p = gp.lambda_T / ANGSTROM
    add("lambda_T proton 298.15 K [A]", lam_p, "0.2 +/- 5%", abs(lam_p / 0.2 - 1) <= 0.05)
    add("theta proton, 3 A lattice", gp.theta, "[0.08, 0.11] (stated ~0.1)", 0.08 <= gp.theta <= 0.11)

    t_free = temperature_for_theta(1.0, PROTON_MASS, proton.wavenumber)
    add("T(theta=1) proton, 3 A [K]", t_free, "[24, 27] (stated ~25)", 24.0 <= t_free <= 27.0)

    lam_e = ge.lambda_T / ANGSTROM
    add("lambda_T electron 298.15 K [A]", lam_e, "8.6 +/- 2%", abs(lam_e / 8.6 - 1) <= 0.02)
    add("theta electron, 3 A lattice", ge.theta, "162 +/- 2", abs(ge.theta - 162.0) <= 2.0)

    U = 0.1 * ELECTRON_VOLT
    for label, theta in (("theta=0.1", 0.1), ("proton theta", gp.theta)):
        groups = derive_groups(
            ModelParams(PROTON_MASS, 1e-12, ROOM_TEMPERATURE, U, proton.wavenumber)
        )
        groups = type(groups)(**{**groups.as_dict(), "theta": theta})
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RegimeWarning)
            arr = dcoef_arrhenius(groups, 1e-12)
        expected = (2.0 - 2.0 * theta) * U
        add(f"E_a = (2 - lambda_T^2 q^2) U, {label} [E_a/U]", arr.activation_energy / U, fmt(expected / U),
            arr.activation_energy == expected)
    groups = derive_groups(ModelParams(PROTON_MASS, 1e-12, ROOM_TEMPERATURE, U, proton.wavenumber))
    groups = type(groups)(**{**groups.as_dict(), "theta": 0.1})
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegimeWarning)
        arr = dcoef_arrhenius(groups, 1e-12)
    reduction = 1.0 - arr.activation_energy / (2.0 * U)
    add("barrier reduction at theta=0.1", reduction, "0.10", abs(reduction - 0.1) <= 1e-12)
    pref_reduction = 1.0 - arr.prefactor / (2.0 * math.pi * U / 1e-12)
    add("prefactor reduction at theta=0.1", pref_reduction, "0.10", abs(pref_reduction - 0.1) <= 1e-12)

    einstein = 1.0 / (gp.beta * proton.friction)
    spec = EffectivePotentialSpec(CosinePotential(0.0, proton.wavenumber), gp.theta, gp.beta)
    d_quad = dcoef_quadrature(spec, gp.beta, proton.friction).value
    d_closed = dcoef_closed_form(gp, proton.friction).value
    add("D(U=0) quadrature = 1/(beta b) [D beta b]", d_quad / einstein, "1 exactly", d_quad == einstein)
    add("D(U=0) closed form = 1/(beta b) [D beta b]", d_closed / einstein, "1 exactly", d_closed == einstein)

    cp = ClosureParams(ELECTRON_MASS, 1e-12, 0.0)
    times = np.geomspace(1e-15, 1e-9, 7)
    ode = integrate_closure_ode(cp, times[-1], times=times)
    free = np.array([free_dispersion(t, cp.mass, cp.friction) for t in times])
    dev = float(np.max(np.abs(ode.sigma2 / free - 1)))
    add("free quantum law sigma^2 = hbar sqrt(t/mb) [max rel dev]", dev, "<= 1e-9", dev <= 1e-9)
    return rows


def cmd_check_paper(args) -> int:
    rows = paper_claims()
    out = sys.stdout
    width = max(len(r["claim"]) for r in rows)
    for r in rows:
        verdict = "PASS" if r["pass"] else "FAIL"
        out.write(f"{verdict}  {r['claim']:<{width}}  {r['value']:.6g}  (target {r['target']})\n")
    failed = [r for r in rows if not r["pass"]]
    if failed:
        out.write(f"{len(failed)} claim(s) failed: " + "; ".join(r["claim"] for r in failed) + "\n")
        return EXIT_CLAIMS
    out.write(f"all {len(rows)} claims pass\n")
    return EXIT_OK


# --------------------------------------------------------------------------
# sweep


def sweep_point(index: int, beta_u: float, theta: Optional[float], lambda_param: Optional[float],
                include_nonlinear: bool = False) -> dict:
    """One sweep row in reduced units (D in 1/(beta b), E_a in k_B T)."""
    row = {c: None for c in SWEEP_COLUMNS}
    row["index"] = index
    row["beta_u"] = beta_u
    try:
        if theta is None:
            if lambda_param is None or lambda_param <= 0:
                raise ValueError("lambda_param must be > 0")
            theta = lambda_param * beta_u
        elif beta_u > 0:
            lambda_param = theta / beta_u
        row["theta"] = theta
        row["lambda_param"] = lambda_param
        params = ModelParams.reduced_thermal(beta_u, theta)
        groups = derive_groups(params)
        spec = EffectivePotentialSpec(CosinePotential(beta_u, 1.0), theta, 1.0, include_nonlinear)
        quad = dcoef_quadrature(spec, 1.0, 1.0, groups=groups)
        closed = dcoef_closed_form(groups, 1.0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RegimeWarning)
            arr = dcoef_arrhenius(groups, 1.0)
        row.update(
            D_quadrature=quad.value,
            D_closed=closed.value,
            D_arrhenius=arr.estimate.value,
            log_D_closed=closed.log_value,
            E_a=arr.activation_energy,
        )
    except (ValueError, ArithmeticError) as exc:
        row["error"] = f"{type(exc).__name__}: {exc}".replace(",", ";")
    return row


def _sweep_points(cfg) -> list[tuple]:
    points = []
    axis = cfg.theta if cfg.theta is not None else cfg.lambda_param
    for bu in cfg.beta_u:
        for other in axis:
            idx = len(points)
            if cfg.theta is not None:
                points.append((idx, bu, other, None, cfg.include_nonlinear))
            else:
                points.append((idx, bu, None, other, cfg.include_nonlinear))
    return points


def run_sweep(cfg, workers: Optional[int] = None) -> list[dict]:
    """Evaluate all points on a bounded process pool; rows come back in point order."""
    points = _sweep_points(cfg)
    workers = workers or cfg.workers or os.cpu_count() or 1
    if workers == 1:
        results = [sweep_point(*p) for p in points]
    else:
        results = []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(sweep_point, *p) for p in points]
            for fut in as_completed(futures):
                results.append(fut.result())
    return sorted(results, key=lambda r: r["index"])


def write_sweep_csv(rows: list[dict], out: TextIO, cfg) -> None:
    axis = "theta" if cfg.theta is not None else "lambda_param"
    values = cfg.theta if cfg.theta is not None else cfg.lambda_param
    out.write(
        f"# qdiff {__version__} mode=sweep units=reduced (D in 1/(beta b), E_a in k_B T) "
        f"beta_u={'|'.join(fmt(v) for v in cfg.beta_u)} {axis}={'|'.join(fmt(v) for v in values)} "
        f"include_nonlinear={cfg.include_nonlinear}\n"
    )
    out.write(",".join(SWEEP_COLUMNS) + "\n")
    for r in rows:
        out.write(",".join(fmt(r[c]) for c in SWEEP_COLUMNS) + "\n")


def cmd_sweep(args) -> int:
    cfg = parse_sweep_config(Path(args.config).read_text())
    rows = run_sweep(cfg, args.workers)
    path = args.output or cfg.output
    if path:
        with open(path, "w", newline="") as fh:
            write_sweep_csv(rows, fh, cfg)
    else:
        write_sweep_csv(rows, sys.stdout, cfg)
    ok = sum(1 for r in rows if r["error"] is None)
    if ok == 0:
        log.error("every sweep point failed")
        return EXIT_NUMERICAL
    return EXIT_OK


# --------------------------------------------------------------------------


def _add_physical(p: argparse.ArgumentParser, thermal: bool) -> None:
    p.add_argument("--particle", choices=sorted(PARTICLE_MASSES))
    p.add_argument("--mass-kg", type=float)
    p.add_argument("--lattice-A", type=float, help="lattice constant in Angstrom (default 3)")
    p.add_argument("--U-eV", type=float, help="barrier amplitude U in eV")
    p.add_argument("--U-J", type=float, help="barrier amplitude U in J")
    p.add_argument("--friction", type=float, default=1e-12, help="friction coefficient b in kg/s")
    if thermal:
        p.add_argument("--temperature", type=float, help="K (default 298.15)")
    else:
        p.set_defaults(temperature=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qdiff", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qdiff {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dcoef", help="effective diffusion coefficient: quadrature, closed form, Arrhenius")
    p.add_argument("--beta-u", type=float)
    p.add_argument("--theta", type=float)
    _add_physical(p, thermal=True)
    p.add_argument("--include-nonlinear", action="store_true")
    p.add_argument("--csv", action="store_true")
    p.set_defaults(func=cmd_dcoef)

    p = sub.add_parser("simulate", help="run a PDE mode from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--csv", help="time-series CSV path (default: config output.csv or stdout)")
    p.add_argument("--summary", help="run-summary JSON path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("closure", help="Gaussian-closure dispersion over log-spaced times")
    p.add_argument("--lambda-param", type=float)
    _add_physical(p, thermal=False)
    p.add_argument("--t-min", type=float, default=1e-3)
    p.add_argument("--t-max", type=float, default=1e6)
    p.add_argument("--points", type=int, default=41)
    p.add_argument("--sigma0", type=float, default=0.0)
    p.set_defaults(func=cmd_closure)

    p = sub.add_parser("check-paper", help="re-evaluate the published numeric claims")
    p.set_defaults(func=cmd_check_paper)

    p = sub.add_parser("sweep", help="concurrent parameter sweep of the diffusion coefficient")
    p.add_argument("--config", required=True)
    p.add_argument("--workers", type=int)
    p.add_argument("--output")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, OSError) as exc:
        print(f"qdiff: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ClosureError, QuadratureError, SolverError, ArithmeticError) as exc:
        print(f"qdiff: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
