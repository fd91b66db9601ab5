"""Config-driven command line runner.

A run is described by a single JSON document with a "command" key and
command-specific parameters; closed-form inputs are named built-ins (an
identifier plus numeric parameters), never parsed math.  Each run writes
deterministic artifacts into --out: report.json (byte-identical for
identical configs), data CSVs, and meta.json holding the only
non-reproducible fields (timestamps, argv, seed).

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 hypothesis violation (for example a nonpositive Hopf floor).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from .grid import GridFunction, build_grid, gridfunction_to_csv, integrate_weighted
from .harnack import (
    analyticity_scan,
    campanato_scan,
    export_campanato_csv,
    hopf_floor,
    ratio,
)
from .majorant import (
    InfiniteCoefficientError,
    _num_from_token,
    _num_to_token,
    expr_from_dict,
    export_series_csv,
    ode_solve,
    radius_estimate,
)
from .obstacle import (
    NoFreeBoundaryError,
    NonGraphBoundaryError,
    blowup_check,
    export_curve_csv,
    extract_free_boundary,
    solve_obstacle,
)
from .straighten import CurveModel, transform_coefficients
from .weighted_solver import (
    BoundaryData,
    CoefficientField,
    SolveConvergenceError,
    assemble_rhs,
    assemble_weighted,
    residual_norm,
    solve,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_HYPOTHESIS = 3


class ConfigError(ValueError):
    """The run configuration cannot be honored."""


# ---------------------------------------------------------------------------
# named built-ins


def _radial_contact(a):
    def fn(x1, xn):
        r = np.hypot(np.asarray(x1, dtype=float), np.asarray(xn, dtype=float))
        r = np.maximum(r, a)
        return (r * r - a * a) / 4.0 - (a * a / 2.0) * np.log(r / a)

    return fn


def _halfplane_contact(x0):
    def fn(x1, xn):
        gap = np.maximum(np.asarray(xn, dtype=float) - x0, 0.0)
        return 0.5 * gap * gap + 0.0 * np.asarray(x1, dtype=float)

    return fn


_FIELD_BUILTINS = {
    # name -> (arity, factory(params) -> fn(x1, xn))
    "zero": (0, lambda: lambda x1, xn: np.zeros_like(np.asarray(x1, float))),
    "one": (0, lambda: lambda x1, xn: np.ones_like(np.asarray(x1, float))),
    "coordinate_x1": (0, lambda: lambda x1, xn: np.asarray(x1, float) * 1.0),
    "coordinate_xn": (0, lambda: lambda x1, xn: np.asarray(xn, float) * 1.0),
    "linear_slope": (1, lambda c: lambda x1, xn: c * np.asarray(x1, float)),
    "harmonic_im_z2": (0, lambda: lambda x1, xn: 2.0 * x1 * xn),
    "harmonic_re_z2": (0, lambda: lambda x1, xn: x1 * x1 - xn * xn),
    # annihilated by div(x_n^2 grad .): the quadratic benchmark profile
    "weighted_harmonic_quadratic": (
        0, lambda: lambda x1, xn: 3.0 * x1 * x1 - xn * xn),
    "radial_contact": (1, _radial_contact),
    "halfplane_contact": (1, _halfplane_contact),
}

_CURVE_BUILTINS = {
    # name -> (arity, factory(params) -> (fn, derivs))
    "flat": (0, lambda: (lambda t: 0.0 * np.asarray(t, float), [
        lambda t: 0.0 * np.asarray(t, float),
        lambda t: 0.0 * np.asarray(t, float),
        lambda t: 0.0 * np.asarray(t, float),
    ])),
    "sine_curve": (1, lambda amp: (
        lambda t: amp * np.sin(math.pi * np.asarray(t, float)),
        [
            lambda t: amp * math.pi * np.cos(math.pi * np.asarray(t, float)),
            lambda t: -amp * math.pi**2 * np.sin(math.pi * np.asarray(t, float)),
            lambda t: -amp * math.pi**3 * np.cos(math.pi * np.asarray(t, float)),
        ],
    )),
    "parabola_curve": (1, lambda c: (
        lambda t: c * np.asarray(t, float) ** 2,
        [
            lambda t: 2.0 * c * np.asarray(t, float),
            lambda t: 2.0 * c * np.ones_like(np.asarray(t, float)),
            lambda t: np.zeros_like(np.asarray(t, float)),
        ],
    )),
}

_COEFF_BUILTINS = {
    # name -> (arity, factory(params) -> fn(y1, yn) -> (b11, b12, b22))
    "identity": (0, lambda: lambda y1, yn: (
        np.ones_like(np.asarray(y1, float)),
        np.zeros_like(np.asarray(y1, float)),
        np.ones_like(np.asarray(y1, float)),
    )),
    "constant": (3, lambda a11, a12, a22: lambda y1, yn: (
        a11 * np.ones_like(np.asarray(y1, float)),
        a12 * np.ones_like(np.asarray(y1, float)),
        a22 * np.ones_like(np.asarray(y1, float)),
    )),
    "sine_modulated": (1, lambda eps: lambda y1, yn: (
        1.0 + eps * np.sin(np.asarray(yn, float)),
        np.zeros_like(np.asarray(y1, float)),
        np.ones_like(np.asarray(y1, float)),
    )),
}


def _parse_identifier(spec, kind: str):
    """Accept "name", "name(p1,p2)", or {"name": ..., "params": [...]}."""
    if isinstance(spec, str):
        text = spec.strip()
        if text.endswith(")") and "(" in text:
            name, _, arglist = text.partition("(")
            body = arglist[:-1].strip()
            params = [] if not body else [float(x) for x in body.split(",")]
            return name.strip(), params
        return text, []
    if isinstance(spec, dict):
        unknown = set(spec) - {"name", "params"}
        if unknown:
            raise ConfigError(
                f"unknown keys {sorted(unknown)} in {kind} spec")
        if "name" not in spec:
            raise ConfigError(f"{kind} spec needs a name")
        params = spec.get("params", [])
        if not isinstance(params, list):
            raise ConfigError(f"{kind} params must be a list")
        return str(spec["name"]), [float(x) for x in params]
    raise ConfigError(f"{kind} spec must be a string or object, got {spec!r}")


def _resolve(spec, table, kind: str):
    name, params = _parse_identifier(spec, kind)
    if name not in table:
        raise ConfigError(
            f"unknown {kind} {name!r}; built-ins: {sorted(table)}")
    arity, factory = table[name]
    if len(params) != arity:
        raise ConfigError(
            f"{kind} {name!r} takes {arity} parameter(s), got {len(params)}")
    try:
        return factory(*params)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad parameters for {kind} {name!r}: {exc}")


# ---------------------------------------------------------------------------
# config plumbing


def _section(cfg, key, default=None):
    value = cfg.get(key, default if default is not None else {})
    if not isinstance(value, dict):
        raise ConfigError(f"section {key!r} must be an object")
    return dict(value)


def _check_keys(d, allowed, context):
    unknown = set(d) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)} in {context}")


def _build_grid_from(cfg, default_shape):
    section = _section(cfg, "grid")
    _check_keys(section, {"shape", "nx", "ny"}, "grid")
    shape = section.get("shape", default_shape)
    try:
        nx = int(section.get("nx", 64))
        ny = int(section.get("ny", 32 if shape == "half" else 64))
        return build_grid(shape, nx, ny)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad grid: {exc}")


def _float_token(v):
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if math.isnan(v):
        return "nan"
    return v


def _jsonsafe(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonsafe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonsafe(v) for v in obj]
    if isinstance(obj, float):
        return _float_token(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return _float_token(float(obj))
    return obj


# ---------------------------------------------------------------------------
# commands: each returns (report dict, exit code) and writes its own CSVs


def cmd_solve_weighted(cfg, out: Path):
    _check_keys(cfg, {"command", "grid", "weight_power", "coefficients",
                      "boundary", "benchmark", "solver"}, "config")
    grid = _build_grid_from(cfg, "half")
    s = float(cfg.get("weight_power", 2.0))
    if s < 0:
        raise ConfigError("weight_power must be >= 0")
    if "boundary" not in cfg:
        raise ConfigError("solve_weighted needs boundary data")
    data_fn = _resolve(cfg["boundary"], _FIELD_BUILTINS, "field")
    coeff_fn = _resolve(cfg.get("coefficients", "identity"),
                        _COEFF_BUILTINS, "coefficients")
    solver = _section(cfg, "solver")
    _check_keys(solver, {"tol", "max_iter", "jacobi"}, "solver")
    tol = float(solver.get("tol", 1e-10))
    max_iter = solver.get("max_iter")
    max_iter = None if max_iter is None else int(max_iter)
    jacobi = bool(solver.get("jacobi", False))

    try:
        A = CoefficientField.from_callable(
            grid, lambda x1, xn: coeff_fn(x1, xn))
        bd = BoundaryData.from_callable(grid, data_fn)
        op = assemble_weighted(grid, A, s)
    except ValueError as exc:
        raise ConfigError(str(exc))
    rhs = assemble_rhs(op, None, None)
    stats = {}
    try:
        w = solve(op, rhs, bd, tol=tol, max_iter=max_iter, jacobi=jacobi,
                  stats=stats)
    except SolveConvergenceError as exc:
        report = {
            "command": "solve_weighted",
            "error": {"kind": "solve_convergence",
                      "iterations": exc.iterations,
                      "relative_residual": _float_token(
                          exc.residual_history[-1]
                          if exc.residual_history else math.nan)},
        }
        return report, EXIT_NUMERICAL

    report = {
        "command": "solve_weighted",
        "grid": {"shape": grid.shape, "nx": grid.nx, "ny": grid.ny},
        "weight_power": s,
        "iterations": stats["iterations"],
        "relative_residual": _float_token(stats["relative_residual"]),
        "flux_residual": _float_token(residual_norm(op, w, rhs, bd)),
    }
    if "benchmark" in cfg:
        bench_fn = _resolve(cfg["benchmark"], _FIELD_BUILTINS, "field")
        exact = GridFunction.from_callable(grid, bench_fn)
        diff = GridFunction(grid, w.values - exact.values)
        num = math.sqrt(max(integrate_weighted(
            GridFunction(grid, diff.values**2), 0.0), 0.0))
        den = math.sqrt(max(integrate_weighted(
            GridFunction(grid, exact.values**2), 0.0), 1e-300))
        report["error_l2_rel"] = _float_token(num / den)
        report["error_max"] = _float_token(
            float(np.max(np.abs(diff.values))))
    gridfunction_to_csv(w, out / "solution.csv")
    return report, EXIT_OK


def _run_obstacle_stage(cfg, default_axis="xn"):
    grid = _build_grid_from(cfg, "full")
    if grid.shape != "full":
        raise ConfigError("obstacle runs need a full grid")
    if "boundary" not in cfg:
        raise ConfigError("obstacle runs need boundary data")
    data_fn = _resolve(cfg["boundary"], _FIELD_BUILTINS, "field")
    axis = cfg.get("axis", default_axis)
    if axis not in ("xn", "x1"):
        raise ConfigError(f"axis must be 'xn' or 'x1', got {axis!r}")
    psor = _section(cfg, "psor")
    _check_keys(psor, {"omega", "tol", "max_sweeps"}, "psor")
    try:
        A = CoefficientField.identity(grid)
        bd = BoundaryData.from_callable(grid, data_fn)
        sol = solve_obstacle(
            grid, A, bd,
            omega=float(psor.get("omega", 1.5)),
            tol=float(psor.get("tol", 1e-8)),
            max_sweeps=int(psor.get("max_sweeps", 100_000)),
        )
    except SolveConvergenceError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc))
    return grid, sol, axis


def cmd_obstacle(cfg, out: Path):
    _check_keys(cfg, {"command", "grid", "boundary", "axis", "psor",
                      "blowup"}, "config")
    try:
        grid, sol, axis = _run_obstacle_stage(cfg)
    except SolveConvergenceError as exc:
        return {"command": "obstacle",
                "error": {"kind": "psor_convergence",
                          "sweeps": exc.iterations}}, EXIT_NUMERICAL
    report = {
        "command": "obstacle",
        "grid": {"shape": grid.shape, "nx": grid.nx, "ny": grid.ny},
        "sweeps": sol.iterations,
        "complementarity_residual": _float_token(
            sol.complementarity_residual),
    }
    try:
        curve = extract_free_boundary(sol, axis=axis)
    except NoFreeBoundaryError:
        report["verdict"] = "no_free_boundary"
        return report, EXIT_OK
    except NonGraphBoundaryError as exc:
        report["error"] = {"kind": "non_graph_boundary",
                           "columns": exc.columns}
        return report, EXIT_NUMERICAL
    radii = np.hypot(curve.samples[:, 0], curve.samples[:, 1])
    report["verdict"] = "graph"
    report["boundary_samples"] = int(curve.samples.shape[0])
    report["mean_radius"] = _float_token(float(np.mean(radii)))
    report["min_radius"] = _float_token(float(np.min(radii)))
    report["max_radius"] = _float_token(float(np.max(radii)))
    export_curve_csv(curve, out / "boundary.csv")
    if "blowup" in cfg:
        spec = _section(cfg, "blowup")
        _check_keys(spec, {"point", "radii"}, "blowup")
        if "point" not in spec or "radii" not in spec:
            raise ConfigError("blowup needs point and radii")
        try:
            rep = blowup_check(sol, [float(v) for v in spec["point"]],
                               [float(r) for r in spec["radii"]])
        except ValueError as exc:
            raise ConfigError(str(exc))
        report["blowup"] = json.loads(rep.to_json())
    return report, EXIT_OK


def cmd_harnack(cfg, out: Path):
    _check_keys(cfg, {"command", "grid", "curve", "coefficients", "pair",
                      "scan", "floor_tol", "solver", "benchmark"}, "config")
    grid = _build_grid_from(cfg, "half")
    if grid.shape != "half":
        raise ConfigError("harnack runs need a half grid")
    curve_fn, curve_derivs = _resolve(cfg.get("curve", "flat"),
                                      _CURVE_BUILTINS, "curve")
    coeff_fn = _resolve(cfg.get("coefficients", "identity"),
                        _COEFF_BUILTINS, "coefficients")
    pair = _section(cfg, "pair", {"u1": "harmonic_im_z2",
                                  "u2": "coordinate_xn"})
    _check_keys(pair, {"u1", "u2"}, "pair")
    u1_fn = _resolve(pair.get("u1", "harmonic_im_z2"), _FIELD_BUILTINS,
                     "field")
    u2_fn = _resolve(pair.get("u2", "coordinate_xn"), _FIELD_BUILTINS,
                     "field")
    floor_tol = float(cfg.get("floor_tol", 1e-8))
    solver = _section(cfg, "solver")
    _check_keys(solver, {"tol"}, "solver")
    tol = float(solver.get("tol", 1e-11))
    scan = _section(cfg, "scan")
    _check_keys(scan, {"alpha", "S", "K", "mode"}, "scan")
    alpha = float(scan.get("alpha", 0.5))
    S = float(scan.get("S", 0.5))
    K = int(scan.get("K", 3))
    mode = scan.get("mode", "l2fit")

    try:
        curve = CurveModel.from_function(curve_fn, derivs=curve_derivs,
                                         domain=(-1.0, 1.0))
        A = transform_coefficients(coeff_fn, curve, grid)
        op = assemble_weighted(grid, A, 0.0, planar_dirichlet=True)
        bd1 = BoundaryData.from_callable(grid, u1_fn, include_planar=True)
        bd2 = BoundaryData.from_callable(grid, u2_fn, include_planar=True)
    except ValueError as exc:
        raise ConfigError(str(exc))
    rhs = assemble_rhs(op, None, None)
    try:
        u1 = solve(op, rhs, bd1, tol=tol)
        u2 = solve(op, rhs, bd2, tol=tol)
    except SolveConvergenceError as exc:
        return {"command": "harnack",
                "error": {"kind": "solve_convergence",
                          "iterations": exc.iterations}}, EXIT_NUMERICAL

    floor = hopf_floor(u2)
    report = {
        "command": "harnack",
        "grid": {"shape": grid.shape, "nx": grid.nx, "ny": grid.ny},
        "hopf_floor": _float_token(floor),
        "floor_tol": floor_tol,
    }
    if floor < floor_tol:
        report["error"] = {"kind": "hopf_floor_violation",
                           "floor": _float_token(floor)}
        return report, EXIT_HYPOTHESIS
    try:
        w = ratio(u1, u2, floor_tol=floor_tol)
    except ValueError as exc:
        report["error"] = {"kind": "hopf_floor_violation",
                           "detail": str(exc)}
        return report, EXIT_HYPOTHESIS

    # keep the smallest window above the resolution floor
    max_h = max(grid.h1, grid.h2)
    k_fit = int(math.floor(math.log(4.0 * max_h) / math.log(S) + 1e-12))
    warnings = []
    if K > k_fit:
        warnings.append(
            f"campanato depth {K} underflows the grid; reduced to {k_fit}")
        K = k_fit
    if K < 1:
        raise ConfigError("grid too coarse for any campanato scale")
    try:
        rep = campanato_scan(w, None, alpha, S, K, mode=mode)
    except ValueError as exc:
        raise ConfigError(str(exc))
    report["campanato"] = json.loads(rep.to_json())
    report["ratio_min"] = _float_token(float(np.min(w.values)))
    report["ratio_max"] = _float_token(float(np.max(w.values)))
    report["warnings"] = warnings
    if "benchmark" in cfg:
        bench = GridFunction.from_callable(
            grid, _resolve(cfg["benchmark"], _FIELD_BUILTINS, "field"))
        report["max_abs_error"] = _float_token(
            float(np.max(np.abs(w.values - bench.values))))
    gridfunction_to_csv(w, out / "ratio.csv")
    export_campanato_csv(rep, out / "campanato.csv")
    return report, EXIT_OK


def cmd_analytic_scan(cfg, out: Path):
    _check_keys(cfg, {"command", "grid", "boundary", "axis", "psor",
                      "scan"}, "config")
    scan = _section(cfg, "scan")
    _check_keys(scan, {"kmax", "window"}, "scan")
    kmax = int(scan.get("kmax", 8))
    if kmax < 1:
        raise ConfigError("kmax must be >= 1")
    window = scan.get("window")
    try:
        grid, sol, axis = _run_obstacle_stage(cfg)
    except SolveConvergenceError as exc:
        return {"command": "analytic_scan",
                "error": {"kind": "psor_convergence",
                          "sweeps": exc.iterations}}, EXIT_NUMERICAL
    report = {
        "command": "analytic_scan",
        "grid": {"shape": grid.shape, "nx": grid.nx, "ny": grid.ny},
        "sweeps": sol.iterations,
        "complementarity_residual": _float_token(
            sol.complementarity_residual),
    }
    try:
        curve = extract_free_boundary(sol, axis=axis)
    except NoFreeBoundaryError:
        report["verdict"] = "no_free_boundary"
        return report, EXIT_OK
    except NonGraphBoundaryError as exc:
        report["error"] = {"kind": "non_graph_boundary",
                           "columns": exc.columns}
        return report, EXIT_NUMERICAL

    warnings = []
    n_samples = int(curve.samples.shape[0])
    kmax_safe = max(1, (n_samples - 1) // 4)
    if kmax > kmax_safe:
        warnings.append(
            f"kmax {kmax} too high for {n_samples} boundary samples; "
            f"reduced to {kmax_safe}")
        kmax = kmax_safe
    model = CurveModel.from_curve(curve)
    lo, hi = model.domain
    reach = min(-lo, hi)
    if reach <= 0:
        raise ConfigError("free boundary does not straddle the scan center")
    if window is None:
        window = 0.95 * reach
    window = float(window)
    if window > reach:
        warnings.append(
            f"window {window:.6g} exceeds the curve reach {reach:.6g}; "
            f"reduced to {0.95 * reach:.6g}")
        window = 0.95 * reach
    result = analyticity_scan(model, kmax=kmax, window=window)
    # scatter of the raw boundary samples about a polynomial of the fitted
    # degree: the extraction noise floor, as opposed to the scan's own
    # fit-residual noise which only sees the smoothed interpolant
    xs, ys = curve.samples[:, 0], curve.samples[:, 1]
    m = np.abs(xs) <= window
    deg = min(result.kmax_used, max(int(m.sum()) - 2, 1))
    fit = np.polynomial.polynomial.polyfit(xs[m] / window, ys[m], deg)
    resid = np.polynomial.polynomial.polyval(xs[m] / window, fit) - ys[m]
    scatter = float(np.sqrt(np.mean(resid**2)))
    if result.kmax_used < kmax:
        warnings.append(
            f"fit order reduced from {kmax} to {result.kmax_used} to keep "
            f"the design matrix well conditioned")
    report["verdict"] = "graph"
    report["boundary_samples"] = n_samples
    report["window"] = _float_token(window)
    report["kmax_requested"] = int(scan.get("kmax", 8))
    report["kmax_used"] = result.kmax_used
    report["taylor"] = [_float_token(c) for c in result.coefficients]
    report["radius"] = _float_token(result.radius)
    report["usable_orders"] = [int(k) for k in result.usable_orders]
    report["noise_level"] = _float_token(result.noise_level)
    report["sample_scatter"] = _float_token(scatter)
    report["warnings"] = warnings
    export_curve_csv(curve, out / "boundary.csv")
    return report, EXIT_OK


def cmd_majorant_ode(cfg, out: Path):
    _check_keys(cfg, {"command", "rhs_omega", "rhs_pi", "pi0", "omega0",
                      "order", "radius_method"}, "config")
    try:
        M = (expr_from_dict(cfg["rhs_omega"])
             if cfg.get("rhs_omega") is not None else None)
        N = (expr_from_dict(cfg["rhs_pi"])
             if cfg.get("rhs_pi") is not None else None)
        pi0 = _num_from_token(cfg.get("pi0", 0))
        omega0 = _num_from_token(cfg.get("omega0", 1))
        order = int(cfg.get("order", 32))
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc))
    method = cfg.get("radius_method", "root")
    if method not in ("root", "ratio"):
        raise ConfigError(f"radius_method must be root or ratio, got {method!r}")
    try:
        pi, om = ode_solve(M, N, pi0, omega0, order=order)
    except InfiniteCoefficientError as exc:
        return {"command": "majorant_ode",
                "error": {"kind": "infinite_coefficient",
                          "order": exc.order}}, EXIT_NUMERICAL
    except ValueError as exc:
        raise ConfigError(str(exc))
    report = {
        "command": "majorant_ode",
        "order": order,
        "pi": {"N": pi.N, "coeffs": [_num_to_token(c) for c in pi.coeffs]},
        "omega": {"N": om.N,
                  "coeffs": [_num_to_token(c) for c in om.coeffs]},
    }
    try:
        report["radius"] = _float_token(radius_estimate(om, method))
        report["radius_method"] = method
    except ValueError as exc:
        report["radius"] = None
        report["radius_note"] = str(exc)
    export_series_csv(om, out / "omega.csv")
    export_series_csv(pi, out / "pi.csv")
    return report, EXIT_OK


_COMMANDS = {
    "solve_weighted": cmd_solve_weighted,
    "obstacle": cmd_obstacle,
    "harnack": cmd_harnack,
    "analytic_scan": cmd_analytic_scan,
    "majorant_ode": cmd_majorant_ode,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="harnacklab",
        description="run one configured numerical experiment")
    parser.add_argument("--config", required=True, help="JSON run config")
    parser.add_argument("--out", required=True, help="artifact directory")
    parser.add_argument("--seed", type=int, default=0,
                        help="seed recorded in meta.json and applied to RNGs")
    parser.add_argument("--quiet", action="store_true",
                        help="suppress the summary line")
    args = parser.parse_args(argv)

    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if not isinstance(cfg, dict):
        print("config error: top level must be an object", file=sys.stderr)
        return EXIT_CONFIG

    command = cfg.get("command")
    if command not in _COMMANDS:
        print(f"config error: unknown command {command!r}; "
              f"expected one of {sorted(_COMMANDS)}", file=sys.stderr)
        return EXIT_CONFIG

    np.random.seed(args.seed % 2**32)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()
    try:
        report, code = _COMMANDS[command](cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    text = json.dumps(_jsonsafe(report), sort_keys=True, indent=2,
                      allow_nan=False) + "\n"
    (out / "report.json").write_text(text)
    meta = {
        "argv": list(sys.argv if argv is None else argv),
        "seed": args.seed,
        "created_unix": time.time(),
        "elapsed_seconds": time.time() - started,
    }
    (out / "meta.json").write_text(
        json.dumps(meta, sort_keys=True, indent=2) + "\n")
    if code == EXIT_NUMERICAL:
        err = report.get("error", {})
        print(f"numerical failure: {err}", file=sys.stderr)
    elif code == EXIT_HYPOTHESIS:
        err = report.get("error", {})
        print(f"hypothesis violation: {err}", file=sys.stderr)
    if not args.quiet:
        print(f"{command}: exit {code}, artifacts in {out}")
    return code


if __name__ == "__main__":
    sys.exit(main())
