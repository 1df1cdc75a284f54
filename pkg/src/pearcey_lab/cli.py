"""Command-line front end.

Subcommands
-----------
special    tabulate Q, P, their derivatives and large-s approximations
genfun     tabulate the generating function F and log F over a shift grid
gamma      emit the residue data (delta, p, q, Delta) as JSON records
verify     run identity suites and report residuals; exit 0 iff all pass
occupancy  emit occupancy-number probabilities
scan       tabulate (s, tau) -> {F, delta, p^T q} columns for plotting

Configurations are JSON objects {"a": [...], "k": [...], "tau": t, "s": s}.
Exit codes: 0 success, 1 verification failure, 2 invalid configuration or
arguments, 3 numerical precision loss.  Output bytes are deterministic for
fixed inputs and version.  The environment variable PEARCEY_LAB_THREADS caps
the number of worker threads used by ``scan``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .errors import PrecisionLossError
from .operators import ModelConfig, default_grid, genfun_via_KP
from .pearcey_functions import asymptotic, ode_residual, pearcey_P, pearcey_Q
from .quadrature import build_contours, discretize
from .rhp import OperatorState
from .verify import PointCache, check_pde, occupancy_table, run_suite


class ConfigError(ValueError):
    """Invalid configuration file (maps to exit code 2)."""


def _parse_range(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"range {text!r} is not of the form lo:hi:n")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ConfigError(f"range {text!r}: {exc}") from None
    if n < 1:
        raise ConfigError(f"range {text!r} must contain at least one point")
    return np.linspace(lo, hi, n)


def _load_config(path: str) -> ModelConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} line {exc.lineno}: {exc.msg}") from None
    try:
        return ModelConfig.from_json_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _grid_overrides(args) -> dict:
    overrides = {}
    if args.panels is not None:
        overrides["panels_per_ray"] = args.panels
    if args.nodes_per_panel is not None:
        overrides["nodes_per_panel"] = args.nodes_per_panel
    if args.truncation is not None:
        overrides["truncation"] = args.truncation
    return overrides


def _grid_params(grid, overrides) -> dict:
    return {
        "grid_nodes": len(grid),
        "panels_per_ray": overrides.get("panels_per_ray", "default"),
        "nodes_per_panel": grid.nodes_per_panel,
        "truncation": float(np.max(np.abs(grid.nodes))),
    }


def _format_cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, dict)):
        return json.dumps(value, sort_keys=True)
    return str(value)


def _emit(rows: list[dict], columns: list[str], args) -> None:
    if args.format == "json":
        payload = {"version": __version__, "rows": rows}
        text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_cell(row.get(c)) for c in columns])
        text = buf.getvalue()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _common_row(config: ModelConfig, grid, overrides) -> dict:
    row = {"config_hash": config.config_hash(), "version": __version__}
    row.update(_grid_params(grid, overrides))
    return row


def _s_values(args, config) -> np.ndarray:
    if args.s_grid:
        return _parse_range(args.s_grid)
    return np.array([config.s])


def _cmd_special(args) -> int:
    config = _load_config(args.config) if args.config else None
    s_vals = _parse_range(args.s_grid) if args.s_grid else np.linspace(-5, 5, 21)
    tau_vals = _parse_range(args.tau_grid) if args.tau_grid else np.array(
        [config.tau if config else 0.0]
    )
    overrides = _grid_overrides(args)
    rows = []
    for tau in tau_vals:
        spec = build_contours(tau, float(np.max(np.abs(s_vals))), 1e-16, **overrides)
        grid = discretize(spec)
        for s in s_vals:
            q = pearcey_Q(s, tau, grid)
            p = pearcey_P(s, tau, grid)
            row = {
                "s": float(s),
                "tau": float(tau),
                "version": __version__,
                "grid_nodes": len(grid),
                "nodes_per_panel": grid.nodes_per_panel,
                "ode_residual_Q": ode_residual(q, "Q"),
                "ode_residual_P": ode_residual(p, "P"),
                "Q_asym": asymptotic(s, tau, "Q") if s > 0 else None,
                "P_asym": asymptotic(s, tau, "P") if s > 0 else None,
            }
            for d in range(4):
                row[f"Q{d}"] = q.order(d)
                row[f"P{d}"] = p.order(d)
            rows.append(row)
    columns = (
        ["s", "tau"] + [f"Q{d}" for d in range(4)] + [f"P{d}" for d in range(4)]
        + ["Q_asym", "P_asym", "ode_residual_Q", "ode_residual_P",
           "grid_nodes", "nodes_per_panel", "version"]
    )
    _emit(rows, columns, args)
    return 0


def _cmd_genfun(args) -> int:
    config = _load_config(args.config)
    overrides = _grid_overrides(args)
    s_vals = _s_values(args, config)
    extent = float(np.max(np.abs(s_vals - config.s))) if len(s_vals) else 0.0
    grid = default_grid(config, s_extent=extent, **overrides)
    rows = []
    for s in s_vals:
        state = OperatorState(config.with_s(float(s)), grid)
        det = state.det
        row = _common_row(config, grid, overrides)
        row.update({
            "s": float(s),
            "tau": config.tau,
            "F": det.real,
            "log_F": state.log_F,
            "im_leak": abs(det.imag),
        })
        if args.via_kp:
            row["F_via_KP"] = genfun_via_KP(config.with_s(float(s)), grid)
        rows.append(row)
    columns = ["s", "tau", "F", "log_F", "im_leak"]
    if args.via_kp:
        columns.append("F_via_KP")
    columns += ["config_hash", "grid_nodes", "panels_per_ray", "nodes_per_panel",
                "truncation", "version"]
    _emit(rows, columns, args)
    return 0


def _cmd_gamma(args) -> int:
    config = _load_config(args.config)
    overrides = _grid_overrides(args)
    s_vals = _s_values(args, config)
    extent = float(np.max(np.abs(s_vals - config.s))) if len(s_vals) else 0.0
    grid = default_grid(config, s_extent=extent, **overrides)
    rows = []
    for s in s_vals:
        g1 = OperatorState(config.with_s(float(s)), grid, args.branch_flip).gamma1()
        row = _common_row(config, grid, overrides)
        row.update({
            "s": float(s),
            "tau": config.tau,
            "delta": g1.delta,
            "p": [[z.real, z.imag] for z in g1.p],
            "q": [[z.real, z.imag] for z in g1.q],
            "Delta": [[[z.real, z.imag] for z in row_] for row_ in g1.Delta],
            "trace_residual": g1.trace_residual,
        })
        rows.append(row)
    columns = ["s", "tau", "delta", "p", "q", "Delta", "trace_residual",
               "config_hash", "grid_nodes", "panels_per_ray", "nodes_per_panel",
               "truncation", "version"]
    _emit(rows, columns, args)
    return 0


def _cmd_verify(args) -> int:
    config = _load_config(args.config)
    suites = [s.strip() for part in args.suite for s in part.split(",") if s.strip()]
    reports = run_suite(
        config,
        suites or ["all"],
        fd_step=args.fd_step,
        branch_flip=args.branch_flip,
        grid_overrides=_grid_overrides(args),
    )
    rows = []
    for rep in reports:
        row = rep.to_json_dict()
        row["version"] = __version__
        rows.append(row)
    columns = ["identity", "s", "tau", "residual", "scale", "relative",
               "tolerance", "passed", "config_hash", "version"]
    _emit(rows, columns, args)
    return 0 if all(r.passed for r in reports) else 1


def _cmd_occupancy(args) -> int:
    config = _load_config(args.config)
    overrides = _grid_overrides(args)
    grid = default_grid(config, **overrides)
    table = occupancy_table(config, args.m_max, rho=args.rho,
                            nodes=args.circle_nodes, grid=grid)
    n_int = config.n_thresholds - 1
    rows = []
    for idx in sorted(np.ndindex(table.shape)):
        row = _common_row(config, grid, overrides)
        for j in range(n_int):
            row[f"m{j + 1}"] = int(idx[j])
        row["probability"] = float(table[idx])
        rows.append(row)
    columns = [f"m{j + 1}" for j in range(n_int)] + [
        "probability", "config_hash", "grid_nodes", "panels_per_ray",
        "nodes_per_panel", "truncation", "version"]
    _emit(rows, columns, args)
    return 0


def _scan_point(config, grid, s, tau, with_pde):
    cfg = ModelConfig(config.a, config.k, float(tau), float(s),
                      allow_degenerate=config.allow_degenerate)
    cache = PointCache(cfg, grid)
    state = cache.state()
    g1 = cache.gamma1()
    row = {
        "s": float(s),
        "tau": float(tau),
        "F": state.F,
        "log_F": state.log_F,
        "delta": g1.delta,
        "pTq": g1.pq.real,
    }
    if with_pde:
        row["pde_residual"] = check_pde(cfg, grid, cache=cache).relative
    return row


def _cmd_scan(args) -> int:
    config = _load_config(args.config)
    overrides = _grid_overrides(args)
    s_vals = _s_values(args, config)
    tau_vals = _parse_range(args.tau_grid) if args.tau_grid else np.array([config.tau])
    s_extent = float(np.max(np.abs(s_vals - config.s))) + (0.1 if args.with_pde else 0.0)
    tau_extent = float(np.max(np.abs(tau_vals - config.tau))) + (0.1 if args.with_pde else 0.0)
    grid = default_grid(config, s_extent=s_extent, tau_extent=tau_extent, **overrides)

    points = [(s, tau) for s in s_vals for tau in tau_vals]
    workers = max(1, int(os.environ.get("PEARCEY_LAB_THREADS", "1")))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(
                lambda pt: _scan_point(config, grid, pt[0], pt[1], args.with_pde), points
            ))
    else:
        results = [_scan_point(config, grid, s, tau, args.with_pde) for s, tau in points]

    base = _common_row(config, grid, overrides)
    rows = []
    for row in results:
        full = dict(base)
        full.update(row)
        rows.append(full)
    columns = ["s", "tau", "F", "log_F", "delta", "pTq"]
    if args.with_pde:
        columns.append("pde_residual")
    columns += ["config_hash", "grid_nodes", "panels_per_ray", "nodes_per_panel",
                "truncation", "version"]
    _emit(rows, columns, args)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pearcey-lab",
        description="Pearcey-process generating function toolkit",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config_required=True):
        p.add_argument("--config", required=config_required,
                       help="JSON configuration file")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--panels", type=int, help="panels per ray override")
        p.add_argument("--nodes-per-panel", type=int, dest="nodes_per_panel")
        p.add_argument("--truncation", type=float, help="contour radius override")
        p.add_argument("--s-grid", dest="s_grid", help="shift grid lo:hi:n")
        p.add_argument("--tau-grid", dest="tau_grid", help="tau grid lo:hi:n")
        p.add_argument("--branch-flip", action="store_true", dest="branch_flip",
                       help="flip the square-root branch of negative increments")
        p.add_argument("--fd-step", type=float, dest="fd_step",
                       help="base finite-difference step")

    p = sub.add_parser("special", help="tabulate Q, P and their derivatives")
    add_common(p, config_required=False)
    p.set_defaults(func=_cmd_special)

    p = sub.add_parser("genfun", help="tabulate the generating function")
    add_common(p)
    p.add_argument("--via-kp", action="store_true", dest="via_kp",
                   help="also evaluate the interval-kernel route")
    p.set_defaults(func=_cmd_genfun)

    p = sub.add_parser("gamma", help="emit residue data records")
    add_common(p)
    p.set_defaults(func=_cmd_gamma)

    p = sub.add_parser("verify", help="run identity suites")
    add_common(p)
    p.add_argument("--suite", action="append", default=[],
                   help="ode3, heat, pde, tw, delta, tau-id, asym or all "
                        "(repeatable or comma separated)")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("occupancy", help="occupancy-number probabilities")
    add_common(p)
    p.add_argument("--m-max", type=int, default=8, dest="m_max")
    p.add_argument("--rho", type=float, default=0.5)
    p.add_argument("--circle-nodes", type=int, default=32, dest="circle_nodes")
    p.set_defaults(func=_cmd_occupancy)

    p = sub.add_parser("scan", help="tabulate F, delta, p^T q over (s, tau)")
    add_common(p)
    p.add_argument("--with-pde", action="store_true", dest="with_pde",
                   help="also evaluate the PDE residual at every point (slow)")
    p.set_defaults(func=_cmd_scan)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PrecisionLossError as exc:
        print(f"precision loss: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
