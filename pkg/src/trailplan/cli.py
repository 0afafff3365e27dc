"""Command-line front end: scenario-driven experiments with plot-ready artifacts.

Every command is a pure function of (config file, seed): artifacts rerun
byte-identically. Commands write CSV/JSON plus rendered PNG figures into the
output directory; wall-clock timing is logged to run.log and stderr only.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import plots
from .control import ControlField
from .errors import ScenarioError, TrailplanError
from .report import append_log, config_echo, fmt, write_csv, write_json
from .scenario import RunContext, build_runtime, load_scenario
from .solver import solve, write_value_csv, write_value_dump
from .terrain import write_esri_ascii
from .trajectory import critical_time_search, integrate_deterministic, run_ensemble

__all__ = ["main", "cmd_solve", "cmd_path", "cmd_ensemble", "cmd_critical_time",
           "cmd_converge", "cmd_control_snapshot", "cmd_gen_terrain"]


def _outdir(sc) -> Path:
    out = Path(sc.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cfl_info(cfg) -> dict:
    return {
        "dx": cfg.dx,
        "dy": cfg.dy,
        "dt": cfg.dt,
        "K": cfg.K,
        "v_max": cfg.v_max,
        "cfl_value": cfg.dt * cfg.v_max * (1.0 / cfg.dx + 1.0 / cfg.dy),
        "cfl_safety": cfg.cfl_safety,
    }


def _solve_timed(ctx: RunContext, out: Path, label: str, **kwargs):
    t0 = time.perf_counter()
    vf = solve(ctx.solver_config, ctx.field, ctx.model, **kwargs)
    elapsed = time.perf_counter() - t0
    append_log(out / "run.log", f"{label} wall_clock_seconds={elapsed:.3f}")
    print(f"{label}: solved K={vf.config.K} steps in {elapsed:.1f}s", file=sys.stderr)
    return vf


def _path_rows(path):
    return ((t, x, y, int(c)) for t, (x, y), c in zip(path.times, path.points, path.clamped))


def cmd_solve(sc) -> None:
    ctx = build_runtime(sc)
    out = _outdir(sc)
    vf = _solve_timed(ctx, out, "solve")
    cfg = vf.config
    if sc.dump == "raw":
        write_value_dump(vf, out / "value.bin")
    else:
        for k in range(cfg.K + 1):
            write_value_csv(vf, out / f"value_k{k:05d}.csv", k)
    meta = {
        "config": config_echo(sc),
        "cfl": _cfl_info(cfg),
        "time_stepper": "semi_implicit" if cfg.sigma > 0 else "explicit",
        "scheme": cfg.ham.scheme,
        "u_min_per_slice": [float(vf.u[k].min()) for k in range(cfg.K + 1)],
        "u_max_per_slice": [float(vf.u[k].max()) for k in range(cfg.K + 1)],
    }
    write_json(out / "metadata.json", meta)
    if sc.plots:
        plots.save_value_figure(out / "value.png", ctx.field, vf,
                                title=f"cost-to-go at t = 0 (sigma = {cfg.sigma:g})")


def cmd_path(sc) -> None:
    ctx = build_runtime(sc)
    out = _outdir(sc)
    vf = _solve_timed(ctx, out, "path")
    cf = ControlField(vf, ctx.field, ctx.model)
    path = integrate_deterministic(cf, ctx.x0)
    write_csv(out / "path.csv", ["t", "x", "y", "clamped"], _path_rows(path))
    write_json(out / "summary.json", {
        "config": config_echo(sc),
        "cfl": _cfl_info(vf.config),
        "terminal_distance": path.terminal_distance,
        "closest_approach": path.closest_approach,
        "arc_length": path.arc_length(),
        "clamped_steps": int(path.clamped.sum()),
    })
    if sc.plots:
        plots.save_paths_figure(
            out / "path.png", ctx.field,
            [(path.points, plots.sigma_color(vf.config.sigma, 1.0), None, "-")],
            x0=ctx.x0, x_end=vf.config.x_end,
            title=f"optimal path (sigma = {vf.config.sigma:g}, T = {vf.config.T:g})")


def cmd_ensemble(sc) -> None:
    if sc.method != "ensemble":
        raise ScenarioError("ensemble command requires method = ensemble")
    ctx = build_runtime(sc)
    out = _outdir(sc)
    vf = _solve_timed(ctx, out, "ensemble")
    cf = ControlField(vf, ctx.field, ctx.model)
    stats = run_ensemble(cf, ctx.x0, sc.L, sc.seed, keep=sc.realizations)
    mean = stats.mean_path
    write_csv(out / "ensemble.csv", ["t", "mean_x", "mean_y", "std_x", "std_y"],
              ((t, p[0], p[1], s[0], s[1])
               for t, p, s in zip(mean.times, mean.points, stats.std_devs)))
    for i, real in enumerate(stats.realizations):
        write_csv(out / f"realization_{i:02d}.csv", ["t", "x", "y", "clamped"],
                  _path_rows(real))
    det = integrate_deterministic(cf, ctx.x0)
    write_json(out / "summary.json", {
        "config": config_echo(sc),
        "cfl": _cfl_info(vf.config),
        "num_trials": stats.num_trials,
        "seed": stats.seed,
        "clamped_trajectories": stats.clamped_count,
        "mean_terminal_distance": mean.terminal_distance,
        "deterministic_terminal_distance": det.terminal_distance,
    })
    if sc.plots:
        sig = vf.config.sigma
        series = [(r.points, c, f"realization {i}", "-")
                  for i, (r, c) in enumerate(zip(stats.realizations,
                                                 ["tab:blue", "tab:orange", "tab:pink"]))]
        series.append((mean.points, "black", "mean path", "-"))
        series.append((det.points, "green", "deterministic", ":"))
        plots.save_paths_figure(out / "ensemble.png", ctx.field, series,
                                x0=ctx.x0, x_end=vf.config.x_end,
                                ellipses=(mean.points, stats.std_devs),
                                title=f"ensemble of {stats.num_trials} (sigma = {sig:g})")


def cmd_critical_time(sc) -> None:
    T_lo = sc.require("T_lo")
    T_hi = sc.require("T_hi")
    ctx = build_runtime(sc)
    out = _outdir(sc)
    t0 = time.perf_counter()
    result = critical_time_search(ctx.field, ctx.model, ctx.x0, ctx.solver_config,
                                  T_lo, T_hi, sc.get("delta_reach"), sc.tol_T)
    elapsed = time.perf_counter() - t0
    append_log(out / "run.log", f"critical-time wall_clock_seconds={elapsed:.3f}")
    print(f"critical-time: T* = {result.T_star:.6g} in {elapsed:.1f}s", file=sys.stderr)
    write_csv(out / "trace.csv", ["T", "reached", "terminal_distance"],
              ((T, int(ok), d) for T, ok, d in result.trace))
    write_json(out / "critical_time.json", {
        "config": config_echo(sc),
        "T_star": result.T_star,
        "bracket": list(result.bracket),
        "tol_T": sc.tol_T,
        "delta_reach": sc.get("delta_reach") if sc.get("delta_reach") is not None
        else 3.0 * ctx.solver_config.dx,
        "probes": len(result.trace),
    })
    if sc.plots:
        plots.save_trace_figure(out / "critical_time.png", result.trace, result.T_star)


def cmd_converge(sc) -> None:
    sigma_list = sc.require("sigma_list")
    positives = [s for s in sigma_list if s > 0]
    if 0.0 not in sigma_list:
        raise ScenarioError("sigma_list must contain 0")
    if len(positives) < 2:
        raise ScenarioError("sigma_list needs at least two positive values")
    if any(s < 0 for s in sigma_list):
        raise ScenarioError("sigma_list values must be nonnegative")
    T_list = sc.get("T_list")
    if T_list is not None and len(T_list) != len(sigma_list):
        raise ScenarioError("T_list must match sigma_list in length")
    out = _outdir(sc)
    paths = {}
    for idx, sigma in enumerate(sigma_list):
        T = None if T_list is None else T_list[idx]
        ctx = build_runtime(sc, T=T, sigma=sigma)
        vf = _solve_timed(ctx, out, f"converge sigma={fmt(sigma)}")
        cf = ControlField(vf, ctx.field, ctx.model)
        path = integrate_deterministic(cf, ctx.x0)
        paths[sigma] = path
        write_csv(out / f"path_sigma_{fmt(sigma)}.csv", ["t", "x", "y", "clamped"],
                  _path_rows(path))
    base = paths[0.0]
    rows = []
    for sigma in sigma_list:
        p = paths[sigma]
        rows.append((sigma, p.times[-1], _max_path_distance(p, base),
                     p.terminal_distance, p.arc_length()))
    write_csv(out / "convergence.csv",
              ["sigma", "T", "max_distance_to_deterministic", "terminal_distance",
               "arc_length"], rows)
    write_json(out / "summary.json", {
        "config": config_echo(sc),
        "sigma_list": list(sigma_list),
        "max_distance_to_deterministic": {fmt(s): _max_path_distance(paths[s], base)
                                          for s in sigma_list},
    })
    if sc.plots:
        ctx0 = build_runtime(sc, sigma=0.0)
        smax = max(positives)
        series = [(paths[s].points, plots.sigma_color(s, smax), f"sigma = {s:g}", "-")
                  for s in sorted(sigma_list, reverse=True)]
        plots.save_paths_figure(out / "converge.png", ctx0.field, series,
                                x0=ctx0.x0, x_end=ctx0.solver_config.x_end,
                                title="paths as sigma decreases to 0")


def _max_path_distance(p, base) -> float:
    """Max over shared forward times of the distance between two paths."""
    t_end = min(p.times[-1], base.times[-1])
    ts = base.times[base.times <= t_end + 1e-12]
    px = np.interp(ts, p.times, p.points[:, 0])
    py = np.interp(ts, p.times, p.points[:, 1])
    bx = np.interp(ts, base.times, base.points[:, 0])
    by = np.interp(ts, base.times, base.points[:, 1])
    return float(np.hypot(px - bx, py - by).max())


def cmd_control_snapshot(sc) -> None:
    times = sc.require("times")
    ctx = build_runtime(sc)
    out = _outdir(sc)
    vf = _solve_timed(ctx, out, "control-snapshot")
    cf = ControlField(vf, ctx.field, ctx.model)
    for idx, t in enumerate(times):
        snap = cf.snapshot(t, sc.stride)
        write_csv(out / f"control_{idx:02d}.csv",
                  ["x", "y", "sx", "sy", "degenerate_flag"],
                  ((p[0], p[1], cv.vector[0], cv.vector[1], int(cv.degenerate))
                   for p, cv in snap))
        if sc.plots:
            pts = np.array([p for p, _ in snap])
            dirs = np.array([cv.vector for _, cv in snap])
            degen = np.array([cv.degenerate for _, cv in snap])
            plots.save_quiver_figure(out / f"control_{idx:02d}.png", ctx.field,
                                     pts, dirs, degen, t)
    write_json(out / "summary.json", {
        "config": config_echo(sc),
        "times": list(times),
        "stride": sc.stride,
        "files": [f"control_{i:02d}.csv" for i in range(len(times))],
    })


def cmd_gen_terrain(sc) -> None:
    ctx = build_runtime(sc)
    out = _outdir(sc)
    write_esri_ascii(ctx.field, out / "terrain.asc")
    write_json(out / "summary.json", {
        "config": config_echo(sc),
        "dims": list(ctx.field.dims),
        "spacing": list(ctx.field.spacing),
        "height_min": float(ctx.field.heights.min()),
        "height_max": float(ctx.field.heights.max()),
    })
    if sc.plots:
        plots.save_paths_figure(out / "terrain.png", ctx.field, [],
                                x0=ctx.x0, x_end=ctx.solver_config.x_end,
                                title=f"terrain: {sc.terrain}")


_COMMANDS = {
    "solve": cmd_solve,
    "path": cmd_path,
    "ensemble": cmd_ensemble,
    "critical-time": cmd_critical_time,
    "converge": cmd_converge,
    "control-snapshot": cmd_control_snapshot,
    "gen-terrain": cmd_gen_terrain,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="trailplan",
        description="Walking-path planning over terrain via HJB value functions.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="scenario file (key = value lines)")
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--seed", type=int, help="RNG seed (overrides the config)")
        p.add_argument("--threads", type=int, help="worker threads hint")
    args = parser.parse_args(argv)
    try:
        sc = load_scenario(args.config, out=args.out, seed=args.seed,
                           threads=args.threads)
        _COMMANDS[args.command](sc)
    except TrailplanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
