"""Command-line entry point: ``vegswe run | check | geom``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io
from .physics import ClosureParams, Forcing, ModelKind, OverDenseCanopyError, porosity_from_stems

EXIT_FAILED = 1
EXIT_USAGE = 2


class UsageError(Exception):
    """Bad input detected after argument parsing (config, rasters)."""


def _load_raster(path, what):
    try:
        raster = io.read_raster(path)
        return raster, raster.require_complete(what)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def build_grid(cfg: io.ConfigFile):
    """Grid from the terrain and porosity rasters named in the config."""
    from .solver import Grid

    terrain, z = _load_raster(cfg.terrain_path, "terrain")
    if cfg.porosity_path is not None:
        other, theta = _load_raster(cfg.porosity_path, "porosity")
    elif cfg.stem_density_path is not None:
        other, m = _load_raster(cfg.stem_density_path, "stem density")
        try:
            theta = porosity_from_stems(m, cfg.stem_diameter)
        except (ValueError, OverDenseCanopyError) as exc:
            raise UsageError(f"{cfg.stem_density_path}: {exc}") from None
    else:
        other, theta = terrain, np.ones_like(z)
    if theta.shape != z.shape or other.cellsize != terrain.cellsize:
        raise UsageError(f"porosity raster does not match the terrain grid {terrain.ncols} x {terrain.nrows}")
    try:
        return Grid(z, theta, (terrain.cellsize, terrain.cellsize), terrain.cell_centre, cfg.boundaries)
    except ValueError as exc:
        raise UsageError(f"{cfg.terrain_path}: {exc}") from None


def _params(cfg: io.ConfigFile) -> ClosureParams:
    d = cfg.stem_diameter if cfg.stem_diameter is not None else ClosureParams.d
    try:
        return ClosureParams(C_d=cfg.C_d, d=d, C_b=cfg.C_b, g=cfg.g)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _initial_flow(cfg: io.ConfigFile, grid, kind):
    from .solver import FlowField

    if cfg.initial_depth_path is not None:
        _, h = _load_raster(cfg.initial_depth_path, "initial depth")
        if h.shape != grid.shape:
            raise UsageError("initial depth raster does not match the terrain grid")
    elif cfg.initial_surface is not None:
        nu3 = grid.coefficients(kind).nu3
        h = np.maximum(cfg.initial_surface - grid.z, 0.0) / nu3
    else:
        h = np.full(grid.shape, cfg.initial_depth or 0.0)
    if np.any(h < 0):
        raise UsageError("initial depth must be >= 0")
    return FlowField.at_rest(h)


def _run(args) -> int:
    from .solver import BlowUpError, RunConfig, Solver

    cfg = _config(args.config)
    kind = ModelKind(cfg.model)
    grid = build_grid(cfg)
    try:
        run_cfg = RunConfig(
            kind=kind,
            cfl=cfg.cfl,
            t_end=cfg.t_end,
            output_every=cfg.output_every or (cfg.t_end if cfg.t_end > 0 else 1.0),
            dry_threshold=cfg.dry_threshold,
            forcing=Forcing(cfg.rain_rate, cfg.infiltration_rate),
            params=_params(cfg),
            workers=cfg.workers,
        )
    except ValueError as exc:
        raise UsageError(f"{args.config}: {exc}") from None
    flow = _initial_flow(cfg, grid, kind)
    try:
        snapshots, report = Solver(grid, run_cfg).run(flow)
    except BlowUpError as exc:
        print(f"vegswe: simulation failed: {exc}", file=sys.stderr)
        return EXIT_FAILED
    out = io.ensure_dir(cfg.output_dir)
    with open(out / "snapshots.csv", "w") as index:
        index.write("index,t,file\n")
        for k, snap in enumerate(snapshots):
            name = f"snapshot_{k:05d}.csv"
            io.write_snapshot(io.Snapshot.from_flow(snap, grid), out / name)
            index.write(f"{k},{snap.t:.16e},{name}\n")
    io.write_diagnostics(report, out / "diagnostics.csv")
    print(
        f"{len(report) - 1} steps to t={snapshots[-1].t:.6g} s, {len(snapshots)} snapshots written to {out}\n"
        f"mass {report.mass[0]:.9g} -> {report.mass[-1]:.9g}, energy {report.energy[0]:.9g} -> {report.energy[-1]:.9g}"
    )
    return 0


def geometry_table(grid):
    """Per-cell geometry columns: y1, y2, beta, nu3, K_M, K_G and the eight gamma^c_ab."""
    chart = grid.chart()
    g = chart.geometry
    Y1, Y2 = np.meshgrid(grid.y1, grid.y2, indexing="ij")
    names = ["y1", "y2", "beta", "nu3", "K_M", "K_G"]
    cols = [Y1, Y2, g.area, g.nu3, g.mean_curvature, g.gauss_curvature]
    for c in range(2):
        for a in range(2):
            for b in range(2):
                names.append(f"gamma_{c + 1}_{a + 1}{b + 1}")
                cols.append(g.christoffel[..., c, a, b])
    return names, cols


def _geom(args) -> int:
    cfg = _config(args.config)
    grid = build_grid(cfg)
    names, cols = geometry_table(grid)
    target = Path(args.output) if args.output else io.ensure_dir(cfg.output_dir) / "geometry.csv"
    io.write_table(target, names, cols)
    print(f"geometry of {grid.shape[0]} x {grid.shape[1]} cells written to {target}")
    return 0


def _check(args) -> int:
    from .verify.checks import run_suites

    return 0 if run_suites([args.suite], sys.stdout) else EXIT_FAILED


def _config(path) -> io.ConfigFile:
    if not Path(path).is_file():
        raise UsageError(f"config file not found: {path}")
    try:
        return io.parse_config(path)
    except io.ParseError as exc:
        raise UsageError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vegswe", description="Shallow water flow over vegetated terrain.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run a simulation described by a config file")
    p.add_argument("config")
    p.set_defaults(func=_run)
    p = sub.add_parser("check", help="run verification suites")
    p.add_argument("suite", nargs="?", default="all", choices=["all", "eigen", "lemmas", "stoker", "balance"])
    p.set_defaults(func=_check)
    p = sub.add_parser("geom", help="write terrain geometry fields as CSV")
    p.add_argument("config")
    p.add_argument("-o", "--output", help="output CSV (default: <output_dir>/geometry.csv)")
    p.set_defaults(func=_geom)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"vegswe: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"vegswe: error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
