"""Regression scenarios shared by the check command and the test suite."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..geometry.surfaces import AnalyticSurface
from ..physics import ClosureParams, Forcing, ModelKind, friction_coefficient
from ..solver import BoundaryKind, FlowField, Grid, RunConfig, Solver
from .diagnostics import DiagnosticsReport
from .stoker import stoker_reference


def bumpy_terrain(n: int, kind=ModelKind.SIMPLIFIED, level: float = 2.0):
    """Smooth bumpy bed, porosity in [0.6, 1] and a lake at rest at ``level``."""
    x = (np.arange(n) + 0.5) / n
    X, Y = np.meshgrid(x, x, indexing="ij")
    z = 0.2 * np.exp(-((X - 0.4) ** 2 + (Y - 0.6) ** 2) / 0.02) + 0.1 * np.sin(3 * X) * np.cos(2 * Y) + 0.5
    theta = 0.8 + 0.2 * np.sin(5 * X + Y) * np.cos(3 * Y)
    grid = Grid(z, theta, (1.0 / n, 1.0 / n))
    nu3 = grid.coefficients(kind).nu3
    return grid, FlowField.at_rest(np.maximum(level - z, 0.0) / nu3)


@dataclass(frozen=True)
class LakeResult:
    max_v: float
    max_deviation: float
    steps: int


def lake_at_rest(n: int = 100, steps: int = 1000, kind=ModelKind.SIMPLIFIED, level: float = 2.0) -> LakeResult:
    grid, flow = bumpy_terrain(n, kind, level)
    solver = Solver(grid, RunConfig(kind=kind))
    nu3 = solver.geom.nu3 if ModelKind(kind) == ModelKind.FULL else 1.0
    flow = solver.advance(flow, steps)
    dev = float(np.max(np.abs(grid.z + flow.h * nu3 - level)))
    return LakeResult(float(np.max(np.abs(flow.v))), dev, steps)


def budget_run(n: int = 50, steps: int = 500, rain: float = 1e-5, infiltration: float = 4e-6,
               kind=ModelKind.SIMPLIFIED) -> DiagnosticsReport:
    """Wall-bounded basin with a sloshing initial surface, rain and infiltration."""
    x = (np.arange(n) + 0.5) / n
    X, Y = np.meshgrid(x, x, indexing="ij")
    z = 0.1 * np.sin(2 * X) * np.cos(3 * Y)
    theta = 0.7 + 0.3 * X * Y
    grid = Grid(z, theta, (1.0 / n, 1.0 / n))
    h = 0.3 + 0.05 * np.exp(-((X - 0.3) ** 2 + (Y - 0.5) ** 2) / 0.01) - z
    cfg = RunConfig(kind=kind, t_end=1e9, output_every=1e9, forcing=Forcing(rain, infiltration),
                    params=ClosureParams(C_d=1.0, C_b=30.0), max_steps=steps)
    _, report = Solver(grid, cfg).run(FlowField.at_rest(h))
    return report


def dam_break_box(n: int = 50, t_end: float = 5.0, cfl: float = 0.5, theta: float = 0.8,
                  kind=ModelKind.SIMPLIFIED) -> DiagnosticsReport:
    """Circular dam break in a closed box with vegetation drag and bed friction."""
    x = (np.arange(n) + 0.5) / n * 10.0
    X, Y = np.meshgrid(x, x, indexing="ij")
    z = 0.1 * np.exp(-((X - 6.0) ** 2 + (Y - 5.0) ** 2) / 2.0)
    h = np.where((X - 3.0) ** 2 + (Y - 5.0) ** 2 < 4.0, 1.0, 0.1) - z
    grid = Grid(z, theta, (10.0 / n, 10.0 / n))
    cfg = RunConfig(kind=kind, t_end=t_end, output_every=t_end, cfl=cfl,
                    params=ClosureParams(C_d=1.0, d=0.01, C_b=30.0))
    _, report = Solver(grid, cfg).run(FlowField.at_rest(h))
    return report


def energy_increase(report: DiagnosticsReport) -> float:
    """Largest relative step-to-step growth of total energy (negative when decaying)."""
    e = np.asarray(report.energy)
    if e.size < 2:
        return -math.inf
    return float(np.max((e[1:] - e[:-1]) / np.abs(e[:-1])))


def stoker_error(cells: int, h_left: float = 1.0, h_right: float = 0.2, t: float = 5.0,
                 length: float = 50.0, g: float = 9.81) -> float:
    """Mean absolute depth error of the dam break against the similarity solution."""
    dx = length / cells
    xc = (np.arange(cells) + 0.5) * dx
    x0 = 0.5 * length
    outflow = BoundaryKind.OUTFLOW
    grid = Grid(np.zeros((cells, 3)), 1.0, (dx, dx), boundaries={"west": outflow, "east": outflow})
    h0 = np.repeat(np.where(xc < x0, h_left, h_right)[:, None], 3, axis=1)
    cfg = RunConfig(t_end=t, output_every=t, params=ClosureParams(g=g))
    snaps, _ = Solver(grid, cfg).run(FlowField.at_rest(h0))
    href, _ = stoker_reference(h_left, h_right, g, t, xc, x0)
    return float(np.mean(np.abs(snaps[-1].h[:, 1] - href)))


def observed_orders(errors, ratio: float = 2.0):
    e = np.asarray(errors, dtype=float)
    return np.log(e[:-1] / e[1:]) / math.log(ratio)


@dataclass(frozen=True)
class InclineResult:
    depth: float
    velocity: float
    balance_velocity: float
    drift: float  # relative change of the outlet velocity over the final output interval

    @property
    def rel_error(self) -> float:
        return abs(self.velocity / self.balance_velocity - 1.0)


def vegetated_incline(cells: int = 500, t_end: float = 2000.0, slope: float = 0.01, length: float = 100.0,
                      rain: float = 5e-6, theta: float = 0.9,
                      params: ClosureParams = ClosureParams(C_d=1.0, d=0.01, C_b=30.0)) -> InclineResult:
    """Rain-fed sheet flow down a uniform vegetated slope.

    The upper end is a wall and the lower end free outflow. The outlet
    velocity is compared with the drag/gravity balance at the computed depth.
    """
    dx = length / cells
    xc = (np.arange(cells) + 0.5) * dx
    z = np.repeat(((length - xc) * slope)[:, None], 3, axis=1)
    grid = Grid(z, theta, (dx, dx), boundaries={"west": "wall", "east": "outflow"})
    cfg = RunConfig(t_end=t_end, output_every=t_end / 8, forcing=Forcing(rain=rain), params=params)
    snaps, _ = Solver(grid, cfg).run(FlowField.at_rest(np.full(z.shape, 1e-4)))
    last, before = snaps[-1], snaps[-2]
    h = float(last.h[-1, 1])
    v = float(last.v[-1, 1, 0])
    K = friction_coefficient(h, theta, params)
    balance = math.sqrt(theta * params.g * h * slope / K)
    drift = abs(v / float(before.v[-1, 1, 0]) - 1.0)
    return InclineResult(h, v, balance, drift)


def curvature_errors(surface: AnalyticSurface, extent, nodes: int):
    """Max node errors of K_M, K_G, curvature and Christoffel symbols on a sampled chart."""
    chart = surface.sample(nodes, nodes, extent)
    Y1, Y2 = np.meshgrid(chart.y1, chart.y2, indexing="ij")
    exact = surface.local(Y1, Y2)
    got = chart.geometry
    return {
        k: float(np.max(np.abs(getattr(got, k) - getattr(exact, k))))
        for k in ("mean_curvature", "gauss_curvature", "curvature", "christoffel")
    }
