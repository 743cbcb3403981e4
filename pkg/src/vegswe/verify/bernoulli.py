"""Bernoulli head along streamlines at steady state."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..physics import DRY_DEPTH, GRAVITY, ModelKind, PrimitiveState, energy_density


class NotSteadyError(ValueError):
    def __init__(self, residual: float, tolerance: float):
        self.residual = float(residual)
        super().__init__(f"flow is not steady: max per-step change {residual:.3e} exceeds {tolerance:.1e}")


def steady_residual(previous, flow) -> float:
    """Largest change of h or v between two consecutive states."""
    if previous.h.shape != flow.h.shape:
        raise ValueError("grid mismatch between snapshots")
    return float(max(np.max(np.abs(flow.h - previous.h)), np.max(np.abs(flow.v - previous.v))))


def bernoulli_check(flow, grid, previous=None, kind=ModelKind.SIMPLIFIED, g=GRAVITY, dry=DRY_DEPTH,
                    tolerance: float = 1e-10, geom=None) -> float:
    """max |v^a d_a E_t| over wet cells, by central differences.

    ``previous`` is the state one step earlier; when given, the flow must have
    changed by less than ``tolerance`` or :class:`NotSteadyError` is raised.
    Cells on the grid edge and cells with a dry neighbour are skipped because
    the central stencil would reach outside the wet region.
    """
    kind = ModelKind(kind)
    if previous is not None:
        change = steady_residual(previous, flow)
        if not change < tolerance:
            raise NotSteadyError(change, tolerance)
    if geom is None and kind == ModelKind.FULL:
        geom = grid.coefficients(kind)
    _, head = energy_density(PrimitiveState(flow.h, flow.v), grid.z, grid.theta, geom, kind, g)
    d1, d2 = grid.spacing
    wet = flow.h >= dry
    inner = wet[1:-1, 1:-1] & wet[2:, 1:-1] & wet[:-2, 1:-1] & wet[1:-1, 2:] & wet[1:-1, :-2]
    if not np.any(inner):
        return 0.0
    grad1 = (head[2:, 1:-1] - head[:-2, 1:-1]) / (2 * d1)
    grad2 = (head[1:-1, 2:] - head[1:-1, :-2]) / (2 * d2)
    v = flow.v[1:-1, 1:-1]
    along = v[..., 0] * grad1 + v[..., 1] * grad2
    return float(np.max(np.abs(along[inner])))


@dataclass(frozen=True)
class BumpFlowResult:
    cells: int
    steps: int
    residual: float


def bump_flow(cells: int, discharge: float = 0.5, depth: float = 1.0, amplitude: float = 0.05,
              length: float = 10.0, max_steps: int = 100_000) -> BumpFlowResult:
    """Frictionless subcritical channel flow over a Gaussian bump, run to steady state.

    Both ends hold the undisturbed upstream state. The channel is three
    cells wide with walls on the sides, so the middle row is free of edge
    effects.
    """
    from ..solver import FixedState, FlowField, Grid, RunConfig, Solver

    dx = length / cells
    x = (np.arange(cells) + 0.5) * dx
    z = np.repeat((amplitude * np.exp(-((x - 0.5 * length) ** 2) / 2.0))[:, None], 3, axis=1)
    end = FixedState(depth, discharge / depth)
    grid = Grid(z, 1.0, (dx, dx), boundaries={"west": end, "east": end})
    solver = Solver(grid, RunConfig(cfl=0.9))
    h0 = depth - z
    flow = FlowField(h0, np.stack([discharge / h0, np.zeros_like(h0)], axis=-1))
    for k in range(1, max_steps + 1):
        new = solver.step(flow, solver.cfl_dt(flow))
        previous, flow = flow, new
        if steady_residual(previous, flow) < 1e-10:
            return BumpFlowResult(cells, k, bernoulli_check(flow, grid, previous))
    raise NotSteadyError(steady_residual(previous, flow), 1e-10)
