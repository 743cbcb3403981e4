"""Integral diagnostics: mass, energy and their budgets.

Functions take flows and grids by duck typing (``h``, ``v`` arrays on the
flow; ``z``, ``theta``, ``cell_area`` on the grid) so this module does not
depend on the solver.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..physics import (
    DRY_DEPTH,
    ClosureParams,
    Forcing,
    GeometryCoefficients,
    ModelKind,
    PrimitiveState,
    energy_density,
    friction_coefficient,
    speed,
)

COLUMNS = ("t", "mass", "energy", "max_v", "lake_residual", "mass_budget_residual", "energy_budget_residual")


def _coefficients(grid, geom, kind):
    if geom is not None:
        return geom
    return grid.coefficients(kind) if hasattr(grid, "coefficients") else GeometryCoefficients.planar(grid.z.shape)


def _beta(geom, kind):
    return geom.area if kind == ModelKind.FULL else 1.0


def total_mass(flow, grid, geom=None, kind=ModelKind.SIMPLIFIED) -> float:
    """Sum of beta theta h over cells times the cell area."""
    geom = _coefficients(grid, geom, kind)
    return float(np.sum(_beta(geom, kind) * grid.theta * flow.h)) * grid.cell_area


def total_energy(flow, grid, geom=None, kind=ModelKind.SIMPLIFIED, g=9.81) -> float:
    """Sum of beta theta h E over cells times the cell area."""
    geom = _coefficients(grid, geom, kind)
    e, _ = energy_density(PrimitiveState(flow.h, flow.v), grid.z, grid.theta, geom, kind, g)
    return float(np.sum(_beta(geom, kind) * grid.theta * flow.h * e)) * grid.cell_area


def free_surface(flow, grid, geom=None, kind=ModelKind.SIMPLIFIED):
    geom = _coefficients(grid, geom, kind)
    nu3 = geom.nu3 if kind == ModelKind.FULL else 1.0
    return grid.z + flow.h * nu3


def lake_residual(flow, grid, geom=None, kind=ModelKind.SIMPLIFIED, dry=DRY_DEPTH) -> float:
    """Spread (max - min) of the free surface over wet cells."""
    wet = flow.h >= dry
    if not np.any(wet):
        return 0.0
    eta = free_surface(flow, grid, geom, kind)[wet]
    return float(np.max(eta) - np.min(eta))


def _check_shapes(*arrays):
    shapes = {a.shape for a in arrays}
    if len(shapes) != 1:
        raise ValueError(f"grid mismatch between snapshots: shapes {sorted(shapes)}")


def energy_budget_residual(
    before,
    after,
    grid,
    dt: float,
    forcing: Forcing,
    params: ClosureParams,
    kind=ModelKind.SIMPLIFIED,
    boundary_outflow: float = 0.0,
    geom=None,
) -> float:
    """Discrete defect of the energy balance over one step, per unit surface area.

    dE/dt + (energy leaving the boundary) - sum beta (M (w - |v|^2/2) - K |v|^3) dA,
    with the source evaluated on ``before``. Zero only in the limit of
    resolved flows; numerical dissipation makes it negative.
    """
    _check_shapes(before.h, after.h, grid.z)
    if not dt > 0:
        raise ValueError("step must be positive")
    geom = _coefficients(grid, geom, kind)
    g = params.g
    e0 = total_energy(before, grid, geom, kind, g)
    e1 = total_energy(after, grid, geom, kind, g)
    theta = grid.theta
    wet = before.h >= DRY_DEPTH
    nu3 = geom.nu3 if kind == ModelKind.FULL else 1.0
    w = g * (grid.z + before.h * nu3)
    sp = speed(before.v, geom, kind)
    K = friction_coefficient(before.h, theta, params)
    beta = _beta(geom, kind)
    local = forcing.net(theta) * (w - 0.5 * sp * sp) - np.where(wet, K * sp**3, 0.0)
    source = float(np.sum(beta * local)) * grid.cell_area
    surface = float(np.sum(beta * np.ones_like(theta))) * grid.cell_area
    return ((e1 - e0) / dt + boundary_outflow - source) / surface


@dataclass
class DiagnosticsReport:
    """Per-step time series; row 0 is the initial state."""

    t: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    max_v: list = field(default_factory=list)
    lake_residual: list = field(default_factory=list)
    mass_budget_residual: list = field(default_factory=list)
    energy_budget_residual: list = field(default_factory=list)

    def __len__(self):
        return len(self.t)

    def _state_row(self, flow, grid, geom, kind, g, dry):
        self.t.append(float(flow.t))
        self.mass.append(total_mass(flow, grid, geom, kind))
        self.energy.append(total_energy(flow, grid, geom, kind, g))
        self.max_v.append(float(np.max(speed(flow.v, geom, kind))) if flow.h.size else 0.0)
        self.lake_residual.append(lake_residual(flow, grid, geom, kind, dry))

    def record_initial(self, flow, grid, geom, kind, g=9.81, dry=DRY_DEPTH):
        self._state_row(flow, grid, geom, kind, g, dry)
        self.mass_budget_residual.append(0.0)
        self.energy_budget_residual.append(0.0)

    def record_step(self, before, after, grid, geom, kind, config, record):
        """Append the row of ``after``; ``record`` is the solver's step bookkeeping."""
        self._state_row(after, grid, geom, kind, config.params.g, config.dry_threshold)
        m0, m1 = self.mass[-2], self.mass[-1]
        expected = record.boundary_inflow + record.source_mass
        scale = max(abs(m0), abs(m1), np.finfo(float).tiny)
        self.mass_budget_residual.append(abs(m1 - m0 - expected) / scale)
        self.energy_budget_residual.append(
            energy_budget_residual(
                before, after, grid, record.dt, config.forcing, config.params, kind,
                record.boundary_energy_outflow, geom,
            )
        )

    def as_array(self) -> np.ndarray:
        return np.column_stack([np.asarray(getattr(self, c), dtype=float) for c in COLUMNS])

    def all_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.as_array())))
