import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from vegswe.physics import ClosureParams, ModelKind, PrimitiveState, flux_column
from vegswe.solver import (
    BlowUpError,
    FixedState,
    FlowField,
    Grid,
    RunConfig,
    Solver,
    cfl_dt,
    hydrostatic_reconstruct,
    numerical_flux,
)
from vegswe.verify.diagnostics import total_mass

OUTFLOW = {s: "outflow" for s in ("west", "east", "south", "north")}


def ps(h, v1=0.0, v2=0.0):
    h = np.asarray(h, float)
    return PrimitiveState(h, np.stack(np.broadcast_arrays(np.asarray(v1, float) + 0 * h, v2 + 0 * h), -1))


def test_reconstruct_without_jump():
    hl, hr, zf = hydrostatic_reconstruct(0.4, 0.4, 1.0, 1.0)
    assert (hl, hr, zf) == (0.4, 0.4, 1.0)


def test_reconstruct_lake_at_rest_is_balanced():
    hl, hr, _ = hydrostatic_reconstruct(1.0, 0.7, 0.0, 0.3)
    assert hl == hr
    flux, _ = numerical_flux(ps(hl), ps(hr), 0, 1.0)
    assert flux[0] == 0.0


def test_reconstruct_dry_step_acts_as_wall():
    hl, hr, zf = hydrostatic_reconstruct(0.3, 0.0, 0.0, 0.5)
    assert hr == 0.0 and hl == 0.0
    assert zf == 0.5


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 5), st.floats(0, 5), st.floats(-2, 2), st.floats(-2, 2))
def test_reconstruct_bounds(h_left, h_right, z_left, z_right):
    hl, hr, zf = hydrostatic_reconstruct(h_left, h_right, z_left, z_right)
    assert 0 <= hl <= 2 * h_left + 1e-12
    assert 0 <= hr <= 2 * h_right + 1e-12
    assert min(z_left, z_right) - 1e-12 <= zf <= max(z_left, z_right)
    # the free surface is kept wherever the reconstructed depth is positive
    if hl > 0:
        assert zf + hl == pytest.approx(z_left + h_left, abs=1e-12)


def test_rusanov_example():
    flux, s = numerical_flux(ps(1.0), ps(0.5), 0, 1.0)
    assert flux[0] == pytest.approx(0.783023, abs=5e-7)
    assert s == pytest.approx(math.sqrt(9.81))


def test_dry_dry_flux_is_zero():
    flux, _ = numerical_flux(ps(0.0), ps(0.0), 1, 0.8)
    assert np.all(flux == 0)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 5), st.floats(-3, 3), st.floats(-3, 3), st.floats(0.1, 1), st.integers(0, 1))
def test_flux_consistency(h, v1, v2, theta, axis):
    u = ps(h, v1, v2)
    flux, _ = numerical_flux(u, u, axis, theta)
    np.testing.assert_allclose(flux, flux_column(u, theta, axis=axis), rtol=1e-14, atol=1e-14)


def test_planar_full_flux_is_bit_identical():
    from vegswe.physics import GeometryCoefficients

    rng = np.random.default_rng(7)
    n = 1000
    left = ps(rng.uniform(0, 3, n), rng.normal(size=n), rng.normal(size=n))
    right = ps(rng.uniform(0, 3, n), rng.normal(size=n), rng.normal(size=n))
    geom = GeometryCoefficients.planar(n)
    for axis in (0, 1):
        full, _ = numerical_flux(left, right, axis, 1.0, geom, ModelKind.FULL)
        simple, _ = numerical_flux(left, right, axis, 1.0)
        assert np.array_equal(full, simple)


def test_cfl_dt_examples():
    grid = Grid(np.zeros((4, 4)), 0.37, (1.0, 1.0))
    assert cfl_dt(FlowField.at_rest(np.ones((4, 4))), grid, 0.5) == pytest.approx(0.159638, abs=5e-7)
    assert cfl_dt(FlowField.at_rest(np.zeros((4, 4))), grid, 0.5, cadence=3.0) == 3.0


def test_friction_only_update():
    # K = alpha_s = 1 with theta = 1 and h = 1, so K / (theta h) = 1
    grid = Grid(np.zeros((3, 3)), 1.0, (1.0, 1.0), boundaries=OUTFLOW)
    cfg = RunConfig(params=ClosureParams(C_b=math.sqrt(9.81)))
    flow = FlowField(np.ones((3, 3)), np.tile([1.0, 0.0], (3, 3, 1)))
    out = Solver(grid, cfg).step(flow, 1.0)
    np.testing.assert_allclose(out.h, 1.0, rtol=1e-15)
    np.testing.assert_allclose(out.v[..., 0], 0.5, rtol=1e-15)
    np.testing.assert_array_equal(out.v[..., 1], 0.0)


def test_uniform_state_unchanged():
    grid = Grid(np.zeros((6, 5)), 0.6, (0.5, 0.5), boundaries=OUTFLOW)
    flow = FlowField(np.full((6, 5), 0.8), np.tile([0.3, -0.2], (6, 5, 1)))
    solver = Solver(grid, RunConfig())
    out = solver.advance(flow, 20)
    np.testing.assert_allclose(out.h, flow.h, rtol=1e-14)
    np.testing.assert_allclose(out.v, flow.v, rtol=1e-14)


@pytest.mark.parametrize("kind", list(ModelKind))
def test_lake_at_rest_step(kind):
    from vegswe.verify.scenarios import bumpy_terrain

    grid, flow = bumpy_terrain(20, kind, level=1.0)
    solver = Solver(grid, RunConfig(kind=kind))
    out = solver.step(flow, solver.cfl_dt(flow))
    assert np.max(np.abs(out.h - flow.h)) <= 1e-14
    assert np.max(np.abs(out.v)) <= 1e-14


def test_lake_with_dry_island_stays_at_rest():
    n = 24
    x = (np.arange(n) + 0.5) / n
    X, Y = np.meshgrid(x, x, indexing="ij")
    z = 1.2 * np.exp(-((X - 0.5) ** 2 + (Y - 0.5) ** 2) / 0.02)
    grid = Grid(z, 0.9, (1 / n, 1 / n))
    flow = FlowField.at_rest(np.maximum(0.5 - z, 0.0))
    out = Solver(grid, RunConfig()).advance(flow, 100)
    assert np.max(np.abs(out.v)) < 1e-12
    assert np.max(np.abs(out.h - flow.h)) < 1e-12


def test_zero_end_time_returns_initial_snapshot():
    grid = Grid(np.zeros((3, 3)), 1.0, (1.0, 1.0))
    flow = FlowField.at_rest(np.ones((3, 3)))
    snaps, report = Solver(grid, RunConfig(t_end=0.0)).run(flow)
    assert snaps == [flow]
    assert len(report) == 1


def test_snapshot_cadence():
    grid = Grid(np.zeros((10, 3)), 1.0, (1.0, 1.0))
    h = np.ones((10, 3))
    h[:5] = 2.0
    snaps, report = Solver(grid, RunConfig(t_end=2.0, output_every=0.5)).run(FlowField.at_rest(h))
    assert [s.t for s in snaps] == [0.0, 0.5, 1.0, 1.5, 2.0]
    assert len(report) - 1 == len(report.t) - 1 > 4


def test_worker_count_does_not_change_results():
    from vegswe.verify.scenarios import bumpy_terrain

    grid, flow = bumpy_terrain(30, level=0.7)
    h = flow.h.copy()  # partially dry lake
    h[:10] += 0.2
    flow = FlowField.at_rest(h)
    outs = []
    for workers in (1, 3, 4):
        cfg = RunConfig(workers=workers, params=ClosureParams(C_d=1.0, C_b=30.0))
        outs.append(Solver(grid, cfg).advance(flow, 30))
    for other in outs[1:]:
        assert np.max(np.abs(other.h - outs[0].h)) <= 1e-12
        assert np.max(np.abs(other.v - outs[0].v)) <= 1e-12


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_blow_up_reports_cell_and_time():
    grid = Grid(np.zeros((4, 4)), 1.0, (1.0, 1.0))
    h = np.ones((4, 4))
    h[2, 1] = np.inf
    with pytest.raises(BlowUpError) as info:
        Solver(grid, RunConfig()).step(FlowField.at_rest(h, t=3.0), 0.1)
    assert info.value.time == pytest.approx(3.1)
    assert len(info.value.cell) == 2


def test_negative_depth_rejected():
    with pytest.raises(ValueError):
        FlowField.at_rest(-np.ones((3, 3)))


@pytest.mark.parametrize(
    "kwargs",
    [
        {"z": np.zeros((2, 5))},
        {"z": np.array([[0, 0, 0], [0, np.nan, 0], [0, 0, 0]], float)},
        {"theta": 0.0},
        {"theta": 1.5},
        {"spacing": (0.0, 1.0)},
        {"boundaries": {"up": "wall"}},
        {"boundaries": {"west": "sticky"}},
    ],
)
def test_grid_validation(kwargs):
    args = {"z": np.zeros((3, 3)), "theta": 1.0, "spacing": (1.0, 1.0)} | kwargs
    with pytest.raises(ValueError):
        Grid(**args)


@pytest.mark.parametrize("kwargs", [{"cfl": 0.0}, {"cfl": 1.5}, {"t_end": -1.0}, {"t_end": math.inf},
                                    {"output_every": 0.0}, {"workers": 0}])
def test_run_config_validation(kwargs):
    with pytest.raises(ValueError):
        RunConfig(**kwargs)


def test_fixed_state_boundary_feeds_the_domain():
    grid = Grid(np.zeros((8, 3)), 1.0, (1.0, 1.0), boundaries={"west": FixedState(1.0, 1.0)})
    flow = FlowField.at_rest(np.full((8, 3), 0.5))
    out = Solver(grid, RunConfig()).advance(flow, 10)
    assert total_mass(out, grid) > total_mass(flow, grid)


random_depths = hnp.arrays(float, (6, 5), elements=st.floats(0.0, 2.0))
random_beds = hnp.arrays(float, (6, 5), elements=st.floats(-0.5, 0.5))


@settings(max_examples=40, deadline=None)
@given(random_depths, random_beds, st.sampled_from(list(ModelKind)))
def test_walls_conserve_mass_and_keep_depth_positive(h, z, kind):
    grid = Grid(z, 0.8, (0.5, 0.5))
    flow = FlowField.at_rest(h)
    solver = Solver(grid, RunConfig(kind=kind, params=ClosureParams(C_d=1.0, C_b=30.0)))
    geom = solver.geom
    m0 = total_mass(flow, grid, geom, kind)
    out = solver.advance(flow, 25)
    assert np.all(out.h >= 0)
    assert np.all(np.isfinite(out.v))
    assert abs(total_mass(out, grid, geom, kind) - m0) <= 1e-12 * max(m0, 1e-300)
