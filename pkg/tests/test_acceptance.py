"""Acceptance criteria, one test each.

Every test prints a single ``PASS``/``FAIL`` line with the measured value,
the pinned tolerance and the runtime, then asserts the same conditions.
"""

import time

import numpy as np
import pytest

from vegswe.physics import GeometryCoefficients, ModelKind, PrimitiveState, eigenvalues
from vegswe.solver import FlowField, Grid, RunConfig, Solver, numerical_flux
from vegswe.verify import checks, scenarios
from vegswe.verify.eigen import jacobian_eigen_oracle, random_wet_states


@pytest.fixture
def report(capsys):
    def emit(number, title, passed, detail, runtime, limit=None):
        timing = f"{runtime:.2f} s" + (f" (limit {limit:g} s)" if limit is not None else "")
        with capsys.disabled():
            print(f"\n[{'PASS' if passed else 'FAIL'}] criterion {number}: {title}: {detail}; {timing}")

    return emit


def timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - t0


def test_1_lake_at_rest(report):
    lake, dt = timed(scenarios.lake_at_rest, 100, 1000)
    ok = lake.max_v < 1e-12 and lake.max_deviation < 1e-12 and dt < 10
    report(1, "well-balanced lake, 100x100, 1000 steps", ok,
           f"max|v| = {lake.max_v:.3e} (< 1e-12), max|z+h-2| = {lake.max_deviation:.3e} (< 1e-12)", dt, 10)
    assert lake.steps == 1000
    assert lake.max_v < 1e-12
    assert lake.max_deviation < 1e-12
    assert dt < 10


def test_2_eigenstructure(report):
    def run():
        rng = np.random.default_rng(2024)
        worst = {}
        for kind in ModelKind:
            state, theta, geom, n = random_wet_states(rng, 1000, kind)
            oracle = jacobian_eigen_oracle(state, theta, geom, n, kind)
            closed = np.stack(eigenvalues(state, theta, geom, n, kind), axis=-1)
            worst[kind.value] = float(np.max(np.abs(oracle - closed)))
        return worst

    worst, dt = timed(run)
    ok = max(worst.values()) < 1e-6 and dt < 5
    detail = ", ".join(f"{k} max err {v:.2e}" for k, v in worst.items()) + " (< 1e-6)"
    report(2, "closed-form eigenvalues vs pencil oracle, 1000 states per model", ok, detail, dt, 5)
    assert max(worst.values()) < 1e-6
    assert dt < 5


def test_3_mass_budget(report):
    rep, dt = timed(scenarios.budget_run, 50, 500, 1e-5, 4e-6)
    worst = max(rep.mass_budget_residual)
    steps = len(rep) - 1
    ok = steps == 500 and worst < 1e-12 and dt < 5
    report(3, "mass budget, walled 50x50, rain 1e-5, infiltration 4e-6", ok,
           f"{steps} steps, max per-step residual {worst:.2e} (< 1e-12)", dt, 5)
    assert steps == 500
    assert worst < 1e-12
    assert dt < 5


def test_4_energy_dissipation(report):
    rep, dt = timed(scenarios.dam_break_box, 50, 5.0, 0.5, 0.8)
    growth = scenarios.energy_increase(rep)
    ok = growth <= 1e-10 and dt < 10
    report(4, "closed-box dam break, theta=0.8, friction on", ok,
           f"{len(rep) - 1} steps, largest relative step change {growth:+.2e} (<= +1e-10)", dt, 10)
    assert len(rep) > 10
    assert growth <= 1e-10
    assert dt < 10


def test_5_stoker_reduction(report):
    def run():
        return [scenarios.stoker_error(n) for n in (100, 200, 400)]

    errors, dt = timed(run)
    orders = scenarios.observed_orders(errors)
    ok = errors[-1] < 0.02 and np.min(orders) >= 0.7 and dt < 30
    report(5, "theta=1 Stoker dam break, 100/200/400 cells", ok,
           f"L1 errors {' '.join(f'{e:.4f}' for e in errors)} (400 cells < 0.02), "
           f"orders {' '.join(f'{o:.3f}' for o in orders)} (>= 0.7)", dt, 30)
    assert errors[-1] < 0.02
    assert np.min(orders) >= 0.7
    assert dt < 30


def test_6_vegetated_uniform_flow(report):
    res, dt = timed(scenarios.vegetated_incline)
    ok = res.rel_error < 0.01 and dt < 30
    report(6, "rain-fed vegetated incline S=0.01, C_d=1, d=0.01, C_b=30, theta=0.9", ok,
           f"outlet h = {res.depth:.6g} m, |v| = {res.velocity:.6g} m/s vs balance {res.balance_velocity:.6g} m/s, "
           f"rel err {res.rel_error:.2e} (< 0.01), last-interval drift {res.drift:.1e}", dt, 30)
    assert res.rel_error < 0.01
    assert dt < 30


def test_7_geometry_kernel(report):
    def run():
        return checks.geometry_suite() + checks.lemma_suite()

    rows, dt = timed(run)
    failed = [r.name for r in rows if not r.passed]
    orders = [r for r in rows if r.name.endswith("_order")]
    exact = [r for r in rows if r.name.endswith("_exact")]
    identity = max(r.value for r in rows if r.name.endswith("volume_identity"))
    lemma = max(r.value for r in rows if r.suite == "lemmas")
    ok = not failed and dt < 20
    report(7, "geometry corpus convergence, volume identity, lemma quadrature", ok,
           f"min order {min(r.value for r in orders):.3f} (>= 1.8) over {len(orders)} rows, "
           f"{len(exact)} rows exact to 1e-10, |beta*Delta - sqrt(det g)| {identity:.1e} (< 1e-12), "
           f"lemma max rel err {lemma:.1e} (< 1e-6) over {sum(r.suite == 'lemmas' for r in rows)} rows"
           + (f", failed: {failed}" if failed else ""), dt, 20)
    assert not failed
    assert {"paraboloid", "cylinder", "tilt"} <= {r.name.split("/")[0] for r in rows}
    assert dt < 20


def test_8_full_model_coincidence(report):
    def run():
        rng = np.random.default_rng(8)
        n = 1000
        left = PrimitiveState(rng.uniform(0, 3, n), rng.normal(size=(n, 2)))
        right = PrimitiveState(rng.uniform(0, 3, n), rng.normal(size=(n, 2)))
        geom = GeometryCoefficients.planar(n)
        same = True
        for axis in (0, 1):
            full, _ = numerical_flux(left, right, axis, 1.0, geom, ModelKind.FULL)
            simple, _ = numerical_flux(left, right, axis, 1.0, geom, ModelKind.SIMPLIFIED)
            same &= bool(np.array_equal(full, simple))
        # whole solver path on a flat theta=1 grid of 1000 cells
        grid = Grid(np.zeros((40, 25)), 1.0, (0.1, 0.1))
        flow = FlowField(rng.uniform(0.0, 2.0, (40, 25)), rng.normal(size=(40, 25, 2)))
        steps = [Solver(grid, RunConfig(kind=k)).step(flow, 1e-3) for k in ModelKind]
        same_step = bool(np.array_equal(steps[0].h, steps[1].h) and np.array_equal(steps[0].v, steps[1].v))
        return same, same_step

    (same, same_step), dt = timed(run)
    report(8, "full vs simplified path with planar coefficients and theta=1", same and same_step,
           f"interface fluxes bit-identical: {same}, solver step bit-identical: {same_step} (1000 states)", dt)
    assert same
    assert same_step
