"""Verification suites run by the ``check`` command.

Each suite returns a list of :class:`CheckResult` rows; :func:`run_suites`
prints them as a CSV table followed by a one-line summary per suite.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass

import numpy as np

from ..physics import ModelKind, eigenvalues
from .eigen import jacobian_eigen_oracle, random_wet_states


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    value: float
    tolerance: float
    passed: bool
    detail: str = ""


def _below(suite, name, value, tol, detail=""):
    return CheckResult(suite, name, float(value), tol, bool(value < tol), detail)


def _at_least(suite, name, value, tol, detail=""):
    return CheckResult(suite, name, float(value), tol, bool(value >= tol), detail)


def eigen_suite(count: int = 1000, seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    rows = []
    for kind in ModelKind:
        state, theta, geom, n = random_wet_states(rng, count, kind)
        oracle = jacobian_eigen_oracle(state, theta, geom, n, kind)
        closed = np.stack(eigenvalues(state, theta, geom, n, kind), axis=-1)
        rows.append(_below("eigen", f"{kind.value}_max_abs_error", np.max(np.abs(oracle - closed)), 1e-6,
                           f"{count} random wet states"))
        vn = np.einsum("...a,...a->...", state.v, n)
        rows.append(_below("eigen", f"{kind.value}_middle_root", np.max(np.abs(oracle[:, 1] - vn)), 1e-6))
    return rows


def lemma_suite() -> list[CheckResult]:
    from .lemmas import TOLERANCE, lemma_quadrature_suite

    return [
        _below("lemmas", f"{r.chart}/{r.field}/{r.quantity}", r.rel_error, TOLERANCE)
        for r in lemma_quadrature_suite()
    ]


def geometry_suite() -> list[CheckResult]:
    """Curvature convergence and the volume-factor identity."""
    from ..geometry import offset_frame
    from ..geometry.surfaces import cylinder_crest, gaussian_bump, paraboloid, tilted_plane
    from .scenarios import curvature_errors, observed_orders

    rows = []
    corpus = (
        (paraboloid(), (-1.0, 1.0, -1.0, 1.0)),
        (cylinder_crest(2.0), (-1.2, 1.2, 0.0, 1.0)),
        (tilted_plane(0.3, 0.1), (0.0, 1.0, 0.0, 1.0)),
        (gaussian_bump(), (0.0, 1.0, 0.0, 1.0)),
    )
    sizes = (17, 33, 65, 129)
    for surface, extent in corpus:
        errs = [curvature_errors(surface, extent, n) for n in sizes]
        for key in errs[0]:
            e = [x[key] for x in errs]
            if e[-1] <= 1e-10:
                # quadratic and planar charts are reproduced exactly by the stencils
                rows.append(_below("geometry", f"{surface.name}/{key}_exact", e[-1], 1e-10))
            else:
                # orders rise towards 2 from below; the finest pair is the asymptotic estimate
                orders = observed_orders(e)
                rows.append(_at_least("geometry", f"{surface.name}/{key}_order", float(orders[-1]), 1.8,
                                      "orders " + " ".join(f"{o:.3f}" for o in orders)))
        chart = surface.sample(33, 33, extent)
        worst = 0.0
        for node in ((0, 0), (16, 16), (32, 5), (7, 29)):
            for y3 in (-0.2, 0.0, 0.1, 0.3):
                f = offset_frame(chart, node, y3)
                beta = chart.area[node]
                worst = max(worst, abs(beta * f.delta - np.sqrt(np.linalg.det(f.metric))))
        rows.append(_below("geometry", f"{surface.name}/volume_identity", worst, 1e-12))
    return rows


def stoker_suite() -> list[CheckResult]:
    from .scenarios import observed_orders, stoker_error

    errors = [stoker_error(n) for n in (100, 200, 400)]
    orders = observed_orders(errors)
    return [
        _below("stoker", "l1_depth_400_cells", errors[-1], 0.02),
        _at_least("stoker", "observed_order", float(np.min(orders)), 0.7,
                  "orders " + " ".join(f"{o:.3f}" for o in orders)),
    ]


def balance_suite() -> list[CheckResult]:
    from .bernoulli import bump_flow
    from .scenarios import budget_run, dam_break_box, energy_increase, lake_at_rest, observed_orders, vegetated_incline

    rows = []
    lake = lake_at_rest()
    rows.append(_below("balance", "lake_max_velocity", lake.max_v, 1e-12))
    rows.append(_below("balance", "lake_surface_deviation", lake.max_deviation, 1e-12))
    full = lake_at_rest(60, 300, ModelKind.FULL)
    rows.append(_below("balance", "full_lake_max_velocity", full.max_v, 1e-12))
    rows.append(_below("balance", "full_lake_surface_deviation", full.max_deviation, 1e-12))
    report = budget_run()
    rows.append(_below("balance", "mass_budget_residual", max(report.mass_budget_residual), 1e-12))
    box = dam_break_box()
    rows.append(_below("balance", "energy_step_increase", energy_increase(box), 1e-10))
    bern = [bump_flow(n).residual for n in (25, 50, 100)]
    rows.append(_at_least("balance", "bernoulli_order", float(np.min(observed_orders(bern))), 0.7,
                          "residuals " + " ".join(f"{r:.3e}" for r in bern)))
    incline = vegetated_incline()
    rows.append(_below("balance", "incline_outlet_velocity", incline.rel_error, 0.01,
                       f"h={incline.depth:.6g} v={incline.velocity:.6g}"))
    return rows


SUITES = {
    "eigen": eigen_suite,
    "lemmas": lambda: geometry_suite() + lemma_suite(),
    "stoker": stoker_suite,
    "balance": balance_suite,
}


def run_suites(names, out) -> bool:
    """Run the named suites (``all`` expands to every suite); returns overall success."""
    if "all" in names:
        names = list(SUITES)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["suite", "check", "value", "tolerance", "passed", "detail"])
    summary = []
    ok = True
    for name in names:
        t0 = time.perf_counter()
        rows = SUITES[name]()
        for r in rows:
            writer.writerow([r.suite, r.name, f"{r.value:.17g}", f"{r.tolerance:.3g}", "pass" if r.passed else "FAIL",
                             r.detail])
        failed = [r for r in rows if not r.passed]
        ok = ok and not failed
        summary.append(
            f"{name}: {len(rows) - len(failed)}/{len(rows)} passed in {time.perf_counter() - t0:.1f} s"
            + ("" if not failed else " (failed: " + ", ".join(r.name for r in failed) + ")")
        )
    out.write(buf.getvalue())
    out.write("\n" + "\n".join(summary) + "\n")
    out.write(("all checks passed" if ok else "some checks FAILED") + "\n")
    return ok
