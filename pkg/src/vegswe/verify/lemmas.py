"""Cartesian cross-checks of the curvilinear column flux formulas.

Every field is specified in Cartesian space. The curvilinear side receives its
offset-frame components and goes through :mod:`vegswe.geometry.integrals`.
The oracle side integrates the same field directly over the embedded
surfaces ``x = b(y) + y3 nu(y)`` using the analytic height function, with
Gauss quadrature along each wall. The two computations share no geometry code.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..geometry.integrals import Quadrature, flux_scalar_vertical, flux_tensor_surfaces, plane_nodes
from ..geometry.surfaces import AnalyticSurface, cylinder_crest, paraboloid, plane, tilted_plane

TOLERANCE = 1e-6


# -- embedding ---------------------------------------------------------------
class Embedding:
    """Offset embedding of an analytic Monge surface with exact derivatives."""

    def __init__(self, surface: AnalyticSurface):
        self.surface = surface

    def frame(self, y1, y2):
        """Base point, normal and their parameter derivatives."""
        y1, y2 = np.broadcast_arrays(np.asarray(y1, dtype=float), np.asarray(y2, dtype=float))
        z = np.broadcast_to(self.surface.elevation(y1, y2), y1.shape)
        zx, zy = (np.broadcast_to(a, y1.shape) for a in self.surface.gradient(y1, y2))
        zxx, zxy, zyy = (np.broadcast_to(a, y1.shape) for a in self.surface.hessian(y1, y2))
        zero, one = np.zeros_like(y1), np.ones_like(y1)
        base = np.stack([y1, y2, z], axis=-1)
        tau = np.stack([np.stack([one, zero, zx], -1), np.stack([zero, one, zy], -1)], axis=-2)
        N = np.stack([-zx, -zy, one], axis=-1)
        norm = np.linalg.norm(N, axis=-1, keepdims=True)
        nu = N / norm
        dN = np.stack([np.stack([-zxx, -zxy, zero], -1), np.stack([-zxy, -zyy, zero], -1)], axis=-2)
        dnu = (dN - nu[..., None, :] * np.sum(nu[..., None, :] * dN, axis=-1, keepdims=True)) / norm[..., None]
        return base, tau, nu, dnu

    def point(self, y1, y2, y3):
        base, tau, nu, dnu = self.frame(y1, y2)
        y3 = np.asarray(y3, dtype=float)[..., None]
        x = base + y3 * nu
        e = tau + y3[..., None] * dnu  # d x / d y^a at fixed y3
        return x, e, nu

    def offset_components(self, y1, y2, y3, vector):
        """Components of Cartesian vectors in the frame (e_1, e_2, nu)."""
        _, e, nu = self.point(y1, y2, y3)
        basis = np.concatenate([e, nu[..., None, :]], axis=-2)  # rows are basis vectors
        return np.linalg.solve(np.swapaxes(basis, -1, -2), vector[..., None])[..., 0]

    def offset_tensor(self, y1, y2, y3, tensor):
        """Contravariant components Phi^IJ of a Cartesian tensor in (e_1, e_2, nu)."""
        _, e, nu = self.point(y1, y2, y3)
        basis = np.concatenate([e, nu[..., None, :]], axis=-2)
        dual = np.linalg.inv(basis)  # columns are the dual vectors
        return np.swapaxes(dual, -1, -2) @ tensor @ dual


# -- field corpus ------------------------------------------------------------
@dataclass(frozen=True)
class VectorField:
    name: str
    value: Callable  # x (..., 3) -> (..., 3)


@dataclass(frozen=True)
class TensorField:
    name: str
    value: Callable  # x (..., 3) -> (..., 3, 3)


@dataclass(frozen=True)
class StressField:
    """Pressure and symmetric deviatoric stress; the tensor is ``-p I + tau``."""

    name: str
    pressure: Callable  # x -> (...)
    deviator: Callable  # x -> (..., 3, 3)

    def tensor(self, x):
        return -self.pressure(x)[..., None, None] * np.eye(3) + self.deviator(x)


def _sym(A):
    return 0.5 * (A + np.swapaxes(A, -1, -2))


VECTOR_FIELDS = (
    VectorField("zero", lambda x: np.zeros_like(x)),
    VectorField("constant", lambda x: np.broadcast_to([0.3, -1.2, 0.7], x.shape).copy()),
    VectorField(
        "linear",
        lambda x: np.stack([1 + x[..., 0] - 2 * x[..., 2], 0.5 * x[..., 1] + x[..., 0], 2 - x[..., 2]], -1),
    ),
    VectorField(
        "quadratic",
        lambda x: np.stack(
            [x[..., 0] ** 2 + x[..., 1] * x[..., 2], 1 - x[..., 1] ** 2 + 0.5 * x[..., 0], x[..., 0] * x[..., 2]], -1
        ),
    ),
)

_T0 = np.array([[1.0, 0.2, -0.3], [0.2, 0.5, 0.1], [-0.3, 0.1, 2.0]])
_T1 = np.array([[0.0, 1.0, 0.5], [1.0, -1.0, 0.0], [0.5, 0.0, 0.3]])
_T2 = np.array([[0.4, 0.0, 1.0], [0.0, 0.2, -0.6], [1.0, -0.6, 0.0]])

TENSOR_FIELDS = (
    TensorField("zero", lambda x: np.zeros(x.shape + (3,))),
    TensorField("constant", lambda x: np.broadcast_to(_T0, x.shape + (3,)).copy()),
    TensorField("linear", lambda x: _T0 + x[..., 0, None, None] * _T1 + x[..., 2, None, None] * _T2),
    TensorField(
        "quadratic",
        lambda x: _sym(
            _T0 + (x[..., 0] * x[..., 1])[..., None, None] * _T1 + (x[..., 2] ** 2)[..., None, None] * _T2
        ),
    ),
)

STRESS_FIELDS = (
    StressField("hydrostatic", lambda x: 9.81 * (1.0 - x[..., 2]), lambda x: np.zeros(x.shape + (3,))),
    StressField(
        "viscous",
        lambda x: 2.0 + x[..., 0] - 0.5 * x[..., 2],
        lambda x: _T1 * (1 + x[..., 1, None, None]) + (x[..., 2] ** 2)[..., None, None] * _T2,
    ),
)


# -- chart corpus ------------------------------------------------------------
@dataclass(frozen=True)
class ColumnCase:
    """A surface with a parameter rectangle, column bounds and a cap inside them."""

    surface: AnalyticSurface
    region: tuple
    lower: Callable
    upper: Callable
    cap: Callable

    @property
    def name(self) -> str:
        return self.surface.name


def default_charts() -> tuple[ColumnCase, ...]:
    return (
        ColumnCase(
            plane(),
            (0.0, 1.0, 0.0, 1.0),
            lambda a, b: 0.05 + 0.05 * a + 0 * b,
            lambda a, b: 0.6 + 0.1 * a * b,
            lambda a, b: 0.3 + 0.05 * (a + b),
        ),
        ColumnCase(
            tilted_plane(0.3, 0.1),
            (0.0, 1.0, -0.5, 0.5),
            lambda a, b: 0.0 * a + 0 * b,
            lambda a, b: 0.5 + 0.1 * b + 0 * a,
            lambda a, b: 0.25 + 0.05 * a * b,
        ),
        ColumnCase(
            paraboloid(1.0),
            (-0.5, 0.5, -0.5, 0.5),
            lambda a, b: 0.0 * a + 0 * b,
            lambda a, b: 0.4 + 0.05 * a + 0 * b,
            lambda a, b: 0.2 + 0.05 * (a * a - b),
        ),
        ColumnCase(
            cylinder_crest(2.0),
            (-1.0, 1.0, 0.0, 1.0),
            lambda a, b: 0.0 * a + 0 * b,
            lambda a, b: 0.5 + 0 * a + 0 * b,
            lambda a, b: 0.25 + 0.1 * a + 0 * b,
        ),
    )


# -- Cartesian oracles -------------------------------------------------------
def _edges(region):
    """Edges of the rectangle as (start, direction, length) with outward orientation."""
    a1, b1, a2, b2 = region
    return (
        ((a1, a2), (1.0, 0.0), b1 - a1),  # south, traversed eastwards
        ((b1, a2), (0.0, 1.0), b2 - a2),  # east, northwards
        ((b1, b2), (-1.0, 0.0), b1 - a1),  # north, westwards
        ((a1, b2), (0.0, -1.0), b2 - a2),  # west, southwards
    )


def _wall_nodes(case: ColumnCase, quad: Quadrature):
    """Quadrature on the lateral wall: points, outward area vectors times weights."""
    s, ws = np.polynomial.legendre.leggauss(max(quad.n1, quad.n2))
    t, wt = np.polynomial.legendre.leggauss(quad.n3)
    emb = Embedding(case.surface)
    points, areas = [], []
    for (p1, p2), (d1, d2), length in _edges(case.region):
        u = 0.5 * length * (s + 1)
        y1, y2 = p1 + d1 * u, p2 + d2 * u
        lo, hi = case.lower(y1, y2), case.upper(y1, y2)
        y3 = lo[:, None] + 0.5 * (hi - lo)[:, None] * (t + 1)
        Y1 = np.repeat(y1[:, None], len(t), 1)
        Y2 = np.repeat(y2[:, None], len(t), 1)
        x, e, nu = emb.point(Y1, Y2, y3)
        # d x / d s along the edge at fixed y3; d x / d y3 = nu
        xs = d1 * e[..., 0, :] + d2 * e[..., 1, :]
        normal = np.cross(xs, nu)  # outward for a counter-clockwise traversal
        w = np.outer(0.5 * length * ws, np.ones_like(t)) * (0.5 * (hi - lo))[:, None] * wt
        points.append(x)
        areas.append(normal * w[..., None])
    return np.concatenate([p.reshape(-1, 3) for p in points]), np.concatenate([a.reshape(-1, 3) for a in areas])


def _cap_nodes(case: ColumnCase, quad: Quadrature, step: float = 1e-6):
    """Quadrature on the cap: points, frames and upward area vectors times weights."""
    emb = Embedding(case.surface)
    y1, y2, w = plane_nodes(case.region, quad)
    r = case.cap(y1, y2)
    dr = np.stack(
        [
            (case.cap(y1 + step, y2) - case.cap(y1 - step, y2)) / (2 * step),
            (case.cap(y1, y2 + step) - case.cap(y1, y2 - step)) / (2 * step),
        ],
        axis=-1,
    )
    x, e, nu = emb.point(y1, y2, r)
    zeta = e + dr[..., None] * nu[:, None, :]  # tangents of the cap
    area = np.cross(zeta[:, 0], zeta[:, 1])
    return x, e, nu, zeta, dr, area * w[:, None], w


def scalar_lateral_oracle(field: VectorField, case: ColumnCase, quad: Quadrature) -> tuple[float, float]:
    """Flux of F through the lateral wall and the integral of its magnitude."""
    x, dA = _wall_nodes(case, quad)
    density = np.sum(field.value(x) * dA, axis=-1)
    return float(np.sum(density)), float(np.sum(np.abs(density)))


def tensor_oracle(field, case: ColumnCase, quad: Quadrature):
    """Cartesian cap and lateral fluxes of a tensor, with magnitude scales."""
    value = field.tensor if isinstance(field, StressField) else field.value
    x, dA = _wall_nodes(case, quad)
    lateral = np.einsum("pij,pj->pi", value(x), dA)
    xc, *_, area, _ = _cap_nodes(case, quad)
    cap = np.einsum("pij,pj->pi", value(xc), area)
    return cap.sum(axis=0), lateral.sum(axis=0), float(np.abs(cap).sum()), float(np.abs(lateral).sum())


def stress_cap_oracle(field: StressField, case: ColumnCase, quad: Quadrature):
    """Cap flux of ``-p I + tau`` written with the cap's own frame.

    The deviator is expressed by components tau~^IJ in the frame
    (zeta_1, zeta_2, n), with zeta_a the cap tangents and n its unit normal.
    Per unit parameter area the flux is
    ``vartheta [(p - tau~33) g^ab r_b + tau~a3 S] e_a
    + vartheta [-p + tau~33 + r_a tau~a3 S] nu`` with
    ``S = sqrt(1 + g^ab r_a r_b)`` and g the offset metric on the cap.
    """
    x, e, nu, zeta, dr, _, w = _cap_nodes(case, quad)
    basis = np.concatenate([e, nu[:, None, :]], axis=1)
    vol = np.abs(np.linalg.det(basis))
    metric = np.einsum("pai,pbi->pab", e, e)
    minv = np.linalg.inv(metric)
    S = np.sqrt(1.0 + np.einsum("pab,pa,pb->p", minv, dr, dr))
    n = np.cross(zeta[:, 0], zeta[:, 1])
    n /= np.linalg.norm(n, axis=-1, keepdims=True)
    frame = np.concatenate([zeta, n[:, None, :]], axis=1)
    dual = np.linalg.inv(frame)
    tt = np.einsum("piI,pij,pjJ->pIJ", dual, field.deviator(x), dual)
    p = field.pressure(x)
    rup = np.einsum("pab,pb->pa", minv, dr)
    tang = vol[:, None] * ((p - tt[:, 2, 2])[:, None] * rup + tt[:, :2, 2] * S[:, None])
    norm = vol * (-p + tt[:, 2, 2] + np.einsum("pa,pa->p", dr, tt[:, :2, 2]) * S)
    density = np.einsum("pa,pai->pi", tang, e) + norm[:, None] * nu
    density *= w[:, None]
    return density.sum(axis=0), float(np.abs(density).sum())


# -- suite -------------------------------------------------------------------
@dataclass(frozen=True)
class LemmaRow:
    chart: str
    field: str
    quantity: str
    value: float
    reference: float
    rel_error: float

    @property
    def passed(self) -> bool:
        return bool(self.rel_error < TOLERANCE)


def relative_error(value, reference, scale: float) -> float:
    """|a - b| over max(|b|, scale); exact zeros compare as 0."""
    diff = float(np.max(np.abs(np.asarray(value) - np.asarray(reference))))
    denom = max(float(np.max(np.abs(reference))), scale)
    return diff if denom == 0.0 else diff / denom


def _norm(v) -> float:
    v = np.atleast_1d(np.asarray(v, dtype=float))
    return float(v[0]) if v.size == 1 else float(np.linalg.norm(v))


def lemma_quadrature_suite(charts=None, vector_fields=VECTOR_FIELDS, tensor_fields=TENSOR_FIELDS,
                           stress_fields=STRESS_FIELDS, quad: Quadrature = Quadrature()) -> list[LemmaRow]:
    """Compare curvilinear column fluxes with the Cartesian oracles.

    Rows report the norm of the curvilinear value, of the reference and the
    relative error (max component difference over max(|reference|,
    integral of |integrand|)).
    """
    rows = []
    for case in charts or default_charts():
        emb = Embedding(case.surface)
        for f in vector_fields:
            comp = lambda a, b, c, f=f: emb.offset_components(a, b, c, f.value(emb.point(a, b, c)[0]))  # noqa: E731
            got = flux_scalar_vertical(comp, case.surface, case.region, case.lower, case.upper, quad)
            ref, scale = scalar_lateral_oracle(f, case, quad)
            rows.append(LemmaRow(case.name, f.name, "lateral_scalar", got, ref, relative_error(got, ref, scale)))
        for f in tuple(tensor_fields) + tuple(stress_fields):
            value = f.tensor if isinstance(f, StressField) else f.value
            phi = lambda a, b, c, value=value: emb.offset_tensor(a, b, c, value(emb.point(a, b, c)[0]))  # noqa: E731
            cap, lateral = flux_tensor_surfaces(phi, case.surface, case.region, case.cap, case.lower, case.upper, quad)
            rcap, rlat, scap, slat = tensor_oracle(f, case, quad)
            rows.append(LemmaRow(case.name, f.name, "cap_tensor", _norm(cap), _norm(rcap), relative_error(cap, rcap, scap)))
            rows.append(
                LemmaRow(case.name, f.name, "lateral_tensor", _norm(lateral), _norm(rlat), relative_error(lateral, rlat, slat))
            )
            if isinstance(f, StressField):
                sref, sscale = stress_cap_oracle(f, case, quad)
                rows.append(
                    LemmaRow(case.name, f.name, "cap_stress", _norm(cap), _norm(sref), relative_error(cap, sref, sscale))
                )
    return rows
