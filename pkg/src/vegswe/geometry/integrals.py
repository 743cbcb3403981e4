"""Curvilinear flux integrals over columns built on a terrain surface.

A column is the region ``x = b(y1, y2) + y3 nu`` with ``(y1, y2)`` in a
rectangle ``D`` and ``lower(y) < y3 < upper(y)``. Fields are given by their
components in the offset frame ``(e_1, e_2, nu)``:

* a vector field is a callable ``f(y1, y2, y3) -> (..., 3)`` returning
  ``(f^1, f^2, f^3)``;
* a tensor field is a callable ``phi(y1, y2, y3) -> (..., 3, 3)`` returning the
  contravariant components ``Phi^IJ``.

The surface argument is anything with a ``local(y1, y2)`` method returning a
:class:`~vegswe.geometry.local.LocalGeometry` (a :class:`SurfaceChart` or an
:class:`AnalyticSurface`).

Parameter-plane derivatives of column integrals are taken by central
differences with a step much smaller than the quadrature spacing, so the
in-plane rule only has to integrate a smooth function.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chart import DegenerateOffsetError
from .local import offset_arrays


@dataclass(frozen=True)
class Quadrature:
    n1: int = 64
    n2: int = 64
    n3: int = 8
    rule: str = "gauss"  # or "midpoint"
    fd_step: float = 1e-4  # relative to the region size

    def __post_init__(self):
        if self.n3 < 4:
            raise ValueError("column quadrature needs at least 4 Gauss points")
        if self.rule not in ("gauss", "midpoint"):
            raise ValueError(f"unknown in-plane rule {self.rule!r}")


def _as_function(value):
    if callable(value):
        return value
    c = float(value)
    return lambda y1, y2: np.full(np.broadcast(np.asarray(y1), np.asarray(y2)).shape, c)


def plane_nodes(region, quad: Quadrature):
    """Tensor-product nodes and weights on ``region = (a1, b1, a2, b2)``."""
    a1, b1, a2, b2 = region
    if quad.rule == "gauss":
        x1, w1 = np.polynomial.legendre.leggauss(quad.n1)
        x2, w2 = np.polynomial.legendre.leggauss(quad.n2)
        y1 = a1 + 0.5 * (b1 - a1) * (x1 + 1)
        y2 = a2 + 0.5 * (b2 - a2) * (x2 + 1)
        w1 = 0.5 * (b1 - a1) * w1
        w2 = 0.5 * (b2 - a2) * w2
    else:
        y1 = a1 + (b1 - a1) * (np.arange(quad.n1) + 0.5) / quad.n1
        y2 = a2 + (b2 - a2) * (np.arange(quad.n2) + 0.5) / quad.n2
        w1 = np.full(quad.n1, (b1 - a1) / quad.n1)
        w2 = np.full(quad.n2, (b2 - a2) / quad.n2)
    Y1, Y2 = np.meshgrid(y1, y2, indexing="ij")
    return Y1.ravel(), Y2.ravel(), np.outer(w1, w2).ravel()


def _column(surface, y1, y2, lower, upper, n3):
    """Column sample points: geometry, offset frame and weights, shape (P, n3)."""
    u = lower(y1, y2)
    w = upper(y1, y2)
    if np.any(u >= w):
        raise ValueError("invalid column bounds: lower >= upper somewhere on the region")
    x, wts = np.polynomial.legendre.leggauss(n3)
    half = 0.5 * (w - u)
    y3 = u[:, None] + half[:, None] * (x + 1.0)
    Y1 = np.repeat(y1[:, None], n3, axis=1)
    Y2 = np.repeat(y2[:, None], n3, axis=1)
    # surface geometry once per column, broadcast along y3
    geom = surface.local(y1[:, None], y2[:, None])
    e, q, delta, vol = offset_arrays(geom, y3)
    if np.any(delta <= 0.0):
        raise DegenerateOffsetError("column reaches a focal point of the surface")
    return Y1, Y2, y3, q, vol, half[:, None] * wts


def _vertical_moments(surface, f, y1, y2, lower, upper, n3):
    """G^a = int_u^w vol f^a dy3 at the given plane points, shape (P, 2)."""
    Y1, Y2, y3, q, vol, wts = _column(surface, y1, y2, lower, upper, n3)
    fv = np.asarray(f(Y1, Y2, y3), dtype=float)
    return np.einsum("pk,pk,pka->pa", wts, vol, fv[..., :2])


def _tensor_moments(surface, phi, y1, y2, lower, upper, n3):
    """A^ca = int q^c_b vol Phi^ba dy3 and B^a = int vol Phi^3a dy3."""
    Y1, Y2, y3, q, vol, wts = _column(surface, y1, y2, lower, upper, n3)
    P = np.asarray(phi(Y1, Y2, y3), dtype=float)
    wv = wts * vol
    A = np.sum(wv[..., None, None] * (q @ P[..., :2, :2]), axis=1)
    B = np.einsum("pk,pka->pa", wv, P[..., 2, :2])
    return A, B


def _divergence(moment, y1, y2, steps):
    """Central-difference d_a M^{..a} at the plane points; ``moment`` maps points to (P, ..., 2)."""
    h1, h2 = steps
    d1 = (moment(y1 + h1, y2) - moment(y1 - h1, y2)) / (2 * h1)
    d2 = (moment(y1, y2 + h2) - moment(y1, y2 - h2)) / (2 * h2)
    return d1[..., 0] + d2[..., 1]


def _steps(region, quad):
    a1, b1, a2, b2 = region
    return quad.fd_step * (b1 - a1), quad.fd_step * (b2 - a2)


def flux_scalar_vertical(field, chart, region, lower, upper, quad: Quadrature = Quadrature()) -> float:
    """Flux of a vector field through the lateral boundary of a column.

    Evaluates ``iint_D d_a int_u^w vol f^a dy3 dy1 dy2``.
    """
    lower, upper = _as_function(lower), _as_function(upper)
    y1, y2, w = plane_nodes(region, quad)
    moment = lambda a, b: _vertical_moments(chart, field, a, b, lower, upper, quad.n3)  # noqa: E731
    div = _divergence(moment, y1, y2, _steps(region, quad))
    return float(np.dot(w, div))


def flux_tensor_surfaces(tensor, chart, region, cap, lower, upper, quad: Quadrature = Quadrature()):
    """Cartesian fluxes of a second-order tensor through a cap and a lateral wall.

    Returns ``(cap_flux, lateral_flux)``, each a Cartesian 3-vector: the flux
    through the surface ``y3 = cap(y)`` (oriented along nu) and through the
    lateral boundary of the column between ``lower`` and ``upper``.
    """
    cap, lower, upper = _as_function(cap), _as_function(lower), _as_function(upper)
    y1, y2, w = plane_nodes(region, quad)
    steps = _steps(region, quad)

    r = cap(y1, y2)
    if np.any(r < lower(y1, y2)) or np.any(r > upper(y1, y2)):
        raise ValueError("cap surface leaves the column")
    geom = chart.local(y1, y2)
    e, q, delta, vol = offset_arrays(geom, r)
    if np.any(delta <= 0.0):
        raise DegenerateOffsetError("cap reaches a focal point of the surface")
    h1, h2 = steps
    dr = np.stack(
        [
            (cap(y1 + h1, y2) - cap(y1 - h1, y2)) / (2 * h1),
            (cap(y1, y2 + h2) - cap(y1, y2 - h2)) / (2 * h2),
        ],
        axis=-1,
    )
    P = np.asarray(tensor(y1, y2, r), dtype=float)
    tang = P[:, :2, 2] - np.einsum("pa,pba->pb", dr, P[:, :2, :2])
    tang = np.einsum("pcb,pb->pc", q, tang)
    norm = P[:, 2, 2] - np.einsum("pa,pa->p", dr, P[:, 2, :2])
    cap_density = (
        np.einsum("pci,pc->pi", geom.tangents, tang) + geom.normal * norm[:, None]
    ) * vol[:, None]
    cap_flux = w @ cap_density

    def stacked(a, b):
        A, B = _tensor_moments(chart, tensor, a, b, lower, upper, quad.n3)
        return np.concatenate([A, B[:, None, :]], axis=1)

    A, B = _tensor_moments(chart, tensor, y1, y2, lower, upper, quad.n3)
    div = _divergence(stacked, y1, y2, steps)
    dA, dB = div[:, :2], div[:, 2]
    gam = geom.christoffel  # [c, a, e]
    kap_mixed = geom.curvature_mixed  # [c, a]
    kap = geom.curvature
    tangential = (
        dA
        + np.einsum("pcae,pea->pc", gam, A)
        - np.einsum("pca,pa->pc", kap_mixed, B)
    )
    normal = np.einsum("pca,pca->p", kap, A) + dB
    lateral_density = np.einsum("pci,pc->pi", geom.tangents, tangential) + geom.normal * normal[:, None]
    lateral_flux = w @ lateral_density
    return cap_flux, lateral_flux
