"""Discrete terrain charts built from elevation rasters."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.interpolate import RectBivariateSpline

from .local import LocalGeometry, monge_geometry, offset_arrays


class ChartError(ValueError):
    """Raised for rasters that cannot define a chart."""


class DegenerateOffsetError(ValueError):
    """The normal offset reaches a focal point (volume factor <= 0)."""


def first_derivative(f: np.ndarray, h: float, axis: int) -> np.ndarray:
    return np.gradient(f, h, axis=axis, edge_order=2)


def second_derivative(f: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Compact central stencil inside, one-sided second-order stencils at the ends."""
    f = np.moveaxis(np.asarray(f, dtype=float), axis, 0)
    n = f.shape[0]
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / h**2
    if n >= 4:
        out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h**2
        out[-1] = (2.0 * f[-1] - 5.0 * f[-2] + 4.0 * f[-3] - f[-4]) / h**2
    else:
        # three nodes only admit the first-order one-sided stencil
        out[0] = out[1]
        out[-1] = out[1]
    return np.moveaxis(out, 0, axis)


@dataclass(frozen=True)
class SurfaceChart:
    """Terrain surface sampled on a uniform node grid.

    Arrays are indexed ``[i1, i2]`` with ``i1`` along y1 and ``i2`` along y2.
    Geometry fields are computed once at construction and never mutated.
    """

    height: np.ndarray
    spacing: tuple[float, float]
    origin: tuple[float, float] = (0.0, 0.0)
    geometry: LocalGeometry = field(init=False, repr=False)

    def __post_init__(self):
        z = np.asarray(self.height, dtype=float)
        if z.ndim != 2 or z.shape[0] < 3 or z.shape[1] < 3:
            raise ChartError(f"chart needs at least 3x3 nodes, got shape {z.shape}")
        if not np.all(np.isfinite(z)):
            bad = tuple(int(i) for i in np.argwhere(~np.isfinite(z))[0])
            raise ChartError(f"non-finite height at node {bad}")
        d1, d2 = (float(s) for s in self.spacing)
        if not (d1 > 0 and d2 > 0):
            raise ChartError(f"spacings must be positive, got {self.spacing}")
        z.setflags(write=False)
        object.__setattr__(self, "height", z)
        object.__setattr__(self, "spacing", (d1, d2))
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))

        zx = first_derivative(z, d1, 0)
        zy = first_derivative(z, d2, 1)
        zxx = second_derivative(z, d1, 0)
        zyy = second_derivative(z, d2, 1)
        # mixed derivative as a composition keeps second order up to the edges
        zxy = first_derivative(zy, d1, 0)
        object.__setattr__(self, "geometry", monge_geometry(zx, zy, zxx, zxy, zyy))

    @property
    def shape(self) -> tuple[int, int]:
        return self.height.shape

    @property
    def y1(self) -> np.ndarray:
        return self.origin[0] + self.spacing[0] * np.arange(self.shape[0])

    @property
    def y2(self) -> np.ndarray:
        return self.origin[1] + self.spacing[1] * np.arange(self.shape[1])

    # convenience views used by the solver and the CLI
    @property
    def area(self) -> np.ndarray:
        return self.geometry.area

    @property
    def nu3(self) -> np.ndarray:
        return self.geometry.nu3

    @property
    def mean_curvature(self) -> np.ndarray:
        return self.geometry.mean_curvature

    @property
    def gauss_curvature(self) -> np.ndarray:
        return self.geometry.gauss_curvature

    @property
    def christoffel(self) -> np.ndarray:
        return self.geometry.christoffel

    def node(self, index) -> LocalGeometry:
        i, j = index
        g = self.geometry
        return LocalGeometry(**{k: getattr(g, k)[i, j] for k in g.__dataclass_fields__})

    # continuous extension, used by the curvilinear integral formulas
    @cached_property
    def _spline(self) -> RectBivariateSpline:
        return RectBivariateSpline(self.y1, self.y2, self.height, kx=3, ky=3, s=0)

    def elevation(self, y1, y2) -> np.ndarray:
        return self._spline.ev(y1, y2)

    def derivatives(self, y1, y2):
        s = self._spline
        return (
            s.ev(y1, y2, dx=1),
            s.ev(y1, y2, dy=1),
            s.ev(y1, y2, dx=2),
            s.ev(y1, y2, dx=1, dy=1),
            s.ev(y1, y2, dy=2),
        )

    def local(self, y1, y2) -> LocalGeometry:
        return monge_geometry(*self.derivatives(y1, y2))


def build_chart(height_grid, spacings, origin=(0.0, 0.0)) -> SurfaceChart:
    """Build a chart from an elevation raster with node spacings (dy1, dy2)."""
    return SurfaceChart(np.array(height_grid, dtype=float), tuple(spacings), tuple(origin))


def christoffel_at(chart: SurfaceChart, node) -> np.ndarray:
    """gamma^c_ab at a node, indexed ``[c, a, b]``."""
    i, j = node
    return chart.christoffel[i, j].copy()


@dataclass(frozen=True)
class OffsetFrame:
    node: tuple[int, int]
    y3: float
    tangents: np.ndarray  # e_a, shape (2, 3)
    normal: np.ndarray
    shift: np.ndarray  # q[b, a] = delta^b_a - y3 kappa^b_a
    delta: float
    volume: float

    @property
    def metric(self) -> np.ndarray:
        """Offset metric g_IJ (3x3)."""
        basis = np.vstack([self.tangents, self.normal])
        return basis @ basis.T


def offset_frame(chart: SurfaceChart, node, y3: float) -> OffsetFrame:
    y3 = float(y3)
    if not np.isfinite(y3):
        raise ValueError("offset must be finite")
    geom = chart.node(node)
    e, q, delta, volume = offset_arrays(geom, y3)
    if delta <= 0.0:
        raise DegenerateOffsetError(
            f"volume factor {float(delta):.6g} <= 0 at node {tuple(node)}, y3={y3}: "
            "offset exceeds the focal distance"
        )
    return OffsetFrame(
        node=tuple(node),
        y3=y3,
        tangents=e,
        normal=geom.normal.copy(),
        shift=q,
        delta=float(delta),
        volume=float(volume),
    )
