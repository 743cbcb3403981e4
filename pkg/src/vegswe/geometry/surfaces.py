"""Analytic Monge surfaces used as reference charts."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .chart import SurfaceChart, build_chart
from .local import LocalGeometry, monge_geometry


@dataclass(frozen=True)
class AnalyticSurface:
    """Height function with exact first and second derivatives.

    ``gradient`` returns ``(zx, zy)`` and ``hessian`` returns ``(zxx, zxy, zyy)``.
    """

    name: str
    elevation: Callable
    gradient: Callable
    hessian: Callable

    def derivatives(self, y1, y2):
        zx, zy = self.gradient(y1, y2)
        zxx, zxy, zyy = self.hessian(y1, y2)
        return zx, zy, zxx, zxy, zyy

    def local(self, y1, y2) -> LocalGeometry:
        return monge_geometry(*self.derivatives(y1, y2))

    def sample(self, n1: int, n2: int, extent) -> SurfaceChart:
        """Discrete chart on ``extent = (a1, b1, a2, b2)`` with n1 x n2 nodes."""
        a1, b1, a2, b2 = extent
        y1 = np.linspace(a1, b1, n1)
        y2 = np.linspace(a2, b2, n2)
        Y1, Y2 = np.meshgrid(y1, y2, indexing="ij")
        return build_chart(self.elevation(Y1, Y2), (y1[1] - y1[0], y2[1] - y2[0]), (a1, a2))


def _zeros(y1, y2):
    return np.zeros(np.broadcast(np.asarray(y1), np.asarray(y2)).shape)


def plane(level: float = 0.0) -> AnalyticSurface:
    return AnalyticSurface(
        "plane",
        lambda y1, y2: _zeros(y1, y2) + level,
        lambda y1, y2: (_zeros(y1, y2), _zeros(y1, y2)),
        lambda y1, y2: (_zeros(y1, y2),) * 3,
    )


def tilted_plane(s1: float = 0.1, s2: float = 0.0) -> AnalyticSurface:
    return AnalyticSurface(
        "tilt",
        lambda y1, y2: s1 * np.asarray(y1) + s2 * np.asarray(y2),
        lambda y1, y2: (_zeros(y1, y2) + s1, _zeros(y1, y2) + s2),
        lambda y1, y2: (_zeros(y1, y2),) * 3,
    )


def paraboloid(a: float = 1.0) -> AnalyticSurface:
    """z = a (y1^2 + y2^2) / 2."""
    return AnalyticSurface(
        "paraboloid",
        lambda y1, y2: 0.5 * a * (np.asarray(y1) ** 2 + np.asarray(y2) ** 2),
        lambda y1, y2: (a * np.asarray(y1) + _zeros(y1, y2), a * np.asarray(y2) + _zeros(y1, y2)),
        lambda y1, y2: (_zeros(y1, y2) + a, _zeros(y1, y2), _zeros(y1, y2) + a),
    )


def cylinder_crest(radius: float = 2.0) -> AnalyticSurface:
    """Top of a horizontal cylinder, z = sqrt(R^2 - y1^2); valid for |y1| < R."""
    R2 = radius * radius

    def elevation(y1, y2):
        return np.sqrt(R2 - np.asarray(y1) ** 2) + _zeros(y1, y2)

    def gradient(y1, y2):
        y1 = np.asarray(y1)
        r = np.sqrt(R2 - y1**2)
        return -y1 / r + _zeros(y1, y2), _zeros(y1, y2)

    def hessian(y1, y2):
        y1 = np.asarray(y1)
        r = np.sqrt(R2 - y1**2)
        return -R2 / r**3 + _zeros(y1, y2), _zeros(y1, y2), _zeros(y1, y2)

    return AnalyticSurface("cylinder", elevation, gradient, hessian)


def gaussian_bump(amplitude: float = 0.3, width: float = 0.5, center=(0.5, 0.5)) -> AnalyticSurface:
    c1, c2 = center
    w2 = width * width

    def elevation(y1, y2):
        d1 = np.asarray(y1) - c1
        d2 = np.asarray(y2) - c2
        return amplitude * np.exp(-(d1**2 + d2**2) / w2)

    def gradient(y1, y2):
        d1 = np.asarray(y1) - c1
        d2 = np.asarray(y2) - c2
        f = elevation(y1, y2)
        return -2 * d1 / w2 * f, -2 * d2 / w2 * f

    def hessian(y1, y2):
        d1 = np.asarray(y1) - c1
        d2 = np.asarray(y2) - c2
        f = elevation(y1, y2)
        return (
            (4 * d1**2 / w2**2 - 2 / w2) * f,
            4 * d1 * d2 / w2**2 * f,
            (4 * d2**2 / w2**2 - 2 / w2) * f,
        )

    return AnalyticSurface("bump", elevation, gradient, hessian)
