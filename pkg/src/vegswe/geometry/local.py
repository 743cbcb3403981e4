"""Pointwise differential geometry of a Monge patch x = (y1, y2, z(y1, y2)).

Every quantity is derived from the height derivatives alone, so the same code
serves the discrete chart (finite-difference derivatives) and analytic
surfaces (exact derivatives).

Index layout of the arrays (leading dimensions broadcast):

    tangents[..., a, i]        i-th Cartesian component of the tangent a
    metric[..., a, b]          covariant metric beta_ab
    metric_inv[..., a, b]      contravariant metric beta^ab
    curvature[..., a, b]       second fundamental form kappa_ab
    curvature_mixed[..., a, b] kappa^a_b = beta^ac kappa_cb
    christoffel[..., c, a, b]  gamma^c_ab
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LocalGeometry:
    tangents: np.ndarray
    normal: np.ndarray
    metric: np.ndarray
    metric_inv: np.ndarray
    area: np.ndarray
    curvature: np.ndarray
    curvature_mixed: np.ndarray
    mean_curvature: np.ndarray
    gauss_curvature: np.ndarray
    christoffel: np.ndarray
    slope: np.ndarray  # (..., 2): partial_a z

    @property
    def nu3(self) -> np.ndarray:
        return self.normal[..., 2]


def inverse_2x2(m: np.ndarray) -> np.ndarray:
    det = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    inv = np.empty_like(m)
    inv[..., 0, 0] = m[..., 1, 1] / det
    inv[..., 1, 1] = m[..., 0, 0] / det
    inv[..., 0, 1] = -m[..., 0, 1] / det
    inv[..., 1, 0] = -m[..., 1, 0] / det
    return inv


def christoffel_from_metric(metric_inv: np.ndarray, dmetric: np.ndarray) -> np.ndarray:
    """gamma^c_ab = 1/2 beta^cd (d_a beta_db + d_b beta_da - d_d beta_ab).

    ``dmetric[..., c, a, b]`` holds the derivative d_c beta_ab.
    """
    # lowered[..., d, a, b] = d_a beta_db + d_b beta_da - d_d beta_ab
    lowered = (
        np.einsum("...adb->...dab", dmetric)
        + np.einsum("...bda->...dab", dmetric)
        - dmetric
    )
    flat = lowered.reshape(lowered.shape[:-2] + (4,))
    return 0.5 * (metric_inv @ flat).reshape(lowered.shape)


def monge_geometry(zx, zy, zxx, zxy, zyy) -> LocalGeometry:
    """Full local geometry from first and second height derivatives.

    The normal is oriented upwards (nu3 > 0) and kappa_ab = d_ab b . nu, so a
    surface bending upwards (a valley) has positive curvature.
    """
    zx, zy, zxx, zxy, zyy = np.broadcast_arrays(
        *(np.asarray(a, dtype=float) for a in (zx, zy, zxx, zxy, zyy))
    )
    shape = zx.shape
    slope = np.stack([zx, zy], axis=-1)

    tangents = np.zeros(shape + (2, 3))
    tangents[..., 0, 0] = 1.0
    tangents[..., 1, 1] = 1.0
    tangents[..., 0, 2] = zx
    tangents[..., 1, 2] = zy

    metric = tangents @ np.swapaxes(tangents, -1, -2)
    metric_inv = inverse_2x2(metric)
    area = np.sqrt(metric[..., 0, 0] * metric[..., 1, 1] - metric[..., 0, 1] * metric[..., 1, 0])

    normal = np.cross(tangents[..., 0, :], tangents[..., 1, :])
    normal = normal / np.linalg.norm(normal, axis=-1, keepdims=True)

    hess = np.empty(shape + (2, 2))
    hess[..., 0, 0] = zxx
    hess[..., 0, 1] = zxy
    hess[..., 1, 0] = zxy
    hess[..., 1, 1] = zyy
    # d_ab b = (0, 0, z_ab), so kappa_ab = z_ab nu3
    curvature = hess * normal[..., 2, None, None]
    curvature_mixed = metric_inv @ curvature
    mean = 0.5 * (curvature_mixed[..., 0, 0] + curvature_mixed[..., 1, 1])
    gauss = (
        curvature_mixed[..., 0, 0] * curvature_mixed[..., 1, 1]
        - curvature_mixed[..., 0, 1] * curvature_mixed[..., 1, 0]
    )

    # d_c beta_ab = z_ac z_b + z_a z_bc
    dmetric = np.einsum("...ac,...b->...cab", hess, slope) + np.einsum(
        "...a,...bc->...cab", slope, hess
    )
    christoffel = christoffel_from_metric(metric_inv, dmetric)

    return LocalGeometry(
        tangents=tangents,
        normal=normal,
        metric=metric,
        metric_inv=metric_inv,
        area=area,
        curvature=curvature,
        curvature_mixed=curvature_mixed,
        mean_curvature=mean,
        gauss_curvature=gauss,
        christoffel=christoffel,
        slope=slope,
    )


def offset_arrays(geom: LocalGeometry, y3):
    """Normal-offset frame at height y3 above the surface.

    Returns ``(e, q, delta, volume)`` where ``e[..., a, i]`` are the offset
    tangents, ``q[..., b, a] = delta^b_a - y3 kappa^b_a``, ``delta`` the
    volume factor and ``volume = area * delta``.
    """
    y3 = np.asarray(y3, dtype=float)
    eye = np.eye(2)
    q = eye - y3[..., None, None] * geom.curvature_mixed
    e = np.swapaxes(q, -1, -2) @ geom.tangents
    delta = 1.0 - 2.0 * y3 * geom.mean_curvature + y3 * y3 * geom.gauss_curvature
    return e, q, delta, geom.area * delta
