"""Eigenvalue oracle: finite-difference Jacobians and the pencil's cubic.

The characteristic speeds in direction ``n`` solve
``det(dF/dw . n - lambda dH/dw) = 0`` where ``w = (h, v^1, v^2)``, ``H`` is the
conserved vector and ``F`` the physical flux. Both Jacobians are taken by
central differences of the physics functions, the pencil is reduced to
``M = (dH/dw)^-1 (dF/dw . n)`` and the three roots of ``det(M - lambda I)``
come from the trigonometric form of the cubic. Nothing here uses the
closed-form eigenvalues, so comparing the two is a real check.
"""

from __future__ import annotations

import math

import numpy as np

from ..geometry.local import monge_geometry
from ..physics import (
    DRY_DEPTH,
    GRAVITY,
    GeometryCoefficients,
    ModelKind,
    PrimitiveState,
    flux_column,
    to_conserved,
)


class IllConditionedPencilError(ValueError):
    """The state is too close to dry for the finite-difference pencil."""


def _pack(h, v):
    return np.concatenate([np.asarray(h, dtype=float)[..., None], np.asarray(v, dtype=float)], axis=-1)


def _jacobians(w, theta, geom, n, kind, g):
    """Central-difference dF.n/dw and dH/dw, each (..., 3, 3) with [row j, column i]."""
    A = np.empty(w.shape + (3,))
    B = np.empty(w.shape + (3,))

    def normal_flux(x):
        s = PrimitiveState(x[..., 0], x[..., 1:])
        return sum(flux_column(s, theta, geom, kind, g, a) * n[..., a, None] for a in range(2))

    def conserved(x):
        return to_conserved(PrimitiveState(x[..., 0], x[..., 1:]), theta, geom, kind)

    for i in range(3):
        step = 1e-6 * np.maximum(1.0, np.abs(w[..., i]))
        up = w.copy()
        dn = w.copy()
        up[..., i] += step
        dn[..., i] -= step
        width = (up[..., i] - dn[..., i])[..., None]  # the representable step
        A[..., i] = (normal_flux(up) - normal_flux(dn)) / width
        B[..., i] = (conserved(up) - conserved(dn)) / width
    return A, B


def cubic_roots(M):
    """Sorted real eigenvalues of 3x3 matrices with real spectrum, (..., 3).

    Uses the characteristic polynomial ``l^3 + a l^2 + b l + c`` and the
    trigonometric solution of its depressed form.
    """
    M = np.asarray(M, dtype=float)
    tr = np.trace(M, axis1=-2, axis2=-1)
    minors = (
        M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]
        + M[..., 0, 0] * M[..., 2, 2] - M[..., 0, 2] * M[..., 2, 0]
        + M[..., 1, 1] * M[..., 2, 2] - M[..., 1, 2] * M[..., 2, 1]
    )
    det = np.linalg.det(M)
    a, b, c = -tr, minors, -det
    p = b - a * a / 3.0
    q = 2.0 * a**3 / 27.0 - a * b / 3.0 + c
    if np.any(p >= 0):
        raise IllConditionedPencilError("pencil has (nearly) coincident roots")
    r = np.sqrt(-p / 3.0)
    arg = np.clip(-q / (2.0 * r**3), -1.0, 1.0)
    phi = np.arccos(arg) / 3.0
    k = np.arange(3)
    t = 2.0 * r[..., None] * np.cos(phi[..., None] - 2.0 * math.pi * k / 3.0)
    return np.sort(t - a[..., None] / 3.0, axis=-1)


def jacobian_eigen_oracle(state: PrimitiveState, theta, geom, n, kind=ModelKind.SIMPLIFIED, g=GRAVITY,
                          min_depth: float = 1e3 * DRY_DEPTH):
    """Sorted characteristic speeds ``(..., 3)`` from the finite-difference pencil.

    Works on single states or batches; ``n`` holds covariant components.
    Raises :class:`IllConditionedPencilError` for depths below ``min_depth``.
    """
    kind = ModelKind(kind)
    h = np.asarray(state.h, dtype=float)
    if np.any(h < min_depth):
        raise IllConditionedPencilError(f"depth {float(np.min(h)):.3g} m is too shallow for the pencil")
    if geom is None:
        geom = GeometryCoefficients.planar(h.shape)
    w = _pack(h, state.v)
    n = np.broadcast_to(np.asarray(n, dtype=float), w.shape[:-1] + (2,))
    theta = np.broadcast_to(np.asarray(theta, dtype=float), h.shape)
    A, B = _jacobians(w, theta, geom, n, kind, g)
    M = np.linalg.solve(B, A)
    return cubic_roots(M)


def random_wet_states(rng: np.random.Generator, count: int, kind=ModelKind.SIMPLIFIED, max_slope: float = 0.75):
    """Random wet states with porosity, geometry and unit normal directions.

    The full model gets random Monge slopes and curvatures; the plane model
    gets identity coefficients. Returns ``(state, theta, geom, n)``.
    """
    kind = ModelKind(kind)
    h = rng.uniform(0.01, 5.0, count)
    v = rng.uniform(-3.0, 3.0, (count, 2))
    theta = rng.uniform(0.3, 1.0, count)
    ang = rng.uniform(0.0, 2.0 * math.pi, count)
    n = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    if kind == ModelKind.FULL:
        zx, zy = rng.uniform(-max_slope, max_slope, (2, count))
        zxx, zxy, zyy = rng.uniform(-1.0, 1.0, (3, count))
        geom = GeometryCoefficients.from_local(monge_geometry(zx, zy, zxx, zxy, zyy))
    else:
        geom = GeometryCoefficients.planar(count)
    return PrimitiveState(h, v), theta, geom, n
