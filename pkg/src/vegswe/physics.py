"""Continuous model: closures, fluxes, sources, eigenvalues and energy.

State arrays follow one layout throughout the package: ``h`` has the cell
shape ``S`` and ``v`` has shape ``S + (2,)`` holding the contravariant velocity
components ``(v^1, v^2)``. Fluxes are returned as ``(..., 3, 2)`` arrays where
``F[..., k, a]`` is component ``k`` of the flux in parameter direction ``a``.

Two model kinds share the same code paths:

* ``SIMPLIFIED``: plane model, conserved ``(theta h, theta h v)``;
* ``FULL``: curvilinear model, conserved ``(beta theta h, beta theta h v)``
  with the metric, normal and Christoffel coefficients of the terrain.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

DRY_DEPTH = 1e-8
GRAVITY = 9.81


class ModelKind(str, enum.Enum):
    SIMPLIFIED = "simplified"
    FULL = "full"


class OverDenseCanopyError(ValueError):
    """Stem density leaves no room for water (porosity <= 0)."""


@dataclass(frozen=True)
class ClosureParams:
    """Vegetation drag and bed friction parameters.

    ``C_b = inf`` switches bed friction off; ``C_d = 0`` switches stem drag off.
    """

    C_d: float = 0.0
    d: float = 0.01
    C_b: float = math.inf
    g: float = GRAVITY

    def __post_init__(self):
        if not self.C_d >= 0:
            raise ValueError(f"drag coefficient must be >= 0, got {self.C_d}")
        if not self.d > 0:
            raise ValueError(f"stem diameter must be > 0, got {self.d}")
        if not self.C_b > 0:
            raise ValueError(f"bed coefficient must be > 0, got {self.C_b}")
        if not (self.g > 0 and math.isfinite(self.g)):
            raise ValueError(f"gravity must be positive and finite, got {self.g}")

    @property
    def alpha_p(self) -> float:
        return 2.0 * self.C_d / (math.pi * self.d)

    @property
    def alpha_s(self) -> float:
        return self.g / self.C_b**2


def porosity_from_stems(m, d):
    """theta = 1 - m pi d^2 / 4 for stem density m (1/m^2) and diameter d (m)."""
    m = np.asarray(m, dtype=float)
    if np.any(m < 0) or not np.all(np.isfinite(m)):
        raise ValueError("stem density must be finite and >= 0")
    if not d > 0:
        raise ValueError(f"stem diameter must be > 0, got {d}")
    theta = 1.0 - m * math.pi * d * d / 4.0
    if np.any(theta <= 0):
        raise OverDenseCanopyError(
            f"stems of diameter {d} at density {float(np.max(m)):.6g} fill the whole area"
        )
    return theta if theta.ndim else float(theta)


@dataclass(frozen=True)
class VegetationField:
    theta: np.ndarray
    stem_density: np.ndarray | None = None

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        if not (np.all(theta > 0) and np.all(theta <= 1)):
            raise ValueError("porosity must lie in (0, 1]")
        object.__setattr__(self, "theta", theta)

    @classmethod
    def from_stems(cls, m, d) -> "VegetationField":
        m = np.asarray(m, dtype=float)
        return cls(np.asarray(porosity_from_stems(m, d)), m)


def friction_coefficient(h, theta, params: ClosureParams):
    """K(h, theta) = alpha_p h (1 - theta) + alpha_s theta."""
    return params.alpha_p * h * (1.0 - theta) + params.alpha_s * theta


@dataclass(frozen=True)
class Forcing:
    """Rain and infiltration rates (m/s)."""

    rain: float = 0.0
    infiltration: float = 0.0

    def __post_init__(self):
        if not (self.rain >= 0 and self.infiltration >= 0):
            raise ValueError("rain and infiltration rates must be >= 0")

    def net(self, theta):
        return self.rain - theta * self.infiltration


@dataclass(frozen=True)
class GeometryCoefficients:
    """Per-cell geometric coefficients entering the full model.

    ``christoffel`` is indexed ``[..., c, a, b]``; ``slope`` holds ``d_a z``.
    """

    area: np.ndarray
    metric: np.ndarray
    metric_inv: np.ndarray
    nu3: np.ndarray
    christoffel: np.ndarray
    slope: np.ndarray

    @classmethod
    def planar(cls, shape=(), slope=None) -> "GeometryCoefficients":
        """Identity coefficients of the plane model."""
        shape = (shape,) if isinstance(shape, int) else tuple(shape)
        eye = np.broadcast_to(np.eye(2), shape + (2, 2)).copy()
        s = np.zeros(shape + (2,)) if slope is None else np.asarray(slope, dtype=float)
        return cls(
            area=np.ones(shape),
            metric=eye,
            metric_inv=eye.copy(),
            nu3=np.ones(shape),
            christoffel=np.zeros(shape + (2, 2, 2)),
            slope=s,
        )

    @classmethod
    def from_local(cls, geom) -> "GeometryCoefficients":
        """From a :class:`~vegswe.geometry.local.LocalGeometry` (chart node fields)."""
        return cls(
            area=geom.area,
            metric=geom.metric,
            metric_inv=geom.metric_inv,
            nu3=geom.normal[..., 2],
            christoffel=geom.christoffel,
            slope=geom.slope,
        )

    def take(self, index) -> "GeometryCoefficients":
        return GeometryCoefficients(
            *(getattr(self, f)[index] for f in self.__dataclass_fields__)
        )


@dataclass(frozen=True)
class PrimitiveState:
    h: np.ndarray
    v: np.ndarray  # (..., 2)

    def __post_init__(self):
        object.__setattr__(self, "h", np.asarray(self.h, dtype=float))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))


def _mass_factor(theta, geom: GeometryCoefficients | None, kind: ModelKind):
    if kind == ModelKind.FULL:
        return geom.area * theta
    return np.asarray(theta, dtype=float)


def to_conserved(state: PrimitiveState, theta, geom=None, kind=ModelKind.SIMPLIFIED) -> np.ndarray:
    """Conserved vector (..., 3)."""
    mass = _mass_factor(theta, geom, kind) * state.h
    return np.concatenate([mass[..., None], mass[..., None] * state.v], axis=-1)


def from_conserved(u, theta, geom=None, kind=ModelKind.SIMPLIFIED, dry=DRY_DEPTH) -> PrimitiveState:
    u = np.asarray(u, dtype=float)
    factor = _mass_factor(theta, geom, kind)
    h = u[..., 0] / factor
    wet = h >= dry
    safe = np.where(wet, u[..., 0], 1.0)
    v = np.where(wet[..., None], u[..., 1:] / safe[..., None], 0.0)
    return PrimitiveState(h, v)


def flux_column(state: PrimitiveState, theta, geom=None, kind=ModelKind.SIMPLIFIED, g=GRAVITY, axis=0):
    """Flux in parameter direction ``axis`` only, shape (..., 3)."""
    h, v = state.h, state.v
    half_h2 = 0.5 * h * h
    va = v[..., axis]
    hv1 = h * v[..., 0]
    hv2 = h * v[..., 1]
    if kind == ModelKind.FULL:
        bt = geom.area * theta
        gn = g * geom.nu3
        minv = geom.metric_inv
        # same operation order as the plane branch: unit coefficients
        # reproduce it bit for bit
        return np.stack(
            [
                bt * (h * va),
                bt * (hv1 * va + (gn * minv[..., 0, axis]) * half_h2),
                bt * (hv2 * va + (gn * minv[..., 1, axis]) * half_h2),
            ],
            axis=-1,
        )
    theta = np.broadcast_to(np.asarray(theta, dtype=float), h.shape)
    k1, k2 = (1.0, 0.0) if axis == 0 else (0.0, 1.0)
    return np.stack(
        [
            theta * (h * va),
            theta * (hv1 * va + (g * k1) * half_h2),
            theta * (hv2 * va + (g * k2) * half_h2),
        ],
        axis=-1,
    )


def pressure_column(h, theta, geom=None, kind=ModelKind.SIMPLIFIED, g=GRAVITY, axis=0):
    """Hydrostatic part of :func:`flux_column` (the flux of a state at rest)."""
    half_h2 = 0.5 * h * h
    zero = np.zeros_like(h)
    if kind == ModelKind.FULL:
        bt = geom.area * theta
        gn = g * geom.nu3
        minv = geom.metric_inv
        return np.stack(
            [zero, bt * ((gn * minv[..., 0, axis]) * half_h2), bt * ((gn * minv[..., 1, axis]) * half_h2)],
            axis=-1,
        )
    theta = np.broadcast_to(np.asarray(theta, dtype=float), h.shape)
    k1, k2 = (1.0, 0.0) if axis == 0 else (0.0, 1.0)
    return np.stack([zero, theta * ((g * k1) * half_h2), theta * ((g * k2) * half_h2)], axis=-1)


def physical_flux(state: PrimitiveState, theta, geom=None, kind=ModelKind.SIMPLIFIED, g=GRAVITY) -> np.ndarray:
    """Flux pair as a (..., 3, 2) array."""
    kind = ModelKind(kind)
    return np.stack([flux_column(state, theta, geom, kind, g, a) for a in range(2)], axis=-1)


def speed(v, geom=None, kind=ModelKind.SIMPLIFIED):
    """|v| in the surface metric (Euclidean for the plane model)."""
    v = np.asarray(v, dtype=float)
    if kind == ModelKind.FULL:
        return np.sqrt(np.einsum("...ab,...a,...b->...", geom.metric, v, v))
    return np.sqrt(v[..., 0] ** 2 + v[..., 1] ** 2)


def source_terms(
    state: PrimitiveState,
    theta,
    grad_theta,
    geom: GeometryCoefficients,
    forcing: Forcing,
    params: ClosureParams,
    kind=ModelKind.SIMPLIFIED,
    grad_nu3=None,
    grad_pressure_coef=None,
) -> np.ndarray:
    """Pointwise source vector (..., 3).

    ``grad_theta[..., a]`` is d_a theta. The terrain slope comes from
    ``geom.slope``. The full model also needs ``grad_nu3[..., a]`` and
    ``grad_pressure_coef[..., c, a]`` = d_a(beta theta beta^ca).
    """
    h, v = state.h, state.v
    g = params.g
    theta = np.asarray(theta, dtype=float)
    grad_theta = np.asarray(grad_theta, dtype=float)
    K = friction_coefficient(h, theta, params)
    drag = (K * speed(v, geom, kind))[..., None] * v
    S = np.empty(np.shape(h) + (3,))
    if kind == ModelKind.FULL:
        beta = geom.area
        S[..., 0] = beta * forcing.net(theta)
        coef = (beta * theta)[..., None, None] * geom.metric_inv
        head = geom.slope + 0.5 * h[..., None] * grad_nu3
        pressure = np.einsum("...ca,...a->...c", coef, head) - 0.5 * (h * geom.nu3)[..., None] * np.sum(
            grad_pressure_coef, axis=-1
        )
        inertia = np.einsum("...cab,...a,...b->...c", geom.christoffel, v, v)
        S[..., 1:] = (
            -(beta * theta * h)[..., None] * inertia
            - (g * h)[..., None] * pressure
            - beta[..., None] * drag
        )
    else:
        S[..., 0] = forcing.net(theta)
        S[..., 1:] = (
            -(theta * h * g)[..., None] * geom.slope
            + (g * 0.5 * h * h)[..., None] * grad_theta
            - drag
        )
    return S


def wave_speed(h, geom=None, n=None, kind=ModelKind.SIMPLIFIED, g=GRAVITY):
    """Gravity wave celerity sqrt(g nu3 h beta^ab n_a n_b) (sqrt(g h) in the plane)."""
    h = np.asarray(h, dtype=float)
    if kind == ModelKind.FULL:
        nn = np.einsum("...ab,...a,...b->...", geom.metric_inv, n, n)
        return np.sqrt(g * geom.nu3 * h * nn)
    return np.sqrt(g * h)


def eigenvalues(state: PrimitiveState, theta, geom, n, kind=ModelKind.SIMPLIFIED, g=GRAVITY):
    """(lambda_-, lambda_0, lambda_+) in direction ``n`` (covariant components).

    Porosity drops out of the eigenvalues; it is accepted for a uniform signature.
    """
    n = np.asarray(n, dtype=float)
    vn = np.einsum("...a,...a->...", state.v, n)
    c = wave_speed(state.h, geom, n, kind, g)
    return vn - c, vn, vn + c


def energy_density(state: PrimitiveState, z, theta, geom=None, kind=ModelKind.SIMPLIFIED, g=GRAVITY):
    """Specific energy and Bernoulli head ``(E, E_t)``.

    E = |v|^2/2 + g (z + h nu3 / 2) and E_t = |v|^2/2 + g (z + h nu3); the
    pressure head in E_t is the hydrostatic ``g h nu3``.
    """
    h = state.h
    kinetic = 0.5 * speed(state.v, geom, kind) ** 2
    nu3 = geom.nu3 if kind == ModelKind.FULL else 1.0
    return kinetic + g * (z + 0.5 * h * nu3), kinetic + g * (z + h * nu3)
