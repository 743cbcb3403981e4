"""Surface differential geometry on terrain charts."""

from .chart import (
    ChartError,
    DegenerateOffsetError,
    OffsetFrame,
    SurfaceChart,
    build_chart,
    christoffel_at,
    offset_frame,
)
from .integrals import Quadrature, flux_scalar_vertical, flux_tensor_surfaces
from .local import LocalGeometry, monge_geometry, offset_arrays
from .surfaces import (
    AnalyticSurface,
    cylinder_crest,
    gaussian_bump,
    paraboloid,
    plane,
    tilted_plane,
)

__all__ = [
    "AnalyticSurface",
    "ChartError",
    "DegenerateOffsetError",
    "LocalGeometry",
    "OffsetFrame",
    "Quadrature",
    "SurfaceChart",
    "build_chart",
    "christoffel_at",
    "cylinder_crest",
    "flux_scalar_vertical",
    "flux_tensor_surfaces",
    "gaussian_bump",
    "monge_geometry",
    "offset_arrays",
    "offset_frame",
    "paraboloid",
    "plane",
    "tilted_plane",
]
