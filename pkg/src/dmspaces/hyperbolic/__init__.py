"""Hyperbolic plane geometry, hexagons, pants and surface samples."""

from .hexagon import (
    HexagonLayout,
    HexagonSpec,
    NonAlignableError,
    SymmetricDifference,
    a_sides,
    build_hexagon,
    common_layouts,
    intersection_polygon,
    layout_hexagon,
    remeasured_b_sides,
    symmetric_difference_area,
)
from .plane import (
    IDEAL_INF,
    ConvexRegion,
    GeodesicPolygon,
    HPoint,
    IdealPoint,
    InvalidPolygonError,
    hyp_distance,
    hyp_distance_matrix,
    polygon_area,
)
from .surface import (
    DEFAULT_DENSITY,
    DegenerationRow,
    Piece,
    QuasiIsometryBound,
    QuasiIsometryError,
    SampledSurface,
    Seam,
    build_pants,
    degenerate_pair,
    degeneration_family,
    involution,
    quasi_isometry_rho_bound,
    refinement_witness,
    sample_surface,
    scaled_surface,
    uncovered_mass,
)

__all__ = [name for name in dir() if not name.startswith("_")]
