"""2D polygon machinery: robust predicates, boolean clipping, CDT."""

from .cdt import Triangulation2, TriangulationError, cdt
from .clip import (
    ClipError,
    DegeneracyError,
    clear_incidences,
    clip_rings,
    difference,
    intersect,
)
from .polygon import (
    Polygon2,
    PolygonError,
    clean_ring,
    point_in_ring,
    point_on_ring,
    ring_area,
    ring_centroid,
    ring_is_simple,
    triangle_ring,
)
from .predicates import incircle_sign, on_segment, orient2d_sign, orient2d_val

__all__ = [
    "ClipError",
    "DegeneracyError",
    "Polygon2",
    "PolygonError",
    "Triangulation2",
    "TriangulationError",
    "cdt",
    "clean_ring",
    "clear_incidences",
    "clip_rings",
    "difference",
    "incircle_sign",
    "intersect",
    "on_segment",
    "orient2d_sign",
    "orient2d_val",
    "point_in_ring",
    "point_on_ring",
    "ring_area",
    "ring_centroid",
    "ring_is_simple",
    "triangle_ring",
]
