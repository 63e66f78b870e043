"""meshtex: demonstration-driven surface texturing for 3D printing.

Pipeline: segment a region around the cursor, flatten it with an
as-rigid-as-possible parameterization, stamp a 2D element into the UV
domain by polygon clipping and constrained retriangulation, optionally
autocomplete the demonstrated pattern, then extrude the stamped faces
into raised or embossed geometry that stays watertight.
"""

from .mesh import (
    MeshError,
    TriMesh,
    WatertightReport,
    check_watertight,
    export_mesh,
    load_mesh,
    signed_volume,
    surface_area,
    vertex_normals,
)
from .autocomplete import (
    AutocompleteError,
    CurvePath,
    PatternSuggestion,
    PlacementEvent,
    adjust,
    complete_along_curve,
    format_demo,
    infer_pattern,
    parse_demo,
)
from .uvmap import (
    ChartError,
    FlipError,
    UVChart,
    arap_parameterize,
    build_chart,
    cut_seams,
    locate_in_chart,
    uv_to_3d,
)
from .imprint import (
    ImprintError,
    ImprintedMesh,
    SeamSplitWarning,
    imprint,
)
from .extrude import (
    ExtrudeError,
    extrude_texture,
    wall_triangulation,
)

__version__ = "0.1.0"

__all__ = [
    "AutocompleteError",
    "ChartError",
    "CurvePath",
    "ExtrudeError",
    "FlipError",
    "ImprintError",
    "ImprintedMesh",
    "MeshError",
    "PatternSuggestion",
    "PlacementEvent",
    "SeamSplitWarning",
    "TriMesh",
    "UVChart",
    "WatertightReport",
    "adjust",
    "arap_parameterize",
    "build_chart",
    "check_watertight",
    "complete_along_curve",
    "cut_seams",
    "export_mesh",
    "extrude_texture",
    "format_demo",
    "imprint",
    "infer_pattern",
    "load_mesh",
    "locate_in_chart",
    "parse_demo",
    "signed_volume",
    "surface_area",
    "uv_to_3d",
    "vertex_normals",
    "wall_triangulation",
    "__version__",
]
