"""clipscaffold: single-view clipart to extruded reference model to
visual scaffolds rendered from new viewpoints."""

from ._kernels import BACKEND
from .camera import PRESETS, Viewpoint, preset
from .config import ConstraintConfig, KMeansConfig, RefineConfig, SolveConfig
from .constraints import ConstraintSet, annotations_from_json, annotations_to_json, compile_constraints
from .extrusion import (
    ExtrusionSolution,
    Prism,
    cover_cost,
    duplicate_paths,
    fit_obb,
    init_prism,
    prism_distance,
    refine_local,
    resolve_constraints,
    solve,
    thickness_cost,
    total_cost,
)
from .mesh import TriMesh, export_obj, prism_mesh, triangulate_polygon
from .model import (
    Annotation,
    BBox,
    Clipart,
    ClosedPath,
    DepthOrder,
    MultipleObjects,
    PathKind,
    SameDepth,
    SameThickness,
    ValidationReport,
    clipart_from_dict,
    clipart_to_dict,
    geometry_paths,
    validate_clipart,
)
from .raster import MaskImage, mask_to_png, rasterize_mask
from .render import RenderConfig, ScaffoldImage, image_to_png, render, silhouette_iou
from .shape import (
    GuidingShape,
    PointSet,
    align_shape,
    enclosed_points,
    filter_by_mask,
    load_shape,
    point_in_polygon,
)
from .svg import PathSpec, flatten_path, parse_clipart, serialize_clipart, strip_fills
from .synthetic import generate_scene, run_roundtrip

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "PRESETS",
    "Viewpoint",
    "preset",
    "ConstraintConfig",
    "KMeansConfig",
    "RefineConfig",
    "SolveConfig",
    "ConstraintSet",
    "annotations_from_json",
    "annotations_to_json",
    "compile_constraints",
    "ExtrusionSolution",
    "Prism",
    "cover_cost",
    "duplicate_paths",
    "fit_obb",
    "init_prism",
    "prism_distance",
    "refine_local",
    "resolve_constraints",
    "solve",
    "thickness_cost",
    "total_cost",
    "TriMesh",
    "export_obj",
    "prism_mesh",
    "triangulate_polygon",
    "Annotation",
    "BBox",
    "Clipart",
    "ClosedPath",
    "DepthOrder",
    "MultipleObjects",
    "PathKind",
    "SameDepth",
    "SameThickness",
    "ValidationReport",
    "clipart_from_dict",
    "clipart_to_dict",
    "geometry_paths",
    "validate_clipart",
    "MaskImage",
    "mask_to_png",
    "rasterize_mask",
    "RenderConfig",
    "ScaffoldImage",
    "image_to_png",
    "render",
    "silhouette_iou",
    "GuidingShape",
    "PointSet",
    "align_shape",
    "enclosed_points",
    "filter_by_mask",
    "load_shape",
    "point_in_polygon",
    "PathSpec",
    "flatten_path",
    "parse_clipart",
    "serialize_clipart",
    "strip_fills",
    "generate_scene",
    "run_roundtrip",
    "__version__",
]
