"""Guiding shapes: load, align to the clipart frame, mask-filter, and
project vertices into per-path enclosed point sets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import EmptyShapeError, FormatError
from .model import Clipart, geometry_paths
from .raster import MaskImage

BOUNDARY_TOL = 1e-9


@dataclass(frozen=True)
class GuidingShape:
    vertices: np.ndarray  # (N,3), xy aligned with the clipart, z = depth
    triangles: np.ndarray | None = None  # (M,3) int indices, optional

    def __post_init__(self):
        verts = np.ascontiguousarray(self.vertices, dtype=np.float64)
        verts.setflags(write=False)
        object.__setattr__(self, "vertices", verts)
        if verts.ndim != 2 or verts.shape[1] != 3 or verts.shape[0] < 1:
            raise EmptyShapeError("guiding shape needs at least one 3D vertex")
        if self.triangles is not None:
            tris = np.ascontiguousarray(self.triangles, dtype=np.int64)
            tris.setflags(write=False)
            object.__setattr__(self, "triangles", tris)
            if tris.size and (tris.min() < 0 or tris.max() >= len(verts)):
                raise FormatError("triangle indices out of range")


@dataclass(frozen=True)
class PointSet:
    path_id: int
    points: np.ndarray  # (K,3)

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=np.float64).reshape(-1, 3)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]


# --- file formats ---------------------------------------------------------------


def _parse_obj(text: str) -> tuple[np.ndarray, np.ndarray | None]:
    verts: list[list[float]] = []
    faces: list[list[int]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tag, *rest = line.split()
        if tag == "v":
            if len(rest) < 3:
                raise FormatError(f"OBJ line {lineno}: vertex needs 3 coordinates")
            try:
                verts.append([float(v) for v in rest[:3]])
            except ValueError as exc:
                raise FormatError(f"OBJ line {lineno}: {exc}") from exc
        elif tag == "f":
            if len(rest) < 3:
                raise FormatError(f"OBJ line {lineno}: face needs 3 indices")
            idx = []
            for part in rest:
                token = part.split("/")[0]
                try:
                    value = int(token)
                except ValueError as exc:
                    raise FormatError(f"OBJ line {lineno}: bad index {token!r}") from exc
                idx.append(value - 1 if value > 0 else len(verts) + value)
            # fan-triangulate polygons
            for k in range(1, len(idx) - 1):
                faces.append([idx[0], idx[k], idx[k + 1]])
        elif tag in ("vn", "vt", "o", "g", "s", "usemtl", "mtllib"):
            continue
        else:
            raise FormatError(f"OBJ line {lineno}: unsupported record {tag!r}")
    if not verts:
        raise EmptyShapeError("OBJ file has no vertices")
    tris = np.asarray(faces, dtype=np.int64) if faces else None
    return np.asarray(verts, dtype=np.float64), tris


def _parse_ply(text: str) -> tuple[np.ndarray, np.ndarray | None]:
    lines = text.splitlines()
    if not lines or lines[0].strip() != "ply":
        raise FormatError("not a PLY file")
    n_vert = n_face = 0
    header_end = None
    in_vertex_props = False
    vertex_props: list[str] = []
    element = None
    for k, line in enumerate(lines[1:], 1):
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "format":
            if parts[1] != "ascii":
                raise FormatError("only ascii PLY is supported")
        elif parts[0] == "element":
            element = parts[1]
            if element == "vertex":
                n_vert = int(parts[2])
                in_vertex_props = True
            elif element == "face":
                n_face = int(parts[2])
                in_vertex_props = False
            else:
                in_vertex_props = False
        elif parts[0] == "property" and in_vertex_props:
            vertex_props.append(parts[-1])
        elif parts[0] == "end_header":
            header_end = k
            break
    if header_end is None:
        raise FormatError("PLY header never ends")
    for axis in ("x", "y", "z"):
        if axis not in vertex_props:
            raise FormatError(f"PLY vertex element lacks property {axis}")
    cols = [vertex_props.index(a) for a in ("x", "y", "z")]
    body = lines[header_end + 1 :]
    if len(body) < n_vert + n_face:
        raise FormatError("PLY body shorter than declared")
    verts = np.empty((n_vert, 3), dtype=np.float64)
    try:
        for k in range(n_vert):
            vals = body[k].split()
            verts[k] = [float(vals[c]) for c in cols]
    except (ValueError, IndexError) as exc:
        raise FormatError(f"PLY vertex {k}: {exc}") from exc
    faces: list[list[int]] = []
    for k in range(n_face):
        try:
            vals = [int(v) for v in body[n_vert + k].split()]
        except ValueError as exc:
            raise FormatError(f"PLY face {k}: {exc}") from exc
        count, idx = vals[0], vals[1:]
        if count != len(idx):
            raise FormatError(f"PLY face {k}: bad vertex count")
        for j in range(1, count - 1):
            faces.append([idx[0], idx[j], idx[j + 1]])
    if n_vert == 0:
        raise EmptyShapeError("PLY file has no vertices")
    return verts, (np.asarray(faces, dtype=np.int64) if faces else None)


def _parse_xyz(text: str) -> tuple[np.ndarray, None]:
    pts: list[list[float]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        vals = line.replace(",", " ").split()
        if len(vals) < 3:
            raise FormatError(f"XYZ line {lineno}: expected 3 coordinates")
        try:
            pts.append([float(v) for v in vals[:3]])
        except ValueError as exc:
            raise FormatError(f"XYZ line {lineno}: {exc}") from exc
    if not pts:
        raise EmptyShapeError("XYZ file has no points")
    return np.asarray(pts, dtype=np.float64), None


_PARSERS = {"OBJ": _parse_obj, "PLY": _parse_ply, "XYZ": _parse_xyz}


def align_shape(shape: GuidingShape, clipart: Clipart) -> GuidingShape:
    """Uniform scale + translation fitting the shape's xy bbox into the
    clipart's normalized bbox (centered). z shares the scale factor and
    is not re-centered, preserving depth proportions."""
    verts = shape.vertices
    lo = verts[:, :2].min(axis=0)
    hi = verts[:, :2].max(axis=0)
    # clipart bbox in the normalized frame
    polys = np.vstack([p.polygon for p in clipart.paths])
    clo = polys.min(axis=0)
    chi = polys.max(axis=0)
    span = hi - lo
    cspan = chi - clo
    ratios = [cspan[k] / span[k] for k in range(2) if span[k] > 0]
    scale = min(ratios) if ratios else 1.0
    shape_center = (lo + hi) / 2
    clip_center = (clo + chi) / 2
    out = verts.copy()
    out[:, 0] = (verts[:, 0] - shape_center[0]) * scale + clip_center[0]
    out[:, 1] = (verts[:, 1] - shape_center[1]) * scale + clip_center[1]
    out[:, 2] = verts[:, 2] * scale
    return GuidingShape(out, shape.triangles)


def load_shape(data: bytes | str, fmt: str, clipart: Clipart | None = None) -> GuidingShape:
    """Load an OBJ/PLY/XYZ guiding shape; aligned to the clipart when given."""
    fmt = fmt.upper().lstrip(".")
    if fmt not in _PARSERS:
        raise FormatError(f"unknown shape format {fmt!r}; expected OBJ, PLY, or XYZ")
    text = data.decode("utf-8", errors="replace") if isinstance(data, bytes) else data
    verts, tris = _PARSERS[fmt](text)
    shape = GuidingShape(verts, tris)
    if clipart is not None:
        shape = align_shape(shape, clipart)
    return shape


def shape_to_obj(shape: GuidingShape) -> bytes:
    lines = ["# filtered guiding shape"]
    for v in shape.vertices:
        lines.append("v {:.17g} {:.17g} {:.17g}".format(v[0], v[1], v[2]))
    if shape.triangles is not None:
        for t in shape.triangles:
            lines.append(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}")
    return ("\n".join(lines) + "\n").encode()


# --- geometry ---------------------------------------------------------------------


def point_in_polygon(point, polygon: np.ndarray) -> bool:
    """Even-odd containment; boundary points count as inside (tol 1e-9)."""
    p = np.asarray(point, dtype=np.float64).reshape(1, 2)
    if _kernels.polygon_parity(p, polygon)[0]:
        return True
    return bool(_kernels.polygon_edge_distance(p, polygon)[0] <= BOUNDARY_TOL)


def points_in_polygon(points: np.ndarray, polygon: np.ndarray) -> np.ndarray:
    pts = np.ascontiguousarray(points, dtype=np.float64)
    parity = _kernels.polygon_parity(pts, polygon)
    near = _kernels.polygon_edge_distance(pts, polygon) <= BOUNDARY_TOL
    return parity | near


def filter_by_mask(shape: GuidingShape, mask: MaskImage) -> GuidingShape:
    """Keep vertices whose xy projection lands on a foreground pixel;
    triangles with any dropped vertex are removed."""
    verts = shape.vertices
    x = verts[:, 0]
    y = verts[:, 1]
    inside = (x >= 0.0) & (x <= 1.0) & (y >= 0.0) & (y <= 1.0)
    col = np.minimum((x * mask.width).astype(np.int64), mask.width - 1)
    row = np.minimum(((1.0 - y) * mask.height).astype(np.int64), mask.height - 1)
    keep = np.zeros(len(verts), dtype=bool)
    keep[inside] = mask.bits[row[inside], col[inside]]
    if not keep.any():
        raise EmptyShapeError("no guiding-shape vertex projects onto the foreground")
    if keep.all():
        return shape
    new_index = np.full(len(verts), -1, dtype=np.int64)
    new_index[keep] = np.arange(int(keep.sum()))
    tris = None
    if shape.triangles is not None:
        kept_tris = shape.triangles[keep[shape.triangles].all(axis=1)]
        tris = new_index[kept_tris] if len(kept_tris) else np.empty((0, 3), dtype=np.int64)
    return GuidingShape(verts[keep], tris)


def enclosed_points(shape: GuidingShape, clipart: Clipart) -> list[PointSet]:
    """Project vertices to the xy-plane and gather, per geometry path, the
    subset enclosed by that path. Overlapping paths share vertices."""
    verts = shape.vertices
    xy = verts[:, :2]
    out = []
    for path in geometry_paths(clipart):
        mask = points_in_polygon(xy, path.polygon)
        out.append(PointSet(path_id=path.id, points=verts[mask]))
    return out
