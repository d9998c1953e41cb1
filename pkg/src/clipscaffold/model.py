"""Domain model: cliparts, closed paths, and structural annotations.

A clipart is an ordered set of closed, color-filled polygons with layering.
After ingest everything lives in a normalized frame: the tight bbox of all
paths is scaled uniformly into the unit square and centered, so costs and
tolerances are scale-free. All types are immutable after construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .camera import Viewpoint
from .errors import ValidationError


class PathKind(Enum):
    GEOMETRY = "geometry"
    SHADING = "shading"


RGBA = tuple[float, float, float, float]

BLACK: RGBA = (0.0, 0.0, 0.0, 1.0)


def _freeze(arr) -> np.ndarray:
    out = np.ascontiguousarray(arr, dtype=np.float64)
    out.setflags(write=False)
    return out


def signed_area(polygon: np.ndarray) -> float:
    """Shoelace area; positive for counter-clockwise winding."""
    x = polygon[:, 0]
    y = polygon[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _orient(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def _on_segment(ax, ay, bx, by, px, py):
    return min(ax, bx) <= px <= max(ax, bx) and min(ay, by) <= py <= max(ay, by)


def segments_intersect(p1, p2, p3, p4) -> bool:
    """True if closed segments p1p2 and p3p4 share any point."""
    d1 = _orient(p3[0], p3[1], p4[0], p4[1], p1[0], p1[1])
    d2 = _orient(p3[0], p3[1], p4[0], p4[1], p2[0], p2[1])
    d3 = _orient(p1[0], p1[1], p2[0], p2[1], p3[0], p3[1])
    d4 = _orient(p1[0], p1[1], p2[0], p2[1], p4[0], p4[1])
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and d1 != 0 and d2 != 0 and d3 != 0 and d4 != 0:
        return True
    if d1 == 0 and _on_segment(p3[0], p3[1], p4[0], p4[1], p1[0], p1[1]):
        return True
    if d2 == 0 and _on_segment(p3[0], p3[1], p4[0], p4[1], p2[0], p2[1]):
        return True
    if d3 == 0 and _on_segment(p1[0], p1[1], p2[0], p2[1], p3[0], p3[1]):
        return True
    if d4 == 0 and _on_segment(p1[0], p1[1], p2[0], p2[1], p4[0], p4[1]):
        return True
    return False


def polygon_is_simple(polygon: np.ndarray) -> bool:
    """No contact between non-adjacent edges (adjacent edges share exactly
    their common vertex)."""
    n = polygon.shape[0]
    if n < 3:
        return False
    closed = np.vstack([polygon, polygon[:1]])
    for i in range(n):
        for j in range(i + 1, n):
            adjacent = j == i + 1 or (i == 0 and j == n - 1)
            if adjacent:
                continue
            if segments_intersect(closed[i], closed[i + 1], closed[j], closed[j + 1]):
                return False
    return True


@dataclass(frozen=True)
class ClosedPath:
    """One closed outline of the clipart; the unit of extrusion."""

    id: int
    polygon: np.ndarray  # (V,2), implicitly closed, first vertex not repeated
    fill: RGBA = BLACK
    layer: int = 0
    kind: PathKind = PathKind.GEOMETRY
    source: dict | None = None  # original curve description for round-trips

    def __post_init__(self):
        object.__setattr__(self, "polygon", _freeze(self.polygon))
        if self.polygon.ndim != 2 or self.polygon.shape[1] != 2:
            raise ValidationError(f"path {self.id}: polygon must be (V,2)")


@dataclass(frozen=True)
class NormTransform:
    """Maps original document coordinates into the normalized frame:
    u = (x - cx) * scale + 0.5, v = (sign_y * (y - cy)) * scale + 0.5."""

    scale: float = 1.0
    cx: float = 0.5
    cy: float = 0.5
    flip_y: bool = False

    def apply(self, xy: np.ndarray) -> np.ndarray:
        sign = -1.0 if self.flip_y else 1.0
        out = np.empty_like(xy, dtype=np.float64)
        out[:, 0] = (xy[:, 0] - self.cx) * self.scale + 0.5
        out[:, 1] = sign * (xy[:, 1] - self.cy) * self.scale + 0.5
        return out

    def invert(self, uv: np.ndarray) -> np.ndarray:
        sign = -1.0 if self.flip_y else 1.0
        out = np.empty_like(uv, dtype=np.float64)
        out[:, 0] = (uv[:, 0] - 0.5) / self.scale + self.cx
        out[:, 1] = sign * (uv[:, 1] - 0.5) / self.scale + self.cy
        return out


@dataclass(frozen=True)
class BBox:
    x: float
    y: float
    width: float
    height: float


@dataclass(frozen=True)
class Clipart:
    paths: tuple[ClosedPath, ...]
    input_view: Viewpoint = field(default_factory=Viewpoint)
    bbox: BBox = BBox(0.0, 0.0, 1.0, 1.0)  # extent prior to normalization
    transform: NormTransform = NormTransform()

    def __post_init__(self):
        object.__setattr__(self, "paths", tuple(self.paths))
        for k, path in enumerate(self.paths):
            if path.id != k:
                raise ValidationError("path ids must equal document order indices")
        for path in self.paths:
            poly = path.polygon
            if poly.size and (poly.min() < -1e-9 or poly.max() > 1.0 + 1e-9):
                raise ValidationError(
                    f"path {path.id}: coordinates outside the normalized unit square"
                )

    def path(self, path_id: int) -> ClosedPath:
        return self.paths[path_id]

    def layer_order(self) -> list[int]:
        """Path ids bottom-most first; layer ties broken by document order."""
        return [p.id for p in sorted(self.paths, key=lambda p: (p.layer, p.id))]


def normalized_frame(polygons: list[np.ndarray]) -> NormTransform:
    """Transform scaling the tight bbox of all polygons into [0,1]^2, centered."""
    allpts = np.vstack([p for p in polygons if len(p)])
    lo = allpts.min(axis=0)
    hi = allpts.max(axis=0)
    span = float(max(hi[0] - lo[0], hi[1] - lo[1]))
    scale = 1.0 / span if span > 0 else 1.0
    return NormTransform(scale=scale, cx=float((lo[0] + hi[0]) / 2), cy=float((lo[1] + hi[1]) / 2))


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[tuple[int, str], ...]  # (path id, message)

    @property
    def ok(self) -> bool:
        return not self.violations

    def messages(self) -> list[str]:
        return [f"path {pid}: {msg}" for pid, msg in self.violations]


def validate_clipart(clipart: Clipart) -> ValidationReport:
    """Collect per-path violations; the clipart is valid iff none."""
    found: list[tuple[int, str]] = []
    for path in clipart.paths:
        poly = path.polygon
        if poly.shape[0] < 3 or len(np.unique(poly, axis=0)) < 3:
            found.append((path.id, "degenerate polygon"))
            continue
        if abs(signed_area(poly)) < 1e-15:
            found.append((path.id, "zero area"))
        if not polygon_is_simple(poly):
            found.append((path.id, "self-intersection"))
    return ValidationReport(tuple(found))


def require_valid(clipart: Clipart) -> None:
    report = validate_clipart(clipart)
    if not report.ok:
        raise ValidationError("; ".join(report.messages()))


def geometry_paths(clipart: Clipart) -> list[ClosedPath]:
    """Paths that describe shape rather than shading, in document order."""
    return [p for p in clipart.paths if p.kind is PathKind.GEOMETRY]


# --- structural annotations -------------------------------------------------


@dataclass(frozen=True)
class MultipleObjects:
    """The 2D path stands for `count` occluded copies in 3D."""

    path: int
    count: int

    def __post_init__(self):
        if self.count < 2:
            raise ValidationError("multiple_objects count must be >= 2")


@dataclass(frozen=True)
class SameThickness:
    a: int
    b: int

    def __post_init__(self):
        if self.a == self.b:
            raise ValidationError("same_thickness requires two distinct paths")


@dataclass(frozen=True)
class SameDepth:
    a: int
    b: int

    def __post_init__(self):
        if self.a == self.b:
            raise ValidationError("same_depth requires two distinct paths")


@dataclass(frozen=True)
class DepthOrder:
    front: int
    behind: int

    def __post_init__(self):
        if self.front == self.behind:
            raise ValidationError("depth_order requires two distinct paths")


Annotation = MultipleObjects | SameThickness | SameDepth | DepthOrder


# --- canonical JSON interchange ----------------------------------------------


def clipart_to_dict(clipart: Clipart) -> dict:
    return {
        "version": 1,
        "bbox": {
            "x": clipart.bbox.x,
            "y": clipart.bbox.y,
            "width": clipart.bbox.width,
            "height": clipart.bbox.height,
        },
        "transform": {
            "scale": clipart.transform.scale,
            "cx": clipart.transform.cx,
            "cy": clipart.transform.cy,
            "flip_y": clipart.transform.flip_y,
        },
        "input_view": {
            "azimuth": clipart.input_view.azimuth,
            "elevation": clipart.input_view.elevation,
        },
        "paths": [
            {
                "id": p.id,
                "layer": p.layer,
                "kind": p.kind.value,
                "fill": list(p.fill),
                "polygon": p.polygon.tolist(),
                "source": p.source,
            }
            for p in clipart.paths
        ],
    }


def clipart_from_dict(data: dict) -> Clipart:
    paths = tuple(
        ClosedPath(
            id=entry["id"],
            polygon=np.asarray(entry["polygon"], dtype=np.float64),
            fill=tuple(entry["fill"]),
            layer=entry["layer"],
            kind=PathKind(entry["kind"]),
            source=entry.get("source"),
        )
        for entry in data["paths"]
    )
    bbox = BBox(**data["bbox"])
    tf = NormTransform(**data["transform"])
    view = Viewpoint(
        azimuth=data["input_view"]["azimuth"], elevation=data["input_view"]["elevation"]
    )
    return Clipart(paths=paths, input_view=view, bbox=bbox, transform=tf)
