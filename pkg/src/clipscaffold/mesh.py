"""Prism meshing: ear-clipping cap triangulation, watertight side walls,
and OBJ export of whole solutions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TriangulationError
from .extrusion import ExtrusionSolution, Prism
from .model import signed_area


@dataclass(frozen=True)
class TriMesh:
    vertices: np.ndarray  # (N,3)
    faces: np.ndarray  # (M,3) int, outward winding

    def __post_init__(self):
        verts = np.ascontiguousarray(self.vertices, dtype=np.float64)
        faces = np.ascontiguousarray(self.faces, dtype=np.int64)
        verts.setflags(write=False)
        faces.setflags(write=False)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "faces", faces)

    def signed_volume(self) -> float:
        a = self.vertices[self.faces[:, 0]]
        b = self.vertices[self.faces[:, 1]]
        c = self.vertices[self.faces[:, 2]]
        return float(np.sum(np.einsum("ij,ij->i", a, np.cross(b, c))) / 6.0)


def _point_in_triangle(p, a, b, c) -> bool:
    d1 = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
    d2 = (c[0] - b[0]) * (p[1] - b[1]) - (c[1] - b[1]) * (p[0] - b[0])
    d3 = (a[0] - c[0]) * (p[1] - c[1]) - (a[1] - c[1]) * (p[0] - c[0])
    has_neg = d1 < 0 or d2 < 0 or d3 < 0
    has_pos = d1 > 0 or d2 > 0 or d3 > 0
    return not (has_neg and has_pos)


def triangulate_polygon(polygon: np.ndarray) -> list[tuple[int, int, int]]:
    """Ear-clip a simple polygon into index triples wound counter-clockwise."""
    n = polygon.shape[0]
    if n < 3:
        raise TriangulationError("polygon has fewer than 3 vertices")
    ring = list(range(n))
    if signed_area(polygon) < 0:
        ring.reverse()
    span = float(np.abs(polygon).max()) + 1.0
    eps = 1e-12 * span * span
    tris: list[tuple[int, int, int]] = []
    guard = 0
    while len(ring) > 3:
        guard += 1
        if guard > 2 * n * n + 16:
            raise TriangulationError("ear clipping failed to converge")
        clipped = False
        for pos in range(len(ring)):
            ia = ring[pos - 1]
            ib = ring[pos]
            ic = ring[(pos + 1) % len(ring)]
            a, b, c = polygon[ia], polygon[ib], polygon[ic]
            cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
            if cross <= eps:
                continue
            blocked = False
            for other in ring:
                if other in (ia, ib, ic):
                    continue
                if _point_in_triangle(polygon[other], a, b, c):
                    blocked = True
                    break
            if blocked:
                continue
            tris.append((ia, ib, ic))
            ring.pop(pos)
            clipped = True
            break
        if not clipped:
            raise TriangulationError("no ear found; polygon may be non-simple")
    tris.append((ring[0], ring[1], ring[2]))
    return tris


def prism_mesh(prism: Prism) -> TriMesh:
    """Watertight triangle mesh of the prism: two triangulated caps plus
    side quads, all wound outward."""
    poly = prism.polygon
    n = poly.shape[0]
    z_lo = prism.z - prism.d / 2.0
    z_hi = prism.z + prism.d / 2.0
    verts = np.empty((2 * n, 3), dtype=np.float64)
    verts[:n, :2] = poly
    verts[:n, 2] = z_lo
    verts[n:, :2] = poly
    verts[n:, 2] = z_hi

    cap = triangulate_polygon(poly)  # CCW in xy
    faces: list[tuple[int, int, int]] = []
    for a, b, c in cap:
        faces.append((a, c, b))  # bottom cap faces -z
        faces.append((n + a, n + b, n + c))  # top cap faces +z

    ring = list(range(n))
    if signed_area(poly) < 0:
        ring.reverse()
    for k in range(n):
        i = ring[k]
        j = ring[(k + 1) % n]
        faces.append((i, j, n + j))
        faces.append((i, n + j, n + i))
    return TriMesh(verts, np.asarray(faces, dtype=np.int64))


def export_obj(solution: ExtrusionSolution) -> bytes:
    """One OBJ with an object group per prism, re-importable by the shape loader."""
    lines: list[str] = []
    offset = 0
    for prism, (pid, dup) in zip(solution.prisms, solution.origin):
        mesh = prism_mesh(prism)
        lines.append(f"o prism_{pid}_{dup}")
        for v in mesh.vertices:
            lines.append("v {:.17g} {:.17g} {:.17g}".format(v[0], v[1], v[2]))
        for f in mesh.faces:
            lines.append(f"f {f[0] + 1 + offset} {f[1] + 1 + offset} {f[2] + 1 + offset}")
        offset += len(mesh.vertices)
    return ("\n".join(lines) + "\n").encode()
