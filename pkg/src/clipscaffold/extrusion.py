"""Extruded-volume fitting: the numerical core.

Each closed path is swept along z into a prism parameterized by thickness d
and centroid depth z. Parameters minimize a coverage cost (summed distance
of the path's enclosed guiding points to the prism, zero inside) plus a
small thickness regularizer, subject to the user's structural annotations,
resolved greedily one family at a time: same depth, then depth order, then
same thickness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .config import SolveConfig
from .constraints import ConstraintSet, compile_constraints, toposort
from .errors import (
    ClusterError,
    ConflictError,
    DegeneratePointsError,
    EmptyDocumentError,
    InfeasibleError,
)
from .model import Annotation, Clipart, MultipleObjects, RGBA, geometry_paths
from .shape import GuidingShape, PointSet, enclosed_points

_RESOLVE_EPS = 1e-12


@dataclass(frozen=True)
class Prism:
    """Extruded volume of one (possibly duplicated) closed path: thickness d,
    solid over z in [z - d/2, z + d/2]."""

    path_id: int
    polygon: np.ndarray
    d: float
    z: float

    def __post_init__(self):
        poly = np.ascontiguousarray(self.polygon, dtype=np.float64)
        poly.setflags(write=False)
        object.__setattr__(self, "polygon", poly)
        if not self.d >= 0:
            raise ValueError("prism thickness must be non-negative")


@dataclass(frozen=True)
class OBB:
    center: np.ndarray  # (3,)
    axes: np.ndarray  # (3,3), rows are orthonormal axes
    extents: np.ndarray  # (3,) full side lengths


@dataclass(frozen=True)
class ExtrusionSolution:
    prisms: tuple[Prism, ...]
    origin: tuple[tuple[int, int], ...]  # (source path id, duplicate index)
    omega: float
    total_cost: float
    cover_cost: float
    thickness_cost: float
    prism_covers: tuple[float, ...]


# --- costs ------------------------------------------------------------------


def prism_distance(x, v: Prism) -> float:
    """Distance from a 3D point to the solid prism; exactly 0 inside."""
    pts = np.asarray(x, dtype=np.float64).reshape(1, 3)
    return float(_kernels.prism_distances(pts, v.polygon, v.z, v.d)[0])


def cover_cost(points: PointSet, v: Prism) -> float:
    """Sum of point-to-prism distances over the enclosed set; 0 when empty."""
    if len(points) == 0:
        return 0.0
    return float(np.sum(_kernels.prism_distances(points.points, v.polygon, v.z, v.d)))


def thickness_cost(solution: ExtrusionSolution) -> float:
    d = np.array([p.d for p in solution.prisms], dtype=np.float64)
    return float(np.sum(d * d))


def total_cost(solution: ExtrusionSolution, pointsets: list[PointSet]) -> float:
    cover = float(np.sum([cover_cost(ps, v) for ps, v in zip(pointsets, solution.prisms)]))
    return cover + solution.omega * thickness_cost(solution)


def _with_costs(prisms, origin, omega, pointsets) -> ExtrusionSolution:
    solution_prisms = tuple(prisms)
    covers = tuple(cover_cost(ps, v) for ps, v in zip(pointsets, solution_prisms))
    cover = float(np.sum(covers)) if covers else 0.0
    d = np.array([p.d for p in solution_prisms], dtype=np.float64)
    thick = float(np.sum(d * d)) if len(d) else 0.0
    return ExtrusionSolution(
        prisms=solution_prisms,
        origin=tuple(origin),
        omega=omega,
        total_cost=cover + omega * thick,
        cover_cost=cover,
        thickness_cost=thick,
        prism_covers=covers,
    )


# --- initialization -----------------------------------------------------------


def fit_obb(points: PointSet) -> OBB:
    """PCA-axis oriented bounding box. Axes are covariance eigenvectors with
    a deterministic sign (largest-magnitude component positive); extents are
    the full ranges along each axis.

    A (near-)isotropic spectrum makes the eigenbasis arbitrary, so the
    axis-aligned box is also evaluated and the smaller-volume box wins
    (axis-aligned preferred on ties). For isotropic covariance every
    orthonormal basis is an eigenbasis, so that fallback stays a PCA box.
    """
    pts = points.points
    if pts.shape[0] == 0:
        raise DegeneratePointsError("cannot fit an OBB to an empty point set")
    mean = pts.mean(axis=0)
    centered = pts - mean
    cov = centered.T @ centered / pts.shape[0]
    _, vecs = np.linalg.eigh(cov)
    pca_axes = vecs.T.copy()
    for k in range(3):
        j = int(np.argmax(np.abs(pca_axes[k])))
        if pca_axes[k, j] < 0:
            pca_axes[k] = -pca_axes[k]

    best = None
    for axes in (np.eye(3), pca_axes):
        proj = centered @ axes.T
        lo = proj.min(axis=0)
        hi = proj.max(axis=0)
        extents = hi - lo
        volume = float(np.prod(np.maximum(extents, 1e-12)))
        if best is None or volume < best[0]:
            center = mean + axes.T @ ((lo + hi) / 2.0)
            best = (volume, OBB(center=center, axes=axes, extents=extents))
    return best[1]


def init_prism(
    polygon: np.ndarray, points: PointSet, omega: float, config: SolveConfig = SolveConfig()
) -> Prism:
    """Seed (d, z): z is the centroid depth of the enclosed points; d is the
    OBB side length minimizing coverage plus the thickness term. An empty
    point set falls back to the configured defaults."""
    if len(points) == 0:
        return Prism(points.path_id, polygon, d=config.fallback_thickness, z=0.0)
    z0 = float(points.points[:, 2].mean())
    obb = fit_obb(points)
    candidates = sorted(max(config.d_min, float(e)) for e in obb.extents)
    best_d = candidates[0]
    best_cost = None
    for cand in candidates:
        cost = cover_cost(points, Prism(points.path_id, polygon, d=cand, z=z0))
        cost += omega * cand * cand
        if best_cost is None or cost < best_cost:
            best_cost = cost
            best_d = cand
    return Prism(points.path_id, polygon, d=best_d, z=z0)


def kmeans_1d(values: np.ndarray, k: int, iters: int = 50, quantile_offset: float = 0.5):
    """Deterministic 1-D k-means with quantile initialization. Returns labels
    relabeled so cluster centers are ascending."""
    values = np.asarray(values, dtype=np.float64)
    centers = np.quantile(np.sort(values), [(j + quantile_offset) / k for j in range(k)])
    labels = np.full(len(values), -1, dtype=np.int64)
    for _step in range(iters):
        dist = np.abs(values[:, None] - centers[None, :])
        new_labels = np.argmin(dist, axis=1)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(k):
            member = values[labels == j]
            if len(member):
                centers[j] = member.mean()
    order = np.argsort(centers, kind="stable")
    rank = np.empty(k, dtype=np.int64)
    rank[order] = np.arange(k)
    return rank[labels], centers[order]


def duplicate_paths(
    clipart: Clipart,
    annotations: list[Annotation],
    pointsets: list[PointSet],
    config: SolveConfig = SolveConfig(),
):
    """Expand multiple-objects paths into one volume slot per duplicate,
    splitting the path's enclosed points along z with 1-D k-means.

    Returns (volumes, volume_pointsets) where volumes is a list of
    (path id, duplicate index) aligned with the compiled constraint set.
    """
    counts: dict[int, int] = {}
    for ann in annotations:
        if isinstance(ann, MultipleObjects):
            if ann.path in counts:
                raise ConflictError(
                    f"path {ann.path} has more than one multiple-objects annotation"
                )
            counts[ann.path] = ann.count
    by_path = {ps.path_id: ps for ps in pointsets}
    volumes: list[tuple[int, int]] = []
    vol_pointsets: list[PointSet] = []
    for path in geometry_paths(clipart):
        ps = by_path.get(path.id, PointSet(path.id, np.empty((0, 3))))
        n = counts.get(path.id, 1)
        if n == 1:
            volumes.append((path.id, 0))
            vol_pointsets.append(ps)
            continue
        if len(ps) < n:
            raise ClusterError(
                f"path {path.id}: {len(ps)} enclosed points cannot seed {n} duplicates"
            )
        labels, _ = kmeans_1d(
            ps.points[:, 2], n, iters=config.kmeans.iters, quantile_offset=config.kmeans.quantile_offset
        )
        for j in range(n):
            volumes.append((path.id, j))
            vol_pointsets.append(PointSet(path.id, ps.points[labels == j]))
    return volumes, vol_pointsets


# --- greedy constraint resolution ----------------------------------------------


def _depth_nodes(n_volumes: int, cs: ConstraintSet):
    """Same-depth classes move as one node; returns (nodes, node_of, edges)."""
    nodes: list[list[int]] = [sorted(cls) for cls in cs.depth_classes]
    node_of: dict[int, int] = {}
    for k, members in enumerate(nodes):
        for v in members:
            node_of[v] = k
    for v in range(n_volumes):
        if v not in node_of:
            node_of[v] = len(nodes)
            nodes.append([v])
    edges: list[tuple[int, int]] = []
    seen = set()
    for f, b in cs.order_edges:
        edge = (node_of[f], node_of[b])
        if edge[0] == edge[1]:
            raise InfeasibleError("order edge inside a same-depth class")
        if edge not in seen:
            seen.add(edge)
            edges.append(edge)
    return nodes, node_of, edges


def resolve_constraints(
    solution: ExtrusionSolution, cs: ConstraintSet, pointsets: list[PointSet]
) -> ExtrusionSolution:
    """Enforce the annotation constraints greedily: same depth, then depth
    order, then same thickness; each step picks the candidate parameter
    minimizing the affected volumes' summed coverage cost."""
    prisms = list(solution.prisms)
    omega = solution.omega
    delta = cs.order_margin

    for cls in cs.depth_classes:
        members = sorted(cls)
        best_z, best_cost = None, None
        for cand in [prisms[m].z for m in members]:
            cost = sum(cover_cost(pointsets[m], replace(prisms[m], z=cand)) for m in members)
            if best_cost is None or cost < best_cost:
                best_cost, best_z = cost, cand
        for m in members:
            prisms[m] = replace(prisms[m], z=best_z)

    nodes, _, edges = _depth_nodes(len(prisms), cs)
    node_z = [prisms[members[0]].z for members in nodes]

    def node_cover(k: int, z: float) -> float:
        return sum(cover_cost(pointsets[m], replace(prisms[m], z=z)) for m in nodes[k])

    max_passes = max(8, 2 * len(edges) + 4)
    settled = False
    for _ in range(max_passes):
        if all(node_z[f] - node_z[b] >= delta - _RESOLVE_EPS for f, b in edges):
            settled = True
            break
        for f, b in edges:
            if node_z[f] - node_z[b] >= delta - _RESOLVE_EPS:
                continue
            raised_front = node_z[b] + delta
            lowered_behind = node_z[f] - delta
            cost_raise = node_cover(f, raised_front) + node_cover(b, node_z[b])
            cost_lower = node_cover(f, node_z[f]) + node_cover(b, lowered_behind)
            if cost_raise <= cost_lower:
                node_z[f] = raised_front
            else:
                node_z[b] = lowered_behind
    if not settled and not all(node_z[f] - node_z[b] >= delta - _RESOLVE_EPS for f, b in edges):
        # greedy ping-pong: fall back to a single topological lowering sweep
        order = toposort(len(nodes), edges)
        incoming: dict[int, list[int]] = {}
        for f, b in edges:
            incoming.setdefault(b, []).append(f)
        for nd in order:
            if nd in incoming:
                bound = min(node_z[src] for src in incoming[nd]) - delta
                if node_z[nd] > bound:
                    node_z[nd] = bound
    for k, members in enumerate(nodes):
        for m in members:
            prisms[m] = replace(prisms[m], z=node_z[k])

    for cls in cs.thickness_classes:
        members = sorted(cls)
        best_d, best_cost = None, None
        for cand in [prisms[m].d for m in members]:
            cost = sum(cover_cost(pointsets[m], replace(prisms[m], d=cand)) for m in members)
            cost += omega * cand * cand * len(members)
            if best_cost is None or cost < best_cost:
                best_cost, best_d = cost, cand
        for m in members:
            prisms[m] = replace(prisms[m], d=best_d)

    out = _with_costs(prisms, solution.origin, omega, pointsets)
    _verify_constraints(out, cs)
    return out


def _verify_constraints(solution: ExtrusionSolution, cs: ConstraintSet, tol: float = 1e-9):
    prisms = solution.prisms
    for cls in cs.depth_classes:
        members = sorted(cls)
        if any(abs(prisms[m].z - prisms[members[0]].z) > tol for m in members):
            raise InfeasibleError("same-depth class resolved to unequal z")
    for cls in cs.thickness_classes:
        members = sorted(cls)
        if any(abs(prisms[m].d - prisms[members[0]].d) > tol for m in members):
            raise InfeasibleError("same-thickness class resolved to unequal d")
    for f, b in cs.order_edges:
        if prisms[f].z - prisms[b].z < cs.order_margin - tol:
            raise InfeasibleError(f"depth order {f} before {b} violated after resolution")


# --- local refinement -----------------------------------------------------------


def _golden_min(f, lo: float, hi: float, iters: int = 48):
    if hi <= lo:
        return lo, f(lo)
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def refine_local(
    solution: ExtrusionSolution,
    pointsets: list[PointSet],
    config: SolveConfig = SolveConfig(),
    constraints: ConstraintSet | None = None,
) -> ExtrusionSolution:
    """Coordinate descent over (d, z) per volume (per class representative
    for constrained groups) with golden-section line searches. Accepts only
    improving moves, so the total cost never increases and the constraint
    postconditions survive."""
    prisms = list(solution.prisms)
    omega = solution.omega
    n = len(prisms)
    if constraints is None:
        cs = ConstraintSet(
            volumes=tuple((p.path_id, 0) for p in prisms),
            thickness_classes=(),
            depth_classes=(),
            order_edges=(),
            order_margin=0.0,
        )
    else:
        cs = constraints
    nodes, _, edges = _depth_nodes(n, cs)
    node_z = [prisms[members[0]].z for members in nodes]
    d_groups: list[list[int]] = [sorted(cls) for cls in cs.thickness_classes]
    grouped = {m for g in d_groups for m in g}
    d_groups.extend([v] for v in range(n) if v not in grouped)

    def node_cover_z(k: int, z: float) -> float:
        return sum(cover_cost(pointsets[m], replace(prisms[m], z=z)) for m in nodes[k])

    def group_obj_d(group: list[int], d: float) -> float:
        cost = sum(cover_cost(pointsets[m], replace(prisms[m], d=d)) for m in group)
        return cost + omega * d * d * len(group)

    window = 1.0
    for _ in range(max(0, config.refine.max_iters)):
        improved = False
        for k in range(len(nodes)):
            lb = -np.inf
            ub = np.inf
            for f, b in edges:
                if f == k:
                    lb = max(lb, node_z[b] + cs.order_margin)
                if b == k:
                    ub = min(ub, node_z[f] - cs.order_margin)
            lo = max(node_z[k] - window, lb)
            hi = min(node_z[k] + window, ub)
            if hi <= lo:
                continue
            current = node_cover_z(k, node_z[k])
            cand, cand_cost = _golden_min(lambda z: node_cover_z(k, z), lo, hi)
            if cand_cost < current - 1e-15:
                node_z[k] = cand
                for m in nodes[k]:
                    prisms[m] = replace(prisms[m], z=cand)
                improved = True
                current = cand_cost
            # coverage is flat anywhere the slab covers everything, which
            # strands z off-center; recenter on the points when free to
            zs = [pointsets[m].points[:, 2] for m in nodes[k] if len(pointsets[m])]
            if zs:
                allz = np.concatenate(zs)
                mid = min(max((float(allz.min()) + float(allz.max())) / 2.0, lb), ub)
                if mid != node_z[k] and node_cover_z(k, mid) <= current + 1e-15:
                    node_z[k] = mid
                    for m in nodes[k]:
                        prisms[m] = replace(prisms[m], z=mid)
        for group in d_groups:
            d_cur = prisms[group[0]].d
            lo = config.d_min
            hi = max(2.0 * d_cur, 1.0)
            current = group_obj_d(group, d_cur)
            cand, cand_cost = _golden_min(lambda d: group_obj_d(group, d), lo, hi)
            # exact thickness that just covers every member's span
            span = 0.0
            for m in group:
                if len(pointsets[m]):
                    span = max(
                        span,
                        2.0 * float(np.abs(pointsets[m].points[:, 2] - prisms[m].z).max()),
                    )
            if span > 0:
                span = max(span, config.d_min)
                span_cost = group_obj_d(group, span)
                if span_cost < cand_cost:
                    cand, cand_cost = span, span_cost
            if cand_cost < current - 1e-15:
                for m in group:
                    prisms[m] = replace(prisms[m], d=cand)
                improved = True
        if not improved:
            break

    out = _with_costs(prisms, solution.origin, omega, pointsets)
    if out.total_cost > solution.total_cost:
        return solution
    if constraints is not None:
        _verify_constraints(out, cs)
    return out


# --- full pipeline ---------------------------------------------------------------


def solve(
    clipart: Clipart,
    shape: GuidingShape,
    annotations: list[Annotation] = (),
    config: SolveConfig = SolveConfig(),
) -> ExtrusionSolution:
    """Run the extrusion pipeline on an aligned, mask-filtered guiding shape:
    project points, duplicate annotated paths, initialize every volume, then
    resolve constraints (and optionally refine). Deterministic."""
    annotations = list(annotations)
    geo = geometry_paths(clipart)
    if not geo:
        raise EmptyDocumentError("clipart has no geometry paths to extrude")
    cs = compile_constraints(clipart, annotations, config.constraints)
    pointsets = enclosed_points(shape, clipart)
    volumes, vol_pointsets = duplicate_paths(clipart, annotations, pointsets, config)
    if tuple(volumes) != cs.volumes:
        raise InfeasibleError("volume plan mismatch between duplication and constraints")
    polygons = {p.id: p.polygon for p in geo}
    prisms = [
        init_prism(polygons[pid], ps, config.omega, config)
        for (pid, _), ps in zip(volumes, vol_pointsets)
    ]
    solution = _with_costs(prisms, volumes, config.omega, vol_pointsets)
    solution = resolve_constraints(solution, cs, vol_pointsets)
    if config.refine.enabled:
        solution = refine_local(solution, vol_pointsets, config, constraints=cs)
    return solution


def solution_pointsets(
    clipart: Clipart,
    shape: GuidingShape,
    annotations: list[Annotation] = (),
    config: SolveConfig = SolveConfig(),
) -> list[PointSet]:
    """The per-volume point sets a solve() of the same inputs sees."""
    pointsets = enclosed_points(shape, clipart)
    _, vol_pointsets = duplicate_paths(clipart, list(annotations), pointsets, config)
    return vol_pointsets


# --- serialization ----------------------------------------------------------------


def solution_to_dict(solution: ExtrusionSolution, clipart: Clipart | None = None) -> dict:
    fills: dict[int, RGBA] = {}
    if clipart is not None:
        fills = {p.id: p.fill for p in clipart.paths}
    prisms = []
    for prism, (pid, dup), cov in zip(solution.prisms, solution.origin, solution.prism_covers):
        prisms.append(
            {
                "path_id": pid,
                "duplicate": dup,
                "d": prism.d,
                "z": prism.z,
                "cover_cost": cov,
                "polygon": prism.polygon.tolist(),
                "fill": list(fills.get(pid, (0.5, 0.5, 0.5, 1.0))),
            }
        )
    return {
        "version": 1,
        "omega": solution.omega,
        "total_cost": solution.total_cost,
        "cover_cost": solution.cover_cost,
        "thickness_cost": solution.thickness_cost,
        "prisms": prisms,
    }


def solution_from_dict(data: dict) -> tuple[ExtrusionSolution, dict[int, RGBA]]:
    prisms = []
    origin = []
    covers = []
    fills: dict[int, RGBA] = {}
    for entry in data["prisms"]:
        prisms.append(
            Prism(
                path_id=entry["path_id"],
                polygon=np.asarray(entry["polygon"], dtype=np.float64),
                d=float(entry["d"]),
                z=float(entry["z"]),
            )
        )
        origin.append((entry["path_id"], entry["duplicate"]))
        covers.append(float(entry.get("cover_cost", 0.0)))
        if "fill" in entry:
            fills[entry["path_id"]] = tuple(entry["fill"])
    solution = ExtrusionSolution(
        prisms=tuple(prisms),
        origin=tuple(origin),
        omega=float(data.get("omega", 0.01)),
        total_cost=float(data.get("total_cost", 0.0)),
        cover_cost=float(data.get("cover_cost", 0.0)),
        thickness_cost=float(data.get("thickness_cost", 0.0)),
        prism_covers=tuple(covers),
    )
    return solution, fills
