"""Compile user annotations plus clipart layering into a constraint set.

Annotations are stated on path ids; the constraint set is stated on volume
ids because a path annotated as multiple objects contributes one extruded
volume per duplicate. Volume ids are assigned in document order with
duplicates consecutive, which keeps every downstream step deterministic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from shapely.geometry import Polygon as ShapelyPolygon

from .config import ConstraintConfig
from .errors import BadReferenceError, ConflictError, CycleError, FormatError
from .model import (
    Annotation,
    Clipart,
    DepthOrder,
    MultipleObjects,
    PathKind,
    SameDepth,
    SameThickness,
    geometry_paths,
)


@dataclass(frozen=True)
class ConstraintSet:
    volumes: tuple[tuple[int, int], ...]  # (path id, duplicate index) per volume
    thickness_classes: tuple[frozenset[int], ...]
    depth_classes: tuple[frozenset[int], ...]
    order_edges: tuple[tuple[int, int], ...]  # (front volume, behind volume)
    order_margin: float

    def volumes_of_path(self, path_id: int) -> list[int]:
        return [v for v, (pid, _) in enumerate(self.volumes) if pid == path_id]


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # root at the smaller index for deterministic class labels
            if ra > rb:
                ra, rb = rb, ra
            self.parent[rb] = ra

    def classes(self) -> list[frozenset[int]]:
        groups: dict[int, set[int]] = {}
        for i in range(len(self.parent)):
            groups.setdefault(self.find(i), set()).add(i)
        out = [frozenset(g) for g in groups.values() if len(g) > 1]
        return sorted(out, key=min)


def _check_reference(clipart: Clipart, path_id: int) -> None:
    if not isinstance(path_id, int) or path_id < 0 or path_id >= len(clipart.paths):
        raise BadReferenceError(f"annotation references unknown path id {path_id}")
    if clipart.paths[path_id].kind is not PathKind.GEOMETRY:
        raise BadReferenceError(f"annotation references shading path {path_id}")


def _polygons_overlap(a, b) -> bool:
    pa = ShapelyPolygon(a)
    pb = ShapelyPolygon(b)
    if not pa.is_valid:
        pa = pa.buffer(0)
    if not pb.is_valid:
        pb = pb.buffer(0)
    return pa.intersection(pb).area > 1e-12


def toposort(n: int, edges) -> list[int]:
    """Kahn topological order of nodes 0..n-1; raises CycleError if cyclic."""
    out: dict[int, list[int]] = {i: [] for i in range(n)}
    indeg = [0] * n
    for a, b in edges:
        out[a].append(b)
        indeg[b] += 1
    queue = sorted(i for i in range(n) if indeg[i] == 0)
    order: list[int] = []
    while queue:
        node = queue.pop(0)
        order.append(node)
        ready = []
        for nxt in out[node]:
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                ready.append(nxt)
        queue.extend(sorted(ready))
    if len(order) != n:
        raise CycleError("depth order constraints form a cycle")
    return order


def compile_constraints(
    clipart: Clipart,
    annotations: list[Annotation],
    config: ConstraintConfig = ConstraintConfig(),
) -> ConstraintSet:
    """Expand annotations over duplicated volumes and validate feasibility.

    Raises BadReferenceError for unknown/shading ids, ConflictError when an
    order edge connects two volumes of one depth class (or a path carries
    two multiple-objects annotations), CycleError when the depth orders,
    after contracting same-depth classes, are cyclic.
    """
    geo = geometry_paths(clipart)
    geo_ids = [p.id for p in geo]

    dup_counts: dict[int, int] = {}
    for ann in annotations:
        if isinstance(ann, MultipleObjects):
            _check_reference(clipart, ann.path)
            if ann.path in dup_counts:
                raise ConflictError(
                    f"path {ann.path} has more than one multiple-objects annotation"
                )
            dup_counts[ann.path] = ann.count

    volumes: list[tuple[int, int]] = []
    vols_of: dict[int, list[int]] = {}
    for pid in geo_ids:
        count = dup_counts.get(pid, 1)
        vols_of[pid] = list(range(len(volumes), len(volumes) + count))
        volumes.extend((pid, k) for k in range(count))

    thickness = _UnionFind(len(volumes))
    depth = _UnionFind(len(volumes))
    for pid, count in dup_counts.items():
        first = vols_of[pid][0]
        for v in vols_of[pid][1:]:
            thickness.union(first, v)

    user_pairs: set[tuple[int, int]] = set()
    user_edges: list[tuple[int, int]] = []
    for ann in annotations:
        if isinstance(ann, SameThickness):
            _check_reference(clipart, ann.a)
            _check_reference(clipart, ann.b)
            for va in vols_of[ann.a]:
                for vb in vols_of[ann.b]:
                    thickness.union(va, vb)
        elif isinstance(ann, SameDepth):
            _check_reference(clipart, ann.a)
            _check_reference(clipart, ann.b)
            for va in vols_of[ann.a]:
                for vb in vols_of[ann.b]:
                    depth.union(va, vb)
        elif isinstance(ann, DepthOrder):
            _check_reference(clipart, ann.front)
            _check_reference(clipart, ann.behind)
            user_pairs.add(frozenset((ann.front, ann.behind)))
            for vf in vols_of[ann.front]:
                for vb in vols_of[ann.behind]:
                    user_edges.append((vf, vb))
        elif isinstance(ann, MultipleObjects):
            pass
        else:
            raise BadReferenceError(f"unknown annotation {ann!r}")

    # Layering defaults only between overlapping paths; user edges override.
    default_edges: list[tuple[int, int]] = []
    if config.layering_defaults:
        for i, pa in enumerate(geo):
            for pb in geo[i + 1 :]:
                if frozenset((pa.id, pb.id)) in user_pairs:
                    continue
                if pa.layer == pb.layer:
                    continue
                if not _polygons_overlap(pa.polygon, pb.polygon):
                    continue
                front, behind = (pa, pb) if pa.layer > pb.layer else (pb, pa)
                for vf in vols_of[front.id]:
                    for vb in vols_of[behind.id]:
                        default_edges.append((vf, vb))

    edges: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    for edge in user_edges + sorted(default_edges):
        if edge not in seen:
            seen.add(edge)
            edges.append(edge)

    for vf, vb in edges:
        if depth.find(vf) == depth.find(vb):
            raise ConflictError(
                f"depth order between volumes {vf} and {vb} conflicts with a "
                "same-depth annotation"
            )

    # Cycle check on the quotient graph: same-depth classes move as one node.
    rep = {v: depth.find(v) for v in range(len(volumes))}
    rep_index = {r: k for k, r in enumerate(sorted(set(rep.values())))}
    quotient = {(rep_index[rep[a]], rep_index[rep[b]]) for a, b in edges}
    toposort(len(rep_index), quotient)

    return ConstraintSet(
        volumes=tuple(volumes),
        thickness_classes=tuple(thickness.classes()),
        depth_classes=tuple(depth.classes()),
        order_edges=tuple(edges),
        order_margin=config.order_margin,
    )


def implied_annotations(cs: ConstraintSet) -> list[Annotation]:
    """Path-level annotations that recompile to the same constraint set."""
    out: list[Annotation] = []
    counts: dict[int, int] = {}
    for pid, _ in cs.volumes:
        counts[pid] = counts.get(pid, 0) + 1
    for pid, count in sorted(counts.items()):
        if count > 1:
            out.append(MultipleObjects(pid, count))

    def _path_pairs(classes):
        pairs = []
        for cls in classes:
            pids = sorted({cs.volumes[v][0] for v in cls})
            pairs.extend((pids[k], pids[k + 1]) for k in range(len(pids) - 1))
        return pairs

    out.extend(SameThickness(a, b) for a, b in _path_pairs(cs.thickness_classes) if a != b)
    out.extend(SameDepth(a, b) for a, b in _path_pairs(cs.depth_classes) if a != b)
    seen = set()
    for vf, vb in cs.order_edges:
        pair = (cs.volumes[vf][0], cs.volumes[vb][0])
        if pair not in seen:
            seen.add(pair)
            out.append(DepthOrder(front=pair[0], behind=pair[1]))
    return out


# --- annotation file format ---------------------------------------------------

_TAGS = {
    "multiple_objects": (MultipleObjects, ("path", "count")),
    "same_thickness": (SameThickness, ("a", "b")),
    "same_depth": (SameDepth, ("a", "b")),
    "depth_order": (DepthOrder, ("front", "behind")),
}


def annotations_from_json(text: str | bytes) -> list[Annotation]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"annotation file is not valid JSON: {exc}") from exc
    if not isinstance(data, list):
        raise FormatError("annotation file must be a JSON array of tagged records")
    out: list[Annotation] = []
    for k, record in enumerate(data):
        if not isinstance(record, dict) or "type" not in record:
            raise FormatError(f"annotation {k} is not a tagged record")
        tag = record["type"]
        if tag not in _TAGS:
            raise FormatError(f"annotation {k} has unknown type {tag!r}")
        cls, fields = _TAGS[tag]
        missing = [f for f in fields if f not in record]
        if missing:
            raise FormatError(f"annotation {k} ({tag}) missing fields {missing}")
        try:
            out.append(cls(**{f: int(record[f]) for f in fields}))
        except (TypeError, ValueError) as exc:
            raise FormatError(f"annotation {k} ({tag}): {exc}") from exc
    return out


def annotations_to_json(annotations: list[Annotation]) -> str:
    records = []
    for ann in annotations:
        for tag, (cls, fields) in _TAGS.items():
            if isinstance(ann, cls):
                records.append({"type": tag, **{f: getattr(ann, f) for f in fields}})
                break
        else:
            raise FormatError(f"cannot serialize annotation {ann!r}")
    return json.dumps(records, indent=2)
