"""HTTP/JSON service driving the drawing client.

Sessions hold a clipart, guiding shape, annotations, solution, rendered
scaffolds, and per-viewpoint drawing documents. Mutations carry the
expected revision (If-Match header or ?revision=) and are serialized per
session; any change to the clipart/shape/annotations triple clears the
solution. State snapshots to a data directory as JSON on every mutation.
"""

from __future__ import annotations

import json
import math
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Annotated, Literal, Optional, Union

import numpy as np
from fastapi import FastAPI, Query, Request, Response
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .camera import PRESETS, preset
from .config import SolveConfig
from .constraints import annotations_from_json, annotations_to_json, compile_constraints
from .errors import ScaffoldError
from .extrusion import ExtrusionSolution, solution_from_dict, solution_to_dict, solve
from .model import Clipart, clipart_from_dict, clipart_to_dict, require_valid
from .raster import rasterize_mask
from .render import RenderConfig, image_to_png, render
from .shape import GuidingShape, filter_by_mask, load_shape
from .svg import parse_clipart

# --- drawing documents ----------------------------------------------------------

Color = list[float]


class _Styled(BaseModel):
    stroke: Color = Field(default=[0.0, 0.0, 0.0, 1.0], min_length=4, max_length=4)
    stroke_width: float = 0.01
    fill: Optional[Color] = None


class LineElement(_Styled):
    type: Literal["line"]
    x1: float
    y1: float
    x2: float
    y2: float


class ArcElement(_Styled):
    """Circular arc from (x1,y1) to (x2,y2); bulge = tan(sweep/4), signed."""

    type: Literal["arc"]
    x1: float
    y1: float
    x2: float
    y2: float
    bulge: float


class CubicElement(_Styled):
    type: Literal["cubic"]
    x1: float
    y1: float
    c1x: float
    c1y: float
    c2x: float
    c2y: float
    x2: float
    y2: float


class RectangleElement(_Styled):
    type: Literal["rectangle"]
    x: float
    y: float
    width: float
    height: float


class EllipseElement(_Styled):
    type: Literal["ellipse"]
    cx: float
    cy: float
    rx: float
    ry: float


class RoundedRectangleElement(_Styled):
    type: Literal["rounded_rectangle"]
    x: float
    y: float
    width: float
    height: float
    radius: float


DrawingElement = Annotated[
    Union[
        LineElement,
        ArcElement,
        CubicElement,
        RectangleElement,
        EllipseElement,
        RoundedRectangleElement,
    ],
    Field(discriminator="type"),
]


class DrawingDoc(BaseModel):
    """Layered drawing: element order is layer order (first = bottom).
    Coordinates are SVG-style (y down) in the unit square."""

    layers: list[DrawingElement] = Field(default_factory=list)
    sketch: list[list[tuple[float, float]]] = Field(default_factory=list)
    sketch_hidden: bool = False


# --- drawing export (one closed SVG path per element) ------------------------------


def _fmt(v: float) -> str:
    return repr(round(float(v), 9))


def _line_outline_d(x1, y1, x2, y2, width) -> str:
    dx, dy = x2 - x1, y2 - y1
    norm = math.hypot(dx, dy) or 1.0
    nx, ny = -dy / norm * width / 2, dx / norm * width / 2
    pts = [(x1 + nx, y1 + ny), (x2 + nx, y2 + ny), (x2 - nx, y2 - ny), (x1 - nx, y1 - ny)]
    return "M " + " L ".join(f"{_fmt(x)} {_fmt(y)}" for x, y in pts) + " Z"


def _arc_outline_d(el: ArcElement) -> str:
    if abs(el.bulge) < 1e-9:
        return _line_outline_d(el.x1, el.y1, el.x2, el.y2, el.stroke_width)
    theta = 4.0 * math.atan(el.bulge)
    chord = math.hypot(el.x2 - el.x1, el.y2 - el.y1)
    radius = chord / (2.0 * math.sin(abs(theta) / 2.0))
    # circle center: perpendicular from the chord midpoint
    mx, my = (el.x1 + el.x2) / 2.0, (el.y1 + el.y2) / 2.0
    h = radius * math.cos(theta / 2.0) * (1 if el.bulge > 0 else -1)
    dx, dy = (el.x2 - el.x1) / chord, (el.y2 - el.y1) / chord
    cx, cy = mx - dy * h, my + dx * h
    w = el.stroke_width / 2.0
    r_out, r_in = radius + w, max(radius - w, 1e-6)
    a1 = math.atan2(el.y1 - cy, el.x1 - cx)
    a2 = math.atan2(el.y2 - cy, el.x2 - cx)

    def at(radius_, ang):
        return cx + radius_ * math.cos(ang), cy + radius_ * math.sin(ang)

    large = 1 if abs(theta) > math.pi else 0
    sweep_out = 1 if theta > 0 else 0
    sweep_in = 1 - sweep_out
    p1 = at(r_out, a1)
    p2 = at(r_out, a2)
    p3 = at(r_in, a2)
    p4 = at(r_in, a1)
    return (
        f"M {_fmt(p1[0])} {_fmt(p1[1])} "
        f"A {_fmt(r_out)} {_fmt(r_out)} 0 {large} {sweep_out} {_fmt(p2[0])} {_fmt(p2[1])} "
        f"L {_fmt(p3[0])} {_fmt(p3[1])} "
        f"A {_fmt(r_in)} {_fmt(r_in)} 0 {large} {sweep_in} {_fmt(p4[0])} {_fmt(p4[1])} Z"
    )


def _cubic_outline_d(el: CubicElement) -> str:
    # flatten, then offset both sides by half the stroke width
    pts = [(el.x1, el.y1)]
    steps = 24
    for k in range(1, steps + 1):
        t = k / steps
        mt = 1 - t
        x = mt**3 * el.x1 + 3 * mt**2 * t * el.c1x + 3 * mt * t**2 * el.c2x + t**3 * el.x2
        y = mt**3 * el.y1 + 3 * mt**2 * t * el.c1y + 3 * mt * t**2 * el.c2y + t**3 * el.y2
        pts.append((x, y))
    w = el.stroke_width / 2.0
    normals = []
    for k in range(len(pts)):
        a = pts[max(k - 1, 0)]
        b = pts[min(k + 1, len(pts) - 1)]
        dx, dy = b[0] - a[0], b[1] - a[1]
        norm = math.hypot(dx, dy) or 1.0
        normals.append((-dy / norm, dx / norm))
    left = [(p[0] + n[0] * w, p[1] + n[1] * w) for p, n in zip(pts, normals)]
    right = [(p[0] - n[0] * w, p[1] - n[1] * w) for p, n in zip(pts, normals)]
    ring = left + right[::-1]
    return "M " + " L ".join(f"{_fmt(x)} {_fmt(y)}" for x, y in ring) + " Z"


def _element_svg(el) -> str:
    fill = el.fill if el.fill is not None else el.stroke
    rgb = "#{:02x}{:02x}{:02x}".format(
        *(int(round(max(0.0, min(1.0, c)) * 255)) for c in fill[:3])
    )
    opacity = f' fill-opacity="{_fmt(fill[3])}"' if fill[3] != 1.0 else ""
    if el.type == "line":
        d = _line_outline_d(el.x1, el.y1, el.x2, el.y2, el.stroke_width)
        return f'<path d="{d}" fill="{rgb}"{opacity}/>'
    if el.type == "arc":
        return f'<path d="{_arc_outline_d(el)}" fill="{rgb}"{opacity}/>'
    if el.type == "cubic":
        return f'<path d="{_cubic_outline_d(el)}" fill="{rgb}"{opacity}/>'
    if el.type == "rectangle":
        return (
            f'<rect x="{_fmt(el.x)}" y="{_fmt(el.y)}" width="{_fmt(el.width)}" '
            f'height="{_fmt(el.height)}" fill="{rgb}"{opacity}/>'
        )
    if el.type == "ellipse":
        return (
            f'<ellipse cx="{_fmt(el.cx)}" cy="{_fmt(el.cy)}" rx="{_fmt(el.rx)}" '
            f'ry="{_fmt(el.ry)}" fill="{rgb}"{opacity}/>'
        )
    if el.type == "rounded_rectangle":
        return (
            f'<rect x="{_fmt(el.x)}" y="{_fmt(el.y)}" width="{_fmt(el.width)}" '
            f'height="{_fmt(el.height)}" rx="{_fmt(el.radius)}" fill="{rgb}"{opacity}/>'
        )
    raise ValueError(f"unknown element type {el.type}")


def drawing_to_svg(doc: DrawingDoc) -> bytes:
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 1 1">',
    ]
    lines.extend("  " + _element_svg(el) for el in doc.layers)
    lines.append("</svg>")
    return "\n".join(lines).encode()


# --- session store ---------------------------------------------------------------


@dataclass
class Session:
    id: str
    revision: int = 0
    clipart: Clipart | None = None
    shape: GuidingShape | None = None
    annotations_json: str = "[]"
    solution: ExtrusionSolution | None = None
    drawings: dict[str, DrawingDoc] = field(default_factory=dict)
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)
    render_cache: dict = field(default_factory=dict, repr=False)


class SessionStore:
    def __init__(self, data_dir: str | None):
        self.data_dir = Path(data_dir) if data_dir else None
        self.sessions: dict[str, Session] = {}
        self._lock = threading.Lock()
        if self.data_dir:
            self.data_dir.mkdir(parents=True, exist_ok=True)
            for snap in sorted(self.data_dir.glob("*.json")):
                try:
                    session = _session_from_snapshot(json.loads(snap.read_text()))
                    self.sessions[session.id] = session
                except (KeyError, ValueError, json.JSONDecodeError):
                    continue

    def create(self) -> Session:
        session = Session(id=uuid.uuid4().hex[:12])
        with self._lock:
            self.sessions[session.id] = session
        self.persist(session)
        return session

    def get(self, session_id: str) -> Session | None:
        return self.sessions.get(session_id)

    def persist(self, session: Session) -> None:
        if not self.data_dir:
            return
        path = self.data_dir / f"{session.id}.json"
        path.write_text(json.dumps(_session_snapshot(session)))


def _session_snapshot(session: Session) -> dict:
    shape = None
    if session.shape is not None:
        shape = {
            "vertices": session.shape.vertices.tolist(),
            "triangles": session.shape.triangles.tolist()
            if session.shape.triangles is not None
            else None,
        }
    return {
        "id": session.id,
        "revision": session.revision,
        "clipart": clipart_to_dict(session.clipart) if session.clipart else None,
        "shape": shape,
        "annotations": json.loads(session.annotations_json),
        "solution": solution_to_dict(session.solution, session.clipart)
        if session.solution
        else None,
        "drawings": {view: doc.model_dump() for view, doc in session.drawings.items()},
    }


def _session_from_snapshot(data: dict) -> Session:
    session = Session(id=data["id"], revision=int(data["revision"]))
    if data.get("clipart"):
        session.clipart = clipart_from_dict(data["clipart"])
    if data.get("shape"):
        tris = data["shape"]["triangles"]
        session.shape = GuidingShape(
            np.asarray(data["shape"]["vertices"], dtype=np.float64),
            np.asarray(tris, dtype=np.int64) if tris else None,
        )
    session.annotations_json = json.dumps(data.get("annotations", []))
    if data.get("solution"):
        session.solution, _ = solution_from_dict(data["solution"])
    for view, doc in data.get("drawings", {}).items():
        session.drawings[view] = DrawingDoc.model_validate(doc)
    return session


# --- app --------------------------------------------------------------------------


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


def _path_table(clipart: Clipart) -> list[dict]:
    return [
        {
            "id": p.id,
            "layer": p.layer,
            "kind": p.kind.value,
            "fill": list(p.fill),
            "vertices": int(p.polygon.shape[0]),
        }
        for p in clipart.paths
    ]


def create_app(data_dir: str | None = None, config: SolveConfig | None = None) -> FastAPI:
    app = FastAPI(title="clipscaffold")
    store = SessionStore(data_dir)
    cfg = config or SolveConfig()
    app.state.store = store

    def _expected_revision(request: Request) -> int | None:
        header = request.headers.get("if-match")
        if header is not None:
            try:
                return int(header.strip().strip('"'))
            except ValueError:
                return -1
        value = request.query_params.get("revision")
        if value is not None:
            try:
                return int(value)
            except ValueError:
                return -1
        return None

    def _mutate(session_id: str, request: Request, fn):
        """Run fn(session) under the session lock with revision checking;
        all-or-nothing: state only advances when fn returns."""
        session = store.get(session_id)
        if session is None:
            return _error(404, "SESSION_NOT_FOUND", f"no session {session_id}")
        expected = _expected_revision(request)
        if expected is None:
            return _error(409, "REVISION_REQUIRED", "mutations must carry If-Match")
        with session.lock:
            if expected != session.revision:
                return _error(
                    409,
                    "REVISION_CONFLICT",
                    f"expected revision {session.revision}, got {expected}",
                )
            try:
                body = fn(session)
            except ScaffoldError as exc:
                return _error(422, exc.code, str(exc))
            session.revision += 1
            body["revision"] = session.revision
            store.persist(session)
            return JSONResponse(body)

    @app.post("/sessions", status_code=201)
    def create_session():
        session = store.create()
        return {"id": session.id, "revision": session.revision}

    @app.get("/sessions/{session_id}")
    def session_summary(session_id: str):
        session = store.get(session_id)
        if session is None:
            return _error(404, "SESSION_NOT_FOUND", f"no session {session_id}")
        return {
            "id": session.id,
            "revision": session.revision,
            "paths": _path_table(session.clipart) if session.clipart else None,
            "shape_vertices": len(session.shape.vertices) if session.shape else None,
            "annotations": json.loads(session.annotations_json),
            "solution": solution_to_dict(session.solution, session.clipart)
            if session.solution
            else None,
            "drawings": sorted(session.drawings),
        }

    @app.post("/sessions/{session_id}/clipart")
    async def upload_clipart(session_id: str, request: Request):
        raw = await request.body()

        def apply(session: Session):
            clipart = parse_clipart(raw)
            require_valid(clipart)
            session.clipart = clipart
            session.shape = None
            session.solution = None
            session.render_cache.clear()
            return {"paths": _path_table(clipart)}

        return _mutate(session_id, request, apply)

    @app.post("/sessions/{session_id}/shape")
    async def upload_shape(session_id: str, request: Request, format: str = Query("obj")):
        raw = await request.body()

        def apply(session: Session):
            if session.clipart is None:
                raise ScaffoldError("upload a clipart before the guiding shape")
            shape = load_shape(raw, format, clipart=session.clipart)
            mask = rasterize_mask(session.clipart, cfg.mask_resolution)
            session.shape = filter_by_mask(shape, mask)
            session.solution = None
            session.render_cache.clear()
            return {"vertices": len(session.shape.vertices)}

        return _mutate(session_id, request, apply)

    @app.post("/sessions/{session_id}/annotations")
    async def put_annotations(session_id: str, request: Request):
        raw = await request.body()

        def apply(session: Session):
            if session.clipart is None:
                raise ScaffoldError("upload a clipart before annotating")
            annotations = annotations_from_json(raw)
            cs = compile_constraints(session.clipart, annotations, cfg.constraints)
            session.annotations_json = annotations_to_json(annotations)
            session.solution = None
            session.render_cache.clear()
            return {
                "volumes": len(cs.volumes),
                "thickness_classes": [sorted(c) for c in cs.thickness_classes],
                "depth_classes": [sorted(c) for c in cs.depth_classes],
                "order_edges": [list(e) for e in cs.order_edges],
            }

        return _mutate(session_id, request, apply)

    @app.post("/sessions/{session_id}/solve")
    async def solve_session(session_id: str, request: Request):
        def apply(session: Session):
            if session.clipart is None or session.shape is None:
                raise ScaffoldError("solve needs a clipart and a guiding shape")
            annotations = annotations_from_json(session.annotations_json)
            session.solution = solve(session.clipart, session.shape, annotations, cfg)
            session.render_cache.clear()
            return {"solution": solution_to_dict(session.solution, session.clipart)}

        return _mutate(session_id, request, apply)

    @app.get("/sessions/{session_id}/render")
    def render_view(
        session_id: str,
        view: str = Query("front"),
        width: int = Query(512, ge=16, le=2048),
        height: int = Query(512, ge=16, le=2048),
    ):
        session = store.get(session_id)
        if session is None:
            return _error(404, "SESSION_NOT_FOUND", f"no session {session_id}")
        if view not in PRESETS:
            return _error(422, "UNKNOWN_VIEW", f"view must be one of {sorted(PRESETS)}")
        if session.solution is None:
            return _error(422, "NO_SOLUTION", "solve the session before rendering")
        key = (session.revision, view, width, height)
        cached = session.render_cache.get(key)
        if cached is None:
            fills = {p.id: p.fill for p in session.clipart.paths} if session.clipart else {}
            image = render(
                session.solution,
                preset(view),
                RenderConfig(width=width, height=height, fills=fills),
            )
            cached = image_to_png(image)
            session.render_cache[key] = cached
        return Response(content=cached, media_type="image/png")

    @app.put("/sessions/{session_id}/drawings/{view}")
    async def put_drawing(session_id: str, view: str, doc: DrawingDoc, request: Request):
        def apply(session: Session):
            session.drawings[view] = doc
            return {"elements": len(doc.layers)}

        return _mutate(session_id, request, apply)

    @app.get("/sessions/{session_id}/drawings/{view}")
    def get_drawing(session_id: str, view: str):
        session = store.get(session_id)
        if session is None:
            return _error(404, "SESSION_NOT_FOUND", f"no session {session_id}")
        doc = session.drawings.get(view, DrawingDoc())
        return JSONResponse(doc.model_dump())

    @app.get("/sessions/{session_id}/drawings/{view}/export.svg")
    def export_drawing(session_id: str, view: str):
        session = store.get(session_id)
        if session is None:
            return _error(404, "SESSION_NOT_FOUND", f"no session {session_id}")
        doc = session.drawings.get(view)
        if doc is None:
            return _error(404, "DRAWING_NOT_FOUND", f"no drawing for view {view}")
        return Response(content=drawing_to_svg(doc), media_type="image/svg+xml")

    return app
