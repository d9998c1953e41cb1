"""SVG-subset ingest: parse clipart documents into the domain model,
flatten curves to polygons, and serialize back out.

Supported subset: <path> with M/L/C/A/Z (absolute or relative), <rect>
(incl. rounded), <circle>, <ellipse>, and <g transform=...> with affine
transforms. Anything else raises ParseError with the element locus.
SVG documents are y-down; ingest flips into the y-up scene frame and
normalizes the tight bbox into the unit square.
"""

from __future__ import annotations

import math
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateError, EmptyDocumentError, ParseError
from .model import (
    BBox,
    Clipart,
    ClosedPath,
    NormTransform,
    PathKind,
    RGBA,
    geometry_paths,
    normalized_frame,
)

_NUMBER_RE = re.compile(r"[-+]?(?:\d*\.\d+|\d+\.?)(?:[eE][-+]?\d+)?")
_TRANSFORM_RE = re.compile(r"(matrix|translate|scale|rotate)\s*\(([^)]*)\)")

_NAMED_COLORS = {
    "black": (0.0, 0.0, 0.0),
    "white": (1.0, 1.0, 1.0),
    "red": (1.0, 0.0, 0.0),
    "green": (0.0, 128 / 255, 0.0),
    "lime": (0.0, 1.0, 0.0),
    "blue": (0.0, 0.0, 1.0),
    "yellow": (1.0, 1.0, 0.0),
    "cyan": (0.0, 1.0, 1.0),
    "magenta": (1.0, 0.0, 1.0),
    "orange": (1.0, 165 / 255, 0.0),
    "purple": (128 / 255, 0.0, 128 / 255),
    "gray": (128 / 255, 128 / 255, 128 / 255),
    "grey": (128 / 255, 128 / 255, 128 / 255),
}


@dataclass(frozen=True)
class PathSpec:
    """One closed subpath as absolute M/L/C/A/Z commands plus its style."""

    commands: tuple[tuple, ...]
    fill: RGBA
    document_index: int


# --- colors -------------------------------------------------------------------


def parse_color(value: str, opacity: float = 1.0) -> RGBA:
    value = value.strip()
    if value == "none":
        return (0.0, 0.0, 0.0, 0.0)
    if value.startswith("#"):
        hexpart = value[1:]
        if len(hexpart) == 3:
            hexpart = "".join(c * 2 for c in hexpart)
        if len(hexpart) == 6:
            r, g, b = (int(hexpart[k : k + 2], 16) / 255 for k in (0, 2, 4))
            return (r, g, b, opacity)
        if len(hexpart) == 8:
            r, g, b, a = (int(hexpart[k : k + 2], 16) / 255 for k in (0, 2, 4, 6))
            return (r, g, b, a * opacity)
        raise ParseError(f"bad hex color {value!r}")
    m = re.fullmatch(r"rgb\(\s*(\d+)\s*,\s*(\d+)\s*,\s*(\d+)\s*\)", value)
    if m:
        return tuple(int(v) / 255 for v in m.groups()) + (opacity,)
    if value in _NAMED_COLORS:
        return _NAMED_COLORS[value] + (opacity,)
    raise ParseError(f"unsupported color {value!r}")


def color_to_svg(fill: RGBA) -> tuple[str, float]:
    """(hex color, opacity) pair for SVG attributes."""
    r, g, b, a = fill
    hexval = "#{:02x}{:02x}{:02x}".format(
        int(round(r * 255)), int(round(g * 255)), int(round(b * 255))
    )
    return hexval, a


# --- affine transforms ---------------------------------------------------------


def _parse_transform(text: str) -> np.ndarray:
    total = np.eye(3)
    pos = 0
    for m in _TRANSFORM_RE.finditer(text):
        if text[pos : m.start()].strip(" ,\t\n"):
            raise ParseError(f"unsupported transform {text!r}")
        pos = m.end()
        name = m.group(1)
        args = [float(v) for v in _NUMBER_RE.findall(m.group(2))]
        op = np.eye(3)
        if name == "matrix" and len(args) == 6:
            a, b, c, d, e, f = args
            op[:2] = [[a, c, e], [b, d, f]]
        elif name == "translate" and len(args) in (1, 2):
            op[0, 2] = args[0]
            op[1, 2] = args[1] if len(args) == 2 else 0.0
        elif name == "scale" and len(args) in (1, 2):
            op[0, 0] = args[0]
            op[1, 1] = args[1] if len(args) == 2 else args[0]
        elif name == "rotate" and len(args) in (1, 3):
            ang = math.radians(args[0])
            rot = np.eye(3)
            rot[:2, :2] = [[math.cos(ang), -math.sin(ang)], [math.sin(ang), math.cos(ang)]]
            if len(args) == 3:
                cx, cy = args[1], args[2]
                pre = np.eye(3)
                pre[:2, 2] = [cx, cy]
                post = np.eye(3)
                post[:2, 2] = [-cx, -cy]
                rot = pre @ rot @ post
            op = rot
        else:
            raise ParseError(f"unsupported transform {name}({m.group(2)})")
        total = total @ op
    if text[pos:].strip(" ,\t\n"):
        raise ParseError(f"unsupported transform {text!r}")
    return total


def _apply_affine(tf: np.ndarray, x: float, y: float) -> tuple[float, float]:
    return (
        tf[0, 0] * x + tf[0, 1] * y + tf[0, 2],
        tf[1, 0] * x + tf[1, 1] * y + tf[1, 2],
    )


# --- elliptical arcs ------------------------------------------------------------


def arc_center_form(x1, y1, rx, ry, rot_deg, large, sweep, x2, y2):
    """SVG endpoint arc -> (cx, cy, rx, ry, phi, theta1, dtheta), radians."""
    phi = math.radians(rot_deg)
    rx, ry = abs(rx), abs(ry)
    dx2 = (x1 - x2) / 2.0
    dy2 = (y1 - y2) / 2.0
    cosp, sinp = math.cos(phi), math.sin(phi)
    x1p = cosp * dx2 + sinp * dy2
    y1p = -sinp * dx2 + cosp * dy2
    lam = (x1p / rx) ** 2 + (y1p / ry) ** 2
    if lam > 1.0:
        s = math.sqrt(lam)
        rx *= s
        ry *= s
    num = rx * rx * ry * ry - rx * rx * y1p * y1p - ry * ry * x1p * x1p
    den = rx * rx * y1p * y1p + ry * ry * x1p * x1p
    coeff = math.sqrt(max(num / den, 0.0)) if den > 0 else 0.0
    if large == sweep:
        coeff = -coeff
    cxp = coeff * rx * y1p / ry
    cyp = -coeff * ry * x1p / rx
    cx = cosp * cxp - sinp * cyp + (x1 + x2) / 2.0
    cy = sinp * cxp + cosp * cyp + (y1 + y2) / 2.0
    theta1 = math.atan2((y1p - cyp) / ry, (x1p - cxp) / rx)
    theta2 = math.atan2((-y1p - cyp) / ry, (-x1p - cxp) / rx)
    dtheta = theta2 - theta1
    if sweep and dtheta < 0:
        dtheta += 2 * math.pi
    elif not sweep and dtheta > 0:
        dtheta -= 2 * math.pi
    return cx, cy, rx, ry, phi, theta1, dtheta


def _arc_point(cx, cy, rx, ry, phi, theta):
    cosp, sinp = math.cos(phi), math.sin(phi)
    ct, st = math.cos(theta), math.sin(theta)
    return (cx + rx * ct * cosp - ry * st * sinp, cy + rx * ct * sinp + ry * st * cosp)


def _arc_tangent(rx, ry, phi, theta):
    cosp, sinp = math.cos(phi), math.sin(phi)
    ct, st = math.cos(theta), math.sin(theta)
    return (-rx * st * cosp - ry * ct * sinp, -rx * st * sinp + ry * ct * cosp)


def arc_to_cubics(x1, y1, rx, ry, rot_deg, large, sweep, x2, y2, max_segment=math.pi / 4):
    """Approximate an endpoint arc as cubic segments of at most max_segment
    sweep each (error ~4e-6 of the radius at 45 degrees)."""
    if rx == 0 or ry == 0 or (x1 == x2 and y1 == y2):
        return [("L", x2, y2)]
    cx, cy, rx, ry, phi, theta1, dtheta = arc_center_form(
        x1, y1, rx, ry, rot_deg, large, sweep, x2, y2
    )
    n = max(1, int(math.ceil(abs(dtheta) / max_segment)))
    out = []
    for k in range(n):
        ta = theta1 + dtheta * k / n
        tb = theta1 + dtheta * (k + 1) / n
        alpha = (4.0 / 3.0) * math.tan((tb - ta) / 4.0)
        pa = _arc_point(cx, cy, rx, ry, phi, ta)
        pb = _arc_point(cx, cy, rx, ry, phi, tb)
        da = _arc_tangent(rx, ry, phi, ta)
        db = _arc_tangent(rx, ry, phi, tb)
        out.append(
            (
                "C",
                pa[0] + alpha * da[0],
                pa[1] + alpha * da[1],
                pb[0] - alpha * db[0],
                pb[1] - alpha * db[1],
                pb[0],
                pb[1],
            )
        )
    return out


# --- flattening -----------------------------------------------------------------


def _point_segment_distance(p, a, b) -> float:
    abx, aby = b[0] - a[0], b[1] - a[1]
    ab2 = abx * abx + aby * aby
    if ab2 == 0:
        return math.hypot(p[0] - a[0], p[1] - a[1])
    t = max(0.0, min(1.0, ((p[0] - a[0]) * abx + (p[1] - a[1]) * aby) / ab2))
    return math.hypot(p[0] - a[0] - t * abx, p[1] - a[1] - t * aby)


def _flatten_cubic(p0, p1, p2, p3, tol, out, depth=0):
    if depth >= 24 or (
        _point_segment_distance(p1, p0, p3) <= tol
        and _point_segment_distance(p2, p0, p3) <= tol
    ):
        out.append(p3)
        return
    mid01 = ((p0[0] + p1[0]) / 2, (p0[1] + p1[1]) / 2)
    mid12 = ((p1[0] + p2[0]) / 2, (p1[1] + p2[1]) / 2)
    mid23 = ((p2[0] + p3[0]) / 2, (p2[1] + p3[1]) / 2)
    mid012 = ((mid01[0] + mid12[0]) / 2, (mid01[1] + mid12[1]) / 2)
    mid123 = ((mid12[0] + mid23[0]) / 2, (mid12[1] + mid23[1]) / 2)
    mid = ((mid012[0] + mid123[0]) / 2, (mid012[1] + mid123[1]) / 2)
    _flatten_cubic(p0, mid01, mid012, mid, tol, out, depth + 1)
    _flatten_cubic(mid, mid123, mid23, p3, tol, out, depth + 1)


def _flatten_arc(x1, y1, rx, ry, rot_deg, large, sweep, x2, y2, tol, out):
    if rx == 0 or ry == 0 or (x1 == x2 and y1 == y2):
        out.append((x2, y2))
        return
    cx, cy, rx, ry, phi, theta1, dtheta = arc_center_form(
        x1, y1, rx, ry, rot_deg, large, sweep, x2, y2
    )
    rmax = max(rx, ry)
    # chord of angle t on radius r has sagitta r*(1-cos(t/2))
    ratio = max(1.0 - tol / rmax, -1.0)
    theta_max = 2 * math.acos(ratio) if ratio < 1.0 else math.pi / 4
    n = max(1, int(math.ceil(abs(dtheta) / theta_max)))
    for k in range(1, n + 1):
        out.append(_arc_point(cx, cy, rx, ry, phi, theta1 + dtheta * k / n))


def _merge_vertices(points: list[tuple[float, float]]) -> list[tuple[float, float]]:
    eps = 1e-12
    dedup: list[tuple[float, float]] = []
    for p in points:
        if not dedup or abs(p[0] - dedup[-1][0]) > eps or abs(p[1] - dedup[-1][1]) > eps:
            dedup.append(p)
    while len(dedup) > 1 and abs(dedup[0][0] - dedup[-1][0]) <= eps and abs(
        dedup[0][1] - dedup[-1][1]
    ) <= eps:
        dedup.pop()
    # drop vertices collinear with their neighbors (straight-through only)
    changed = True
    while changed and len(dedup) > 3:
        changed = False
        for i in range(len(dedup)):
            prev = dedup[i - 1]
            cur = dedup[i]
            nxt = dedup[(i + 1) % len(dedup)]
            ux, uy = cur[0] - prev[0], cur[1] - prev[1]
            vx, vy = nxt[0] - cur[0], nxt[1] - cur[1]
            cross = ux * vy - uy * vx
            dot = ux * vx + uy * vy
            span = max(abs(ux), abs(uy), abs(vx), abs(vy), 1.0)
            if abs(cross) <= 1e-12 * span * span and dot >= 0:
                dedup.pop(i)
                changed = True
                break
    return dedup


def flatten_path(spec: PathSpec, tolerance: float) -> np.ndarray:
    """Polyline approximation of one closed subpath; curve deviation stays
    within `tolerance`. Raises DegenerateError below 3 distinct vertices."""
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    points: list[tuple[float, float]] = []
    current = None
    for cmd in spec.commands:
        op = cmd[0]
        if op == "M":
            current = (cmd[1], cmd[2])
            points.append(current)
        elif op == "L":
            current = (cmd[1], cmd[2])
            points.append(current)
        elif op == "C":
            p0 = current
            _flatten_cubic(p0, (cmd[1], cmd[2]), (cmd[3], cmd[4]), (cmd[5], cmd[6]), tolerance, points)
            current = (cmd[5], cmd[6])
        elif op == "A":
            _flatten_arc(current[0], current[1], cmd[1], cmd[2], cmd[3], cmd[4], cmd[5], cmd[6], cmd[7], tolerance, points)
            current = (cmd[6], cmd[7])
        elif op == "Z":
            break
        else:
            raise ParseError(f"unknown command {op!r}")
    merged = _merge_vertices(points)
    if len(merged) < 3:
        raise DegenerateError(
            f"subpath {spec.document_index} flattens to fewer than 3 distinct vertices"
        )
    return np.asarray(merged, dtype=np.float64)


# --- path data parsing -----------------------------------------------------------


def _tokenize_path(d: str):
    tokens = []
    pos = 0
    while pos < len(d):
        ch = d[pos]
        if ch.isspace() or ch == ",":
            pos += 1
            continue
        if ch.isalpha():
            tokens.append(ch)
            pos += 1
            continue
        m = _NUMBER_RE.match(d, pos)
        if not m:
            raise ParseError(f"bad path data near {d[pos:pos + 12]!r}")
        tokens.append(float(m.group()))
        pos = m.end()
    return tokens


def parse_path_data(d: str, locus: str) -> list[list[tuple]]:
    """Split path data into closed subpaths of absolute commands.
    Raises ParseError for unsupported commands or unclosed subpaths."""
    tokens = _tokenize_path(d)
    subpaths: list[list[tuple]] = []
    current: list[tuple] = []
    cx = cy = 0.0
    sx = sy = 0.0
    i = 0

    def _need(n):
        if i + n > len(tokens) or any(isinstance(t, str) for t in tokens[i : i + n]):
            raise ParseError(f"{locus}: truncated arguments")
        return tokens[i : i + n]

    while i < len(tokens):
        tok = tokens[i]
        if not isinstance(tok, str):
            raise ParseError(f"{locus}: number where command expected")
        cmd = tok
        i += 1
        if cmd in ("M", "m"):
            if current:
                raise ParseError(f"{locus}: open subpath (missing Z before new move)")
            args = _need(2)
            i += 2
            if cmd == "m" and subpaths:
                cx, cy = cx + args[0], cy + args[1]
            else:
                cx, cy = args[0], args[1]
            sx, sy = cx, cy
            current.append(("M", cx, cy))
            # extra coordinate pairs after a move are implicit linetos
            while i + 1 < len(tokens) and not isinstance(tokens[i], str) and not isinstance(tokens[i + 1], str):
                args = tokens[i : i + 2]
                i += 2
                if cmd == "m":
                    cx, cy = cx + args[0], cy + args[1]
                else:
                    cx, cy = args[0], args[1]
                current.append(("L", cx, cy))
        elif cmd in ("L", "l"):
            if not current:
                raise ParseError(f"{locus}: lineto before moveto")
            while i < len(tokens) and not isinstance(tokens[i], str):
                args = _need(2)
                i += 2
                if cmd == "l":
                    cx, cy = cx + args[0], cy + args[1]
                else:
                    cx, cy = args[0], args[1]
                current.append(("L", cx, cy))
        elif cmd in ("C", "c"):
            if not current:
                raise ParseError(f"{locus}: curveto before moveto")
            while i < len(tokens) and not isinstance(tokens[i], str):
                args = _need(6)
                i += 6
                if cmd == "c":
                    args = [args[0] + cx, args[1] + cy, args[2] + cx, args[3] + cy, args[4] + cx, args[5] + cy]
                current.append(("C", *args))
                cx, cy = args[4], args[5]
        elif cmd in ("A", "a"):
            if not current:
                raise ParseError(f"{locus}: arc before moveto")
            while i < len(tokens) and not isinstance(tokens[i], str):
                args = _need(7)
                i += 7
                rx, ry, rot, large, sweep, x, y = args
                if large not in (0.0, 1.0) or sweep not in (0.0, 1.0):
                    raise ParseError(f"{locus}: arc flags must be 0 or 1")
                if cmd == "a":
                    x, y = x + cx, y + cy
                current.append(("A", rx, ry, rot, int(large), int(sweep), x, y))
                cx, cy = x, y
        elif cmd in ("Z", "z"):
            if not current:
                raise ParseError(f"{locus}: close before moveto")
            current.append(("Z",))
            subpaths.append(current)
            current = []
            cx, cy = sx, sy
        else:
            raise ParseError(f"{locus}: unsupported path command {cmd!r}")
    if current:
        raise ParseError(f"{locus}: open subpath (no terminating Z)")
    if not subpaths:
        raise ParseError(f"{locus}: empty path data")
    return subpaths


def _transform_subpath(commands: list[tuple], tf: np.ndarray) -> list[tuple]:
    if np.allclose(tf, np.eye(3), atol=0.0):
        return commands
    out: list[tuple] = []
    cx = cy = 0.0
    for cmd in commands:
        op = cmd[0]
        if op in ("M", "L"):
            cx, cy = cmd[1], cmd[2]
            out.append((op, *_apply_affine(tf, cx, cy)))
        elif op == "C":
            out.append(
                (
                    "C",
                    *_apply_affine(tf, cmd[1], cmd[2]),
                    *_apply_affine(tf, cmd[3], cmd[4]),
                    *_apply_affine(tf, cmd[5], cmd[6]),
                )
            )
            cx, cy = cmd[5], cmd[6]
        elif op == "A":
            # arcs do not transform simply; rewrite as cubics first
            for sub in arc_to_cubics(cx, cy, cmd[1], cmd[2], cmd[3], cmd[4], cmd[5], cmd[6], cmd[7]):
                if sub[0] == "L":
                    out.append(("L", *_apply_affine(tf, sub[1], sub[2])))
                else:
                    out.append(
                        (
                            "C",
                            *_apply_affine(tf, sub[1], sub[2]),
                            *_apply_affine(tf, sub[3], sub[4]),
                            *_apply_affine(tf, sub[5], sub[6]),
                        )
                    )
            cx, cy = cmd[6], cmd[7]
        elif op == "Z":
            out.append(("Z",))
    return out


# --- shape elements -------------------------------------------------------------


def _rect_commands(x, y, w, h, rx, ry) -> list[tuple]:
    if w <= 0 or h <= 0:
        raise ParseError("rect with non-positive size")
    if rx == 0 and ry == 0:
        return [("M", x, y), ("L", x + w, y), ("L", x + w, y + h), ("L", x, y + h), ("Z",)]
    rx = min(rx if rx > 0 else ry, w / 2)
    ry = min(ry if ry > 0 else rx, h / 2)
    return [
        ("M", x + rx, y),
        ("L", x + w - rx, y),
        ("A", rx, ry, 0.0, 0, 1, x + w, y + ry),
        ("L", x + w, y + h - ry),
        ("A", rx, ry, 0.0, 0, 1, x + w - rx, y + h),
        ("L", x + rx, y + h),
        ("A", rx, ry, 0.0, 0, 1, x, y + h - ry),
        ("L", x, y + ry),
        ("A", rx, ry, 0.0, 0, 1, x + rx, y),
        ("Z",),
    ]


def _ellipse_commands(cx, cy, rx, ry) -> list[tuple]:
    if rx <= 0 or ry <= 0:
        raise ParseError("circle/ellipse with non-positive radius")
    return [
        ("M", cx + rx, cy),
        ("A", rx, ry, 0.0, 1, 1, cx - rx, cy),
        ("A", rx, ry, 0.0, 1, 1, cx + rx, cy),
        ("Z",),
    ]


# --- document parsing -------------------------------------------------------------


def _local_tag(el) -> str:
    return el.tag.rsplit("}", 1)[-1]


def _resolve_fill(el) -> RGBA:
    style = {}
    for chunk in (el.get("style") or "").split(";"):
        if ":" in chunk:
            key, val = chunk.split(":", 1)
            style[key.strip()] = val.strip()
    fill = style.get("fill", el.get("fill", "black"))
    opacity = float(style.get("fill-opacity", el.get("fill-opacity", 1.0)))
    opacity *= float(style.get("opacity", el.get("opacity", 1.0)))
    return parse_color(fill, opacity)


_IGNORED_TAGS = {"title", "desc", "metadata"}


def _collect_specs(el, tf: np.ndarray, specs: list[PathSpec], locus: str) -> None:
    for k, child in enumerate(el):
        tag = _local_tag(child)
        child_locus = f"{locus}/{tag}[{k}]"
        if tag in _IGNORED_TAGS:
            continue
        if tag == "g":
            child_tf = tf
            if child.get("transform"):
                child_tf = tf @ _parse_transform(child.get("transform"))
            _collect_specs(child, child_tf, specs, child_locus)
            continue
        el_tf = tf
        if child.get("transform"):
            el_tf = tf @ _parse_transform(child.get("transform"))
        if tag == "path":
            d = child.get("d")
            if not d:
                raise ParseError(f"{child_locus}: path without d attribute")
            subpaths = parse_path_data(d, child_locus)
        elif tag == "rect":
            subpaths = [
                _rect_commands(
                    float(child.get("x", 0)),
                    float(child.get("y", 0)),
                    float(child.get("width", 0)),
                    float(child.get("height", 0)),
                    float(child.get("rx", 0)),
                    float(child.get("ry", 0)),
                )
            ]
        elif tag == "circle":
            r = float(child.get("r", 0))
            subpaths = [_ellipse_commands(float(child.get("cx", 0)), float(child.get("cy", 0)), r, r)]
        elif tag == "ellipse":
            subpaths = [
                _ellipse_commands(
                    float(child.get("cx", 0)),
                    float(child.get("cy", 0)),
                    float(child.get("rx", 0)),
                    float(child.get("ry", 0)),
                )
            ]
        else:
            raise ParseError(f"{child_locus}: unsupported element <{tag}>")
        fill = _resolve_fill(child)
        for sub in subpaths:
            specs.append(
                PathSpec(
                    commands=tuple(_transform_subpath(sub, el_tf)),
                    fill=fill,
                    document_index=len(specs),
                )
            )


def parse_clipart(
    document: bytes | str,
    kinds: dict[int, str] | None = None,
    flatten_tolerance: float = 1e-3,
) -> Clipart:
    """Parse an SVG document into a normalized Clipart.

    `kinds` optionally overrides path kinds ({path id: "geometry"|"shading"});
    `flatten_tolerance` is in normalized units.
    """
    try:
        root = ET.fromstring(document)
    except ET.ParseError as exc:
        raise ParseError(f"malformed XML: {exc}") from exc
    if _local_tag(root) != "svg":
        raise ParseError(f"root element is <{_local_tag(root)}>, expected <svg>")
    specs: list[PathSpec] = []
    _collect_specs(root, np.eye(3), specs, "svg")
    if not specs:
        raise EmptyDocumentError("document contains no paths")

    # First flatten coarsely to find the tight bbox, then re-flatten with the
    # tolerance expressed in normalized units.
    coords = np.array(
        [v for spec in specs for cmd in spec.commands for v in cmd[1:] if not isinstance(v, int)],
        dtype=np.float64,
    )
    span = float(max(coords.max() - coords.min(), 1e-12)) if coords.size else 1.0
    rough = [flatten_path(spec, span * 1e-3) for spec in specs]
    allpts = np.vstack(rough)
    lo = allpts.min(axis=0)
    hi = allpts.max(axis=0)
    bbox = BBox(float(lo[0]), float(lo[1]), float(hi[0] - lo[0]), float(hi[1] - lo[1]))
    frame = normalized_frame(rough)
    tf = NormTransform(scale=frame.scale, cx=frame.cx, cy=frame.cy, flip_y=True)

    doc_tolerance = flatten_tolerance / tf.scale * 0.9
    paths = []
    for spec in specs:
        poly = flatten_path(spec, doc_tolerance)
        kind = PathKind.GEOMETRY
        if kinds and spec.document_index in kinds:
            kind = PathKind(kinds[spec.document_index])
        paths.append(
            ClosedPath(
                id=spec.document_index,
                polygon=tf.apply(poly),
                fill=spec.fill,
                layer=spec.document_index,
                kind=kind,
                source={"d": d_string(spec.commands)},
            )
        )
    return Clipart(paths=tuple(paths), bbox=bbox, transform=tf)


# --- serialization ----------------------------------------------------------------


def d_string(commands) -> str:
    parts = []
    for cmd in commands:
        vals = []
        for v in cmd[1:]:
            vals.append(str(int(v)) if isinstance(v, int) else repr(float(v)))
        parts.append(cmd[0] + ((" " + " ".join(vals)) if vals else ""))
    return " ".join(parts)


def _polygon_d(polygon: np.ndarray) -> str:
    head = f"M {float(polygon[0, 0])!r} {float(polygon[0, 1])!r}"
    body = " ".join(f"L {float(x)!r} {float(y)!r}" for x, y in polygon[1:])
    return f"{head} {body} Z"


def _path_d_in_document_coords(path: ClosedPath, transform) -> str:
    if path.source and "d" in path.source:
        return path.source["d"]
    return _polygon_d(transform.invert(path.polygon))


def serialize_clipart(clipart: Clipart) -> bytes:
    """Write the clipart back to SVG in its original document coordinates."""
    b = clipart.bbox
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{b.x!r} {b.y!r} {b.width!r} {b.height!r}">',
    ]
    for path in clipart.paths:
        color, opacity = color_to_svg(path.fill)
        d = _path_d_in_document_coords(path, clipart.transform)
        opac = f' fill-opacity="{opacity!r}"' if opacity != 1.0 else ""
        lines.append(f'  <path d="{d}" fill="{color}"{opac}/>')
    lines.append("</svg>")
    return "\n".join(lines).encode()


def strip_fills(clipart: Clipart) -> bytes:
    """Outline-only document of the geometry paths (stroked, unfilled); the
    interchange toward an external guiding-shape generator."""
    geo = geometry_paths(clipart)
    if not geo:
        raise EmptyDocumentError("clipart has no geometry paths to outline")
    b = clipart.bbox
    stroke_w = max(b.width, b.height) * 0.004
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{b.x!r} {b.y!r} {b.width!r} {b.height!r}">',
    ]
    for path in geo:
        d = _path_d_in_document_coords(path, clipart.transform)
        lines.append(f'  <path d="{d}" fill="none" stroke="#000000" stroke-width="{stroke_w!r}"/>')
    lines.append("</svg>")
    return "\n".join(lines).encode()
