"""Flat-shaded scaffold rendering.

Orthographic camera, z-buffer hidden-surface removal, each prism filled
with its source path's color and no lighting (shading paths were removed,
so a lighting model would fight the clipart's style). Optional 1-px
outlines darken pixels at object and depth discontinuities.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from . import _kernels
from .camera import Viewpoint
from .extrusion import ExtrusionSolution
from .mesh import prism_mesh
from .model import RGBA
from .raster import MaskImage

_MARGIN = 1.05  # auto-framing margin around the scene bbox


@dataclass(frozen=True)
class RenderConfig:
    width: int = 512
    height: int = 512
    outline: bool = True
    bg: RGBA = (0.0, 0.0, 0.0, 0.0)
    outline_depth_jump: float = 0.05  # fraction of the scene depth range
    fills: dict = field(default_factory=dict)  # path id -> RGBA override


@dataclass(frozen=True)
class ScaffoldImage:
    width: int
    height: int
    color: np.ndarray  # (H,W,4) uint8; alpha > 0 exactly on covered pixels
    depth: np.ndarray  # (H,W) float64, -inf where unwritten
    mask: np.ndarray  # (H,W) bool

    def __post_init__(self):
        for name in ("color", "depth", "mask"):
            arr = getattr(self, name)
            arr.setflags(write=False)


def render(
    solution: ExtrusionSolution, viewpoint: Viewpoint, config: RenderConfig = RenderConfig()
) -> ScaffoldImage:
    """Render the reference model from a viewpoint.

    With an explicit ortho_scale the camera is anchored at the scene anchor
    (0.5, 0.5, z-mid), so scale 1.0 frames the normalized unit square
    exactly; with ortho_scale None the projected bbox is framed with a 5%
    margin. Deterministic for fixed inputs.
    """
    if not solution.prisms:
        raise ValueError("cannot render an empty solution")
    width, height = config.width, config.height
    right, up, forward = viewpoint.basis()

    meshes = [prism_mesh(p) for p in solution.prisms]
    z_lo = min(p.z - p.d / 2 for p in solution.prisms)
    z_hi = max(p.z + p.d / 2 for p in solution.prisms)
    all_verts = np.vstack([m.vertices for m in meshes])
    u = all_verts @ right
    v = all_verts @ up
    w = all_verts @ forward

    if viewpoint.ortho_scale is not None:
        scale = viewpoint.ortho_scale
        anchor = np.array([0.5, 0.5, (z_lo + z_hi) / 2.0])
        center_u = float(anchor @ right)
        center_v = float(anchor @ up)
    else:
        span_u = float(u.max() - u.min())
        span_v = float(v.max() - v.min())
        scale = max(span_v * _MARGIN, span_u * _MARGIN * height / width, 1e-6)
        center_u = float(u.max() + u.min()) / 2.0
        center_v = float(v.max() + v.min()) / 2.0

    units_per_px = scale / height
    px = (u - center_u) / units_per_px + width / 2.0
    py = height / 2.0 - (v - center_v) / units_per_px

    tri_uv = []
    tri_depth = []
    tri_owner = []
    offset = 0
    for k, mesh in enumerate(meshes):
        faces = mesh.faces + offset
        tri_uv.append(np.stack([px[faces], py[faces]], axis=-1))
        tri_depth.append(w[faces])
        tri_owner.append(np.full(len(faces), k, dtype=np.int32))
        offset += len(mesh.vertices)
    uv = np.ascontiguousarray(np.concatenate(tri_uv), dtype=np.float64)
    depth_tri = np.ascontiguousarray(np.concatenate(tri_depth), dtype=np.float64)
    owner_tri = np.ascontiguousarray(np.concatenate(tri_owner), dtype=np.int32)

    depth_buf = np.full((height, width), -np.inf, dtype=np.float64)
    owner_buf = np.full((height, width), -1, dtype=np.int32)
    _kernels.fill_triangles(uv, depth_tri, owner_tri, width, height, depth_buf, owner_buf)

    mask = owner_buf >= 0
    fills = np.zeros((len(solution.prisms), 4), dtype=np.float64)
    for k, (pid, _) in enumerate(solution.origin):
        fills[k] = config.fills.get(pid, (0.6, 0.6, 0.6, 1.0))
    color = np.zeros((height, width, 4), dtype=np.uint8)
    bg_rgb = np.clip(np.array(config.bg[:3]) * 255.0, 0, 255).astype(np.uint8)
    color[..., :3] = bg_rgb
    covered_fill = fills[np.where(mask, owner_buf, 0)]
    rgb = np.clip(covered_fill[..., :3] * 255.0 + 0.5, 0, 255).astype(np.uint8)
    color[mask, :3] = rgb[mask]
    color[mask, 3] = 255

    if config.outline:
        outline = np.zeros((height, width), dtype=bool)
        depth_range = max(float(depth_buf[mask].max() - depth_buf[mask].min()), 1e-9) if mask.any() else 1.0
        jump = config.outline_depth_jump * depth_range
        for axis in (0, 1):
            o_a = owner_buf
            o_b = np.roll(owner_buf, -1, axis=axis)
            d_a = depth_buf
            d_b = np.roll(depth_buf, -1, axis=axis)
            valid = np.ones_like(outline)
            if axis == 0:
                valid[-1, :] = False
            else:
                valid[:, -1] = False
            differs = valid & (o_a != o_b)
            both = valid & (o_a == o_b) & (o_a >= 0)
            diff = np.zeros_like(d_a)
            np.subtract(d_a, d_b, out=diff, where=both)
            deep = both & (np.abs(diff) > jump)
            near_a = d_a >= d_b
            outline |= (differs | deep) & near_a & (o_a >= 0)
            hit_b = (differs | deep) & ~near_a & (o_b >= 0)
            outline |= np.roll(hit_b, 1, axis=axis)
        edge_fill = fills[np.where(mask, owner_buf, 0)]
        dark = np.clip(edge_fill[..., :3] * 0.6 * 255.0 + 0.5, 0, 255).astype(np.uint8)
        paint = outline & mask
        color[paint, :3] = dark[paint]

    return ScaffoldImage(width=width, height=height, color=color, depth=depth_buf, mask=mask)


def silhouette_iou(image: ScaffoldImage, mask: MaskImage) -> float:
    """Intersection-over-union of the rendered silhouette and a foreground
    mask of identical dimensions; 1.0 when both are empty."""
    if (image.height, image.width) != (mask.height, mask.width):
        raise ValueError("image and mask dimensions differ; resample first")
    a = image.mask
    b = mask.bits
    union = int(np.sum(a | b))
    if union == 0:
        return 1.0
    return float(np.sum(a & b)) / union


def image_to_png(image: ScaffoldImage, background: RGBA | None = None) -> bytes:
    """Encode as RGBA PNG; an opaque background, when given, is composited
    under the covered pixels at save time."""
    rgba = image.color.copy()
    if background is not None:
        bg = np.clip(np.array(background) * 255.0, 0, 255).astype(np.uint8)
        flat = np.empty_like(rgba)
        flat[..., :] = bg
        alpha = rgba[..., 3:4].astype(np.float64) / 255.0
        flat[..., :3] = (rgba[..., :3] * alpha + flat[..., :3] * (1 - alpha) + 0.5).astype(np.uint8)
        rgba = flat
    buf = io.BytesIO()
    Image.fromarray(rgba, mode="RGBA").save(buf, format="PNG")
    return buf.getvalue()
