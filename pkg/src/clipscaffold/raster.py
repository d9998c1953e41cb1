"""Foreground mask rasterization.

The mask samples pixel centers over the normalized unit square with the
even-odd rule, row 0 at the top (scene y = 1). It culls guiding-shape
noise the same way the known clipart footprint replaces a predicted
foreground map.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image

from . import _kernels
from .model import Clipart, geometry_paths


@dataclass(frozen=True)
class MaskImage:
    width: int
    height: int
    bits: np.ndarray  # (H,W) bool, row 0 = top (y = 1)

    def __post_init__(self):
        bits = np.ascontiguousarray(self.bits, dtype=np.bool_)
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)
        if self.width < 1 or self.height < 1:
            raise ValueError("mask must be at least 1x1")

    @property
    def foreground_count(self) -> int:
        return int(self.bits.sum())

    def pixel_of(self, x: float, y: float) -> tuple[int, int] | None:
        """(row, col) of the pixel containing normalized point (x, y),
        or None outside the unit square."""
        if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
            return None
        col = min(int(x * self.width), self.width - 1)
        row = min(int((1.0 - y) * self.height), self.height - 1)
        return row, col

    def contains(self, x: float, y: float) -> bool:
        pix = self.pixel_of(x, y)
        return bool(self.bits[pix]) if pix is not None else False


def pixel_centers(width: int, height: int) -> np.ndarray:
    """(H*W, 2) normalized coordinates of pixel centers, row-major from the top."""
    xs = (np.arange(width) + 0.5) / width
    ys = 1.0 - (np.arange(height) + 0.5) / height
    gx, gy = np.meshgrid(xs, ys)
    return np.column_stack([gx.ravel(), gy.ravel()])


def rasterize_mask(clipart: Clipart, resolution: int = 256) -> MaskImage:
    """Foreground = pixel centers inside the union of geometry paths."""
    if resolution < 16:
        raise ValueError("mask resolution must be >= 16")
    centers = pixel_centers(resolution, resolution)
    fg = np.zeros(centers.shape[0], dtype=np.bool_)
    for path in geometry_paths(clipart):
        fg |= _kernels.polygon_parity(centers, path.polygon)
    return MaskImage(resolution, resolution, fg.reshape(resolution, resolution))


def mask_to_png(mask: MaskImage) -> bytes:
    img = Image.fromarray(mask.bits).convert("1")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def mask_from_png(data: bytes) -> MaskImage:
    img = Image.open(io.BytesIO(data)).convert("1")
    bits = np.asarray(img, dtype=np.bool_)
    return MaskImage(img.width, img.height, bits)
