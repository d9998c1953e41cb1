"""Viewpoints and the orthographic camera basis.

Scene convention: the clipart lies in the xy-plane with y up; the input
view camera sits at +z looking along -z, so "in front" means larger z.
Azimuth rotates the camera about the y axis, elevation lifts it toward +y.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Viewpoint:
    """Camera description. ortho_scale is scene units per image height;
    None lets the renderer frame the scene bbox with a 5% margin."""

    azimuth: float = 0.0
    elevation: float = 0.0
    ortho_scale: float | None = None

    def __post_init__(self):
        if not -90.0 <= self.elevation <= 90.0:
            raise ValueError(f"elevation {self.elevation} outside [-90, 90]")
        if self.ortho_scale is not None and not self.ortho_scale > 0.0:
            raise ValueError("ortho_scale must be positive")

    def basis(self):
        """Right/up/forward unit vectors. Forward points from the scene
        toward the camera, so larger projected depth means closer."""
        az = math.radians(self.azimuth)
        el = math.radians(self.elevation)
        forward = np.array(
            [math.cos(el) * math.sin(az), math.sin(el), math.cos(el) * math.cos(az)]
        )
        up = np.array(
            [-math.sin(el) * math.sin(az), math.cos(el), -math.sin(el) * math.cos(az)]
        )
        right = np.cross(up, forward)
        return right, up, forward


PRESETS = {
    "front": Viewpoint(0.0, 0.0),
    "side": Viewpoint(90.0, 0.0),
    "top": Viewpoint(0.0, 90.0),
    "upper45": Viewpoint(45.0, 45.0),
}


def preset(name: str) -> Viewpoint:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown viewpoint preset {name!r}; choose from {sorted(PRESETS)}")
