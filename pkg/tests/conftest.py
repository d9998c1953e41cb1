from __future__ import annotations

import numpy as np
import pytest

from clipscaffold.model import BBox, Clipart, ClosedPath, PathKind

UNIT_SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])

TWO_RECT_SVG = b"""<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 100 100">
  <rect x="10" y="10" width="35" height="80" fill="#cc3333"/>
  <rect x="55" y="20" width="35" height="60" fill="#3366cc"/>
</svg>"""

CHAIR_SVG = b"""<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 100 120">
  <rect x="20" y="10" width="60" height="45" fill="#996633"/>
  <rect x="18" y="55" width="64" height="10" fill="#aa7744"/>
  <rect x="24" y="65" width="10" height="45" fill="#774e22"/>
  <rect x="66" y="65" width="10" height="45" fill="#774e22"/>
  <path d="M 30 20 L 45 20 L 45 40 L 30 40 Z" fill="#ffffff" fill-opacity="0.35"/>
</svg>"""

OVERLAP_SVG = b"""<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 10 10">
  <rect x="1" y="1" width="6" height="6" fill="red"/>
  <rect x="4" y="4" width="5" height="5" fill="blue"/>
</svg>"""


def make_clipart(polygons, kinds=None, fills=None, layers=None) -> Clipart:
    """Clipart from pre-normalized polygons (already inside the unit square)."""
    paths = []
    for k, poly in enumerate(polygons):
        paths.append(
            ClosedPath(
                id=k,
                polygon=np.asarray(poly, dtype=np.float64),
                fill=(fills[k] if fills else (0.5, 0.2, 0.2, 1.0)),
                layer=(layers[k] if layers else k),
                kind=(kinds[k] if kinds else PathKind.GEOMETRY),
            )
        )
    return Clipart(paths=tuple(paths), bbox=BBox(0, 0, 1, 1))


@pytest.fixture
def unit_square_clipart() -> Clipart:
    return make_clipart([UNIT_SQUARE])


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240811)
