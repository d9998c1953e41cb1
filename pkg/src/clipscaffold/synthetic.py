"""Synthetic ground-truth recovery experiment.

Scenes of axis-aligned boxes play the role of the reference model: their
front-view footprints become the clipart, surface samples become the
guiding shape, and the solver must recover each box's thickness and depth
without annotations. This is the `roundtrip` CLI subcommand.
"""

from __future__ import annotations

import colorsys
import time
from dataclasses import dataclass, replace

import numpy as np

from .config import RefineConfig, SolveConfig
from .extrusion import solve
from .model import BBox, Clipart, ClosedPath, PathKind
from .raster import rasterize_mask
from .shape import GuidingShape, align_shape, filter_by_mask

_GRID = [(0, 0), (1, 0), (2, 0), (0, 1), (1, 1), (2, 1)]  # 3x2 cells


@dataclass(frozen=True)
class SyntheticScene:
    clipart: Clipart
    shape: GuidingShape
    truth: tuple[tuple[float, float], ...]  # (d, z) per path


def sample_box_surface(rng, x0, y0, w, h, z, d, count) -> np.ndarray:
    """Uniform samples over the 6 faces of an axis-aligned box, area-weighted."""
    z_lo, z_hi = z - d / 2.0, z + d / 2.0
    areas = np.array([w * h, w * h, w * d, w * d, h * d, h * d], dtype=np.float64)
    face = rng.choice(6, size=count, p=areas / areas.sum())
    u = rng.random(count)
    v = rng.random(count)
    pts = np.empty((count, 3), dtype=np.float64)
    for k in range(count):
        a, b = u[k], v[k]
        if face[k] == 0:  # bottom cap
            pts[k] = (x0 + a * w, y0 + b * h, z_lo)
        elif face[k] == 1:  # top cap
            pts[k] = (x0 + a * w, y0 + b * h, z_hi)
        elif face[k] == 2:  # y = y0 wall
            pts[k] = (x0 + a * w, y0, z_lo + b * d)
        elif face[k] == 3:  # y = y0 + h wall
            pts[k] = (x0 + a * w, y0 + h, z_lo + b * d)
        elif face[k] == 4:  # x = x0 wall
            pts[k] = (x0, y0 + a * h, z_lo + b * d)
        else:  # x = x0 + w wall
            pts[k] = (x0 + w, y0 + a * h, z_lo + b * d)
    return pts


def generate_scene(seed: int, min_points: int = 2000) -> SyntheticScene:
    """One scene of 2-6 disjoint axis-aligned ground-truth prisms."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 7))
    cells = rng.permutation(len(_GRID))[:n]
    cell_w, cell_h = 1.0 / 3.0, 1.0 / 2.0

    paths = []
    truth = []
    clouds = []
    specs = []
    for k, cell in enumerate(cells):
        gx, gy = _GRID[cell]
        margin_x = (0.08 + 0.12 * rng.random()) * cell_w
        margin_y = (0.08 + 0.12 * rng.random()) * cell_h
        w = cell_w - 2 * margin_x - rng.random() * 0.25 * cell_w
        h = cell_h - 2 * margin_y - rng.random() * 0.25 * cell_h
        x0 = gx * cell_w + margin_x + rng.random() * (cell_w - w - 2 * margin_x)
        y0 = gy * cell_h + margin_y + rng.random() * (cell_h - h - 2 * margin_y)
        d = 0.05 + 0.35 * rng.random()
        z = -0.3 + 0.6 * rng.random()
        specs.append((x0, y0, w, h, z, d))
        truth.append((d, z))
        poly = np.array(
            [[x0, y0], [x0 + w, y0], [x0 + w, y0 + h], [x0, y0 + h]], dtype=np.float64
        )
        fill = colorsys.hsv_to_rgb(k / max(n, 1), 0.65, 0.9) + (1.0,)
        paths.append(ClosedPath(id=k, polygon=poly, fill=fill, layer=k, kind=PathKind.GEOMETRY))

    areas = np.array([2 * w * h + 2 * (w + h) * d for (_, _, w, h, _, d) in specs])
    total = max(min_points, 400 * n)
    counts = np.maximum((total * areas / areas.sum()).astype(int), 250)
    for (x0, y0, w, h, z, d), count in zip(specs, counts):
        clouds.append(sample_box_surface(rng, x0, y0, w, h, z, d, int(count)))

    clipart = Clipart(paths=tuple(paths), bbox=BBox(0.0, 0.0, 1.0, 1.0))
    shape = GuidingShape(np.vstack(clouds))
    return SyntheticScene(clipart=clipart, shape=shape, truth=tuple(truth))


def run_roundtrip(
    scenes: int = 20,
    seed: int = 2024,
    config: SolveConfig | None = None,
    d_rel_tol: float = 0.10,
    z_abs_tol: float = 0.05,
) -> dict:
    """Solve every synthetic scene and score ground-truth recovery."""
    if config is None:
        config = SolveConfig(refine=RefineConfig(enabled=True))
    elif not config.refine.enabled:
        config = replace(config, refine=replace(config.refine, enabled=True))
    rows = []
    recovered = 0
    total = 0
    started = time.perf_counter()
    for k in range(scenes):
        scene = generate_scene(seed + k)
        mask = rasterize_mask(scene.clipart, config.mask_resolution)
        aligned = align_shape(scene.shape, scene.clipart)
        filtered = filter_by_mask(aligned, mask)
        solution = solve(scene.clipart, filtered, [], config)
        for prism, (pid, _), (d_true, z_true) in zip(
            solution.prisms, solution.origin, scene.truth
        ):
            d_rel = abs(prism.d - d_true) / d_true
            z_abs = abs(prism.z - z_true)
            ok = d_rel <= d_rel_tol and z_abs <= z_abs_tol
            recovered += ok
            total += 1
            rows.append(
                {
                    "scene": k,
                    "path": pid,
                    "d_true": d_true,
                    "d": prism.d,
                    "d_rel_err": d_rel,
                    "z_true": z_true,
                    "z": prism.z,
                    "z_abs_err": z_abs,
                    "recovered": bool(ok),
                }
            )
    elapsed = time.perf_counter() - started
    return {
        "scenes": scenes,
        "seed": seed,
        "volumes": total,
        "recovered": recovered,
        "success_rate": recovered / total if total else 1.0,
        "max_d_rel_err": max((r["d_rel_err"] for r in rows), default=0.0),
        "max_z_abs_err": max((r["z_abs_err"] for r in rows), default=0.0),
        "elapsed_seconds": elapsed,
        "rows": rows,
    }
