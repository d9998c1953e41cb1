"""Generate demo/chair.xyz: a synthetic guiding point cloud for demo/chair.svg.

Stands in for an external single-view reconstruction: boxes behind each
footprint, with the legs split into near/far pairs and some noise thrown in
so the mask filter has something to cull.
"""

from pathlib import Path

import numpy as np

from clipscaffold.svg import parse_clipart
from clipscaffold.synthetic import sample_box_surface

HERE = Path(__file__).parent


def main():
    clip = parse_clipart((HERE / "chair.svg").read_bytes(), kinds={4: "shading"})
    rng = np.random.default_rng(404)
    clouds = []
    depths = {0: [(0.0, 0.10)], 1: [(0.1, 0.5)], 2: [(0.0, 0.06), (0.44, 0.06)], 3: [(0.0, 0.06), (0.44, 0.06)]}
    for path in clip.paths[:4]:
        lo, hi = path.polygon.min(0), path.polygon.max(0)
        for z_c, d in depths[path.id]:
            clouds.append(
                sample_box_surface(rng, lo[0], lo[1], hi[0] - lo[0], hi[1] - lo[1], z_c, d, 900)
            )
    # reconstruction noise in the background gaps, culled by the mask filter;
    # kept inside the clipart bbox so it cannot skew the bbox alignment
    from clipscaffold.raster import rasterize_mask

    mask = rasterize_mask(clip, 256)
    all_xy = np.vstack([p.polygon for p in clip.paths])
    lo, hi = all_xy.min(0), all_xy.max(0)
    candidates = rng.uniform([lo[0], lo[1], -0.3], [hi[0], hi[1], 0.6], (3000, 3))
    background = np.array([not mask.contains(p[0], p[1]) for p in candidates])
    clouds.append(candidates[background][:400])
    pts = np.vstack(clouds)
    lines = [f"{p[0]:.8f} {p[1]:.8f} {p[2]:.8f}" for p in pts]
    (HERE / "chair.xyz").write_text("\n".join(lines) + "\n")
    print(f"wrote {HERE / 'chair.xyz'} ({len(pts)} points)")


if __name__ == "__main__":
    main()
