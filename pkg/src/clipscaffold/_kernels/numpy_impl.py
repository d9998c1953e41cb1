"""Pure-numpy implementations of the hot geometry kernels.

All functions take float64 arrays. Point batches are chunked so the
point-by-edge broadcast temporaries stay bounded. The arithmetic mirrors
numba_impl expression for expression so both backends agree per point.
"""

import numpy as np

# Cap on points*edges entries materialized per broadcast chunk.
_CHUNK_BUDGET = 2_000_000


def _chunks(n, per_item):
    step = max(1, _CHUNK_BUDGET // max(1, per_item))
    for lo in range(0, n, step):
        yield lo, min(n, lo + step)


def polygon_edge_distance(points, poly):
    """Unsigned distance from 2D points (N,2) to the closed boundary of poly (V,2)."""
    points = np.ascontiguousarray(points, dtype=np.float64)
    poly = np.ascontiguousarray(poly, dtype=np.float64)
    n = points.shape[0]
    a = poly
    b = np.roll(poly, -1, axis=0)
    abx = b[:, 0] - a[:, 0]
    aby = b[:, 1] - a[:, 1]
    ab2 = abx * abx + aby * aby
    safe_ab2 = np.where(ab2 > 0.0, ab2, 1.0)
    out = np.empty(n, dtype=np.float64)
    for lo, hi in _chunks(n, poly.shape[0]):
        apx = points[lo:hi, 0, None] - a[None, :, 0]
        apy = points[lo:hi, 1, None] - a[None, :, 1]
        t = (apx * abx[None, :] + apy * aby[None, :]) / safe_ab2[None, :]
        t = np.clip(t, 0.0, 1.0)
        dx = apx - t * abx[None, :]
        dy = apy - t * aby[None, :]
        out[lo:hi] = np.sqrt(np.min(dx * dx + dy * dy, axis=1))
    return out


def polygon_parity(points, poly):
    """Even-odd crossing parity of 2D points (N,2) against poly (V,2)."""
    points = np.ascontiguousarray(points, dtype=np.float64)
    poly = np.ascontiguousarray(poly, dtype=np.float64)
    n = points.shape[0]
    x0 = poly[:, 0]
    y0 = poly[:, 1]
    x1 = np.roll(x0, -1)
    y1 = np.roll(y0, -1)
    dy = y1 - y0
    safe_dy = np.where(dy != 0.0, dy, 1.0)
    out = np.empty(n, dtype=np.bool_)
    for lo, hi in _chunks(n, poly.shape[0]):
        px = points[lo:hi, 0, None]
        py = points[lo:hi, 1, None]
        straddle = (y0[None, :] <= py) != (y1[None, :] <= py)
        xi = x0[None, :] + (py - y0[None, :]) / safe_dy[None, :] * (x1 - x0)[None, :]
        crossings = np.sum(straddle & (px < xi), axis=1)
        out[lo:hi] = (crossings % 2).astype(np.bool_)
    return out


def prism_distances(points, poly, z_center, thickness, boundary_tol=1e-9):
    """Distance from 3D points (N,3) to the solid prism (poly swept over
    z_center +- thickness/2). Zero inside the closed solid."""
    points = np.ascontiguousarray(points, dtype=np.float64)
    a = polygon_edge_distance(points[:, :2], poly)
    inside_xy = polygon_parity(points[:, :2], poly) | (a <= boundary_tol)
    a_out = np.where(inside_xy, 0.0, a)
    b = np.abs(points[:, 2] - z_center) - 0.5 * thickness
    b_out = np.maximum(b, 0.0)
    return np.sqrt(a_out * a_out + b_out * b_out)


def fill_triangles(uv, depth, owner, width, height, depth_buf, owner_buf):
    """Z-buffer rasterization of triangles into pre-allocated buffers.

    uv: (T,3,2) vertex positions in pixel space (pixel (row,col) center is
    (col+0.5, row+0.5)); depth: (T,3) with larger = closer to camera;
    owner: (T,) int32 written into owner_buf on depth wins.
    """
    uv = np.ascontiguousarray(uv, dtype=np.float64)
    depth = np.ascontiguousarray(depth, dtype=np.float64)
    for t in range(uv.shape[0]):
        x0, y0 = uv[t, 0]
        x1, y1 = uv[t, 1]
        x2, y2 = uv[t, 2]
        area = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
        if area == 0.0:
            continue
        jmin = max(int(np.ceil(min(x0, x1, x2) - 0.5)), 0)
        jmax = min(int(np.floor(max(x0, x1, x2) - 0.5)), width - 1)
        imin = max(int(np.ceil(min(y0, y1, y2) - 0.5)), 0)
        imax = min(int(np.floor(max(y0, y1, y2) - 0.5)), height - 1)
        if jmin > jmax or imin > imax:
            continue
        px = np.arange(jmin, jmax + 1, dtype=np.float64) + 0.5
        py = np.arange(imin, imax + 1, dtype=np.float64) + 0.5
        px = px[None, :]
        py = py[:, None]
        w0 = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
        w1 = (x0 - x2) * (py - y2) - (y0 - y2) * (px - x2)
        w2 = (x1 - x0) * (py - y0) - (y1 - y0) * (px - x0)
        if area > 0.0:
            covered = (w0 >= 0.0) & (w1 >= 0.0) & (w2 >= 0.0)
        else:
            covered = (w0 <= 0.0) & (w1 <= 0.0) & (w2 <= 0.0)
        z = (w0 * depth[t, 0] + w1 * depth[t, 1] + w2 * depth[t, 2]) / area
        view = depth_buf[imin : imax + 1, jmin : jmax + 1]
        wins = covered & (z > view)
        np.copyto(view, z, where=wins)
        np.copyto(owner_buf[imin : imax + 1, jmin : jmax + 1], owner[t], where=wins)
