"""Numba-jitted implementations of the hot geometry kernels.

Expression-for-expression the same arithmetic as numpy_impl so the two
backends produce matching results per point.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def _edge_distance_one(px, py, poly):
    nv = poly.shape[0]
    best = np.inf
    for k in range(nv):
        ax = poly[k, 0]
        ay = poly[k, 1]
        knext = k + 1 if k + 1 < nv else 0
        abx = poly[knext, 0] - ax
        aby = poly[knext, 1] - ay
        ab2 = abx * abx + aby * aby
        if ab2 > 0.0:
            t = ((px - ax) * abx + (py - ay) * aby) / ab2
            if t < 0.0:
                t = 0.0
            elif t > 1.0:
                t = 1.0
        else:
            t = 0.0
        dx = (px - ax) - t * abx
        dy = (py - ay) - t * aby
        d2 = dx * dx + dy * dy
        if d2 < best:
            best = d2
    return math.sqrt(best)


@njit(cache=True)
def _parity_one(px, py, poly):
    nv = poly.shape[0]
    crossings = 0
    for k in range(nv):
        x0 = poly[k, 0]
        y0 = poly[k, 1]
        knext = k + 1 if k + 1 < nv else 0
        x1 = poly[knext, 0]
        y1 = poly[knext, 1]
        if (y0 <= py) != (y1 <= py):
            xi = x0 + (py - y0) / (y1 - y0) * (x1 - x0)
            if px < xi:
                crossings += 1
    return crossings % 2 == 1


@njit(cache=True)
def polygon_edge_distance(points, poly):
    n = points.shape[0]
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        out[i] = _edge_distance_one(points[i, 0], points[i, 1], poly)
    return out


@njit(cache=True)
def polygon_parity(points, poly):
    n = points.shape[0]
    out = np.empty(n, dtype=np.bool_)
    for i in range(n):
        out[i] = _parity_one(points[i, 0], points[i, 1], poly)
    return out


@njit(cache=True)
def prism_distances(points, poly, z_center, thickness, boundary_tol=1e-9):
    n = points.shape[0]
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        a = _edge_distance_one(points[i, 0], points[i, 1], poly)
        inside_xy = _parity_one(points[i, 0], points[i, 1], poly) or a <= boundary_tol
        a_out = 0.0 if inside_xy else a
        b = abs(points[i, 2] - z_center) - 0.5 * thickness
        b_out = b if b > 0.0 else 0.0
        out[i] = math.sqrt(a_out * a_out + b_out * b_out)
    return out


@njit(cache=True)
def fill_triangles(uv, depth, owner, width, height, depth_buf, owner_buf):
    for t in range(uv.shape[0]):
        x0 = uv[t, 0, 0]
        y0 = uv[t, 0, 1]
        x1 = uv[t, 1, 0]
        y1 = uv[t, 1, 1]
        x2 = uv[t, 2, 0]
        y2 = uv[t, 2, 1]
        area = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
        if area == 0.0:
            continue
        jmin = int(math.ceil(min(x0, min(x1, x2)) - 0.5))
        jmax = int(math.floor(max(x0, max(x1, x2)) - 0.5))
        imin = int(math.ceil(min(y0, min(y1, y2)) - 0.5))
        imax = int(math.floor(max(y0, max(y1, y2)) - 0.5))
        if jmin < 0:
            jmin = 0
        if imin < 0:
            imin = 0
        if jmax > width - 1:
            jmax = width - 1
        if imax > height - 1:
            imax = height - 1
        for i in range(imin, imax + 1):
            py = i + 0.5
            for j in range(jmin, jmax + 1):
                px = j + 0.5
                w0 = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
                w1 = (x0 - x2) * (py - y2) - (y0 - y2) * (px - x2)
                w2 = (x1 - x0) * (py - y0) - (y1 - y0) * (px - x0)
                if area > 0.0:
                    covered = w0 >= 0.0 and w1 >= 0.0 and w2 >= 0.0
                else:
                    covered = w0 <= 0.0 and w1 <= 0.0 and w2 <= 0.0
                if covered:
                    z = (w0 * depth[t, 0] + w1 * depth[t, 1] + w2 * depth[t, 2]) / area
                    if z > depth_buf[i, j]:
                        depth_buf[i, j] = z
                        owner_buf[i, j] = owner[t]
