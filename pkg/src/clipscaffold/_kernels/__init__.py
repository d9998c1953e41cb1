"""Hot geometry kernels with two interchangeable backends.

The numba backend is used when numba imports cleanly; set SCAFFOLD_NUMBA=0
to force the pure-numpy fallback. Both backends implement the same
arithmetic, so results match per point; benchmarks/bench_kernels.py
compares their throughput.
"""

import os

_flag = os.environ.get("SCAFFOLD_NUMBA", "1").strip().lower()
_want_numba = _flag not in ("0", "false", "no", "off")

if _want_numba:
    try:
        from . import numba_impl as _impl

        BACKEND = "numba"
    except ImportError:
        from . import numpy_impl as _impl

        BACKEND = "numpy"
else:
    from . import numpy_impl as _impl

    BACKEND = "numpy"

polygon_edge_distance = _impl.polygon_edge_distance
polygon_parity = _impl.polygon_parity
prism_distances = _impl.prism_distances
fill_triangles = _impl.fill_triangles

__all__ = [
    "BACKEND",
    "polygon_edge_distance",
    "polygon_parity",
    "prism_distances",
    "fill_triangles",
]
