"""Hot loop of the quadrature oracle: a fused moment reduction over grid points.

The numba kernel is used when numba imports cleanly and SPINHALL_NO_NUMBA
is unset; otherwise the numpy implementation is used.  Both return the
same 16 sums.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

_DISABLED = os.environ.get("SPINHALL_NO_NUMBA", "") not in ("", "0")

try:
    if _DISABLED:
        raise ImportError("disabled by SPINHALL_NO_NUMBA")
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False


def reduce_moments_numpy(y, w, u, v):
    """Sums of w*u, w*u*y, w*v, w*u*y*y (6 entries) and w*(y x v)."""
    wu = w * u
    wv = w[:, None] * v
    out = np.empty(16)
    out[0] = wu.sum()
    out[1:4] = wu @ y
    out[4:7] = wv.sum(axis=0)
    m2 = (y * wu[:, None]).T @ y
    out[7:13] = m2[[0, 0, 0, 1, 1, 2], [0, 1, 2, 1, 2, 2]]
    out[13:16] = np.cross(y, wv).sum(axis=0)
    return out


if HAVE_NUMBA:
    @njit(cache=True, nogil=True, fastmath=False)
    def _reduce_numba(y, w, u, v):
        out = np.zeros(16)
        for i in range(y.shape[0]):
            y0, y1, y2 = y[i, 0], y[i, 1], y[i, 2]
            wu = w[i] * u[i]
            v0, v1, v2 = w[i] * v[i, 0], w[i] * v[i, 1], w[i] * v[i, 2]
            out[0] += wu
            out[1] += wu * y0
            out[2] += wu * y1
            out[3] += wu * y2
            out[4] += v0
            out[5] += v1
            out[6] += v2
            out[7] += wu * y0 * y0
            out[8] += wu * y0 * y1
            out[9] += wu * y0 * y2
            out[10] += wu * y1 * y1
            out[11] += wu * y1 * y2
            out[12] += wu * y2 * y2
            out[13] += y1 * v2 - y2 * v1
            out[14] += y2 * v0 - y0 * v2
            out[15] += y0 * v1 - y1 * v0
        return out


def reduce_moments(y, w, u, v, workers: int | None = None, use_numba: bool | None = None):
    """Fused moment reduction, split into slabs processed by a thread pool."""
    y = np.ascontiguousarray(y, dtype=float).reshape(-1, 3)
    w = np.ascontiguousarray(w, dtype=float).ravel()
    u = np.ascontiguousarray(u, dtype=float).ravel()
    v = np.ascontiguousarray(v, dtype=float).reshape(-1, 3)
    use_numba = HAVE_NUMBA if use_numba is None else (use_numba and HAVE_NUMBA)
    fn = _reduce_numba if use_numba else reduce_moments_numpy
    workers = workers or min(4, os.cpu_count() or 1)
    if workers <= 1 or y.shape[0] < 4096:
        return fn(y, w, u, v)
    bounds = np.linspace(0, y.shape[0], workers + 1).astype(int)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda ab: fn(y[ab[0]:ab[1]], w[ab[0]:ab[1]], u[ab[0]:ab[1]], v[ab[0]:ab[1]]),
                              zip(bounds[:-1], bounds[1:])))
    return np.sum(parts, axis=0)
