"""Hot inner loops.

Each kernel exists twice: an explicit-loop version compiled with numba and a
vectorised numpy version. ``_backend.USE_NUMBA`` picks which one the public
names bind to; both are importable for benchmarking and cross-checking via
:data:`KERNELS`.

Parallel loops only write disjoint output slots, never reduce across
iterations, so results are independent of the thread count.
"""
from __future__ import annotations

import numpy as np

from ._backend import HAVE_NUMBA, USE_NUMBA, jit, prange

# --------------------------------------------------------------------------
# triangle / strong-triangle scan
# --------------------------------------------------------------------------


def _first_violation_numpy(d, tau, ultra):
    n = d.shape[0]
    first = np.full((n, n), n, dtype=np.int64)
    for j in range(n):
        if ultra:
            via = np.maximum(d[:, j, None], d[None, j, :])
        else:
            via = d[:, j, None] + d[None, j, :]
        hit = (d > via + tau) & (first == n)
        first[hit] = j
    flat = np.flatnonzero(first.ravel() < n)
    if flat.size == 0:
        return -1, -1, -1
    i, k = divmod(int(flat[0]), n)
    return i, k, int(first[i, k])


def _first_violation_loops(d, tau, ultra):
    n = d.shape[0]
    row_k = np.full(n, -1, dtype=np.int64)
    row_j = np.full(n, -1, dtype=np.int64)
    for i in prange(n):
        done = False
        for k in range(n):
            if done:
                break
            for j in range(n):
                if ultra:
                    via = max(d[i, j], d[j, k])
                else:
                    via = d[i, j] + d[j, k]
                if d[i, k] > via + tau:
                    row_k[i] = k
                    row_j[i] = j
                    done = True
                    break
    for i in range(n):
        if row_k[i] >= 0:
            return i, row_k[i], row_j[i]
    return -1, -1, -1


# --------------------------------------------------------------------------
# truncated snowflake sums  S(x, y) = sum_k sum_j |psi_jk(x) - psi_jk(y)|^q
# --------------------------------------------------------------------------
# At scale 2^k a point u = 2^k x touches j in floor(u) + {-1, 0, 1, 2}.
# Offsets are handled relative to floor(u) so no large integer is ever
# formed in floating point; 2^k x itself is exact.


def _tent_numpy(t):
    return np.maximum(0.0, 2.0 - np.abs(t))


def _snowflake_sums_numpy(x, y, coef, pow2, q):
    ux = x[:, None] * pow2[None, :]
    uy = y[:, None] * pow2[None, :]
    fx = np.floor(ux)
    fy = np.floor(uy)
    rx = ux - fx
    ry = uy - fy
    dd = fx - fy
    c = coef[None, :]
    acc = np.zeros_like(ux)
    for o in (-1.0, 0.0, 1.0, 2.0):
        vx = _tent_numpy(rx - o)
        oy = o + dd
        vy = np.where((oy >= -1.0) & (oy <= 2.0), _tent_numpy(ry - oy), 0.0)
        acc += np.abs(c * vx - c * vy) ** q
    for o in (-1.0, 0.0, 1.0, 2.0):
        ox = o - dd
        lone = (ox < -1.0) | (ox > 2.0)
        acc += np.where(lone, np.abs(c * _tent_numpy(ry - o)) ** q, 0.0)
    return acc.sum(axis=1)


def _tent(t):
    a = 2.0 - abs(t)
    return a if a > 0.0 else 0.0


def _snowflake_sums_loops(x, y, coef, pow2, q):
    m = x.shape[0]
    nk = coef.shape[0]
    out = np.empty(m)
    for i in prange(m):
        total = 0.0
        for t in range(nk):
            c = coef[t]
            ux = x[i] * pow2[t]
            uy = y[i] * pow2[t]
            fx = np.floor(ux)
            fy = np.floor(uy)
            rx = ux - fx
            ry = uy - fy
            dd = fx - fy
            part = 0.0
            for a in range(4):
                o = a - 1.0
                vx = _tent(rx - o)
                oy = o + dd
                vy = 0.0
                if oy >= -1.0 and oy <= 2.0:
                    vy = _tent(ry - oy)
                part += abs(c * vx - c * vy) ** q
            for a in range(4):
                o = a - 1.0
                ox = o - dd
                if ox < -1.0 or ox > 2.0:
                    part += abs(c * _tent(ry - o)) ** q
            total += part
        out[i] = total
    return out


# --------------------------------------------------------------------------
# defect grids:  sum_a diag[w,a]^p - sum_b edge[w,b]^p  and the term mass
# --------------------------------------------------------------------------


def _defect_grid_numpy(diag, edge, ps):
    pw = ps[:, None, :]
    sd = (diag[:, :, None] ** pw).sum(axis=1)
    se = (edge[:, :, None] ** pw).sum(axis=1)
    return sd - se, sd + se


def _defect_grid_loops(diag, edge, ps):
    w_count, g_count = ps.shape
    defect = np.empty((w_count, g_count))
    mass = np.empty((w_count, g_count))
    for w in prange(w_count):
        for g in range(g_count):
            p = ps[w, g]
            sd = 0.0
            for a in range(diag.shape[1]):
                v = diag[w, a]
                if v > 0.0:
                    sd += v ** p
            se = 0.0
            for b in range(edge.shape[1]):
                v = edge[w, b]
                if v > 0.0:
                    se += v ** p
            defect[w, g] = sd - se
            mass[w, g] = sd + se
    return defect, mass


if HAVE_NUMBA:
    _tent = jit(_tent)
    _first_violation_jit = jit(_first_violation_loops, parallel=True)
    _snowflake_sums_jit = jit(_snowflake_sums_loops, parallel=True)
    _defect_grid_jit = jit(_defect_grid_loops, parallel=True)
else:  # pragma: no cover
    _first_violation_jit = _first_violation_loops
    _snowflake_sums_jit = _snowflake_sums_loops
    _defect_grid_jit = _defect_grid_loops

KERNELS = {
    "first_violation": (_first_violation_numpy, _first_violation_jit),
    "snowflake_sums": (_snowflake_sums_numpy, _snowflake_sums_jit),
    "defect_grid": (_defect_grid_numpy, _defect_grid_jit),
}


def _pick(name):
    numpy_fn, numba_fn = KERNELS[name]
    return numba_fn if USE_NUMBA else numpy_fn


_first_violation = _pick("first_violation")
_snowflake_sums = _pick("snowflake_sums")
_defect_grid = _pick("defect_grid")


def first_violation(d: np.ndarray, tau: float, ultra: bool) -> tuple[int, int, int]:
    """First ``(i, k, j)`` in row-major order with ``d[i,k]`` exceeding the bound via ``j``."""
    i, k, j = _first_violation(np.ascontiguousarray(d, dtype=np.float64), float(tau), bool(ultra))
    return int(i), int(k), int(j)


def snowflake_sums(x, y, coef, pow2, q: float) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    return _snowflake_sums(x, y, np.ascontiguousarray(coef, dtype=np.float64),
                           np.ascontiguousarray(pow2, dtype=np.float64), float(q))


def defect_grid(diag, edge, ps) -> tuple[np.ndarray, np.ndarray]:
    return _defect_grid(np.ascontiguousarray(diag, dtype=np.float64),
                        np.ascontiguousarray(edge, dtype=np.float64),
                        np.ascontiguousarray(ps, dtype=np.float64))
