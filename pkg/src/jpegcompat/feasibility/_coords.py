"""Coordinate-wise depth-first search with interval propagation.

Each node fixes one entry of ``k``.  Every row of ``lo <= M k <= hi`` is
bounded by the sum of its fixed terms plus the min/max of its free terms;
the bounds are also pushed back onto the free domains until nothing
changes.  The next variable is the free one with the smallest domain and
its values are tried in order of distance to ``e``.
"""
from __future__ import annotations

import time

import numba as nb
import numpy as np

from ._rows import PRUNE_TOL, leaf_check


@nb.njit(cache=True)
def _propagate(M, lo_w, hi_w, dlo, dhi, max_rounds):
    """Tighten integer domains in place; False when some row is violated."""
    nm = M.shape[1]
    nrows = M.shape[0]
    for _ in range(max_rounds):
        changed = False
        for a in range(nrows):
            smin = 0.0
            smax = 0.0
            for i in range(nm):
                t = M[a, i]
                if t >= 0:
                    smin += t * dlo[i]
                    smax += t * dhi[i]
                else:
                    smin += t * dhi[i]
                    smax += t * dlo[i]
            if smin > hi_w[a] + PRUNE_TOL or smax < lo_w[a] - PRUNE_TOL:
                return False
            for i in range(nm):
                if dlo[i] == dhi[i]:
                    continue
                t = M[a, i]
                if abs(t) < 1e-12:
                    continue
                if t > 0:
                    rest_min = smin - t * dlo[i]
                    rest_max = smax - t * dhi[i]
                    up = (hi_w[a] + PRUNE_TOL - rest_min) / t
                    dn = (lo_w[a] - PRUNE_TOL - rest_max) / t
                else:
                    rest_min = smin - t * dhi[i]
                    rest_max = smax - t * dlo[i]
                    up = (lo_w[a] - PRUNE_TOL - rest_max) / t
                    dn = (hi_w[a] + PRUNE_TOL - rest_min) / t
                nlo = max(dlo[i], int(np.ceil(dn)))
                nhi = min(dhi[i], int(np.floor(up)))
                if nlo > nhi:
                    return False
                if nlo != dlo[i] or nhi != dhi[i]:
                    # keep the row sums consistent with the new domain
                    if t > 0:
                        smin += t * (nlo - dlo[i])
                        smax += t * (nhi - dhi[i])
                    else:
                        smin += t * (nhi - dhi[i])
                        smax += t * (nlo - dlo[i])
                    dlo[i] = nlo
                    dhi[i] = nhi
                    changed = True
        if not changed:
            break
    return True


@nb.njit(cache=True)
def coord_search(M, qv, c, rounded, e, lo_w, hi_w, klo, khi,
                 max_nodes, max_time, t0, stop_on_wrong):
    """Returns ``(status, nodes, k, n_wrong)``; status codes as in the row search."""
    nm = M.shape[1]
    width = 1
    for i in range(nm):
        width = max(width, khi[i] - klo[i] + 1)
    dlo = np.zeros((nm + 1, nm), np.int64)
    dhi = np.zeros((nm + 1, nm), np.int64)
    var = np.zeros(nm + 1, np.int64)
    vals = np.zeros((nm + 1, width), np.int64)
    nvals = np.zeros(nm + 1, np.int64)
    pos = np.zeros(nm + 1, np.int64)
    k = np.zeros(nm, np.int64)
    keys = np.zeros(width)
    nodes = 1
    n_wrong = 0
    timed = max_time < np.inf
    for i in range(nm):
        dlo[0, i] = klo[i]
        dhi[0, i] = khi[i]
    if not _propagate(M, lo_w, hi_w, dlo[0], dhi[0], 50):
        return 0, nodes, k, n_wrong
    d = 0
    fresh = True
    while True:
        if fresh:
            fresh = False
            best = -1
            bw = 1 << 60
            for i in range(nm):
                w = dhi[d, i] - dlo[d, i]
                if w > 0 and w < bw:
                    bw = w
                    best = i
            if best < 0:
                # every domain is a single value: a leaf
                for i in range(nm):
                    k[i] = dlo[d, i]
                res = leaf_check(k, M, qv, c, rounded, lo_w, hi_w)
                if res == 1:
                    return 1, nodes, k, n_wrong
                if res == 2:
                    n_wrong += 1
                    if stop_on_wrong:
                        return 2, nodes, k, n_wrong
                if d == 0:
                    return 0, nodes, k, n_wrong
                d -= 1
                continue
            var[d] = best
            cnt = dhi[d, best] - dlo[d, best] + 1
            for j in range(cnt):
                v = dlo[d, best] + j
                vals[d, j] = v
                keys[j] = abs(v - e[best])
            order = np.argsort(keys[:cnt], kind="mergesort")
            tmp = vals[d, :cnt].copy()
            for j in range(cnt):
                vals[d, j] = tmp[order[j]]
            nvals[d] = cnt
            pos[d] = 0
        if pos[d] >= nvals[d]:
            if d == 0:
                return 0, nodes, k, n_wrong
            d -= 1
            continue
        v = vals[d, pos[d]]
        pos[d] += 1
        if nodes >= max_nodes:
            return -1, nodes, k, n_wrong
        nodes += 1
        if timed and (nodes & 1023) == 0:
            with nb.objmode(now="float64"):
                now = time.perf_counter()
            if now - t0 > max_time:
                return -1, nodes, k, n_wrong
        for i in range(nm):
            dlo[d + 1, i] = dlo[d, i]
            dhi[d + 1, i] = dhi[d, i]
        dlo[d + 1, var[d]] = v
        dhi[d + 1, var[d]] = v
        if not _propagate(M, lo_w, hi_w, dlo[d + 1], dhi[d + 1], 50):
            continue
        d += 1
        fresh = True
