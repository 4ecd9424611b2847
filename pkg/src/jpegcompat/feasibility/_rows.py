"""Row-block branch and bound over the integer correction matrix ``K``.

The 2D DCT factorizes as ``M = kron(Dn, Dm)``, so with ``K`` the ``(n, m)``
reshaped correction vector, ``M k`` reshaped is ``Dn K Dm^T``.  Writing
``G = K Dm^T``, column ``b`` of ``G`` must lie in the zonotope
``Dn^T [lo[:, b], hi[:, b]]``.  The search assigns whole rows of ``K`` at a
time.  For a set ``S`` of assigned rows plus one candidate row ``r``, the
projection of that zonotope onto the coordinates ``S + {r}`` is described
exactly by its facets, which depend only on ``Dn`` and the row mask and are
therefore tabulated once per block height.  Each facet gives an interval
for ``G[r, b]`` given the assigned rows, which filters the candidate lists
of the unassigned rows (forward checking).

Candidate rows themselves are all integer vectors ``z`` with ``Dm z`` inside
the single-row projection, enumerated depth first over the coordinates of
``z`` using the facets of the prefix projections of ``Dm^T``.
"""
from __future__ import annotations

import functools
import itertools
import time

import numba as nb
import numpy as np

from ..transform import TIE_TOL, dct_1d

#: Absolute slack used when comparing against facet supports.
PRUNE_TOL = 1e-9
#: Slack used by the exact membership test at a leaf.
LEAF_TOL = 1e-12


def facet_normals(gens: np.ndarray) -> np.ndarray:
    """Facet normals of the zonotope generated by the rows of ``gens``.

    ``gens`` is ``(count, d)``.  A facet of a zonotope in ``R^d`` is spanned
    by ``d - 1`` independent generators; its normal is the null vector of
    that subset.  Normals are scaled to unit max-norm with a canonical sign
    and de-duplicated.
    """
    gens = np.asarray(gens, dtype=np.float64)
    count, d = gens.shape
    if d == 1:
        return np.ones((1, 1))
    subsets = np.array(list(itertools.combinations(range(count), d - 1)))
    stack = gens[subsets]  # (S, d-1, d)
    _, sv, vt = np.linalg.svd(stack)
    rank_ok = sv[:, -1] > 1e-10 * sv[:, 0]
    normals = vt[rank_ok, -1, :]
    normals = normals / np.abs(normals).max(axis=1, keepdims=True)
    normals[np.abs(normals) < 1e-13] = 0.0
    lead = np.argmax(np.abs(normals) > 1e-9, axis=1)
    sign = np.sign(normals[np.arange(len(normals)), lead])
    normals = normals * sign[:, None]
    _, keep = np.unique(np.round(normals, 8), axis=0, return_index=True)
    return normals[np.sort(keep)]


@functools.lru_cache(maxsize=None)
def mask_tables(n: int):
    """Facet normals of every projection of ``Dn^T [box]`` onto a row subset.

    Returns ``(NU, T, NF)``: ``NU[mask, f]`` is a normal written in the full
    ``n`` coordinates (zero outside ``mask``), ``T[mask, f, a]`` its pairing
    with generator ``a`` and ``NF[mask]`` the number of facets.
    """
    dn = dct_1d(n)
    per = [np.zeros((0, n))]
    for mask in range(1, 1 << n):
        sel = [i for i in range(n) if mask >> i & 1]
        nu = facet_normals(dn[:, sel])
        full = np.zeros((len(nu), n))
        full[:, sel] = nu
        per.append(full)
    fmax = max(len(p) for p in per)
    NU = np.zeros((1 << n, fmax, n))
    NF = np.zeros(1 << n, dtype=np.int64)
    for mask, p in enumerate(per):
        NU[mask, : len(p)] = p
        NF[mask] = len(p)
    T = np.einsum("ai,kfi->kfa", dn, NU)
    for arr in (NU, T, NF):
        arr.setflags(write=False)
    return NU, T, NF


@functools.lru_cache(maxsize=None)
def prefix_tables(m: int):
    """Facet normals of the prefix projections of ``Dm^T [box]``."""
    dm = dct_1d(m)
    per = [facet_normals(dm[:, : j + 1]) for j in range(m)]
    fmax = max(len(p) for p in per)
    NU = np.zeros((m, fmax, m))
    NF = np.zeros(m, dtype=np.int64)
    for j, p in enumerate(per):
        NU[j, : len(p), : j + 1] = p
        NF[j] = len(p)
    T = np.einsum("bj,Jfj->Jfb", dm, NU)
    for arr in (NU, T, NF):
        arr.setflags(write=False)
    return NU, T, NF


@nb.njit(cache=True)
def supports(T, NF, lo, hi):
    """Support values of every tabulated facet, per column of the box."""
    nmask, fmax, n = T.shape
    m = lo.shape[1]
    hmin = np.zeros((nmask, fmax, m))
    hmax = np.zeros((nmask, fmax, m))
    for mk in range(1, nmask):
        for f in range(NF[mk]):
            for b in range(m):
                s0 = 0.0
                s1 = 0.0
                for a in range(n):
                    t = T[mk, f, a]
                    if t >= 0:
                        s0 += t * lo[a, b]
                        s1 += t * hi[a, b]
                    else:
                        s0 += t * hi[a, b]
                        s1 += t * lo[a, b]
                hmin[mk, f, b] = s0
                hmax[mk, f, b] = s1
    return hmin, hmax


@nb.njit(cache=True)
def enum_row(NUp, Tp, NFp, alpha, beta, zlo, zhi, out, cap):
    """Integer ``z`` in ``[zlo, zhi]`` with ``Dm z`` inside ``[alpha, beta]``.

    Fills ``out`` up to its length and returns the total count, stopping
    early once the count exceeds ``cap``.
    """
    m = alpha.shape[0]
    fmax = NUp.shape[1]
    hmn = np.zeros((m, fmax))
    hmx = np.zeros((m, fmax))
    for J in range(m):
        for f in range(NFp[J]):
            s0 = 0.0
            s1 = 0.0
            for b in range(m):
                t = Tp[J, f, b]
                if t >= 0:
                    s0 += t * alpha[b]
                    s1 += t * beta[b]
                else:
                    s0 += t * beta[b]
                    s1 += t * alpha[b]
            hmn[J, f] = s0 - PRUNE_TOL
            hmx[J, f] = s1 + PRUNE_TOL
    z = np.zeros(m)
    hiv = np.zeros(m, np.int64)
    cur = np.zeros(m, np.int64)
    cnt = 0
    J = 0
    descend = True
    while True:
        if descend:
            lo = float(zlo[J])
            hi = float(zhi[J])
            for f in range(NFp[J]):
                nj = NUp[J, f, J]
                s = 0.0
                for j in range(J):
                    s += NUp[J, f, j] * z[j]
                a0 = hmn[J, f] - s
                a1 = hmx[J, f] - s
                if nj > 1e-12:
                    lo = max(lo, a0 / nj)
                    hi = min(hi, a1 / nj)
                elif nj < -1e-12:
                    lo = max(lo, a1 / nj)
                    hi = min(hi, a0 / nj)
                elif s > hmx[J, f] or s < hmn[J, f]:
                    hi = lo - 1.0
            cur[J] = int(np.ceil(lo)) - 1
            hiv[J] = int(np.floor(hi)) if hi >= lo else cur[J]
            descend = False
        cur[J] += 1
        if cur[J] > hiv[J]:
            if J == 0:
                return cnt
            J -= 1
            continue
        z[J] = cur[J]
        if J == m - 1:
            if cnt < out.shape[0]:
                for j in range(m):
                    out[cnt, j] = cur[j]
            cnt += 1
            if cnt > cap:
                return cnt
        else:
            J += 1
            descend = True


@nb.njit(cache=True)
def round_snap(v):
    a = abs(v)
    w = np.floor(a)
    r = w + 1.0 if a - w >= 0.5 - TIE_TOL else w
    return -r if v < 0 else r


@nb.njit(cache=True)
def leaf_check(k, M, qv, c, rounded, lo_w, hi_w):
    """0: outside the system, 1: verified antecedent, 2: inside but wrong."""
    nm = k.shape[0]
    for i in range(nm):
        x = rounded[i] - k[i]
        if x < 0 or x > 255:
            return 0
    for a in range(nm):
        s = 0.0
        for i in range(nm):
            s += M[a, i] * k[i]
        if s < lo_w[a] - LEAF_TOL or s > hi_w[a] + LEAF_TOL:
            return 0
    for a in range(nm):
        s = 0.0
        for i in range(nm):
            s += M[a, i] * float(rounded[i] - k[i] - 128)
        if round_snap(s / qv[a]) != c[a]:
            return 2
    return 1


@nb.njit(cache=True)
def row_search(NU, NF, hmin, hmax, cand, gc, ncand, M, qv, c, rounded, lo_w, hi_w,
               max_nodes, max_time, t0, stop_on_wrong):
    """Depth-first search over candidate rows.

    Returns ``(status, nodes, chosen, n_wrong)`` with status 1 (verified
    leaf), 0 (tree exhausted), -1 (budget hit) or 2 (stopped on a leaf that
    satisfies the system but does not recompress).
    """
    n = cand.shape[0]
    m = cand.shape[2]
    maxc = cand.shape[1]
    lists = np.zeros((n + 1, n, maxc), np.int64)
    cnts = np.zeros((n + 1, n), np.int64)
    for r in range(n):
        cnts[0, r] = ncand[r]
        for p in range(ncand[r]):
            lists[0, r, p] = p
    G = np.zeros((n, m))
    mask = np.zeros(n + 1, np.int64)
    row = np.zeros(n + 1, np.int64)
    pos = np.zeros(n + 1, np.int64)
    chosen = np.zeros(n, np.int64)
    k = np.zeros(n * m, np.int64)
    lo_b = np.empty(m)
    hi_b = np.empty(m)
    nodes = 1
    n_wrong = 0
    timed = max_time < np.inf
    best = -1
    bc = 1 << 60
    for r in range(n):
        if cnts[0, r] < bc:
            bc = cnts[0, r]
            best = r
    if bc == 0:
        return 0, nodes, chosen, n_wrong
    d = 0
    row[0] = best
    while True:
        r0 = row[d]
        if pos[d] >= cnts[d, r0]:
            if d == 0:
                return 0, nodes, chosen, n_wrong
            d -= 1
            continue
        ci = lists[d, r0, pos[d]]
        pos[d] += 1
        if nodes >= max_nodes:
            return -1, nodes, chosen, n_wrong
        nodes += 1
        if timed and (nodes & 1023) == 0:
            with nb.objmode(now="float64"):
                now = time.perf_counter()
            if now - t0 > max_time:
                return -1, nodes, chosen, n_wrong
        for b in range(m):
            G[r0, b] = gc[r0, ci, b]
        chosen[r0] = ci
        nmask = mask[d] | (1 << r0)
        if d == n - 1:
            for i in range(n):
                for j in range(m):
                    k[i * m + j] = cand[i, chosen[i], j]
            res = leaf_check(k, M, qv, c, rounded, lo_w, hi_w)
            if res == 1:
                return 1, nodes, chosen, n_wrong
            if res == 2:
                n_wrong += 1
                if stop_on_wrong:
                    return 2, nodes, chosen, n_wrong
            continue
        ok = True
        best = -1
        bc = 1 << 60
        for r in range(n):
            if (nmask >> r) & 1:
                cnts[d + 1, r] = 0
                continue
            mk = nmask | (1 << r)
            for b in range(m):
                lo = -1e300
                hi = 1e300
                for f in range(NF[mk]):
                    nj = NU[mk, f, r]
                    s = 0.0
                    for i in range(n):
                        if (nmask >> i) & 1:
                            s += NU[mk, f, i] * G[i, b]
                    a0 = hmin[mk, f, b] - PRUNE_TOL - s
                    a1 = hmax[mk, f, b] + PRUNE_TOL - s
                    if nj > 1e-12:
                        if a0 / nj > lo:
                            lo = a0 / nj
                        if a1 / nj < hi:
                            hi = a1 / nj
                    elif nj < -1e-12:
                        if a1 / nj > lo:
                            lo = a1 / nj
                        if a0 / nj < hi:
                            hi = a0 / nj
                    elif a0 > 0.0 or a1 < 0.0:
                        hi = -1e300
                lo_b[b] = lo
                hi_b[b] = hi
            cnt = 0
            for p in range(cnts[d, r]):
                idx = lists[d, r, p]
                good = True
                for b in range(m):
                    g = gc[r, idx, b]
                    if g < lo_b[b] or g > hi_b[b]:
                        good = False
                        break
                if good:
                    lists[d + 1, r, cnt] = idx
                    cnt += 1
            cnts[d + 1, r] = cnt
            if cnt == 0:
                ok = False
                break
            if cnt < bc:
                bc = cnt
                best = r
        if not ok:
            continue
        d += 1
        mask[d] = nmask
        row[d] = best
        pos[d] = 0
