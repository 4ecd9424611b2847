"""Exhaustive antecedent search for small blocks (reference oracle)."""
from __future__ import annotations

import time

import numpy as np

from ..codec import DctBlock, compress_blocks
from ..transform import dct_matrix
from .system import DEFAULT_EPS, Status, Verdict, k_bounds, system_for_block

__all__ = ["DEFAULT_CAP", "EnumerationCapError", "brute_force_antecedent"]

DEFAULT_CAP = 10**8
_CHUNK = 1 << 16


class EnumerationCapError(RuntimeError):
    """The candidate box is larger than the enumeration cap."""


def brute_force_antecedent(c: DctBlock, cap: int = DEFAULT_CAP) -> Verdict:
    """Try every ``k`` in the a-priori box, in lexicographic order.

    The first coordinate varies slowest and each coordinate runs upward, so
    the returned ``k`` is the lexicographically smallest antecedent.  Every
    candidate is judged by recompression alone, independently of the
    constraint system.
    """
    t0 = time.perf_counter()
    system = system_for_block(c, DEFAULT_EPS)
    lo, hi = k_bounds(system)
    widths = hi - lo + 1
    total = int(np.prod(widths.astype(object)))
    if total > cap:
        raise EnumerationCapError(f"{total} candidates exceed the cap of {cap}")
    M = dct_matrix(c.shape)
    rounded = system.rounded
    # mixed-radix place values, last coordinate fastest
    place = np.ones(widths.size, dtype=np.int64)
    for i in range(widths.size - 2, -1, -1):
        place[i] = place[i + 1] * widths[i + 1]
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        K = lo + (idx[:, None] // place) % widths
        X = rounded - K
        valid = np.all((X >= 0) & (X <= 255), axis=1)
        if not valid.any():
            continue
        C = compress_blocks(X[valid], c.quant, M)
        hit = np.flatnonzero(np.all(C == c.coeffs, axis=1))
        if hit.size:
            k = K[valid][hit[0]]
            seen = int(idx[valid][hit[0]]) + 1
            return Verdict(Status.FEASIBLE, seen, time.perf_counter() - t0, k)
    return Verdict(Status.INFEASIBLE, total, time.perf_counter() - t0)
