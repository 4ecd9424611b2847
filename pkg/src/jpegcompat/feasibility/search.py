"""Budgeted branch and bound deciding whether a constraint system has an antecedent."""
from __future__ import annotations

import time
from typing import Optional

import numpy as np

from ..transform import dct_1d, dct_matrix
from . import _coords, _rows
from .system import (
    AntecedentRangeError,
    Budget,
    ConstraintSystem,
    Status,
    Verdict,
    k_bounds,
    verify_antecedent,
)

__all__ = ["STRATEGIES", "add_verdict_listener", "remove_verdict_listener", "solve_feasibility"]

STRATEGIES = ("auto", "rows", "coords")
#: Above this many candidates for a single row the row search gives up.
ROW_CAP = 50_000
_NO_LIMIT = np.iinfo(np.int64).max
_listeners: list = []


def add_verdict_listener(fn):
    """Call ``fn(system, verdict)`` after every solve (auditing, statistics)."""
    _listeners.append(fn)
    return fn


def remove_verdict_listener(fn):
    _listeners.remove(fn)


class _Overflow(Exception):
    pass


def _row_candidates(system: ConstraintSystem, hmin, hmax, NU, klo, khi):
    n, m = system.shape.rows, system.shape.cols
    NUp, Tp, NFp = _rows.prefix_tables(m)
    dm = dct_1d(m)
    E = system.e.reshape(n, m)
    zlo = klo.reshape(n, m)
    zhi = khi.reshape(n, m)
    rows = []
    for i in range(n):
        mk = 1 << i
        nu = NU[mk, 0, i]
        alpha, beta = hmin[mk, 0] / nu, hmax[mk, 0] / nu
        if nu < 0:
            alpha, beta = beta, alpha
        buf = np.zeros((1024, m), dtype=np.int64)
        cnt = _rows.enum_row(NUp, Tp, NFp, alpha, beta, zlo[i], zhi[i], buf, ROW_CAP)
        if cnt > ROW_CAP:
            raise _Overflow
        if cnt > buf.shape[0]:
            buf = np.zeros((cnt, m), dtype=np.int64)
            _rows.enum_row(NUp, Tp, NFp, alpha, beta, zlo[i], zhi[i], buf, ROW_CAP)
        z = buf[:cnt]
        order = np.argsort(((z - E[i]) ** 2).sum(axis=1), kind="mergesort")
        rows.append(z[order])
    maxc = max(1, max(len(z) for z in rows))
    cand = np.zeros((n, maxc, m), dtype=np.int64)
    ncand = np.zeros(n, dtype=np.int64)
    for i, z in enumerate(rows):
        cand[i, : len(z)] = z
        ncand[i] = len(z)
    gc = cand.astype(np.float64) @ dm.T
    return cand, gc, ncand


def _widening_search(system, NU, NF, hmin, hmax, cand, gc, ncand, M, qv, lo_w, hi_w,
                     max_nodes, max_time, t0, stop_on_wrong, widening):
    """Row search restricted to the best ``w`` candidates per row, ``w`` growing.

    Each pass keeps only the ``w`` candidates of every row closest to ``e``
    and ``w`` is multiplied by ``widening`` until the lists are complete.
    The last pass is the unrestricted search, so an exhausted tree is still a
    proof.  Node counts add up over passes.
    """
    n = cand.shape[0]
    total, wrong = 0, 0
    width = 1 if widening else int(ncand.max())
    while True:
        limited = np.minimum(ncand, width)
        code, nodes, chosen, n_wrong = _rows.row_search(
            NU, NF, hmin, hmax, cand, gc, limited, M, qv, system.block.coeffs, system.rounded,
            lo_w, hi_w, max_nodes - total, max_time, t0, stop_on_wrong)
        total += nodes
        wrong += n_wrong
        if code != 0 or np.array_equal(limited, ncand):
            k = cand[np.arange(n), chosen].reshape(-1) if code in (1, 2) else None
            return code, total, k, wrong
        if total >= max_nodes:
            return -1, total, None, wrong
        width *= widening


def _run(system: ConstraintSystem, strategy: str, max_nodes: int, max_time: float,
         t0: float, stop_on_wrong: bool, widening: int):
    """One search pass; returns ``(code, nodes, k, n_wrong)``."""
    n, m = system.shape.rows, system.shape.cols
    M = dct_matrix(system.shape).entries
    qv = system.quant.values.astype(np.float64)
    c = system.block.coeffs
    lo_w, hi_w = system.box()
    klo, khi = k_bounds(system, pixel_range=True)
    if np.any(klo > khi):
        return 0, 1, None, 0
    if strategy in ("auto", "rows"):
        NU, T, NF = _rows.mask_tables(n)
        hmin, hmax = _rows.supports(T, NF, lo_w.reshape(n, m), hi_w.reshape(n, m))
        try:
            cand, gc, ncand = _row_candidates(system, hmin, hmax, NU, klo, khi)
        except _Overflow:
            if strategy == "rows":
                raise RuntimeError(f"more than {ROW_CAP} candidates for one row") from None
        else:
            return _widening_search(system, NU, NF, hmin, hmax, cand, gc, ncand, M, qv,
                                    lo_w, hi_w, max_nodes, max_time, t0, stop_on_wrong,
                                    widening)
    code, nodes, k, n_wrong = _coords.coord_search(
        M, qv, c, system.rounded, system.e, lo_w, hi_w, klo, khi,
        max_nodes, max_time, t0, stop_on_wrong)
    return code, nodes, (k.copy() if code in (1, 2) else None), n_wrong


def solve_feasibility(system: ConstraintSystem, budget: Optional[Budget] = None,
                      strategy: str = "auto", recheck: bool = True,
                      stop_on_wrong: bool = False, widening: int = 4) -> Verdict:
    """Decide whether some integer ``k`` makes ``[y] - k`` an antecedent.

    Parameters
    ----------
    system
        Output of :func:`build_constraints`.
    budget
        Node and/or time limit; ``None`` searches to completion.
    strategy
        ``"rows"`` assigns whole rows of the reshaped ``k`` using the
        separable structure of the DCT, ``"coords"`` fixes one coordinate
        per node with interval propagation, ``"auto"`` uses rows and falls
        back to coords when a row has too many candidates.
    recheck
        Before reporting INFEASIBLE, search again with every inequality
        closed.  An incompatibility is only reported when that relaxed
        problem has no antecedent either.
    stop_on_wrong
        Return IGNORED at the first leaf that satisfies the constraints but
        fails recompression instead of searching on.
    widening
        Growth factor of the candidate-list width in the row search; each
        pass only tries the best ``w`` candidates per row.  Covers are then
        usually found after a few hundred nodes.  ``0`` runs the plain
        search once.

    Returns
    -------
    Verdict
        ``nodes`` counts the root of every pass plus every assignment.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    budget = budget or Budget()
    max_nodes = _NO_LIMIT if budget.max_nodes is None else budget.max_nodes
    max_time = np.inf if budget.max_time is None else float(budget.max_time)
    t0 = time.perf_counter()

    if widening and widening < 2:
        raise ValueError("widening must be 0 (off) or at least 2")
    code, nodes, k, n_wrong = _run(system, strategy, max_nodes, max_time, t0, stop_on_wrong,
                                   widening)
    if code == 0 and recheck:
        if nodes >= max_nodes:
            code = -1
        else:
            code, extra, k, _ = _run(system.relaxed(), strategy, max_nodes - nodes, max_time,
                                     t0, False, widening)
            nodes += extra
    elapsed = time.perf_counter() - t0

    verdict = _verdict(system, code, nodes, elapsed, k, n_wrong)
    for fn in _listeners:
        fn(system, verdict)
    return verdict


def _verdict(system, code, nodes, elapsed, k, n_wrong) -> Verdict:
    if code == 1:
        try:
            ok = verify_antecedent(k, system.block, system.rounded)
        except AntecedentRangeError:
            ok = False
        if not ok:
            return Verdict(Status.IGNORED, nodes, elapsed, None,
                           "search leaf failed the codec recompression check", n_wrong)
        return Verdict(Status.FEASIBLE, nodes, elapsed, k, "", n_wrong)
    if code == 2:
        return Verdict(Status.IGNORED, nodes, elapsed, None,
                       "constraint solution does not recompress to the block", n_wrong)
    if code == -1:
        return Verdict(Status.EXHAUSTED, nodes, elapsed, None, "budget reached", n_wrong)
    return Verdict(Status.INFEASIBLE, nodes, elapsed, None, "", n_wrong)
