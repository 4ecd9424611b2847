"""Block classification, per-image scores, the timing attack and the P_E metric."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .codec import DctBlock, decompress
from .feasibility import Budget, Status, Verdict, build_constraints, solve_feasibility
from .transform import dct_matrix

__all__ = [
    "BlockOutcome",
    "BlockReport",
    "DetectorCurve",
    "ImageScore",
    "classify_block",
    "classify_image",
    "expected_miss",
    "pe_min",
    "pe_sweep",
    "report_at_budget",
    "score_image",
    "timing_curve",
]


class BlockOutcome(enum.Enum):
    SKIPPED = "skipped"
    INCOMPATIBLE = "incompatible"
    FEASIBLE = "feasible"
    UNSOLVED = "unsolved"
    IGNORED = "ignored"


_OUTCOME = {
    Status.FEASIBLE: BlockOutcome.FEASIBLE,
    Status.INFEASIBLE: BlockOutcome.INCOMPATIBLE,
    Status.EXHAUSTED: BlockOutcome.UNSOLVED,
    Status.IGNORED: BlockOutcome.IGNORED,
}


@dataclass(frozen=True, eq=False)
class BlockReport:
    index: int
    outcome: BlockOutcome
    verdict: Optional[Verdict] = field(default=None, repr=False)
    clipped: bool = False
    nodes: int = 0
    elapsed: float = 0.0


def classify_block(c: DctBlock, budget: Optional[Budget] = None, index: int = 0,
                   **solver_options) -> BlockReport:
    """Run one block through decompression, the clipping test and the solver."""
    dec = decompress(c, dct_matrix(c.shape))
    if dec.clipped:
        return BlockReport(index, BlockOutcome.SKIPPED, None, True)
    system = build_constraints(c, dec.e, rounded=dec.rounded)
    v = solve_feasibility(system, budget, **solver_options)
    return BlockReport(index, _OUTCOME[v.status], v, False, v.nodes, v.elapsed)


def classify_image(blocks: Sequence[DctBlock], budget: Optional[Budget] = None,
                   cache: Optional[dict] = None, **solver_options) -> list[BlockReport]:
    """Classify every block of an image, in block order.

    ``cache`` (keyed by :meth:`DctBlock.key`) lets a stego image reuse the
    reports of blocks it shares with its cover.  Only share a cache between
    calls made with the same budget and options.
    """
    out = []
    for i, c in enumerate(blocks):
        key = c.key() if cache is not None else None
        if key is not None and key in cache:
            rep = replace(cache[key], index=i)
        else:
            rep = classify_block(c, budget, i, **solver_options)
            if key is not None:
                cache[key] = rep
        out.append(rep)
    return out


def report_at_budget(report: BlockReport, max_nodes: int) -> BlockReport:
    """What a smaller node budget would have reported for the same block.

    The search visits nodes in a fixed order whatever the budget, so a run
    that finished within ``max_nodes`` nodes ends identically and any other
    run stops unsolved.  ``report`` must come from a node-only budget at
    least as large as ``max_nodes``.
    """
    if report.outcome is BlockOutcome.SKIPPED:
        return report
    if report.outcome is not BlockOutcome.UNSOLVED and report.nodes <= max_nodes:
        return report
    return BlockReport(report.index, BlockOutcome.UNSOLVED, None, False,
                       min(report.nodes, max_nodes), report.elapsed)


@dataclass(frozen=True)
class ImageScore:
    """Outcome counts of one image and the features derived from them."""

    n_blocks: int
    n_skipped: int
    n_ignored: int
    n_feasible: int
    n_unsolved: int
    n_incompatible: int

    @property
    def n_eligible(self) -> int:
        return self.n_blocks - self.n_skipped - self.n_ignored

    @property
    def unsolved_ratio(self) -> float:
        return self.n_unsolved / self.n_eligible if self.n_eligible else 0.0

    @property
    def stego_proven(self) -> bool:
        return self.n_incompatible > 0

    @property
    def label(self) -> str:
        if self.stego_proven:
            return "stego"
        if self.n_unsolved == 0:
            return "cover"
        return "unknown"

    @property
    def score(self) -> float:
        """Detector statistic: the unsolved ratio, or ``inf`` once proven stego."""
        return math.inf if self.stego_proven else self.unsolved_ratio


def score_image(reports: Sequence[BlockReport]) -> ImageScore:
    if len(reports) == 0:
        raise ValueError("an image needs at least one block report")
    counts = {o: 0 for o in BlockOutcome}
    for r in reports:
        counts[r.outcome] += 1
    return ImageScore(
        n_blocks=len(reports),
        n_skipped=counts[BlockOutcome.SKIPPED],
        n_ignored=counts[BlockOutcome.IGNORED],
        n_feasible=counts[BlockOutcome.FEASIBLE],
        n_unsolved=counts[BlockOutcome.UNSOLVED],
        n_incompatible=counts[BlockOutcome.INCOMPATIBLE],
    )


def pe_sweep(cover_scores, stego_scores):
    """Error rates of the rule ``score > tau`` for every useful threshold.

    Thresholds are ``-inf`` followed by the distinct observed scores in
    increasing order.  Returns ``(thresholds, p_fa, p_md)``.
    """
    cov = np.sort(np.asarray(cover_scores, dtype=np.float64))
    stg = np.sort(np.asarray(stego_scores, dtype=np.float64))
    if cov.size == 0 or stg.size == 0:
        raise ValueError("both classes need at least one score")
    if np.isnan(cov).any() or np.isnan(stg).any():
        raise ValueError("scores must not be NaN")
    taus = np.concatenate([[-np.inf], np.unique(np.concatenate([cov, stg]))])
    p_fa = 1.0 - np.searchsorted(cov, taus, side="right") / cov.size
    p_md = np.searchsorted(stg, taus, side="right") / stg.size
    return taus, p_fa, p_md


def pe_min(cover_scores, stego_scores) -> tuple[float, float]:
    """Minimal ``(P_FA + P_MD) / 2`` over thresholds, and the threshold reaching it.

    Among equally good thresholds the one with the smallest false-alarm
    rate wins.

    >>> pe_min([0.0, 0.1, 0.2], [0.15, 0.3, 0.4])
    (0.16666666666666666, 0.2)
    """
    taus, p_fa, p_md = pe_sweep(cover_scores, stego_scores)
    # compare on integer numerators to avoid float ties going astray
    n_c, n_s = len(cover_scores), len(stego_scores)
    fa = np.rint(p_fa * n_c).astype(np.int64)
    md = np.rint(p_md * n_s).astype(np.int64)
    total = fa * n_s + md * n_c
    best = np.lexsort((fa, total))[0]
    return float(total[best] / (2 * n_c * n_s)), float(taus[best])


def expected_miss(p_single: float, r: int) -> float:
    """Chance that none of ``r`` modified blocks is individually detected."""
    if not 0.0 <= p_single <= 1.0:
        raise ValueError("p_single must lie in [0, 1]")
    if r < 0 or int(r) != r:
        raise ValueError("r must be a non-negative integer")
    return (1.0 - p_single) ** int(r)


@dataclass(frozen=True, eq=False)
class DetectorCurve:
    """P_E as a function of the node budget.

    ``cover_ratios[j]`` and ``stego_ratios[j]`` hold the per-image scores at
    ``budgets[j]``; ``sweeps[j]`` is the ``(thresholds, p_fa, p_md)`` triple.
    """

    budgets: np.ndarray
    pe: np.ndarray
    thresholds: np.ndarray
    cover_ratios: np.ndarray = field(repr=False)
    stego_ratios: np.ndarray = field(repr=False)
    sweeps: list = field(repr=False, default_factory=list)

    def points(self):
        return list(zip(self.budgets.tolist(), self.pe.tolist()))

    def zero_mass(self) -> np.ndarray:
        """Fraction of cover images with an unsolved ratio of exactly 0."""
        return (self.cover_ratios == 0).mean(axis=1)


def timing_curve(cover_images, stego_images, budgets, cache: Optional[dict] = None,
                 **solver_options) -> DetectorCurve:
    """Per-budget image scores and P_E for node budgets ``budgets``.

    Each image is a sequence of :class:`DctBlock`.  Blocks are solved once
    at the largest budget; smaller budgets are read off the node counts with
    :func:`report_at_budget`.
    """
    budgets = [int(b) for b in budgets]
    if not budgets or any(b < 1 for b in budgets):
        raise ValueError("budgets must be positive node counts")
    if any(b2 < b1 for b1, b2 in zip(budgets, budgets[1:])):
        raise ValueError("budgets must be ascending")
    top = Budget(max_nodes=budgets[-1])
    cache = {} if cache is None else cache
    cover_reports = [classify_image(img, top, cache, **solver_options) for img in cover_images]
    stego_reports = [classify_image(img, top, cache, **solver_options) for img in stego_images]

    def scores(all_reports, b):
        return [score_image([report_at_budget(r, b) for r in reps]).score for reps in all_reports]

    cov = np.array([scores(cover_reports, b) for b in budgets], dtype=np.float64)
    stg = np.array([scores(stego_reports, b) for b in budgets], dtype=np.float64)
    pes, taus, sweeps = [], [], []
    for j in range(len(budgets)):
        pe, tau = pe_min(cov[j], stg[j])
        pes.append(pe)
        taus.append(tau)
        sweeps.append(pe_sweep(cov[j], stg[j]))
    return DetectorCurve(np.array(budgets), np.array(pes), np.array(taus), cov, stg, sweeps)
