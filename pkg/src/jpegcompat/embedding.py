"""Simulated embedding: fixed-count ±1 changes and payload-driven LSB matching."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import bisect

from .codec import DctBlock
from .transform import round_half_away

__all__ = [
    "ChangeSet",
    "EmbeddingParams",
    "binary_entropy",
    "change_rate",
    "count_nzac",
    "lsbm_embed",
    "modify_random",
]


@dataclass(frozen=True, eq=False)
class ChangeSet:
    """Coefficient changes as ``(block, coefficient)`` positions with ±1 signs."""

    positions: np.ndarray = field(repr=False)
    signs: np.ndarray = field(repr=False)

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.int64).reshape(-1, 2)
        sg = np.asarray(self.signs, dtype=np.int64).reshape(-1)
        if len(pos) != len(sg):
            raise ValueError("one sign per position is required")
        if not np.all(np.abs(sg) == 1):
            raise ValueError("signs must be +1 or -1")
        if len(np.unique(pos, axis=0)) != len(pos):
            raise ValueError("positions must be distinct")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "signs", sg)

    @classmethod
    def empty(cls) -> "ChangeSet":
        return cls(np.zeros((0, 2), np.int64), np.zeros(0, np.int64))

    def __len__(self):
        return len(self.signs)

    def modified_blocks(self) -> np.ndarray:
        """Sorted indices of blocks touched by at least one change."""
        return np.unique(self.positions[:, 0])

    def per_block(self, n_blocks: int) -> np.ndarray:
        return np.bincount(self.positions[:, 0], minlength=n_blocks)


@dataclass(frozen=True)
class EmbeddingParams:
    payload: float
    seed: int

    def __post_init__(self):
        if not 0.0 <= self.payload <= 1.0:
            raise ValueError("payload must lie in [0, 1] bits per non-zero AC coefficient")


def modify_random(c: DctBlock, p: int, rng: np.random.Generator):
    """Change ``p`` distinct coefficients of ``c`` by ±1 each.

    Returns the new block and the :class:`ChangeSet` (block index 0).
    """
    nm = c.shape.size
    if p < 0 or p > nm:
        raise ValueError(f"cannot change {p} of {nm} coefficients")
    idx = rng.choice(nm, size=p, replace=False)
    signs = rng.choice(np.array([-1, 1]), size=p)
    out = c.coeffs.copy()
    out[idx] += signs
    changes = ChangeSet(np.column_stack([np.zeros(p, np.int64), idx]), signs)
    return c.with_coeffs(out), changes


def _coeff_matrix(blocks) -> np.ndarray:
    if isinstance(blocks, np.ndarray):
        return np.atleast_2d(blocks)
    blocks = list(blocks)
    if not blocks:
        return np.zeros((0, 1), np.int64)
    return np.stack([b.coeffs for b in blocks])


def count_nzac(blocks) -> int:
    """Non-zero AC coefficients over a list of blocks or a ``(count, nm)`` array.

    The DC term is flat index 0.
    """
    C = _coeff_matrix(blocks)
    return int(np.count_nonzero(C[:, 1:]))


def binary_entropy(p):
    """``H2(p)`` in bits, with ``H2(0) = H2(1) = 0``."""
    p = np.asarray(p, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -p * np.log2(p) - (1 - p) * np.log2(1 - p)
    return np.where((p <= 0) | (p >= 1), 0.0, h)


def change_rate(payload: float) -> float:
    """Change rate ``beta`` in ``[0, 1/2]`` solving ``H2(beta) = payload``."""
    if not 0.0 <= payload <= 1.0:
        raise ValueError("payload must lie in [0, 1]")
    if payload == 0.0:
        return 0.0
    if payload == 1.0:
        return 0.5
    return bisect(lambda b: float(binary_entropy(b)) - payload, 0.0, 0.5, xtol=1e-15, maxiter=200)


def lsbm_embed(blocks, params: EmbeddingParams, rng: Optional[np.random.Generator] = None):
    """Spread ``round(beta * nzac)`` ±1 changes over the non-zero AC coefficients.

    ``blocks`` is a ``(count, nm)`` coefficient array (or a list of
    :class:`DctBlock`, in which case a list is returned).  Positions are
    drawn uniformly without replacement over the whole image; a coefficient
    equal to ±1 is always pushed away from zero so the non-zero AC count is
    preserved.

    Returns
    -------
    (blocks', ChangeSet)
    """
    as_list = not isinstance(blocks, np.ndarray)
    src = list(blocks) if as_list else None
    C = _coeff_matrix(src if as_list else blocks).astype(np.int64)
    rng = rng if rng is not None else np.random.default_rng(params.seed)
    rows, cols = np.nonzero(C[:, 1:])
    cols = cols + 1
    n_changes = int(round_half_away(change_rate(params.payload) * rows.size))
    pick = np.sort(rng.choice(rows.size, size=n_changes, replace=False))
    signs = rng.choice(np.array([-1, 1]), size=n_changes)
    r, k = rows[pick], cols[pick]
    current = C[r, k]
    signs = np.where(np.abs(current) == 1, np.sign(current), signs)
    out = C.copy()
    out[r, k] += signs
    changes = ChangeSet(np.column_stack([r, k]), signs)
    if as_list:
        return [b.with_coeffs(row) for b, row in zip(src, out)], changes
    return out, changes
