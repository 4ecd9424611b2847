"""Orthonormal block DCT, rounding convention and quantization tables.

Blocks are flattened row-major, for pixels and frequencies alike: the pixel
``(i, j)`` of an ``(n, m)`` block has flat index ``i * m + j`` and the
frequency ``(a, b)`` has flat index ``a * m + b``.
"""
from __future__ import annotations

import functools
import re
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "BlockShape",
    "DctMatrix",
    "QuantTable",
    "TIE_TOL",
    "dct_1d",
    "dct_matrix",
    "quant_table_qf100",
    "round_half_away",
]

#: Values closer than this to a half-integer are rounded as exact ties.
TIE_TOL = 1e-9


@dataclass(frozen=True)
class BlockShape:
    """Block geometry ``(rows, cols)``."""

    rows: int
    cols: int

    def __post_init__(self):
        for name in ("rows", "cols"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 1:
                raise ValueError(f"block {name} must be a positive integer, got {v!r}")
        object.__setattr__(self, "rows", int(self.rows))
        object.__setattr__(self, "cols", int(self.cols))

    @property
    def size(self) -> int:
        return self.rows * self.cols

    @classmethod
    def parse(cls, text: str) -> "BlockShape":
        """Parse ``"6x6"`` / ``"1x2"`` style shape strings."""
        m = re.fullmatch(r"\s*(\d+)\s*[xX,]\s*(\d+)\s*", text)
        if not m:
            raise ValueError(f"cannot parse block shape {text!r}; expected NxM")
        return cls(int(m.group(1)), int(m.group(2)))

    def __str__(self):
        return f"{self.rows}x{self.cols}"


@functools.lru_cache(maxsize=None)
def _dct_1d_cached(n: int) -> np.ndarray:
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    d = np.cos(np.pi * (2 * i + 1) * k / (2 * n))
    alpha = np.full((n, 1), np.sqrt(2.0 / n))
    alpha[0, 0] = np.sqrt(1.0 / n)
    d = alpha * d
    d.setflags(write=False)
    return d


def dct_1d(n: int) -> np.ndarray:
    """Orthonormal DCT-II matrix of size ``n``; row ``k`` is frequency ``k``."""
    if n < 1:
        raise ValueError("DCT length must be positive")
    return _dct_1d_cached(int(n))


@dataclass(frozen=True, eq=False)
class DctMatrix:
    """The ``nm x nm`` orthonormal 2D DCT operator of a block shape.

    ``entries[k, i]`` maps pixel index ``i`` to frequency index ``k``; the
    inverse transform is ``entries.T``.  ``row_dct`` and ``col_dct`` are the
    1D factors, ``entries == kron(row_dct, col_dct)``.
    """

    shape: BlockShape
    entries: np.ndarray = field(repr=False)
    row_dct: np.ndarray = field(repr=False)
    col_dct: np.ndarray = field(repr=False)

    @property
    def T(self) -> np.ndarray:
        return self.entries.T

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Transform flattened block(s); the last axis is the pixel axis."""
        return np.asarray(x, dtype=np.float64) @ self.entries.T

    def inverse(self, c: np.ndarray) -> np.ndarray:
        return np.asarray(c, dtype=np.float64) @ self.entries


@functools.lru_cache(maxsize=None)
def dct_matrix(shape: BlockShape) -> DctMatrix:
    """Build (and memoize) the 2D DCT-II operator for ``shape``."""
    dn = dct_1d(shape.rows)
    dm = dct_1d(shape.cols)
    # Closed-form products rather than np.kron keep every entry a single rounding.
    m = np.einsum("ai,bj->abij", dn, dm).reshape(shape.size, shape.size)
    m.setflags(write=False)
    return DctMatrix(shape, m, dn, dm)


def round_half_away(v, tie_tol: float = 0.0):
    """Round to the nearest integer, exact halves away from zero.

    Works on scalars and arrays and returns ``int64`` values.  With
    ``tie_tol > 0`` any value within ``tie_tol`` of a half-integer is treated
    as that exact half, which makes float DCT outputs round the way exact
    arithmetic would.

    >>> round_half_away(0.5), round_half_away(-0.5), round_half_away(0.0)
    (1, -1, 0)
    """
    a = np.asarray(v, dtype=np.float64)
    if not np.all(np.isfinite(a)):
        raise ValueError("cannot round non-finite values")
    mag = np.abs(a)
    whole = np.floor(mag)
    frac = mag - whole
    if tie_tol > 0:
        up = frac >= 0.5 - tie_tol
    else:
        up = frac >= 0.5
    r = np.copysign(whole + up, a).astype(np.int64)
    if r.ndim == 0:
        return int(r)
    return r


@dataclass(frozen=True, eq=False)
class QuantTable:
    """Positive integer quantization divisors, one per flattened frequency."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("quantization table must be a non-empty vector")
        if not np.all(np.isfinite(v)) or np.any(v != np.round(v)) or np.any(v < 1):
            raise ValueError("quantization table entries must be integers >= 1")
        v = v.astype(np.int64)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size

    def __eq__(self, other):
        return isinstance(other, QuantTable) and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash(self.values.tobytes())

    @property
    def is_unit(self) -> bool:
        return bool(np.all(self.values == 1))

    def check_shape(self, shape: BlockShape):
        if self.values.size != shape.size:
            raise ValueError(
                f"quantization table has {self.values.size} entries, block {shape} needs {shape.size}"
            )


def quant_table_qf100(shape: BlockShape) -> QuantTable:
    """All-ones table used at quality factor 100."""
    return QuantTable(np.ones(shape.size, dtype=np.int64))
