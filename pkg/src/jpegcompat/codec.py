"""Lossy block pipeline: level shift, DCT, quantization and the way back.

Single-block functions (:func:`compress`, :func:`decompress`) follow the
block types; the ``*_blocks`` variants work on stacks of flattened blocks
shaped ``(count, n*m)`` and are what the experiment drivers use.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .transform import (
    TIE_TOL,
    BlockShape,
    DctMatrix,
    QuantTable,
    dct_matrix,
    quant_table_qf100,
    round_half_away,
)

__all__ = [
    "DctBlock",
    "DctError",
    "DecompResult",
    "LEVEL_SHIFT",
    "as_pixel_block",
    "compress",
    "compress_blocks",
    "decompress",
    "decompress_blocks",
    "join_blocks",
    "roundtrip_check",
    "split_blocks",
]

LEVEL_SHIFT = 128


def as_pixel_block(x, shape: BlockShape) -> np.ndarray:
    """Validate and flatten a pixel block to an ``int64`` vector."""
    a = np.asarray(x)
    if a.size != shape.size:
        raise ValueError(f"pixel block has {a.size} samples, shape {shape} needs {shape.size}")
    if not np.all(np.isfinite(a)) or np.any(a != np.round(a)):
        raise ValueError("pixel values must be integers")
    a = a.reshape(-1).astype(np.int64)
    if a.min() < 0 or a.max() > 255:
        raise ValueError("pixel values must lie in [0, 255]")
    return a


@dataclass(frozen=True, eq=False)
class DctBlock:
    """Quantized integer DCT coefficients of one block."""

    coeffs: np.ndarray
    quant: QuantTable
    shape: BlockShape

    def __post_init__(self):
        c = np.asarray(self.coeffs)
        if c.size != self.shape.size:
            raise ValueError(f"{c.size} coefficients do not fit block {self.shape}")
        if not np.all(np.isfinite(c)) or np.any(c != np.round(c)):
            raise ValueError("DCT coefficients must be integers")
        self.quant.check_shape(self.shape)
        c = c.reshape(-1).astype(np.int64)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def qf100(cls, coeffs, shape: BlockShape) -> "DctBlock":
        return cls(np.asarray(coeffs), quant_table_qf100(shape), shape)

    def with_coeffs(self, coeffs) -> "DctBlock":
        return DctBlock(np.asarray(coeffs), self.quant, self.shape)

    def __eq__(self, other):
        return (
            isinstance(other, DctBlock)
            and self.shape == other.shape
            and self.quant == other.quant
            and np.array_equal(self.coeffs, other.coeffs)
        )

    def __hash__(self):
        return hash((self.shape, self.quant, self.coeffs.tobytes()))

    def key(self) -> bytes:
        """Compact identity used for memoizing per-block results."""
        head = np.array([self.shape.rows, self.shape.cols], dtype=np.int64).tobytes()
        return head + self.coeffs.tobytes() + self.quant.values.tobytes()


@dataclass(frozen=True, eq=False)
class DctError:
    """DCT-domain rounding error ``u = c - d/q``."""

    u: np.ndarray


@dataclass(frozen=True, eq=False)
class DecompResult:
    y: np.ndarray = field(repr=False)
    rounded: np.ndarray = field(repr=False)
    e: np.ndarray = field(repr=False)
    clipped: bool = False

    def clamped(self) -> np.ndarray:
        return np.clip(self.rounded, 0, 255)


def _check(shape: BlockShape, q: QuantTable, M: DctMatrix):
    if M.shape != shape:
        raise ValueError(f"DCT matrix is for {M.shape}, block is {shape}")
    q.check_shape(shape)


def compress(x, q: QuantTable, M: DctMatrix) -> tuple[DctBlock, DctError]:
    """Compress one pixel block: ``c = [M (x - 128) / q]``."""
    shape = M.shape
    q.check_shape(shape)
    xv = as_pixel_block(x, shape)
    scaled = (M.entries @ (xv - LEVEL_SHIFT).astype(np.float64)) / q.values
    c = round_half_away(scaled, TIE_TOL)
    return DctBlock(c, q, shape), DctError(c - scaled)


def decompress(block: DctBlock, M: DctMatrix) -> DecompResult:
    """Decompress one block without clamping; ``clipped`` flags range overflow."""
    _check(block.shape, block.quant, M)
    y = M.entries.T @ (block.coeffs * block.quant.values).astype(np.float64) + LEVEL_SHIFT
    r = round_half_away(y, TIE_TOL)
    clipped = bool(r.min() < 0 or r.max() > 255)
    return DecompResult(y, r, r - y, clipped)


def roundtrip_check(x, q: QuantTable, M: DctMatrix) -> bool:
    """Does recompressing the clamped decompression reproduce the same block?"""
    c, _ = compress(x, q, M)
    back = decompress(c, M).clamped()
    c2, _ = compress(back, q, M)
    return bool(np.array_equal(c.coeffs, c2.coeffs))


def compress_blocks(X: np.ndarray, q: QuantTable, M: DctMatrix) -> np.ndarray:
    """Quantized coefficients for a stack of flattened pixel blocks."""
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[1] != M.shape.size:
        raise ValueError("expected a (count, n*m) array of pixel blocks")
    q.check_shape(M.shape)
    scaled = ((X.astype(np.float64) - LEVEL_SHIFT) @ M.entries.T) / q.values
    return round_half_away(scaled, TIE_TOL)


def decompress_blocks(C: np.ndarray, q: QuantTable, M: DctMatrix):
    """Return ``(y, rounded, clipped)`` for a stack of coefficient blocks."""
    C = np.asarray(C)
    y = (C * q.values).astype(np.float64) @ M.entries + LEVEL_SHIFT
    r = round_half_away(y, TIE_TOL)
    clipped = (r < 0).any(axis=1) | (r > 255).any(axis=1)
    return y, r, clipped


def split_blocks(image: np.ndarray, shape: BlockShape) -> np.ndarray:
    """Crop ``image`` to a multiple of ``shape`` and cut it into flattened blocks.

    Blocks come out in row-major block order as a ``(count, n*m)`` array.
    """
    img = np.asarray(image)
    if img.ndim != 2:
        raise ValueError("expected a 2D grayscale image")
    H = img.shape[0] - img.shape[0] % shape.rows
    W = img.shape[1] - img.shape[1] % shape.cols
    if H == 0 or W == 0:
        raise ValueError(f"image {img.shape} is smaller than one {shape} block")
    img = img[:H, :W]
    nb_r, nb_c = H // shape.rows, W // shape.cols
    blocks = img.reshape(nb_r, shape.rows, nb_c, shape.cols).transpose(0, 2, 1, 3)
    return blocks.reshape(nb_r * nb_c, shape.size).astype(np.int64)


def join_blocks(blocks: np.ndarray, shape: BlockShape, grid: tuple[int, int]) -> np.ndarray:
    """Inverse of :func:`split_blocks` for a ``(block_rows, block_cols)`` grid."""
    nb_r, nb_c = grid
    b = np.asarray(blocks).reshape(nb_r, nb_c, shape.rows, shape.cols)
    return b.transpose(0, 2, 1, 3).reshape(nb_r * shape.rows, nb_c * shape.cols)


def default_operator(shape: BlockShape) -> tuple[QuantTable, DctMatrix]:
    return quant_table_qf100(shape), dct_matrix(shape)
