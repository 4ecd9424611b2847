from decimal import Decimal, getcontext

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from jpegcompat.codec import (
    DctBlock,
    compress,
    compress_blocks,
    decompress,
    decompress_blocks,
    join_blocks,
    roundtrip_check,
    split_blocks,
)
from jpegcompat.transform import BlockShape, QuantTable, dct_matrix, quant_table_qf100

S12 = BlockShape(1, 2)
Q12 = quant_table_qf100(S12)
M12 = dct_matrix(S12)


def exact_e(c0, c1):
    """Spatial error of a 2-point block computed with 50-digit decimals."""
    getcontext().prec = 50
    r2 = Decimal(2).sqrt()
    y = [Decimal(c0 + c1) / r2 + 128, Decimal(c0 - c1) / r2 + 128]
    rounded = [int(v.to_integral_value(rounding="ROUND_HALF_UP")) for v in y]
    return rounded, [float(r - v) for r, v in zip(rounded, y)]


def test_toy_compress():
    c, u = compress([195, 84], Q12, M12)
    assert c.coeffs.tolist() == [16, 78]
    assert np.all(np.abs(u.u) <= 0.5)
    c2, _ = compress([194, 84], Q12, M12)
    assert c2 == c


def test_toy_decompress_against_decimal():
    dec = decompress(DctBlock.qf100([16, 78], S12), M12)
    rounded, e = exact_e(16, 78)
    assert dec.rounded.tolist() == rounded == [194, 84]
    assert np.allclose(dec.e, e, atol=1e-12)
    assert np.allclose(dec.e, [-0.47, -0.16], atol=1e-2)
    assert not dec.clipped


def test_toy_modified_decompress():
    dec = decompress(DctBlock.qf100([17, 77], S12), M12)
    rounded, e = exact_e(17, 77)
    assert dec.rounded.tolist() == rounded == [194, 86]
    assert np.allclose(dec.e, e, atol=1e-12)
    assert np.allclose(dec.e, [-0.47, 0.43], atol=1e-2)


def test_flat_block():
    S = BlockShape(4, 4)
    c, _ = compress(np.full(16, 128), quant_table_qf100(S), dct_matrix(S))
    assert not c.coeffs.any()
    assert roundtrip_check(np.full(16, 128), quant_table_qf100(S), dct_matrix(S))
    assert roundtrip_check([195, 84], Q12, M12)


def test_original_pixels_explain_decompression():
    # [y] need not recompress to c, but the original block always differs
    # from [y] by an integer vector, which is what the solver searches for
    S = BlockShape(4, 4)
    q, M = quant_table_qf100(S), dct_matrix(S)
    rng = np.random.default_rng(0)
    stable = 0
    for _ in range(1000):
        x = rng.integers(0, 256, 16)
        c, _ = compress(x, q, M)
        dec = decompress(c, M)
        k = dec.rounded - x
        assert np.array_equal(compress(dec.rounded - k, q, M)[0].coeffs, c.coeffs)
        stable += roundtrip_check(x, q, M)
    assert 0 < stable < 1000


def test_matches_scipy_oracle():
    rng = np.random.default_rng(1)
    for shape in (BlockShape(3, 5), BlockShape(8, 8)):
        q = QuantTable(rng.integers(1, 5, shape.size))
        M = dct_matrix(shape)
        for _ in range(200):
            x = rng.integers(0, 256, shape.size)
            c, _ = compress(x, q, M)
            assert np.array_equal(c.coeffs, oracles.compress(x, (shape.rows, shape.cols), q.values))
            dec = decompress(c, M)
            y, r, e = oracles.decompress(c.coeffs, (shape.rows, shape.cols), q.values)
            assert np.allclose(dec.y, y, atol=1e-9)
            assert np.array_equal(dec.rounded, r)


def test_linearity_before_rounding():
    S = BlockShape(5, 3)
    M = dct_matrix(S)
    rng = np.random.default_rng(2)
    for _ in range(50):
        c1 = rng.integers(-50, 50, S.size)
        c2 = rng.integers(-50, 50, S.size)
        y1 = decompress(DctBlock.qf100(c1, S), M).y
        y2 = decompress(DctBlock.qf100(c2, S), M).y
        y12 = decompress(DctBlock.qf100(c1 + c2, S), M).y
        assert np.allclose(y12 - 128, (y1 - 128) + (y2 - 128), atol=1e-9)


def test_clipped_flag():
    S = BlockShape(2, 2)
    dec = decompress(DctBlock.qf100([400, 0, 0, 0], S), dct_matrix(S))
    assert dec.clipped and dec.rounded.max() > 255
    assert dec.clamped().max() == 255


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_errors_within_half(seed):
    rng = np.random.default_rng(seed)
    S = BlockShape(int(rng.integers(1, 9)), int(rng.integers(1, 9)))
    q = QuantTable(rng.integers(1, 30, S.size))
    M = dct_matrix(S)
    c, u = compress(rng.integers(0, 256, S.size), q, M)
    assert np.all(np.abs(u.u) <= 0.5 + 1e-9)
    assert np.all(np.abs(decompress(c, M).e) <= 0.5 + 1e-9)


def test_input_validation():
    with pytest.raises(ValueError):
        compress([1, 2, 3], Q12, M12)
    with pytest.raises(ValueError):
        compress([300, 2], Q12, M12)
    with pytest.raises(ValueError):
        compress([1.5, 2], Q12, M12)
    with pytest.raises(ValueError):
        DctBlock(np.array([1, 2, 3]), Q12, S12)
    with pytest.raises(ValueError):
        decompress(DctBlock.qf100([1, 2], S12), dct_matrix(BlockShape(2, 1)))


def test_block_equality_and_key():
    a = DctBlock.qf100([1, 2, 3, 4, 5, 6], BlockShape(2, 3))
    b = DctBlock.qf100([1, 2, 3, 4, 5, 6], BlockShape(3, 2))
    assert a != b and a.key() != b.key()
    assert a == DctBlock.qf100(np.array([1, 2, 3, 4, 5, 6]), BlockShape(2, 3))


def test_split_join_and_vectorized():
    S = BlockShape(3, 2)
    img = np.arange(7 * 5).reshape(7, 5) % 256
    blocks = split_blocks(img, S)
    assert blocks.shape == (2 * 2, 6)
    assert np.array_equal(join_blocks(blocks, S, (2, 2)), img[:6, :4])
    assert blocks[1].tolist() == img[0:3, 2:4].reshape(-1).tolist()
    q, M = quant_table_qf100(S), dct_matrix(S)
    C = compress_blocks(blocks, q, M)
    for x, c in zip(blocks, C):
        assert np.array_equal(compress(x, q, M)[0].coeffs, c)
    y, r, clipped = decompress_blocks(C, q, M)
    for c, yy, rr in zip(C, y, r):
        dec = decompress(DctBlock(c, q, S), M)
        assert np.allclose(dec.y, yy) and np.array_equal(dec.rounded, rr)
    assert not clipped.any()


def test_split_uint8_input():
    img = np.full((8, 8), 200, dtype=np.uint8)
    S = BlockShape(8, 8)
    C = compress_blocks(split_blocks(img, S), quant_table_qf100(S), dct_matrix(S))
    assert C[0, 0] == 72 * 8
