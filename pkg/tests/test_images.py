import numpy as np
import pytest

from jpegcompat.codec import compress_blocks, decompress_blocks, split_blocks
from jpegcompat.images import PgmError, gen_synthetic, load_pgm, save_pgm
from jpegcompat.transform import BlockShape, dct_matrix, quant_table_qf100


def test_pgm_roundtrip(tmp_path):
    img = gen_synthetic(1, (20, 30))
    save_pgm(tmp_path / "a.pgm", img)
    back = load_pgm(tmp_path / "a.pgm")
    assert back.dtype == np.uint8 and np.array_equal(back, img)


def test_pgm_header_comments(tmp_path):
    path = tmp_path / "c.pgm"
    path.write_bytes(b"P5\n# made by hand\n2 1\n255\n" + bytes([7, 250]))
    assert load_pgm(path).tolist() == [[7, 250]]


@pytest.mark.parametrize("data", [
    b"P2\n2 1\n255\n7 250",
    b"P5\n2 1\n65535\n" + bytes(4),
    b"P5\n2 2\n255\n" + bytes(3),
    b"",
])
def test_pgm_errors(tmp_path, data):
    path = tmp_path / "bad.pgm"
    path.write_bytes(data)
    with pytest.raises(PgmError):
        load_pgm(path)


def test_save_rejects_bad_arrays(tmp_path):
    with pytest.raises(ValueError):
        save_pgm(tmp_path / "x.pgm", np.full((2, 2), 300))
    with pytest.raises(ValueError):
        save_pgm(tmp_path / "x.pgm", np.zeros(4))


def test_synthetic_is_deterministic():
    a = gen_synthetic(42, 64)
    assert np.array_equal(a, gen_synthetic(42, 64))
    assert not np.array_equal(a, gen_synthetic(43, 64))
    assert a.shape == (64, 64) and a.dtype == np.uint8


def test_synthetic_parameters():
    flat = gen_synthetic(0, 64, smoothness=4, noise=0, contrast=10)
    assert np.ptp(flat) <= 11
    wide = gen_synthetic(0, 64, contrast=200)
    assert np.ptp(wide) > 150
    uniform = gen_synthetic(0, 128, smoothness=0)
    assert uniform.min() <= 2 and uniform.max() >= 253
    with pytest.raises(ValueError):
        gen_synthetic(0, 0)
    with pytest.raises(ValueError):
        gen_synthetic(0, 8, noise=-1)


def test_block_grid_of_synthetic_image():
    shape = BlockShape(6, 6)
    blocks = split_blocks(gen_synthetic(3, 256), shape)
    assert blocks.shape == (42 * 42, 36)
    img = gen_synthetic(3, 252)
    q, M = quant_table_qf100(shape), dct_matrix(shape)
    C = compress_blocks(split_blocks(img, shape), q, M)
    assert len(C) == 1764
    _, _, clipped = decompress_blocks(C, q, M)
    assert clipped.mean() < 0.05
