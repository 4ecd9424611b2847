import math

import numpy as np
import pytest

from jpegcompat.cli import run
from jpegcompat.experiments import (
    ExperimentConfig,
    ResultRow,
    cmd_incompat_rate,
    cmd_payload_detect,
    cmd_verify_block,
    read_quant_file,
    rows_from_csv,
    rows_from_json,
    rows_to_csv,
    rows_to_json,
)
from jpegcompat.images import gen_synthetic, save_pgm
from jpegcompat.transform import BlockShape


def _by_stat(rows, stat):
    return [r for r in rows if r.statistic == stat]


def test_rows_serialization_lossless():
    rows = [
        ResultRow("x", ResultRow.format_params(b=2, a="s"), "v", 0.1 + 0.2, 3, 1 / 3),
        ResultRow("x", "", "inf", math.inf, 1),
        ResultRow("x", "", "nan", math.nan, 0, None),
    ]
    assert rows[0].params == "a=s;b=2"
    for back in (rows_from_csv(rows_to_csv(rows)), rows_from_json(rows_to_json(rows))):
        assert back[0] == rows[0]
        assert back[1].value == math.inf
        assert math.isnan(back[2].value) and back[2].half_width is None


def test_read_quant_file(tmp_path):
    p = tmp_path / "q.txt"
    p.write_text("1 2\n3 4\n")
    assert read_quant_file(p, BlockShape(2, 2)).values.tolist() == [1, 2, 3, 4]
    with pytest.raises(ValueError):
        read_quant_file(p, BlockShape(1, 2))


def test_verify_block_report():
    text, rows = cmd_verify_block(np.array([195, 84]), BlockShape(1, 2), enumerate_all=True)
    assert "[16, 78]" in text and "feasible (compatible)" in text
    assert "[[195, 84], [194, 84]]" in text
    assert _by_stat(rows, "antecedents")[0].value == 2
    text, rows = cmd_verify_block(np.array([17, 77]), BlockShape(1, 2), kind="coeffs")
    assert "infeasible (incompatible)" in text
    assert _by_stat(rows, "incompatible")[0].value == 1.0


def test_incompat_rate_small():
    cfg = ExperimentConfig(seed=1, shape=BlockShape(4, 4), samples=40, image_size=32, max_changes=3)
    rows = cmd_incompat_rate(cfg)
    fracs = _by_stat(rows, "incompatible_fraction")
    assert len(fracs) == 4 and fracs[0].value == 0.0
    assert all(r.count == 40 for r in fracs)
    assert fracs[3].value > 0
    assert rows == cmd_incompat_rate(cfg)


def test_payload_detect_invariants():
    cfg = ExperimentConfig(seed=2, samples=3, image_size=48, payload=0.05,
                           smoothness=(1, 4), noise=(0, 1.5), contrast=(10, 200))
    rows = cmd_payload_detect(cfg)
    mods = [r.value for r in _by_stat(rows, "modified_blocks")]
    incs = [r.value for r in _by_stat(rows, "incompatible_blocks")]
    assert all(i <= m for i, m in zip(incs, mods))
    assert _by_stat(rows, "cover_false_alarms")[0].value == 0
    cfg0 = ExperimentConfig(seed=2, samples=2, image_size=24, payload=0.0)
    assert all(r.value == 0 for r in _by_stat(cmd_payload_detect(cfg0), "incompatible_blocks"))


def test_pgm_input_dir(tmp_path):
    for i in range(2):
        save_pgm(tmp_path / f"im{i}.pgm", gen_synthetic(i, 24))
    cfg = ExperimentConfig(seed=0, samples=2, image_size=24, input_dir=tmp_path, payload=0.1)
    assert len(_by_stat(cmd_payload_detect(cfg), "modified_blocks")) == 2


def test_cli_verify_block(capsys):
    assert run(["verify-block", "--shape", "1x2", "--pixels", "195,84"]) == 0
    out = capsys.readouterr().out
    assert "coefficients  [16, 78]" in out and "feasible" in out


def test_cli_writes_files(tmp_path, capsys):
    out = tmp_path / "r.json"
    code = run(["incompat-rate", "--shape", "2x2", "--seed", "3", "--samples", "10",
                "--image-size", "16", "--max-changes", "1", "--out", str(out)])
    assert code == 0
    rows = rows_from_json(out.read_text())
    assert len(_by_stat(rows, "incompatible_fraction")) == 2
    assert run(["incompat-rate", "--shape", "2x2", "--seed", "3", "--samples", "10",
                "--image-size", "16", "--max-changes", "1"]) == 0
    assert rows_from_csv(capsys.readouterr().out) == rows


def test_cli_timing_runs(capsys):
    code = run(["timing", "--shape", "4x4", "--seed", "1", "--samples", "3", "--image-size", "8",
                "--budgets", "1,100"])
    assert code == 0
    rows = rows_from_csv(capsys.readouterr().out)
    pe = _by_stat(rows, "pe")
    assert len(pe) == 2 and pe[0].value == 0.5


@pytest.mark.parametrize("argv", [
    ["incompat-rate", "--samples", "5"],
    ["incompat-rate", "--seed", "1", "--shape", "0x3"],
    ["verify-block", "--shape", "1x2", "--pixels", "1,2,3"],
    ["verify-block", "--shape", "1x2", "--pixels", "300,2"],
    ["timing", "--seed", "1", "--budgets", "100,10"],
    ["timing", "--seed", "1", "--budgets", "1.5"],
    ["incompat-rate", "--seed", "1", "--samples", "0"],
    ["frobnicate"],
])
def test_cli_usage_errors(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        code = run(argv)
        raise SystemExit(code)
    assert exc.value.code == 1


def test_cli_io_errors(tmp_path):
    assert run(["incompat-rate", "--seed", "1", "--input-dir", str(tmp_path / "nope")]) == 2
    assert run(["payload-detect", "--seed", "1", "--input-dir", str(tmp_path)]) == 2
    (tmp_path / "bad.pgm").write_bytes(b"P5\n4 4\n255\n")
    assert run(["payload-detect", "--seed", "1", "--input-dir", str(tmp_path)]) == 2
    assert run(["verify-block", "--shape", "1x2", "--input", str(tmp_path / "missing.txt")]) == 2
    assert run(["incompat-rate", "--seed", "1", "--out", str(tmp_path / "no" / "x.csv")]) == 2


def test_cli_input_file(tmp_path, capsys):
    f = tmp_path / "b.txt"
    f.write_text("coeffs 17 77\n")
    assert run(["verify-block", "--shape", "1x2", "--input", str(f)]) == 0
    assert "infeasible" in capsys.readouterr().out
    f.write_text("rgb 1 2\n")
    assert run(["verify-block", "--shape", "1x2", "--input", str(f)]) == 1


def test_timing_rejects_large_blocks():
    assert run(["timing", "--seed", "1", "--shape", "9x9", "--samples", "1"]) == 1
