import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from jpegcompat.codec import DctBlock, compress_blocks, split_blocks
from jpegcompat.detect import (
    BlockOutcome,
    BlockReport,
    classify_block,
    classify_image,
    expected_miss,
    pe_min,
    pe_sweep,
    report_at_budget,
    score_image,
    timing_curve,
)
from jpegcompat.embedding import EmbeddingParams, lsbm_embed
from jpegcompat.feasibility import Budget
from jpegcompat.images import gen_synthetic
from jpegcompat.transform import BlockShape, dct_matrix, quant_table_qf100

S12 = BlockShape(1, 2)


def _reports(*outcomes):
    return [BlockReport(i, o) for i, o in enumerate(outcomes)]


def test_pe_examples():
    assert pe_min([0.0, 0.1, 0.2], [0.15, 0.3, 0.4]) == (pytest.approx(1 / 6), 0.2)
    assert pe_min([0.0, 0.1], [0.5, 0.6]) == (0.0, 0.1)
    pe, tau = pe_min([0.3, 0.3], [0.3, 0.3])
    assert pe == 0.5 and tau == 0.3


def test_pe_ties_prefer_fewer_false_alarms():
    # -inf and 0.5 both give P_E 1/2; the higher threshold has no false alarms
    pe, tau = pe_min([0.5, 0.5], [0.5, 0.5])
    assert pe == 0.5 and tau == 0.5


def test_pe_sweep_shape_and_errors():
    taus, fa, md = pe_sweep([0.0, 1.0], [1.0, math.inf])
    assert taus[0] == -math.inf and taus.tolist()[1:] == [0.0, 1.0, math.inf]
    assert fa.tolist() == [1.0, 0.5, 0.0, 0.0]
    assert md.tolist() == [0.0, 0.0, 0.5, 1.0]
    with pytest.raises(ValueError):
        pe_min([], [1.0])
    with pytest.raises(ValueError):
        pe_min([math.nan], [1.0])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from([0.0, 0.1, 0.25, 0.5, 1.0, math.inf]), min_size=1, max_size=12),
       st.lists(st.sampled_from([0.0, 0.1, 0.25, 0.5, 1.0, math.inf]), min_size=1, max_size=12))
def test_pe_matches_quadratic_oracle(cover, stego):
    pe, tau = pe_min(cover, stego)
    ref_pe, ref_tau = oracles.pe_min_quadratic(cover, stego)
    assert pe == pytest.approx(ref_pe, abs=1e-15) and tau == ref_tau


def test_expected_miss():
    assert expected_miss(0.64, 5) == pytest.approx(0.36**5)
    assert expected_miss(0.64, 5) == pytest.approx(0.006, abs=1e-3)
    assert expected_miss(0.3, 0) == 1.0
    with pytest.raises(ValueError):
        expected_miss(1.2, 3)
    with pytest.raises(ValueError):
        expected_miss(0.5, 2.5)


def test_score_image_rules():
    O = BlockOutcome
    s = score_image(_reports(O.FEASIBLE, O.UNSOLVED, O.SKIPPED, O.IGNORED, O.FEASIBLE))
    assert (s.n_eligible, s.unsolved_ratio, s.label) == (3, pytest.approx(1 / 3), "unknown")
    assert s.score == pytest.approx(1 / 3)
    s = score_image(_reports(O.FEASIBLE, O.FEASIBLE))
    assert (s.label, s.score) == ("cover", 0.0)
    s = score_image(_reports(O.UNSOLVED, O.INCOMPATIBLE))
    assert s.label == "stego" and s.score == math.inf and s.stego_proven
    s = score_image(_reports(O.SKIPPED, O.IGNORED))
    assert s.unsolved_ratio == 0.0 and s.label == "cover"
    with pytest.raises(ValueError):
        score_image([])


def test_classify_block_outcomes():
    assert classify_block(DctBlock.qf100([16, 78], S12)).outcome is BlockOutcome.FEASIBLE
    assert classify_block(DctBlock.qf100([17, 77], S12)).outcome is BlockOutcome.INCOMPATIBLE
    rep = classify_block(DctBlock.qf100([200, 0], S12))
    assert rep.outcome is BlockOutcome.SKIPPED and rep.clipped and rep.verdict is None


def _image_pair(seed, size=32, payload=0.3):
    shape = BlockShape(6, 6)
    q, M = quant_table_qf100(shape), dct_matrix(shape)
    C = compress_blocks(split_blocks(gen_synthetic(seed, size), shape), q, M)
    S, _ = lsbm_embed(C, EmbeddingParams(payload, seed))
    return ([DctBlock(r, q, shape) for r in C], [DctBlock(r, q, shape) for r in S])


def test_classify_image_cache():
    cover, stego = _image_pair(0)
    cache = {}
    a = classify_image(cover, Budget.nodes(5000), cache)
    assert len(cache) == len(set(b.key() for b in cover))
    b = classify_image(stego, Budget.nodes(5000), cache)
    direct = classify_image(stego, Budget.nodes(5000))
    assert [r.outcome for r in b] == [r.outcome for r in direct]
    assert [r.index for r in b] == list(range(len(stego)))
    assert all(r.outcome is not BlockOutcome.INCOMPATIBLE for r in a)


def test_report_at_budget():
    rep = BlockReport(3, BlockOutcome.FEASIBLE, None, False, 120)
    assert report_at_budget(rep, 120) is rep
    low = report_at_budget(rep, 119)
    assert low.outcome is BlockOutcome.UNSOLVED and low.index == 3 and low.nodes == 119
    skipped = BlockReport(0, BlockOutcome.SKIPPED, clipped=True)
    assert report_at_budget(skipped, 1) is skipped


def test_timing_curve_matches_direct_runs():
    pairs = [_image_pair(s, 24) for s in range(4)]
    covers = [p[0] for p in pairs]
    stegos = [p[1] for p in pairs]
    budgets = [1, 20, 200, 2000]
    curve = timing_curve(covers, stegos, budgets)
    for j, b in enumerate(budgets):
        direct = [score_image(classify_image(img, Budget.nodes(b))).score for img in covers]
        assert curve.cover_ratios[j].tolist() == direct
        direct = [score_image(classify_image(img, Budget.nodes(b))).score for img in stegos]
        assert curve.stego_ratios[j].tolist() == direct
    assert curve.pe[0] == 0.5
    assert curve.zero_mass()[0] == 0.0
    assert len(curve.points()) == 4
    with pytest.raises(ValueError):
        timing_curve(covers, stegos, [10, 5])
    with pytest.raises(ValueError):
        timing_curve(covers, stegos, [0, 5])
