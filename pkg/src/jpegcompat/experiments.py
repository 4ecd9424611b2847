"""Seeded experiment drivers and their tabular results.

Every driver takes an :class:`ExperimentConfig` and returns a list of
:class:`ResultRow`.  Rows never carry wall-clock measurements, so with node
budgets the serialized output depends only on the configuration.

CSV columns, in order: ``experiment, params, statistic, value, count,
half_width``.  ``params`` is a ``;``-separated ``key=value`` list with keys
sorted; ``half_width`` is empty when it does not apply.  JSON output is an
array of objects with the same six keys.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.stats import spearmanr

from .codec import DctBlock, compress, compress_blocks, decompress, split_blocks
from .detect import (
    BlockOutcome,
    classify_block,
    classify_image,
    pe_min,
    score_image,
    timing_curve,
)
from .embedding import EmbeddingParams, count_nzac, lsbm_embed, modify_random
from .feasibility import Budget, build_constraints, solve_feasibility, verify_antecedent
from .images import gen_synthetic, load_pgm
from .transform import BlockShape, QuantTable, dct_matrix, quant_table_qf100

__all__ = [
    "COLUMNS",
    "ExperimentConfig",
    "InvariantError",
    "ResultRow",
    "SourceExhausted",
    "cmd_incompat_rate",
    "cmd_payload_detect",
    "cmd_timing",
    "cmd_verify_block",
    "derive_seed",
    "read_quant_file",
    "rows_from_csv",
    "rows_from_json",
    "rows_to_csv",
    "rows_to_json",
]

COLUMNS = ("experiment", "params", "statistic", "value", "count", "half_width")
Z95 = 1.959963984540054


class InvariantError(RuntimeError):
    """An internal consistency check failed."""


class SourceExhausted(RuntimeError):
    """The image source ran out of material."""


def derive_seed(seed: int, *tags: int) -> int:
    """Independent 32-bit seed for the stream identified by ``tags``."""
    return int(np.random.SeedSequence([int(seed), *[int(t) for t in tags]]).generate_state(1)[0])


@dataclass
class ExperimentConfig:
    """Inputs shared by all drivers.

    ``smoothness``, ``noise`` and ``contrast`` are ``(low, high)`` ranges;
    each synthetic image draws its own values uniformly from them.  ``budgets`` lists the node budgets
    of the timing experiment (or time budgets when ``timing_in_seconds``).
    """

    seed: int
    shape: BlockShape = field(default_factory=lambda: BlockShape(6, 6))
    quant: Optional[QuantTable] = None
    samples: int = 100
    budget_nodes: Optional[int] = None
    budget_seconds: Optional[float] = None
    payload: float = 0.01
    input_dir: Optional[Path] = None
    out: Optional[Path] = None
    image_size: int = 64
    smoothness: tuple = (1.5, 1.5)
    noise: tuple = (3.0, 3.0)
    contrast: tuple = (200.0, 200.0)
    max_changes: int = 6
    blocks_per_image: int = 16
    budgets: Sequence[float] = (30, 300, 3000, 30000)
    timing_in_seconds: bool = False

    def __post_init__(self):
        if self.seed is None:
            raise ValueError("a seed is required")
        self.seed = int(self.seed)
        if self.quant is None:
            self.quant = quant_table_qf100(self.shape)
        self.quant.check_shape(self.shape)
        if self.samples < 1:
            raise ValueError("samples must be positive")
        if self.input_dir is not None:
            self.input_dir = Path(self.input_dir)
            if not self.input_dir.is_dir():
                raise FileNotFoundError(f"input directory {self.input_dir} does not exist")
        if self.out is not None:
            self.out = Path(self.out)
            if not self.out.parent.is_dir():
                raise FileNotFoundError(f"output directory {self.out.parent} does not exist")
        for name in ("smoothness", "noise", "contrast"):
            lo, hi = getattr(self, name)
            if lo < 0 or hi < lo:
                raise ValueError(f"{name} range must satisfy 0 <= low <= high")

    def budget(self) -> Optional[Budget]:
        if self.budget_nodes is None and self.budget_seconds is None:
            return None
        return Budget(self.budget_nodes, self.budget_seconds)

    def operator(self):
        return self.quant, dct_matrix(self.shape)


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    params: str
    statistic: str
    value: float
    count: int
    half_width: Optional[float] = None

    @staticmethod
    def format_params(**params) -> str:
        return ";".join(f"{k}={params[k]}" for k in sorted(params))

    def param_dict(self) -> dict:
        if not self.params:
            return {}
        return dict(item.split("=", 1) for item in self.params.split(";"))

    def as_record(self) -> dict:
        return {
            "experiment": self.experiment,
            "params": self.params,
            "statistic": self.statistic,
            "value": self.value,
            "count": self.count,
            "half_width": self.half_width,
        }


def _fmt(v: Optional[float]) -> str:
    if v is None:
        return ""
    return repr(float(v))


def rows_to_csv(rows: Sequence[ResultRow], path=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([r.experiment, r.params, r.statistic, _fmt(r.value), str(int(r.count)),
                    _fmt(r.half_width)])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def rows_from_csv(text: str) -> list[ResultRow]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != COLUMNS:
        raise ValueError("unexpected CSV header")
    return [
        ResultRow(d["experiment"], d["params"], d["statistic"], float(d["value"]),
                  int(d["count"]), float(d["half_width"]) if d["half_width"] else None)
        for d in reader
    ]


def rows_to_json(rows: Sequence[ResultRow], path=None) -> str:
    def clean(v):
        # JSON has no inf/nan literals; keep them as strings
        if isinstance(v, float) and not math.isfinite(v):
            return repr(v)
        return v

    recs = [{k: clean(v) for k, v in r.as_record().items()} for r in rows]
    text = json.dumps(recs, indent=1) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def rows_from_json(text: str) -> list[ResultRow]:
    out = []
    for d in json.loads(text):
        hw = d["half_width"]
        out.append(ResultRow(d["experiment"], d["params"], d["statistic"], float(d["value"]),
                             int(d["count"]), None if hw is None else float(hw)))
    return out


def write_rows(rows: Sequence[ResultRow], path) -> str:
    path = Path(path)
    if path.suffix.lower() == ".json":
        return rows_to_json(rows, path)
    return rows_to_csv(rows, path)


def read_quant_file(path, shape: BlockShape) -> QuantTable:
    """Quantization table from a text file of ``n*m`` whitespace-separated integers."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        values = [int(tok) for tok in text.split()]
    except ValueError as exc:
        raise ValueError(f"{path}: quantization entries must be integers") from exc
    if len(values) != shape.size:
        raise ValueError(f"{path}: {len(values)} entries, block {shape} needs {shape.size}")
    return QuantTable(np.array(values))


# ---------------------------------------------------------------- sources

def _draw(rng, bounds):
    lo, hi = bounds
    return lo if hi == lo else float(rng.uniform(lo, hi))


class ImageSource:
    """Indexed access to the configured images (PGM directory or synthetic)."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.files = None
        if cfg.input_dir is not None:
            self.files = sorted(p for p in cfg.input_dir.iterdir() if p.suffix.lower() == ".pgm")
            if not self.files:
                raise SourceExhausted(f"no .pgm files in {cfg.input_dir}")

    def __len__(self):
        return len(self.files) if self.files is not None else 1 << 31

    def image(self, idx: int) -> np.ndarray:
        if self.files is not None:
            if idx >= len(self.files):
                raise SourceExhausted(f"only {len(self.files)} images available")
            return load_pgm(self.files[idx])
        rng = np.random.default_rng(derive_seed(self.cfg.seed, 1, idx))
        smooth = _draw(rng, self.cfg.smoothness)
        noise = _draw(rng, self.cfg.noise)
        contrast = _draw(rng, self.cfg.contrast)
        return gen_synthetic(derive_seed(self.cfg.seed, 2, idx), self.cfg.image_size,
                             smooth, noise, contrast)

    def coefficients(self, idx: int) -> np.ndarray:
        q, M = self.cfg.operator()
        return compress_blocks(split_blocks(self.image(idx), self.cfg.shape), q, M)


def _blocks(C: np.ndarray, cfg: ExperimentConfig) -> list[DctBlock]:
    return [DctBlock(row, cfg.quant, cfg.shape) for row in C]


def _check_feasible(report, block: DctBlock):
    v = report.verdict
    if v is not None and v.feasible:
        if not verify_antecedent(v.k, block):
            raise InvariantError("a feasible verdict failed antecedent verification")


def _half_width(p: float, n: int) -> float:
    return Z95 * math.sqrt(max(p * (1 - p), 0.0) / n) if n else math.nan


# ---------------------------------------------------------------- commands

def cmd_verify_block(values, shape: BlockShape, quant: Optional[QuantTable] = None,
                     kind: str = "pixels", budget: Optional[Budget] = None,
                     enumerate_all: bool = False):
    """Decide one block and describe every stage of the pipeline.

    ``kind`` is ``"pixels"`` (compress first) or ``"coeffs"``.  Returns the
    report text and result rows (verdict, node count, antecedent count when
    ``enumerate_all``).
    """
    quant = quant or quant_table_qf100(shape)
    M = dct_matrix(shape)
    values = np.asarray(values)
    lines = [f"block shape {shape}, quantization {quant.values.tolist()}"]
    if kind == "pixels":
        block, err = compress(values, quant, M)
        lines.append(f"pixels        {values.reshape(-1).tolist()}")
        lines.append(f"DCT error u   {np.round(err.u, 5).tolist()}")
    elif kind == "coeffs":
        block = DctBlock(values, quant, shape)
    else:
        raise ValueError("kind must be 'pixels' or 'coeffs'")
    dec = decompress(block, M)
    lines.append(f"coefficients  {block.coeffs.tolist()}")
    lines.append(f"[y]           {dec.rounded.tolist()}")
    lines.append(f"e             {np.round(dec.e, 5).tolist()}")
    rows = []
    params = ResultRow.format_params(shape=str(shape), coeffs=" ".join(map(str, block.coeffs)))
    if dec.clipped:
        lines.append("verdict       skipped (decompression leaves [0, 255])")
        rows.append(ResultRow("verify-block", params, "skipped", 1.0, 1))
        return "\n".join(lines) + "\n", rows
    system = build_constraints(block, dec.e, rounded=dec.rounded)
    v = solve_feasibility(system, budget)
    label = {"feasible": "feasible (compatible)", "infeasible": "infeasible (incompatible)",
             "exhausted": "unsolved (budget reached)", "ignored": "ignored"}[v.status.value]
    lines.append(f"verdict       {label}")
    if v.feasible:
        if not verify_antecedent(v.k, block, dec.rounded):
            raise InvariantError("reported antecedent does not recompress")
        lines.append(f"k             {v.k.tolist()}")
        lines.append(f"antecedent    {(dec.rounded - v.k).tolist()}")
    lines.append(f"nodes         {v.nodes}")
    lines.append(f"time          {v.elapsed * 1e3:.2f} ms")
    rows.append(ResultRow("verify-block", params, "incompatible", float(v.infeasible), 1))
    rows.append(ResultRow("verify-block", params, "feasible", float(v.feasible), 1))
    rows.append(ResultRow("verify-block", params, "nodes", float(v.nodes), 1))
    if enumerate_all:
        from itertools import product

        from .feasibility import k_bounds

        lo, hi = k_bounds(system, pixel_range=True)
        found = []
        for k in product(*[range(a, b + 1) for a, b in zip(lo, hi)]):
            if verify_antecedent(np.array(k), block, dec.rounded):
                found.append(dec.rounded - np.array(k))
        lines.append(f"antecedents   {[a.tolist() for a in found]}")
        rows.append(ResultRow("verify-block", params, "antecedents", float(len(found)), 1))
    return "\n".join(lines) + "\n", rows


def _sample_blocks(cfg: ExperimentConfig, source: ImageSource, p: int, rng):
    """Yield ``(block, modified_block)`` pairs until ``cfg.samples`` are usable."""
    q, M = cfg.operator()
    got = 0
    idx = 0
    while got < cfg.samples:
        C = source.coefficients(idx)
        idx += 1
        order = rng.permutation(len(C))[: cfg.blocks_per_image]
        for j in order:
            if got >= cfg.samples:
                break
            block = DctBlock(C[j], q, cfg.shape)
            modified, _ = modify_random(block, p, rng)
            if decompress(modified, M).clipped:
                continue
            got += 1
            yield block, modified


def cmd_incompat_rate(cfg: ExperimentConfig) -> list[ResultRow]:
    """Share of blocks proven incompatible after ``p`` random ±1 changes, ``p = 0..P``."""
    source = ImageSource(cfg)
    budget = cfg.budget()
    rows = []
    for p in range(cfg.max_changes + 1):
        rng = np.random.default_rng(derive_seed(cfg.seed, 3, p))
        n = inc = uns = ign = 0
        for _, modified in _sample_blocks(cfg, source, p, rng):
            rep = classify_block(modified, budget)
            _check_feasible(rep, modified)
            n += 1
            inc += rep.outcome is BlockOutcome.INCOMPATIBLE
            uns += rep.outcome is BlockOutcome.UNSOLVED
            ign += rep.outcome is BlockOutcome.IGNORED
        params = ResultRow.format_params(p=p, shape=str(cfg.shape))
        frac = inc / n
        rows.append(ResultRow("incompat-rate", params, "incompatible_fraction", frac, n,
                              _half_width(frac, n)))
        rows.append(ResultRow("incompat-rate", params, "unsolved", float(uns), n))
        rows.append(ResultRow("incompat-rate", params, "ignored", float(ign), n))
    return rows


def _embed_pair(cfg: ExperimentConfig, source: ImageSource, idx: int, payload: float):
    C = source.coefficients(idx)
    params = EmbeddingParams(payload, derive_seed(cfg.seed, 4, idx))
    S, changes = lsbm_embed(C, params)
    return C, S, changes


def cmd_payload_detect(cfg: ExperimentConfig) -> list[ResultRow]:
    """Embed at ``cfg.payload`` in every image and count proven-incompatible blocks.

    Per image: modified blocks, incompatible blocks of the stego version and
    incompatible blocks of the cover.  Summary rows add the cover
    false-alarm count, the Spearman correlation between modified and
    incompatible counts and the detection rate among images with at least
    five modified blocks.
    """
    source = ImageSource(cfg)
    budget = cfg.budget()
    rows = []
    mods, incs, false_alarms = [], [], 0
    for i in range(cfg.samples):
        C, S, changes = _embed_pair(cfg, source, i, cfg.payload)
        cache: dict = {}
        cover_blocks = _blocks(C, cfg)
        stego_blocks = _blocks(S, cfg)
        cover_rep = classify_image(cover_blocks, budget, cache)
        stego_rep = classify_image(stego_blocks, budget, cache)
        for rep, blk in zip(stego_rep, stego_blocks):
            _check_feasible(rep, blk)
        cs, ss = score_image(cover_rep), score_image(stego_rep)
        r = len(changes.modified_blocks())
        if ss.n_incompatible > r:
            raise InvariantError("more incompatible blocks than modified blocks")
        false_alarms += cs.stego_proven
        mods.append(r)
        incs.append(ss.n_incompatible)
        params = ResultRow.format_params(image=i, payload=cfg.payload, shape=str(cfg.shape))
        rows.append(ResultRow("payload-detect", params, "nzac", float(count_nzac(C)), len(C)))
        rows.append(ResultRow("payload-detect", params, "changes", float(len(changes)), len(C)))
        rows.append(ResultRow("payload-detect", params, "modified_blocks", float(r), len(C)))
        rows.append(ResultRow("payload-detect", params, "incompatible_blocks",
                              float(ss.n_incompatible), len(C)))
        rows.append(ResultRow("payload-detect", params, "unsolved_blocks",
                              float(ss.n_unsolved), len(C)))
        rows.append(ResultRow("payload-detect", params, "cover_incompatible_blocks",
                              float(cs.n_incompatible), len(C)))
    n = cfg.samples
    params = ResultRow.format_params(payload=cfg.payload, shape=str(cfg.shape))
    rows.append(ResultRow("payload-detect", params, "cover_false_alarms", float(false_alarms), n))
    mods_a, incs_a = np.array(mods), np.array(incs)
    rho = spearmanr(mods_a, incs_a).statistic if np.ptp(mods_a) and np.ptp(incs_a) else math.nan
    rows.append(ResultRow("payload-detect", params, "spearman_rho", float(rho), n))
    big = mods_a >= 5
    rate = float((incs_a[big] > 0).mean()) if big.any() else math.nan
    rows.append(ResultRow("payload-detect", params, "proven_fraction_r_ge_5", rate,
                          int(big.sum()), _half_width(rate, int(big.sum())) if big.any() else None))
    return rows


def cmd_timing(cfg: ExperimentConfig) -> list[ResultRow]:
    """Unsolved-ratio distributions and P_E against the solver budget.

    Cover image ``i`` and its LSBM-embedded version form the two classes.
    With node budgets the blocks are solved once at the largest budget.
    """
    if cfg.shape.rows > 8 or cfg.shape.cols > 8:
        raise ValueError("timing supports block shapes up to 8x8")
    source = ImageSource(cfg)
    covers, stegos = [], []
    for i in range(cfg.samples):
        C, S, _ = _embed_pair(cfg, source, i, cfg.payload)
        covers.append(_blocks(C, cfg))
        stegos.append(_blocks(S, cfg))
    budgets = list(cfg.budgets)
    if cfg.timing_in_seconds:
        cov_scores, stg_scores = [], []
        for b in budgets:
            bud = Budget(max_time=float(b))
            cov_scores.append([score_image(classify_image(img, bud)).score for img in covers])
            stg_scores.append([score_image(classify_image(img, bud)).score for img in stegos])
        cov, stg = np.array(cov_scores), np.array(stg_scores)
        pes = [pe_min(cov[j], stg[j])[0] for j in range(len(budgets))]
        unit = "seconds"
    else:
        curve = timing_curve(covers, stegos, budgets)
        cov, stg, pes = curve.cover_ratios, curve.stego_ratios, curve.pe.tolist()
        unit = "nodes"
    rows = []
    n = cfg.samples
    for j, b in enumerate(budgets):
        base = dict(budget=b, payload=cfg.payload, shape=str(cfg.shape), unit=unit)
        params = ResultRow.format_params(**base)
        rows.append(ResultRow("timing", params, "pe", float(pes[j]), 2 * n))
        rows.append(ResultRow("timing", params, "cover_zero_mass", float((cov[j] == 0).mean()), n))
        rows.append(ResultRow("timing", params, "stego_zero_mass", float((stg[j] == 0).mean()), n))
        rows.append(ResultRow("timing", params, "cover_stego_proven",
                              float(np.isinf(cov[j]).sum()), n))
        rows.append(ResultRow("timing", params, "stego_stego_proven",
                              float(np.isinf(stg[j]).sum()), n))
        for cls, arr in (("cover", cov[j]), ("stego", stg[j])):
            for i, v in enumerate(arr):
                p = ResultRow.format_params(**base, cls=cls, image=i)
                rows.append(ResultRow("timing", p, "unsolved_ratio", float(v), 1))
    return rows
