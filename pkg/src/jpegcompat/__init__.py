"""Exact JPEG block compatibility testing and the steganalysis built on it."""
from .codec import DctBlock, DctError, DecompResult, compress, decompress, roundtrip_check
from .feasibility import (
    Budget,
    Status,
    Verdict,
    brute_force_antecedent,
    build_constraints,
    k_bounds,
    solve_feasibility,
    system_for_block,
    verify_antecedent,
)
from .transform import BlockShape, DctMatrix, QuantTable, dct_matrix, quant_table_qf100, round_half_away

__version__ = "0.1.0"
