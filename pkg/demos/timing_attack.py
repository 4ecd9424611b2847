"""
Reading the search effort
=========================

Even when a modified block is not proven incompatible, it tends to be hard
for the solver.  Score each image by its share of blocks left unsolved at a
node budget, and see how well that score separates covers from stego images
as the budget grows.
"""

import numpy as np

from jpegcompat.codec import DctBlock, compress_blocks, split_blocks
from jpegcompat.detect import timing_curve
from jpegcompat.embedding import EmbeddingParams, lsbm_embed
from jpegcompat.images import gen_synthetic
from jpegcompat.transform import BlockShape, dct_matrix, quant_table_qf100

shape = BlockShape(8, 8)
q, M = quant_table_qf100(shape), dct_matrix(shape)

covers, stegos = [], []
for i in range(20):
    C = compress_blocks(split_blocks(gen_synthetic(100 + i, 16), shape), q, M)
    S, _ = lsbm_embed(C, EmbeddingParams(0.2, seed=i))
    covers.append([DctBlock(row, q, shape) for row in C])
    stegos.append([DctBlock(row, q, shape) for row in S])

# every block is solved once at the largest budget, smaller budgets are derived
curve = timing_curve(covers, stegos, [10, 100, 1000, 10000])

print("budget   P_E    covers fully solved")
for (budget, pe), zm in zip(curve.points(), curve.zero_mass()):
    print(f"{budget:6d}  {pe:.3f}  {zm:.2f}")

# covers need fewer nodes per block than stego images, so raising the budget
# drives more cover scores to 0 first
print("stego images with a proof:", int(np.isinf(curve.stego_ratios[-1]).sum()), "of", len(stegos))
