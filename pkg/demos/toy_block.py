"""
A two-pixel block, start to finish
==================================

Compress a 1x2 block at quality 100, decompress it, and ask which pixel
pairs could have produced the coefficients.  Then nudge the coefficients by
one and watch every candidate disappear.
"""

import numpy as np

from jpegcompat import BlockShape, compress, decompress, dct_matrix, quant_table_qf100
from jpegcompat import solve_feasibility, system_for_block
from jpegcompat.feasibility import brute_force_antecedent, k_bounds

shape = BlockShape(1, 2)
q, M = quant_table_qf100(shape), dct_matrix(shape)

# compression: level shift, orthonormal DCT, divide by q, round half away from zero
c, err = compress([195, 84], q, M)
print("coefficients", c.coeffs, " DCT rounding error", np.round(err.u, 4))

# decompression lands on (194, 84), not on the original pixels
dec = decompress(c, M)
print("decompressed", dec.rounded, " spatial error e =", np.round(dec.e, 5))

# every antecedent is [y] - k for an integer k inside a small box
system = system_for_block(c)
lo, hi = k_bounds(system)
print("k box", lo, hi)
for k0 in range(lo[0], hi[0] + 1):
    for k1 in range(lo[1], hi[1] + 1):
        x = dec.rounded - np.array([k0, k1])
        same = np.array_equal(compress(x, q, M)[0].coeffs, c.coeffs)
        print(f"  k=({k0:+d},{k1:+d})  x={x}  recompresses: {same}")

# the branch and bound picks the candidate closest to e
v = solve_feasibility(system)
print("solver:", v.status.value, "antecedent", v.antecedent(system), "after", v.nodes, "nodes")

# +1 / -1 on the two coefficients: the block no longer has any antecedent
modified = c.with_coeffs([17, 77])
print("modified block decompresses to", decompress(modified, M).rounded)
print("brute force:", brute_force_antecedent(modified).status.value)
print("solver:     ", solve_feasibility(system_for_block(modified)).status.value)
