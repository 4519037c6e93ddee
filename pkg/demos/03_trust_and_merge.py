"""
Merging a family of increasingly good descriptions
==================================================

Given C_0, C_1, ... where C_n is eventually within 2^-(n+1) of A on every
dyadic block, the merge picks for block k the largest n <= k that every
earlier C_m "trusts" there, and copies that member's block.  The result is
within a constant factor of each C_n's bound once n and its burn-in have
passed, without knowing the burn-ins in advance.
"""

# %%
from fractions import Fraction

from coarsedensity.bitseq import RandomGenerator
from coarsedensity.trust import WitnessFamily, block_length, merge_with_report, planted_family

K, M = 18, 8
A = RandomGenerator(11).prefix(block_length(K))
members, burn_in = planted_family(A, M, K, seed=3)
print("burn-in per member:", burn_in)

# %%
report = merge_with_report(WitnessFamily(members), K, A)
print("member chosen for block k:", report.choices)

# %%
# Block error of the merge against A, next to the bound 2^(3 - n) for the
# best member already past its burn-in.
for k in range(K + 1):
    n = max((n for n in range(M + 1) if max(n, max(burn_in[: n + 1])) <= k), default=None)
    bound = "-" if n is None else str(Fraction(8, 2**n))
    print(f"k={k:2d}  d_k = {float(report.d(k)):.5f}  bound {bound}")
