"""
Coding a set so it survives density-zero errors
===============================================

R(A) spreads bit n of A over all of R_n = {2^n (2m + 1) - 1}, so any
description of R(A) that is right on a set of density one is right on most of
every R_n.  I(A) instead copies bit n over the factorial block [n!, (n+1)!),
and a majority vote over a block recovers the bit as long as fewer than half
of its positions were corrupted.
"""

# %%
import math

from coarsedensity.bitseq import BitPrefix, FormulaGenerator, symagree
from coarsedensity.codings import factorial_interval, interval_code, r_code
from coarsedensity.decoders import corrupt_blocks, decode_prefix, majority_vote_decode
from coarsedensity.density import density_profile

A = BitPrefix.from_string("0110101")
print("R(A) first 32 bits:", r_code(A, 32))
print("I(A) first 32 bits:", interval_code(A, 32))

# %%
# Corrupt each block of I(A) at just under half its size and decode.
N = math.factorial(7)
code = interval_code(A, N)
flips = {}
for n in range(1, 7):
    lo, hi = factorial_interval(n)
    flips[n] = (hi - lo - 1) // 2 - 1 if hi - lo > 2 else 0
noisy = corrupt_blocks(code, flips, seed=1)
print("flips per block:", flips)
print("decoded:", decode_prefix(noisy, 6), " (bit 0 is not coded)")

# %%
# One block pushed past half goes wrong, and only that block.
lo, hi = factorial_interval(4)
bad = corrupt_blocks(code, {4: (hi - lo) // 2 + 10}, seed=2)
print([majority_vote_decode(bad, n) for n in range(1, 7)], "vs", [int(b) for b in A.bits[1:]])

# %%
# I(A) agrees with the evens on about half of every prefix, with error
# shrinking like 1/(n+1) at the block ends.
agree = density_profile(symagree(code, FormulaGenerator.evens().prefix(N)))
for n in range(1, 7):
    m = math.factorial(n + 1)
    print(f"rho_{m}(I(A) == evens) = {float(agree.rho(m)):.4f}")
