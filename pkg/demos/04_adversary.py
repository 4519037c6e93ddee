"""
Defeating a library of descriptions
===================================

Z is built in segments: each segment disagrees with one opponent until that
opponent's agreement with Z up to the current length drops below a target
threshold, which gives a checkable certificate.  Feeding Z into the
non-extremal construction gives a set A whose agreement with every library
member dips below r at the horizons certified against a small threshold, while descriptions built from
the slices S_0..S_{n-1} still agree with A on a fixed fraction.
"""

# %%
from fractions import Fraction

from coarsedensity.adversary import (
    non_extremal_build,
    verify_certificates,
    weak_generic_defeat,
    witness_q_description,
)
from coarsedensity.bitseq import FormulaGenerator, GeneratorLibrary, PeriodicGenerator, RandomGenerator, symagree
from coarsedensity.density import density_profile, estimate_liminf_limsup

N = 2**15
lib = GeneratorLibrary(
    [FormulaGenerator.evens(), FormulaGenerator.zeros(), PeriodicGenerator("1", "011"), RandomGenerator(1, 0.3)]
)
z, schedule = weak_generic_defeat(lib, [Fraction(1, 2), Fraction(1, 4), Fraction(1, 8)], N)
for c in schedule.certificates:
    print(f"opponent {c.opponent}  threshold {c.threshold}  agreement {c.agreements}/{c.length}")
print("certificates check out:", all(verify_certificates(z, lib, schedule)))

# %%
r = Fraction(1, 2)
A = non_extremal_build(r, lib, z, N)
for e in range(len(lib)):
    agree = density_profile(symagree(A, lib[e].prefix(N)))
    dips = [float(agree.rho(c.length)) for c in schedule.certificates if c.opponent == e and c.threshold == Fraction(1, 8)]
    print(f"C_{e}: agreement at its 1/8 horizon {[round(d, 3) for d in dips]}")

# %%
# Witness descriptions: agree with A on S_0..S_{n-1} and guess 0 elsewhere.
for n in range(4):
    C = witness_q_description(r, lib, n, N).prefix(N)
    est = estimate_liminf_limsup(density_profile(symagree(A, C)))
    print(f"n={n}  lower agreement ~ {float(est.liminf_est):.3f}")
