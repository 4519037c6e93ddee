"""
Moving a coarse computability bound with a monotone map
=======================================================

B = h(A) u complement(R) places A along R = range(h) and fills the rest with
ones.  Any description of A transforms the same way, and if R has density s
then the best agreement with B is s * gamma(A) + 1 - s.  With h(k) = 2k the
bound is squeezed from [0, 1] into [1/2, 1].
"""

# %%
from fractions import Fraction

from coarsedensity.bitseq import FormulaGenerator, GeneratorLibrary, RandomGenerator
from coarsedensity.codings import IncreasingMap, spectrum_transform
from coarsedensity.density import gamma_hat

N = 2**16
h, R, s = IncreasingMap(a=2), FormulaGenerator.evens(), Fraction(1, 2)
A_gen = RandomGenerator(5, 0.4)
lib = GeneratorLibrary([FormulaGenerator.zeros(), FormulaGenerator.ones(), RandomGenerator(9), FormulaGenerator.odds()])

A = A_gen.prefix(N // 2)
B = spectrum_transform(A, h, R, N)
lib_b = GeneratorLibrary(FormulaGenerator.from_prefix(spectrum_transform(c.prefix(N // 2), h, R, N)) for c in lib)

# %%
gamma_a, best_a = gamma_hat(A, lib, N // 4)
gamma_b, best_b = gamma_hat(B, lib_b, N // 2)
print(f"gamma(A) ~ {float(gamma_a):.4f} via member {best_a}")
print(f"gamma(B) ~ {float(gamma_b):.4f} via member {best_b}")
print(f"predicted  {float(s * gamma_a + 1 - s):.4f}")
