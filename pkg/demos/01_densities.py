"""
Densities of bit sequences at a finite horizon
==============================================

A set of naturals is a bit sequence; its density up to n is the fraction of
ones among the first n bits.  The lower and upper densities are limits, so at
a finite horizon they are estimated over a tail window.
"""

# %%
import numpy as np

from coarsedensity.bitseq import FormulaGenerator, PeriodicGenerator, RandomGenerator
from coarsedensity.density import (
    density_profile,
    dyadic_densities,
    estimate_liminf_limsup,
    exact_density,
)

N = 3 * 2**12

# %%
# Arithmetic sets have a density, and the finite profile hits it exactly at
# multiples of the period.
for g in (FormulaGenerator.evens(), FormulaGenerator.rn(2), PeriodicGenerator("", "011")):
    p = density_profile(g.prefix(N))
    print(f"{g.describe()!s:60.60}  rho_N = {p.rho(N)}  exact = {exact_density(g)}")

# %%
# A set with no density: ones on [4^k, 2*4^k) and zeros elsewhere.  The window
# estimate keeps its lower and upper values apart.
def swing_bits(i):
    i = np.asarray(i)
    return (i > 0) & (np.log2(np.maximum(i, 1)).astype(int) % 2 == 0)


swing = FormulaGenerator(swing_bits)
est = estimate_liminf_limsup(density_profile(swing.prefix(N)))
print("swinging set:", est.liminf_est, "<=", est.limsup_est)

# %%
# Density of a random set, and the dyadic-block view d_k of the same prefix.
a = RandomGenerator(7, 0.3).prefix(N)
est = estimate_liminf_limsup(density_profile(a))
print("random p=0.3:", float(est.liminf_est), float(est.limsup_est))
print("block densities:", [round(float(d), 3) for d in dyadic_densities(a).values[-5:]])

# %%
# Complementing flips lower and upper density.
est = estimate_liminf_limsup(density_profile(swing.prefix(N)))
co = estimate_liminf_limsup(density_profile(~swing.prefix(N)))
print("complement:", co.liminf_est, "=", 1 - est.limsup_est)
