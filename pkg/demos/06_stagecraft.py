"""
Replaying two permitting constructions
======================================

Both constructions run stage by stage against a c.e. enumeration and a
library of partial descriptions, logging every action.  The verifiers then
recompute the required properties from the trace alone.
"""

# %%
import json
from fractions import Fraction

from coarsedensity.bitseq import FormulaGenerator, GeneratorLibrary, PartialGenerator, RandomGenerator
from coarsedensity.stagecraft import (
    Enumeration,
    JumpProbe,
    random_enumeration,
    run_nonlow_construction,
    run_permitting_construction,
    verify_half_density,
    verify_permitting_soundness,
    verify_total_disagreement,
)

lib = GeneratorLibrary(
    [PartialGenerator.total(FormulaGenerator.zeros(), 2), PartialGenerator.linear(RandomGenerator(4), 1, 3)]
)

# %%
# Ordinary permitting: A changes only where B has just changed below.
B = random_enumeration(seed=1, horizon=120, rate=0.4)
state = run_permitting_construction(B, lib, Fraction(1, 2), 120, cap=2**14)
print("successful intervals:", [(rec.e, rec.i, rec.elements[:4]) for rec in state.successes()][:5])
print("sound:", not verify_permitting_soundness(state, B), " disagrees:", not verify_total_disagreement(state, lib))

# %%
# Below a nonlow C: half of every R_n goes into A, and each requirement either
# wins on an interval or its guess g(e, i, s) settles.
C = Enumeration.from_additions({7: [1], 40: [0]}, 80)
state = run_nonlow_construction(C, [JumpProbe(3, use=2), JumpProbe(5, use=1)], lib, 80)
events = [json.loads(line) for line in state.trace_lines().splitlines()]
for ev in [ev for ev in events if ev["action"] != "alternate_fill"][:10]:
    print(ev["stage"], ev["action"], ev["requirement"])
for e, i in state.params["requirements"]:
    print((e, i), "half density holds:", verify_half_density(state, e, i).ok)
