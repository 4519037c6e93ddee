"""Recovering A from approximations of its codes, and checking r-descriptions."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .bitseq import DIVERGED, BitPrefix, FormulaGenerator, Generator, PartialGenerator, symagree
from .density import DensityEstimate, DensityProfile, density_profile, estimate_liminf_limsup
from .errors import PreconditionError


def _block(c: BitPrefix, n: int) -> np.ndarray:
    if n < 1:
        raise PreconditionError(f"factorial blocks start at n = 1, got {n}")
    lo, hi = math.factorial(n), math.factorial(n + 1)
    if hi > len(c):
        raise PreconditionError(f"decoding block {n} needs {hi} bits, prefix has {len(c)}")
    return c.bits[lo:hi]


def majority_vote_decode(c: BitPrefix, n: int) -> int:
    """1 iff strictly more than half of [n!, (n+1)!) carries a 1 in c."""
    block = _block(c, n)
    return int(2 * int(block.sum()) > block.size)


def decode_prefix(c: BitPrefix, n_max: int) -> BitPrefix:
    """Decoded A on [0, n_max]; bit 0 is never coded and decodes to 0."""
    if math.factorial(n_max + 1) > len(c):
        raise PreconditionError(
            f"decoding up to n = {n_max} needs {math.factorial(n_max + 1)} bits, prefix has {len(c)}"
        )
    out = [0] + [majority_vote_decode(c, n) for n in range(1, n_max + 1)]
    return BitPrefix(out)


def corrupt_blocks(c: BitPrefix, flips: dict[int, int], seed: int) -> BitPrefix:
    """Flip exactly ``flips[n]`` uniformly chosen positions inside block n."""
    rng = np.random.default_rng(seed)
    out = c.bits.copy()
    for n in sorted(flips):
        lo, hi = math.factorial(n), math.factorial(n + 1)
        if hi > len(c):
            raise PreconditionError(f"block {n} lies beyond the prefix")
        count = flips[n]
        if not 0 <= count <= hi - lo:
            raise PreconditionError(f"cannot flip {count} of {hi - lo} bits in block {n}")
        where = lo + rng.choice(hi - lo, size=count, replace=False)
        out[where] ^= 1
    return BitPrefix(out)


def partial_to_coarse(phi: PartialGenerator, domain_budget: int, N: int) -> Generator:
    """Total rule: 1 exactly where phi converges to 1 within the budget, below N.

    Everywhere phi converges (below N) the output equals phi, so its
    agreement with any A consistent with phi contains that domain.
    """
    if N < 0 or domain_budget < 0:
        raise PreconditionError("budget and horizon must be natural")

    def rule(i):
        out = np.zeros(i.shape, dtype=np.uint8)
        live = i < N
        out[live] = phi.evaluate_many(i[live], domain_budget) == 1
        return out

    return FormulaGenerator(rule)


def budgeted_domain(phi: PartialGenerator, budget: int, N: int) -> BitPrefix:
    """Indicator of the indices below N where phi converges within the budget."""
    return BitPrefix(phi.evaluate_many(np.arange(N), budget) != DIVERGED)


@dataclass(frozen=True)
class DescriptionReport:
    agreement_profile: DensityProfile
    estimate: DensityEstimate
    r: Fraction
    verdict_at_r: bool

    def to_dict(self) -> dict:
        return {"r": str(self.r), "verdict_at_r": self.verdict_at_r, "estimate": self.estimate.to_dict()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def check_r_description(a: BitPrefix, b: BitPrefix, r, tail_start: int | None = None) -> DescriptionReport:
    """Windowed check that b agrees with a on a set of lower density >= r."""
    r = Fraction(r)
    profile = density_profile(symagree(a, b))
    estimate = estimate_liminf_limsup(profile, tail_start)
    return DescriptionReport(profile, estimate, r, estimate.liminf_est >= r)
