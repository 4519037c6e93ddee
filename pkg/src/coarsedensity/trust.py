"""Merging a family of ever-better approximations into one coarse description.

Given members C_0, C_1, ... whose upper distance to A is below 2^-n, the
merge works block by block on the dyadic intervals I_k = [2^k - 1,
2^(k+1) - 1).  C_m *trusts* C_n on I_k (m < n) when their block density of
disagreement is below 2^(2 - m); C_n is *trusted* when every earlier member
trusts it.  The merged set copies, on each I_k, the largest-index member
N <= k that is trusted there.

The module also provides the limit-smoothing step that turns a stabilizing
index table ``g(e, s)`` into total members.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .bitseq import BitPrefix, FormulaGenerator, Generator, PartialGenerator
from .density import block_counts
from .errors import PreconditionError, SearchCapExceeded

DEFAULT_SEARCH_CAP = 2**16


def block_length(K: int) -> int:
    """Prefix length covering I_0 .. I_K."""
    return 2 ** (K + 1) - 1


class WitnessFamily:
    """Members C_0 .. C_M with claimed bounds upper-density(A xor C_n) < 2^-n."""

    def __init__(self, members: Sequence[Generator | BitPrefix]):
        if not members:
            raise PreconditionError("a witness family needs at least one member")
        self.members = tuple(members)
        self._prefixes: dict[int, list[np.ndarray]] = {}
        self._disagreements: dict[tuple[int, int, int], np.ndarray] = {}

    @property
    def M(self) -> int:
        return len(self.members) - 1

    @staticmethod
    def claimed_bound(n: int) -> Fraction:
        return Fraction(1, 2**n)

    def member_bits(self, n: int, K: int) -> np.ndarray:
        if K not in self._prefixes:
            length = block_length(K)
            bits = []
            for c in self.members:
                if isinstance(c, BitPrefix):
                    if len(c) < length:
                        raise PreconditionError(f"member prefix of length {len(c)} does not cover I_{K}")
                    bits.append(c.bits[:length])
                else:
                    bits.append(c.prefix(length).bits)
            self._prefixes[K] = bits
        return self._prefixes[K][n]

    def disagreement_counts(self, m: int, n: int, K: int) -> np.ndarray:
        """|(C_m xor C_n) n I_k| for k = 0..K."""
        key = (min(m, n), max(m, n), K)
        if key not in self._disagreements:
            diff = self.member_bits(m, K) ^ self.member_bits(n, K)
            self._disagreements[key] = block_counts(diff, K)
        return self._disagreements[key]


def _below_power(count: int, k: int, exponent: int) -> bool:
    """Exact test of count / 2^k < 2^exponent."""
    if exponent >= 0:
        return count < 2 ** (k + exponent)
    return count * 2 ** (-exponent) < 2**k


def trusts(family: WitnessFamily, m: int, n: int, k: int) -> bool:
    """Whether C_m trusts C_n on I_k: d_k(C_n xor C_m) < 2^(2 - m)."""
    if not m < n:
        raise PreconditionError(f"trust is defined for m < n, got m={m}, n={n}")
    count = int(family.disagreement_counts(m, n, k)[k])
    return _below_power(count, k, 2 - m)


def trusted(family: WitnessFamily, n: int, k: int) -> bool:
    """Every C_m with m < n trusts C_n on I_k (vacuous for n = 0)."""
    return all(trusts(family, m, n, k) for m in range(n))


def trust_matrix(family: WitnessFamily, K: int) -> np.ndarray:
    """Boolean array T[m, n, k] = trusts(m, n, k) for m < n; False elsewhere."""
    M = family.M
    out = np.zeros((M + 1, M + 1, K + 1), dtype=bool)
    for n in range(1, M + 1):
        for m in range(n):
            counts = family.disagreement_counts(m, n, K)
            out[m, n] = [_below_power(int(c), k, 2 - m) for k, c in enumerate(counts.tolist())]
    return out


def merge_choices(family: WitnessFamily, K: int) -> list[int]:
    """For each block k <= K, the largest N <= min(M, k) trusted on I_k."""
    T = trust_matrix(family, K)
    choices = []
    for k in range(K + 1):
        chosen = 0
        for n in range(min(family.M, k), 0, -1):
            if T[:n, n, k].all():
                chosen = n
                break
        choices.append(chosen)
    return choices


def miller_merge(family: WitnessFamily, K: int, choices: list[int] | None = None) -> BitPrefix:
    """Prefix of length 2^(K+1) - 1 assembled from the chosen member per block."""
    choices = merge_choices(family, K) if choices is None else choices
    out = np.empty(block_length(K), dtype=np.uint8)
    for k, n in enumerate(choices):
        lo, hi = 2**k - 1, 2 ** (k + 1) - 1
        out[lo:hi] = family.member_bits(n, K)[lo:hi]
    return BitPrefix(out)


@dataclass
class MergeReport:
    K: int
    choices: list[int]
    merged: BitPrefix
    target_errors: list[int] | None = None  # |(A xor C) n I_k| per block
    member_errors: list[list[int]] | None = None  # |(A xor C_n) n I_k|
    violations: list[dict] = field(default_factory=list)

    def d(self, k: int) -> Fraction | None:
        if self.target_errors is None:
            return None
        return Fraction(self.target_errors[k], 2**k)

    def to_dict(self) -> dict:
        out = {"K": self.K, "chosen": self.choices}
        if self.target_errors is not None:
            out["d_k_target"] = [str(self.d(k)) for k in range(self.K + 1)]
            out["member_block_errors"] = self.member_errors
            out["claimed_bound_violations"] = self.violations
        return out


def merge_with_report(family: WitnessFamily, K: int, A: Generator | BitPrefix | None = None) -> MergeReport:
    """Run the merge; with A supplied, also measure block errors.

    A violation is recorded for every (n, k) with d_k(A xor C_n) >= 2^(1 - n),
    the block form of the family's claimed bound.  The merge runs regardless.
    """
    choices = merge_choices(family, K)
    merged = miller_merge(family, K, choices)
    report = MergeReport(K, choices, merged)
    if A is None:
        return report
    a_bits = A.prefix(block_length(K)).bits if isinstance(A, Generator) else A.bits[: block_length(K)]
    if a_bits.size < block_length(K):
        raise PreconditionError("target prefix does not cover the merged range")
    report.target_errors = block_counts(a_bits ^ merged.bits, K).tolist()
    report.member_errors = []
    for n in range(family.M + 1):
        errs = block_counts(a_bits ^ family.member_bits(n, K), K).tolist()
        report.member_errors.append(errs)
        for k, c in enumerate(errs):
            if not _below_power(c, k, 1 - n):
                report.violations.append({"n": n, "k": k, "errors": c})
    return report


def planted_family(
    A: BitPrefix, M: int, K: int, seed: int, burn_in: Sequence[int] | None = None
) -> tuple[list[BitPrefix], list[int]]:
    """Members C_0..C_M equal to A up to planted errors.

    Member n is scrambled (each bit flipped with probability 1/2) on blocks
    k < burn_in[n] and, from burn_in[n] on, differs from A on a uniformly
    random set of fewer than 2^(k - n - 1) positions of each block I_k.
    Returns the members and the burn-in list.
    """
    length = block_length(K)
    if len(A) < length:
        raise PreconditionError(f"target prefix of length {len(A)} does not cover I_{K}")
    rng = np.random.default_rng(seed)
    burn_in = [n + 2 for n in range(M + 1)] if burn_in is None else list(burn_in)
    members = []
    for n in range(M + 1):
        bits = A.bits[:length].copy()
        for k in range(K + 1):
            lo, size = 2**k - 1, 2**k
            if k < burn_in[n]:
                bits[lo : lo + size] ^= rng.integers(0, 2, size, dtype=np.uint8)
                continue
            # largest count c with c / 2^k < 2^-(n+1)
            most = -(-size // 2 ** (n + 1)) - 1
            c = int(rng.integers(0, most + 1)) if most > 0 else 0
            bits[lo + rng.choice(size, size=c, replace=False)] ^= 1
        members.append(BitPrefix(bits))
    return members, burn_in


class StabilizingIndexTable:
    """g(e, s) given as switch points: member index from each listed stage on.

    ``switches[e]`` is a list of ``(stage, index)`` pairs starting at stage 0;
    the last pair's stage is the declared stabilization stage.
    """

    def __init__(self, switches: dict[int, Sequence[tuple[int, int]]] | Sequence[Sequence[tuple[int, int]]]):
        items = switches.items() if isinstance(switches, dict) else enumerate(switches)
        self._stages, self._values = {}, {}
        for e, pairs in items:
            pairs = sorted((int(s), int(i)) for s, i in pairs)
            if not pairs or pairs[0][0] != 0:
                raise PreconditionError(f"switches for e={e} must start at stage 0")
            self._stages[e] = np.array([s for s, _ in pairs], dtype=np.int64)
            self._values[e] = np.array([i for _, i in pairs], dtype=np.int64)

    def __call__(self, e: int, s):
        s = np.asarray(s, dtype=np.int64)
        pos = np.searchsorted(self._stages[e], s, side="right") - 1
        return self._values[e][pos]

    def stabilization_stage(self, e: int) -> int:
        return int(self._stages[e][-1])

    def limit(self, e: int) -> int:
        return int(self._values[e][-1])


def limit_smoothing(
    table: StabilizingIndexTable,
    family: Sequence[PartialGenerator],
    e: int,
    N: int,
    *,
    cap: int = DEFAULT_SEARCH_CAP,
) -> Generator:
    """Total generator h_e: h_e(n) = member g(e, s) at n for the least s >= n
    at which that member converges on n within s steps.

    Values below N are computed eagerly so a cap-limited search surfaces
    here; larger indices are searched on demand.
    """

    def search(idx: np.ndarray) -> np.ndarray:
        out = np.zeros(idx.shape, dtype=np.uint8)
        pending = np.ones(idx.shape, dtype=bool)
        for step in range(cap + 1):
            if not pending.any():
                return out
            s = idx[pending] + step
            members = table(e, s)
            values = np.full(s.shape, -1, dtype=np.int8)
            for member in np.unique(members):
                if not 0 <= member < len(family):
                    raise PreconditionError(f"index table points at missing member {member}")
                sel = members == member
                pos = np.flatnonzero(pending)[sel]
                budgets = s[sel]
                # budgets differ per index, so evaluate each index at its own budget
                halt = family[member].halting_stage(idx[pos])
                ok = (halt >= 0) & (halt <= budgets)
                values[sel] = np.where(ok, family[member].value.bits_at(idx[pos]), -1)
            done = values >= 0
            where = np.flatnonzero(pending)
            out[where[done]] = values[done]
            pending[where[done]] = False
        if pending.any():
            first = int(idx[pending][0])
            raise SearchCapExceeded(
                f"limit smoothing for e={e} found no convergent stage for n={first} within {cap} steps",
                cap=cap,
                context={"e": e, "n": first},
            )
        return out

    eager = search(np.arange(N, dtype=np.int64))

    def rule(idx):
        out = np.empty(idx.shape, dtype=np.uint8)
        low = idx < N
        out[low] = eager[idx[low]]
        if (~low).any():
            out[~low] = search(idx[~low])
        return out

    return FormulaGenerator(rule)
