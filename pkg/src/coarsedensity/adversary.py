"""Diagonalizing against a finite opponent library, and the extremal and
non-extremal set assemblies built on top of it.

The defeat construction extends Z by copying the complement of one opponent
at a time until Z's agreement with that opponent falls below a threshold,
cycling through all (opponent, threshold) targets until the horizon is used
up.  Every such drop is recorded as a certificate that can be re-checked
from the output alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .bitseq import BitPrefix, FormulaGenerator, Generator, GeneratorLibrary
from .codings import SliceDecomposition, slices_for_rate
from .errors import PreconditionError


@dataclass(frozen=True)
class Certificate:
    opponent: int
    threshold: Fraction
    length: int
    agreements: int

    def holds(self) -> bool:
        return Fraction(self.agreements, self.length) < self.threshold


@dataclass(frozen=True)
class Segment:
    start: int
    end: int
    opponent: int
    threshold: Fraction
    certified: bool


@dataclass
class DefeatSchedule:
    targets: list[tuple[int, Fraction]]
    segments: list[Segment] = field(default_factory=list)
    certificates: list[Certificate] = field(default_factory=list)

    @property
    def uncovered(self) -> list[tuple[int, Fraction]]:
        hit = {(c.opponent, c.threshold) for c in self.certificates}
        return [t for t in self.targets if t not in hit]

    def certified_lengths(self, opponent: int) -> list[int]:
        return [c.length for c in self.certificates if c.opponent == opponent]

    def to_dict(self) -> dict:
        return {
            "targets": [{"opponent": e, "threshold": str(t)} for e, t in self.targets],
            "segments": [
                {"start": s.start, "end": s.end, "opponent": s.opponent, "threshold": str(s.threshold), "certified": s.certified}
                for s in self.segments
            ],
            "certificates": [
                {"opponent": c.opponent, "threshold": str(c.threshold), "length": c.length, "agreements": c.agreements}
                for c in self.certificates
            ],
            "uncovered": [{"opponent": e, "threshold": str(t)} for e, t in self.uncovered],
        }


def _target_order(e: int, threshold: Fraction):
    # thresholds are of the form 1/n; order by n + e, then by e
    return (Fraction(1) / threshold + e, e)


def weak_generic_defeat(
    opponents: GeneratorLibrary, thresholds, N: int
) -> tuple[BitPrefix, DefeatSchedule]:
    """Build Z on [0, N) against every (opponent, threshold) target.

    Each segment extends Z by at least one bit, copying the complement of the
    current opponent, and stops as soon as the agreement density with that
    opponent drops below the threshold.  Targets are cycled until N runs
    out; a segment cut off by N is recorded as uncertified.
    """
    thresholds = [Fraction(t) for t in thresholds]
    if not thresholds or any(not 0 < t <= 1 for t in thresholds):
        raise PreconditionError("thresholds must lie in (0, 1]")
    if len(opponents) == 0:
        raise PreconditionError("opponent library is empty")
    targets = sorted(((e, t) for e in range(len(opponents)) for t in thresholds), key=lambda et: _target_order(*et))
    opp = [g.prefix(N).bits for g in opponents]
    z = np.zeros(N, dtype=np.uint8)
    schedule = DefeatSchedule(targets)
    L = 0
    while L < N:
        for e, t in targets:
            if L >= N:
                break
            agreements = int((z[:L] == opp[e][:L]).sum())
            # complement bits never agree, so the count stays fixed while L grows
            need = max(L + 1, int(agreements / t) + 1)
            while Fraction(agreements, need) >= t:
                need += 1
            end = min(need, N)
            z[L:end] = 1 - opp[e][L:end]
            certified = end == need
            schedule.segments.append(Segment(L, end, e, t, certified))
            if certified:
                schedule.certificates.append(Certificate(e, t, end, agreements))
            L = end
    return BitPrefix(z), schedule


def verify_certificates(z: BitPrefix, opponents: GeneratorLibrary, schedule: DefeatSchedule) -> list[bool]:
    """Recompute every certificate's agreement density from Z itself."""
    results = []
    for c in schedule.certificates:
        if c.length > len(z):
            results.append(False)
            continue
        opp = opponents[c.opponent].prefix(c.length).bits
        agree = int((z.bits[: c.length] == opp).sum())
        results.append(agree == c.agreements and Fraction(agree, c.length) < c.threshold)
    return results


def verify_segments(schedule: DefeatSchedule, N: int) -> bool:
    """Segments are consecutive, nonempty and cover [0, N)."""
    pos = 0
    for s in schedule.segments:
        if s.start != pos or s.end <= s.start:
            return False
        pos = s.end
    return pos == N


def extremal_compose(a1: BitPrefix | Generator, z: BitPrefix) -> BitPrefix:
    """A = A_1 u Z on the prefix of Z."""
    if isinstance(a1, Generator):
        a1 = a1.prefix(len(z))
    if len(a1) != len(z):
        raise PreconditionError(f"length mismatch {len(a1)} vs {len(z)}")
    return a1 | z


def non_extremal_build(r, lib: GeneratorLibrary, z: BitPrefix, N: int) -> BitPrefix:
    """A = (complement(S) n Z) u union_e (S_e n complement(C_e)) on [0, N).

    Slices S_e with e beyond the library contribute nothing to A.
    """
    r = Fraction(r)
    if not 0 < r <= 1:
        raise PreconditionError(f"r = {r} outside (0, 1]")
    if len(z) < N:
        raise PreconditionError(f"Z prefix of length {len(z)} is shorter than {N}")
    slices = slices_for_rate(r, N)
    x = np.arange(N, dtype=np.int64)
    e = slices.slice_of(x)
    out = np.where(e < 0, z.bits[:N], 0).astype(np.uint8)
    for idx in range(min(len(lib), len(slices))):
        sel = e == idx
        out[sel] = 1 - lib[idx].bits_at(x[sel])
    return BitPrefix(out)


def witness_q_description(r, lib: GeneratorLibrary, n: int, N: int) -> Generator:
    """Generator of C = union over e < n of (S_e n complement(C_e))."""
    slices = slices_for_rate(Fraction(r), N)
    if not 0 <= n <= min(len(lib), len(slices)):
        raise PreconditionError(f"n = {n} exceeds the library or the slices materialized below {N}")

    def rule(i):
        e = slices.slice_of(i)
        out = np.zeros(i.shape, dtype=np.uint8)
        for idx in range(n):
            sel = e == idx
            out[sel] = 1 - lib[idx].bits_at(i[sel])
        return out

    return FormulaGenerator(rule)


def slices_needed(slices: SliceDecomposition, q) -> int:
    """Least n with density(S_0 u ... u S_{n-1}) >= q."""
    q = Fraction(q)
    for n in range(len(slices) + 1):
        if slices.union_density(n) >= q:
            return n
    raise PreconditionError(f"materialized slices reach only {slices.density} < {q}")
