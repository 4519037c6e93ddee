"""Stage-by-stage simulation of two permitting constructions.

``run_permitting_construction`` builds a c.e. set A below a c.e. set B by
ordinary permitting: intervals I_{e,i} inside S_e u complement(S) are laid
out in advance, and an interval is declared successful (and A made to
disagree with Phi_e on all of it) once Phi_e has converged there, no element
of A n S_e lies above its minimum, and B changes at or below its minimum.

``run_nonlow_construction`` keeps A at density 1/2 by putting exactly one of
each pair of consecutive elements of every R_n into A, and for each
requirement (e, i) runs the search cycle that either makes A differ from
Phi_e on half of an interval of R_<e,i> or makes a guessing function
g(e, i, s) track the jump of C at i.

Both simulators log every action into a trace and can be checked after the
fact by the ``verify_*`` functions, which recompute everything from the
trace, the final enumeration and the inputs.
"""

from __future__ import annotations

import json
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from .bitseq import BitPrefix, GeneratorLibrary
from .codings import SliceDecomposition, rn_element, rn_index, slices_for_rate
from .errors import PreconditionError, SearchCapExceeded

DEFAULT_POSITION_CAP = 2**20


def pair(e: int, i: int) -> int:
    """Cantor pairing <e, i>."""
    return (e + i) * (e + i + 1) // 2 + i


class Enumeration:
    """A monotone sequence of finite sets indexed by stage 0..horizon."""

    def __init__(self, additions: Sequence[Iterable[int]]):
        self.additions = tuple(frozenset(int(x) for x in a) for a in additions)
        for a in self.additions:
            if any(x < 0 for x in a):
                raise PreconditionError("enumerations hold natural numbers")

    @classmethod
    def from_additions(cls, added: Mapping[int, Iterable[int]], horizon: int | None = None) -> Enumeration:
        stages = {int(s): list(v) for s, v in added.items()}
        if any(s < 0 for s in stages):
            raise PreconditionError("stages are natural numbers")
        horizon = max(stages, default=0) if horizon is None else horizon
        seen: set[int] = set()
        out = []
        for s in range(horizon + 1):
            new = set(stages.get(s, ())) - seen
            seen |= new
            out.append(new)
        return cls(out)

    @classmethod
    def from_snapshots(cls, snapshots: Sequence[Iterable[int]]) -> Enumeration:
        prev: frozenset[int] = frozenset()
        out = []
        for s, snap in enumerate(snapshots):
            snap = frozenset(snap)
            if not prev <= snap:
                raise PreconditionError(f"enumeration is not monotone at stage {s}: lost {sorted(prev - snap)}")
            out.append(snap - prev)
            prev = snap
        return cls(out)

    @classmethod
    def never(cls, horizon: int = 0) -> Enumeration:
        return cls([()] * (horizon + 1))

    @property
    def horizon(self) -> int:
        return len(self.additions) - 1

    def added(self, s: int) -> frozenset[int]:
        """Elements enumerated exactly at stage s (empty past the horizon)."""
        return self.additions[s] if 0 <= s < len(self.additions) else frozenset()

    @cached_property
    def _snapshots(self) -> list[frozenset[int]]:
        out, acc = [], set()
        for a in self.additions:
            acc |= a
            out.append(frozenset(acc))
        return out

    def at(self, s: int) -> frozenset[int]:
        if s < 0:
            return frozenset()
        return self._snapshots[min(s, self.horizon)]

    def entry_stage(self) -> dict[int, int]:
        return {x: s for s, a in enumerate(self.additions) for x in a}

    def to_dict(self) -> dict[str, list[int]]:
        return {str(s): sorted(a) for s, a in enumerate(self.additions) if a}

    @classmethod
    def from_json(cls, text: str, horizon: int | None = None) -> Enumeration:
        return cls.from_additions({int(k): v for k, v in json.loads(text).items()}, horizon)


@dataclass
class IntervalRecord:
    e: int
    i: int
    elements: tuple[int, ...]
    status: str = "pending"  # pending | successful | cancelled
    declared_at: int | None = None
    chosen_at: int | None = None
    cycle: int = 0
    use: int | None = None

    @property
    def lo(self) -> int:
        return self.elements[0]

    @property
    def hi(self) -> int:
        return self.elements[-1]

    def to_dict(self) -> dict:
        return {
            "e": self.e,
            "i": self.i,
            "cycle": self.cycle,
            "min": self.lo,
            "max": self.hi,
            "size": len(self.elements),
            "status": self.status,
            "declared_at": self.declared_at,
            "chosen_at": self.chosen_at,
            "use": self.use,
        }


@dataclass
class StageState:
    kind: str
    stages: int
    entered: dict[int, int] = field(default_factory=dict)  # element -> stage it entered A
    intervals: list[IntervalRecord] = field(default_factory=list)
    restraints: set[int] = field(default_factory=set)
    g: dict[tuple[int, int, int], int] = field(default_factory=dict)
    trace: list[dict] = field(default_factory=list)
    outcomes: dict[tuple[int, int], dict] = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    @property
    def A_enum(self) -> Enumeration:
        top = max([self.stages, *self.entered.values()], default=0)
        adds: list[set[int]] = [set() for _ in range(top + 1)]
        for x, s in self.entered.items():
            adds[s].add(x)
        return Enumeration(adds)

    def a_prefix(self, N: int) -> BitPrefix:
        return BitPrefix.from_set(self.entered, N)

    def log(self, stage: int, action: str, requirement=None, **data) -> None:
        self.trace.append({"stage": stage, "action": action, "requirement": requirement, "data": data})

    def enter(self, x: int, stage: int) -> None:
        if x in self.entered:
            return
        if x in self.restraints:
            raise AssertionError(f"restrained element {x} would enter A at stage {stage}")
        self.entered[x] = stage

    def trace_lines(self) -> str:
        return "".join(json.dumps(ev, sort_keys=True) + "\n" for ev in self.trace)

    def successes(self) -> list[IntervalRecord]:
        return [r for r in self.intervals if r.status == "successful"]


# ---------------------------------------------------------------------------
# Intervals for the ordinary permitting construction


def random_enumeration(seed: int, horizon: int, rate: float = 0.3, spread: int = 3) -> Enumeration:
    """Seeded enumeration: at each stage s >= 1, with probability ``rate``,
    one number drawn from [0, spread * s] is added."""
    rng = np.random.default_rng(seed)
    added = {}
    for s in range(1, horizon + 1):
        if rng.random() < rate:
            added[s] = [int(rng.integers(0, spread * s + 1))]
    return Enumeration.from_additions(added, horizon)


def eligible_mask(slices: SliceDecomposition, e: int, N: int) -> np.ndarray:
    """Indicator of S_e u complement(S) on [0, N)."""
    which = slices.slice_of(np.arange(N, dtype=np.int64))
    return (which == e) | (which < 0)


def _greedy_interval(positions: np.ndarray, cum: np.ndarray, start: int, i: int) -> np.ndarray | None:
    """Smallest run of consecutive eligible elements from ``start`` meeting
    |I| * (i + 1) >= i * |eligible below max I + 1|."""
    below = int(cum[start])
    # every eligible element in [start, max I] is in I, so the condition is |I| >= i * below
    size = max(1, i * below)
    if below + size > positions.size:
        return None
    return positions[below : below + size]


def choose_intervals(
    e: int,
    eligible: np.ndarray,
    count: int,
    *,
    start: int = 0,
) -> list[IntervalRecord]:
    """Consecutive intervals I_{e,0}, ..., I_{e,count-1} for one requirement.

    ``eligible`` is the indicator of S_e u complement(S) over the positions
    that may be used; running out of it raises :class:`SearchCapExceeded`.
    """
    positions = np.flatnonzero(eligible)
    cum = np.concatenate(([0], np.cumsum(eligible, dtype=np.int64)))
    out = []
    for i in range(count):
        chosen = _greedy_interval(positions, cum, start, i)
        if chosen is None:
            raise SearchCapExceeded(
                f"interval I_{{{e},{i}}} does not fit below position {eligible.size}",
                cap=int(eligible.size),
                context={"e": e, "i": i},
            )
        out.append(IntervalRecord(e, i, tuple(int(x) for x in chosen)))
        start = int(chosen[-1]) + 1
    return out


def permitting_intervals(
    slices: SliceDecomposition, requirements: int, count: int, *, cap: int = DEFAULT_POSITION_CAP
) -> list[IntervalRecord]:
    """Intervals I_{e,i} for e < requirements, i < count, pairwise disjoint.

    Intervals are laid out in increasing order of <e, i>, each starting past
    everything chosen before, which gives (ii) and (iv) directly.
    """
    order = sorted(((e, i) for e in range(requirements) for i in range(count)), key=lambda ei: pair(*ei))
    masks = {e: eligible_mask(slices, e, cap) for e in range(requirements)}
    cums = {e: np.concatenate(([0], np.cumsum(m, dtype=np.int64))) for e, m in masks.items()}
    positions = {e: np.flatnonzero(m) for e, m in masks.items()}
    start = 0
    out = []
    for e, i in order:
        chosen = _greedy_interval(positions[e], cums[e], start, i)
        if chosen is None:
            raise SearchCapExceeded(
                f"interval I_{{{e},{i}}} does not fit below position cap {cap}", cap=cap, context={"e": e, "i": i}
            )
        out.append(IntervalRecord(e, i, tuple(int(x) for x in chosen)))
        start = int(chosen[-1]) + 1
    return out


def run_permitting_construction(
    B: Enumeration,
    lib: GeneratorLibrary,
    r,
    stages: int,
    *,
    intervals: list[IntervalRecord] | None = None,
    count: int = 3,
    cap: int = DEFAULT_POSITION_CAP,
) -> StageState:
    """Run stages 1..stages of the ordinary permitting construction.

    At stage s + 1, for each pending I_{e,i} with e, i <= s (in increasing
    <e, i> order) the interval is declared successful when
    (1) Phi_{e,s} converges on all of it, (2) its minimum exceeds every
    element of A_s n S_e, and (3) some element of B_{s+1} - B_s is at most
    its minimum; then every x in it with Phi_e(x) = 0 enters A.
    """
    r = Fraction(r)
    slices = slices_for_rate(r, cap)
    if intervals is None:
        intervals = permitting_intervals(slices, len(lib), count, cap=cap)
    intervals = sorted(intervals, key=lambda rec: pair(rec.e, rec.i))
    state = StageState("permitting", stages, intervals=intervals, params={"r": str(r), "cap": cap})
    top_in_slice = {e: -1 for e in range(len(lib))}  # max of A n S_e so far
    for s in range(stages):
        changes = B.added(s + 1)
        low_change = min(changes, default=None)
        snapshot = dict(top_in_slice)
        for rec in intervals:
            if rec.status != "pending" or rec.e > s or rec.i > s:
                continue
            phi = lib[rec.e]
            elems = np.asarray(rec.elements, dtype=np.int64)
            values = phi.evaluate_many(elems, s)
            if (values < 0).any():
                continue
            if rec.lo <= snapshot[rec.e]:
                continue
            if low_change is None or low_change > rec.lo:
                continue
            rec.status, rec.declared_at = "successful", s + 1
            entering = [int(x) for x, v in zip(rec.elements, values) if v == 0]
            state.log(s + 1, "declare_success", [rec.e, rec.i], min=rec.lo, max=rec.hi, permitted_by=int(low_change))
            for x in entering:
                state.enter(x, s + 1)
            state.log(s + 1, "enumerate", [rec.e, rec.i], elements=entering)
            in_slice = [x for x in entering if slices.slice_of(np.array([x]))[0] == rec.e]
            if in_slice:
                top_in_slice[rec.e] = max(top_in_slice[rec.e], max(in_slice))
    for rec in intervals:
        state.outcomes[(rec.e, rec.i)] = {"status": rec.status, "cap_limited": rec.status == "pending"}
    state.params["slices"] = list(slices.c)
    return state


# ---------------------------------------------------------------------------
# The construction below a nonlow c.e. set


@dataclass(frozen=True)
class JumpProbe:
    """Desk-scale stand-in for the computation Phi_i(C_s; i).

    It converges at stage s when s >= start and C has not changed below
    ``use`` during the last ``delay`` stages.  ``start=None`` never converges.
    """

    start: int | None
    use: int = 1
    delay: int = 1

    def __post_init__(self):
        if self.start is not None and not (0 <= self.use < self.start and self.delay >= 1):
            raise PreconditionError("a probe needs 0 <= use < start and delay >= 1")

    def converges(self, s: int, C: Enumeration) -> bool:
        if self.start is None or s < self.start:
            return False
        return all(min(C.added(t), default=self.use) >= self.use for t in range(s - self.delay + 1, s + 1))

    def describe(self) -> dict:
        return {"start": self.start, "use": self.use, "delay": self.delay}

    @classmethod
    def from_dict(cls, d: dict) -> JumpProbe:
        return cls(d.get("start"), int(d.get("use", 1)), int(d.get("delay", 1)))


@dataclass
class _Module:
    e: int
    i: int
    n: int
    phase: str = "search_jump"  # search_jump | await_phi | await_permit
    interval: IntervalRecord | None = None
    pairs: tuple[int, int] | None = None  # pair indices j..k of the current interval
    floor: int = 0  # new intervals start above every earlier interval
    cycle: int = 0


def nonlow_interval_pairs(n: int, above: int) -> tuple[int, int]:
    """Pair range (j, k) of the greedy interval {r_{n,2j}, ..., r_{n,2k+1}}.

    j is least with r_{n,2j} > above; k is least with
    |I| > |R_n below max I + 1| / 2, i.e. 2(k - j + 1) > (2k + 2) / 2.
    """
    j = 0
    while int(rn_element(n, 2 * j)) <= above:
        j += 1
    k = j
    while not 4 * (k - j + 1) > 2 * k + 2:
        k += 1
    return j, k


def run_nonlow_construction(
    C: Enumeration,
    probes: Sequence[JumpProbe],
    lib: GeneratorLibrary,
    stages: int,
    *,
    requirements: Sequence[tuple[int, int]] | None = None,
) -> StageState:
    """Run stages 0..stages of the construction below C.

    Requirement (e, i) works on R_<e,i>, uses ``probes[i]`` for the jump
    computation and ``lib[e]`` for Phi_e.  Unless otherwise occupied, stage
    s puts s into A when s = r_{n,2k} for some n, k.
    """
    if requirements is None:
        requirements = [(e, i) for e in range(len(lib)) for i in range(len(probes))]
    modules = sorted((_Module(e, i, pair(e, i)) for e, i in requirements), key=lambda m: m.n)
    if len({m.n for m in modules}) != len(modules):
        raise PreconditionError("duplicate requirement")
    by_n = {m.n: m for m in modules}
    state = StageState("nonlow", stages, params={"requirements": [[m.e, m.i] for m in modules]})
    claimed: dict[int, set[int]] = {m.n: set() for m in modules}  # elements of any interval, per R_n

    for s in range(stages + 1):
        changes = C.added(s)
        low_change = min(changes, default=None)
        for mod in modules:
            _advance(mod, s, low_change, C, probes, lib, state, claimed)
        if s >= 1:
            n = int(rn_index(np.array([s]))[0])
            pos = ((s >> n) - 1) // 2
            if pos % 2 == 0 and not (n in claimed and s in claimed[n]):
                state.enter(s, s)
                state.log(s, "alternate_fill", None if n not in by_n else [by_n[n].e, by_n[n].i], x=s, n=n)
        for mod in modules:
            state.g[(mod.e, mod.i, s)] = int(mod.phase == "await_permit")

    for mod in modules:
        state.outcomes[(mod.e, mod.i)] = {
            "phase": mod.phase,
            "cap_limited": True,
            "successes": sum(1 for r in state.intervals if (r.e, r.i) == (mod.e, mod.i) and r.status == "successful"),
            "final_interval": None if mod.interval is None else list(mod.interval.elements),
        }
    return state


def _start_cycle(mod, s, C, probes, state, claimed):
    probe = probes[mod.i]
    if not probe.converges(s, C):
        return
    j, k = nonlow_interval_pairs(mod.n, max(s, mod.floor))
    elements = tuple(int(x) for x in rn_element(mod.n, np.arange(2 * j, 2 * k + 2)))
    rec = IntervalRecord(mod.e, mod.i, elements, chosen_at=s, cycle=mod.cycle, use=probe.use)
    state.intervals.append(rec)
    mod.interval, mod.pairs, mod.phase = rec, (j, k), "await_phi"
    mod.floor = rec.hi
    claimed[mod.n].update(elements)
    state.restraints.update(elements)
    state.log(s, "choose_interval", [mod.e, mod.i], min=rec.lo, max=rec.hi, size=len(elements), use=probe.use)


def _release(mod, state):
    state.restraints.difference_update(mod.interval.elements)
    mod.interval, mod.pairs, mod.phase = None, None, "search_jump"
    mod.cycle += 1


def _advance(mod, s, low_change, C, probes, lib, state, claimed):
    if mod.phase == "search_jump":
        _start_cycle(mod, s, C, probes, state, claimed)
        return
    rec = mod.interval
    if s <= rec.chosen_at:
        return
    permission = low_change is not None and low_change < rec.use
    if mod.phase == "await_phi":
        if permission:
            rec.status, rec.declared_at = "cancelled", s
            evens = list(rec.elements[0::2])
            state.restraints.difference_update(rec.elements)
            for x in evens:
                state.enter(x, s)
            state.log(s, "cancel", [mod.e, mod.i], elements=evens, permitted_by=int(low_change))
            _release(mod, state)
            _start_cycle(mod, s, C, probes, state, claimed)
        elif lib[mod.e].converges_on(np.asarray(rec.elements), s):
            mod.phase = "await_permit"
            state.log(s, "phi_converged", [mod.e, mod.i])
        return
    # await_permit
    if permission:
        values = lib[mod.e].evaluate_many(np.asarray(rec.elements), s)
        chosen, ties = [], []
        for p in range(0, len(rec.elements), 2):
            even, odd = rec.elements[p], rec.elements[p + 1]
            if values[p] == 1 and values[p + 1] == 0:
                chosen.append(odd)
            else:
                chosen.append(even)
                if values[p] == 1 and values[p + 1] == 1:
                    ties.append(even)
        rec.status, rec.declared_at = "successful", s
        state.restraints.difference_update(rec.elements)
        for x in chosen:
            state.enter(x, s)
        state.log(s, "declare_success", [mod.e, mod.i], elements=chosen, tie_breaks=ties, permitted_by=int(low_change))
        _release(mod, state)
        _start_cycle(mod, s, C, probes, state, claimed)


# ---------------------------------------------------------------------------
# Post-hoc verification


def verify_permitting_soundness(state: StageState, enum: Enumeration) -> list[int]:
    """Elements whose entry into A was not permitted; empty when sound.

    For the ordinary construction some y <= x must enter B at the same
    stage; for the nonlow construction either x equals the stage or some
    y <= x enters C at that stage.
    """
    bad = []
    for x, s in sorted(state.entered.items()):
        if state.kind == "nonlow" and x == s:
            continue
        if not any(y <= x for y in enum.added(s)):
            bad.append(x)
    return bad


def verify_interval_conditions(intervals: Sequence[IntervalRecord], slices: SliceDecomposition) -> list[str]:
    """Exact check of (i) containment, (ii) ordering, (iii) density and (iv)
    disjointness; returns a list of failures."""
    failures = []
    by_e: dict[int, list[IntervalRecord]] = {}
    for rec in intervals:
        by_e.setdefault(rec.e, []).append(rec)
    seen: dict[int, tuple[int, int]] = {}
    for rec in intervals:
        elems = np.asarray(rec.elements, dtype=np.int64)
        if not (np.diff(elems) > 0).all():
            failures.append(f"I_{rec.e},{rec.i} not listed in increasing order")
        which = slices.slice_of(elems)
        if not ((which == rec.e) | (which < 0)).all():
            failures.append(f"(i) I_{rec.e},{rec.i} leaves S_e u complement(S)")
        m = rec.hi + 1
        elig = int(eligible_mask(slices, rec.e, m).sum())
        # rho_m(I) >= i/(i+1) rho_m(S_e u complement S), cross-multiplied by m (i+1)
        if len(rec.elements) * (rec.i + 1) < rec.i * elig:
            failures.append(f"(iii) I_{rec.e},{rec.i}: {len(rec.elements)} of {elig} eligible below {m}")
        for x in rec.elements:
            if x in seen:
                failures.append(f"(iv) {x} in I_{rec.e},{rec.i} and I_{seen[x][0]},{seen[x][1]}")
            seen[x] = (rec.e, rec.i)
    for e, recs in by_e.items():
        recs = sorted(recs, key=lambda r: r.i)
        for a, b in zip(recs, recs[1:]):
            if not b.lo > a.hi:
                failures.append(f"(ii) min I_{e},{b.i} <= max I_{e},{a.i}")
    return failures


def verify_total_disagreement(state: StageState, lib: GeneratorLibrary) -> list[tuple[int, int]]:
    """Successful intervals on which A fails to disagree with Phi_e everywhere."""
    bad = []
    for rec in state.successes():
        elems = np.asarray(rec.elements, dtype=np.int64)
        phi = lib[rec.e].evaluate_many(elems, rec.declared_at - 1)
        a = np.array([x in state.entered for x in rec.elements], dtype=np.int8)
        if (phi < 0).any() or (a == phi).any():
            bad.append((rec.e, rec.i))
    return bad


def verify_nothing_else_enters(state: StageState) -> list[int]:
    """Elements of A outside every successful interval (ordinary construction)."""
    allowed = {x for rec in state.successes() for x in rec.elements}
    return sorted(x for x in state.entered if x not in allowed)


def verify_success_bound(state: StageState, lib: GeneratorLibrary) -> list[dict]:
    """For each successful interval I of R_n, check
    rho_m(A xor Phi_e) > rho_m(R_n) / 4 at m = max I + 1.

    Phi_e is evaluated at the success stage; positions where it diverges
    are not counted as disagreements.
    """
    out = []
    for rec in state.successes():
        n = pair(rec.e, rec.i)
        m = rec.hi + 1
        x = np.arange(m, dtype=np.int64)
        phi = lib[rec.e].evaluate_many(x, rec.declared_at)
        a = state.a_prefix(m).bits.astype(np.int8)
        disagree = int(((phi >= 0) & (phi != a)).sum())
        r_count = int((rn_index(x) == n).sum())
        out.append(
            {
                "requirement": [rec.e, rec.i],
                "cycle": rec.cycle,
                "m": m,
                "disagreements": disagree,
                "rn_count": r_count,
                "holds": 4 * disagree > r_count,
            }
        )
    return out


@dataclass
class HalfDensityReport:
    n: int
    pairs_checked: int
    exceptions: list[int]
    restrained_pairs: list[int]

    @property
    def fraction(self) -> Fraction:
        if self.pairs_checked == 0:
            return Fraction(1)
        return Fraction(self.pairs_checked - len(self.exceptions), self.pairs_checked)

    @property
    def ok(self) -> bool:
        return set(self.exceptions) <= set(self.restrained_pairs)


def verify_half_density(state: StageState, e: int, i: int) -> HalfDensityReport:
    """Count A-members among pairs (r_{n,2k}, r_{n,2k+1}) of R_<e,i> that the
    run has fully passed; every pair should hold exactly one, except the
    pairs of a still-restrained final interval."""
    n = pair(e, i)
    pairs_checked, exceptions = 0, []
    k = 0
    while int(rn_element(n, 2 * k + 1)) <= state.stages:
        a, b = int(rn_element(n, 2 * k)), int(rn_element(n, 2 * k + 1))
        pairs_checked += 1
        if (a in state.entered) + (b in state.entered) != 1:
            exceptions.append(k)
        k += 1
    restrained = []
    final = state.outcomes.get((e, i), {}).get("final_interval")
    if final:
        j = ((final[0] >> n) - 1) // 4  # final[0] = r_{n,2j}
        restrained = list(range(j, j + len(final) // 2))
    return HalfDensityReport(n, pairs_checked, exceptions, restrained)


def verify_gtable(state: StageState) -> list[tuple[int, int, int]]:
    """Replay the trace: g(e, i, s) must be 1 exactly from a ``phi_converged``
    event up to (not including) the next success or cancellation."""
    events: dict[tuple[int, int], dict[int, list[str]]] = {}
    for ev in state.trace:
        if ev["requirement"] is None:
            continue
        key = tuple(ev["requirement"])
        events.setdefault(key, {}).setdefault(ev["stage"], []).append(ev["action"])
    bad = []
    keys = sorted({(e, i) for e, i, _ in state.g})
    for key in keys:
        flag = 0
        per_stage = events.get(key, {})
        for s in range(state.stages + 1):
            for action in per_stage.get(s, []):
                if action == "phi_converged":
                    flag = 1
                elif action in ("declare_success", "cancel"):
                    flag = 0
            if state.g[(key[0], key[1], s)] != flag:
                bad.append((key[0], key[1], s))
    return bad


def verify_restraints(state: StageState) -> list[int]:
    """Elements that entered A while a live interval restrained them."""
    bad = []
    for rec in state.intervals:
        release = rec.declared_at if rec.declared_at is not None else state.stages + 1
        for x in rec.elements:
            t = state.entered.get(x)
            if t is not None and rec.chosen_at is not None and rec.chosen_at <= t < release:
                bad.append(x)
    return bad
