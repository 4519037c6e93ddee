"""Finite prefixes, generator-described sequences, and budgeted partial rules.

A :class:`BitPrefix` is the initial segment ``A | N`` of a subset of the
naturals.  A :class:`Generator` is a declared deterministic rule standing in
for a computable set; a :class:`PartialGenerator` adds a halting stage per
index so that it can be evaluated under a step budget.

Table-backed generators and prefix files use the same on-disk layout:
bit ``i`` is bit ``i % 8`` (least significant first) of byte ``i // 8``.
"""

from __future__ import annotations

import functools
import json
from collections.abc import Callable, Iterable, Sequence
from pathlib import Path

import numpy as np

from .errors import PreconditionError

MAX_PREFIX = 2**22
DIVERGED = -1

_RANDOM_CHUNK = 2**16


def _as_bits(values) -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 1:
        arr = arr.ravel()
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise PreconditionError("bits must be 0 or 1")
    return arr.astype(np.uint8)


class BitPrefix:
    """An immutable finite binary word, indexed from 0."""

    __slots__ = ("_bits", "_cum")

    def __init__(self, bits: Iterable[int] | np.ndarray = ()):
        if isinstance(bits, BitPrefix):
            arr = bits._bits
        else:
            if not isinstance(bits, (np.ndarray, list, tuple)):
                bits = list(bits)
            arr = _as_bits(bits).copy()
            arr.setflags(write=False)
        self._bits = arr
        self._cum = None

    @classmethod
    def from_string(cls, text: str) -> BitPrefix:
        text = text.strip()
        if any(ch not in "01" for ch in text):
            raise PreconditionError(f"not a binary word: {text!r}")
        return cls(np.frombuffer(text.encode(), dtype=np.uint8) - ord("0"))

    @classmethod
    def zeros(cls, n: int) -> BitPrefix:
        return cls(np.zeros(n, dtype=np.uint8))

    @classmethod
    def ones(cls, n: int) -> BitPrefix:
        return cls(np.ones(n, dtype=np.uint8))

    @classmethod
    def from_set(cls, members: Iterable[int], n: int) -> BitPrefix:
        arr = np.zeros(n, dtype=np.uint8)
        idx = np.fromiter((m for m in members if 0 <= m < n), dtype=np.int64)
        arr[idx] = 1
        return cls(arr)

    @property
    def bits(self) -> np.ndarray:
        """Read-only ``uint8`` view of the stored bits."""
        return self._bits

    def __len__(self) -> int:
        return int(self._bits.size)

    def __getitem__(self, key):
        if isinstance(key, slice):
            return BitPrefix(self._bits[key])
        if not -len(self) <= key < len(self):
            raise IndexError(key)
        return int(self._bits[key])

    def __iter__(self):
        return iter(self._bits.tolist())

    def __eq__(self, other):
        if not isinstance(other, BitPrefix):
            return NotImplemented
        return len(self) == len(other) and bool(np.array_equal(self._bits, other._bits))

    def __hash__(self):
        return hash(self._bits.tobytes())

    def __str__(self):
        return (self._bits + ord("0")).tobytes().decode()

    def __repr__(self):
        text = str(self)
        if len(text) > 40:
            text = text[:37] + "..."
        return f"BitPrefix({text!r}, N={len(self)})"

    def cumulative(self) -> np.ndarray:
        """Counts of ones below each n, as an ``int64`` array of length N + 1."""
        if self._cum is None:
            cum = np.zeros(len(self) + 1, dtype=np.int64)
            np.cumsum(self._bits, out=cum[1:])
            cum.setflags(write=False)
            self._cum = cum
        return self._cum

    def count(self, n: int | None = None) -> int:
        """Number of ones among the first ``n`` positions (default: all)."""
        n = len(self) if n is None else n
        if not 0 <= n <= len(self):
            raise PreconditionError(f"count below {n} outside prefix of length {len(self)}")
        return int(self.cumulative()[n])

    def ones_positions(self) -> np.ndarray:
        return np.flatnonzero(self._bits)

    def truncate(self, n: int) -> BitPrefix:
        if not 0 <= n <= len(self):
            raise PreconditionError(f"cannot truncate length {len(self)} prefix to {n}")
        return BitPrefix(self._bits[:n])

    def complement(self) -> BitPrefix:
        return BitPrefix(1 - self._bits)

    def __invert__(self):
        return self.complement()

    def __or__(self, other):
        return pointwise("union", self, other)

    def __and__(self, other):
        return pointwise("intersect", self, other)

    def __xor__(self, other):
        return pointwise("symdiff", self, other)

    def to_bytes(self) -> bytes:
        return np.packbits(self._bits, bitorder="little").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes, n: int | None = None) -> BitPrefix:
        bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")
        if n is not None:
            if n > bits.size:
                raise PreconditionError(f"{len(data)} bytes hold fewer than {n} bits")
            bits = bits[:n]
        return cls(bits)

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path, n: int | None = None) -> BitPrefix:
        return cls.from_bytes(Path(path).read_bytes(), n)


_POINTWISE = {
    "union": np.bitwise_or,
    "intersect": np.bitwise_and,
    "symdiff": np.bitwise_xor,
    "symagree": lambda a, b: 1 - np.bitwise_xor(a, b),
}


def pointwise(opkind: str, a: BitPrefix, b: BitPrefix | None = None) -> BitPrefix:
    """Bitwise set algebra on equal-length prefixes.

    ``symagree`` is the agreement set ``{i : a(i) = b(i)}``; ``symdiff`` is
    its complement.  ``complement`` ignores ``b``.
    """
    if opkind == "complement":
        return a.complement()
    try:
        op = _POINTWISE[opkind]
    except KeyError:
        raise PreconditionError(f"unknown pointwise operation {opkind!r}") from None
    if b is None or len(a) != len(b):
        raise PreconditionError(
            f"{opkind} needs equal lengths, got {len(a)} and {None if b is None else len(b)}"
        )
    return BitPrefix(op(a.bits, b.bits).astype(np.uint8))


def symagree(a: BitPrefix, b: BitPrefix) -> BitPrefix:
    return pointwise("symagree", a, b)


def symdiff(a: BitPrefix, b: BitPrefix) -> BitPrefix:
    return pointwise("symdiff", a, b)


def _index_array(idx) -> np.ndarray:
    arr = np.asarray(idx, dtype=np.int64)
    if arr.size and arr.min() < 0:
        raise PreconditionError("generator indices must be natural numbers")
    return arr


class Generator:
    """A total deterministic rule ``index -> {0, 1}``.

    Subclasses implement :meth:`bits_at`, which evaluates the rule on an
    array of indices at once.
    """

    kind = "abstract"

    def bits_at(self, idx: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, i: int) -> int:
        return int(self.bits_at(_index_array([i]))[0])

    def prefix(self, n: int, *, cap: int = MAX_PREFIX) -> BitPrefix:
        if n < 0:
            raise PreconditionError(f"prefix length must be natural, got {n}")
        if n > cap:
            raise PreconditionError(f"prefix length {n} exceeds cap {cap}")
        return BitPrefix(self.bits_at(np.arange(n, dtype=np.int64)))

    def describe(self) -> dict:
        raise PreconditionError(f"{type(self).__name__} has no JSON description")


def evaluate_prefix(g: Generator, n: int, *, cap: int = MAX_PREFIX) -> BitPrefix:
    return g.prefix(n, cap=cap)


def _rn_bits(n: int, idx: np.ndarray) -> np.ndarray:
    # k in R_n iff 2^n | k and 2^(n+1) does not; 0 is in no R_n
    return ((idx > 0) & (idx % (1 << n) == 0) & (idx % (1 << (n + 1)) != 0)).astype(np.uint8)


class FormulaGenerator(Generator):
    """A generator given by a vectorized closed-form rule.

    ``name`` and ``params`` identify registered formulas so they round-trip
    through JSON; ad hoc rules built in code carry ``name=None``.
    """

    kind = "formula"

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], name: str | None = None, **params):
        self._fn = fn
        self.name = name
        self.params = params

    def bits_at(self, idx):
        idx = _index_array(idx)
        return np.asarray(self._fn(idx), dtype=np.uint8)

    def describe(self):
        if self.name is None:
            return super().describe()
        params = {k: (v.describe() if isinstance(v, Generator) else v) for k, v in self.params.items()}
        return {"kind": "formula", "name": self.name, **params}

    def __repr__(self):
        return f"FormulaGenerator({self.name or 'anonymous'}, {self.params})"

    @classmethod
    def zeros(cls):
        return cls(lambda i: np.zeros(i.shape, dtype=np.uint8), "zeros")

    @classmethod
    def ones(cls):
        return cls(lambda i: np.ones(i.shape, dtype=np.uint8), "ones")

    @classmethod
    def evens(cls):
        return cls(lambda i: (i % 2 == 0).astype(np.uint8), "evens")

    @classmethod
    def odds(cls):
        return cls(lambda i: (i % 2 == 1).astype(np.uint8), "odds")

    @classmethod
    def residues(cls, modulus: int, residues: Sequence[int]):
        if modulus < 1:
            raise PreconditionError("modulus must be positive")
        table = np.zeros(modulus, dtype=np.uint8)
        table[[r % modulus for r in residues]] = 1
        return cls(lambda i: table[i % modulus], "mod", modulus=modulus, residues=sorted(set(residues)))

    @classmethod
    def rn(cls, n: int):
        if n < 0:
            raise PreconditionError("R_n needs n >= 0")
        return cls(functools.partial(_rn_bits, n), "rn", n=n)

    @classmethod
    def complement_of(cls, g: Generator):
        return cls(lambda i: 1 - g.bits_at(i), "complement", of=g)

    @classmethod
    def from_prefix(cls, a: BitPrefix, fill: int = 0):
        """Extend a finite prefix by a constant tail."""
        bits = a.bits
        n = len(a)

        def rule(i):
            out = np.full(i.shape, fill, dtype=np.uint8)
            inside = i < n
            out[inside] = bits[i[inside]]
            return out

        return cls(rule)


class PeriodicGenerator(Generator):
    """An eventually periodic sequence: a finite preamble then a repeated period."""

    kind = "periodic"

    def __init__(self, preamble: str | Sequence[int], period: str | Sequence[int]):
        self.preamble = _as_bits([int(c) for c in preamble] if isinstance(preamble, str) else preamble)
        self.period = _as_bits([int(c) for c in period] if isinstance(period, str) else period)
        if self.period.size == 0:
            raise PreconditionError("period must be nonempty")

    def bits_at(self, idx):
        idx = _index_array(idx)
        pre = self.preamble.size
        out = np.empty(idx.shape, dtype=np.uint8)
        early = idx < pre
        out[early] = self.preamble[idx[early]]
        out[~early] = self.period[(idx[~early] - pre) % self.period.size]
        return out

    def describe(self):
        return {
            "kind": "periodic",
            "preamble": "".join(map(str, self.preamble.tolist())),
            "period": "".join(map(str, self.period.tolist())),
        }

    def __repr__(self):
        d = self.describe()
        return f"PeriodicGenerator({d['preamble']!r}, {d['period']!r})"


@functools.lru_cache(maxsize=64)
def _random_chunk(seed: int, chunk: int, p: float) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([seed, chunk]))
    out = (rng.random(_RANDOM_CHUNK) < p).astype(np.uint8)
    out.setflags(write=False)
    return out


class RandomGenerator(Generator):
    """Seeded pseudo-random bits with P(bit = 1) = p.

    Bits are produced in fixed-size chunks keyed by ``(seed, chunk)``, so
    the value at an index never depends on how far the sequence was read.
    """

    kind = "random"

    def __init__(self, seed: int, p: float = 0.5):
        if not 0.0 <= p <= 1.0:
            raise PreconditionError(f"probability {p} outside [0, 1]")
        self.seed = int(seed)
        self.p = float(p)

    def bits_at(self, idx):
        idx = _index_array(idx)
        out = np.empty(idx.shape, dtype=np.uint8)
        chunks = idx // _RANDOM_CHUNK
        for c in np.unique(chunks):
            sel = chunks == c
            out[sel] = _random_chunk(self.seed, int(c), self.p)[idx[sel] % _RANDOM_CHUNK]
        return out

    def describe(self):
        return {"kind": "random", "seed": self.seed, "p": self.p}

    def __repr__(self):
        return f"RandomGenerator(seed={self.seed}, p={self.p})"


class TableGenerator(Generator):
    """Bits read from a stored table; indices past the table are rejected."""

    kind = "table"

    def __init__(self, bits: BitPrefix | Sequence[int], path: str | None = None):
        self.table = bits if isinstance(bits, BitPrefix) else BitPrefix(bits)
        self.path = path

    @classmethod
    def from_file(cls, path, length: int | None = None):
        return cls(BitPrefix.load(path, length), path=str(path))

    def bits_at(self, idx):
        idx = _index_array(idx)
        if idx.size and idx.max() >= len(self.table):
            raise PreconditionError(f"table of length {len(self.table)} queried at {int(idx.max())}")
        return self.table.bits[idx]

    def describe(self):
        if self.path is None:
            return {"kind": "table", "bits": str(self.table)}
        return {"kind": "table", "path": self.path, "length": len(self.table)}


class PartialGenerator:
    """A partial rule evaluated under a step budget.

    Index ``i`` converges to ``value(i)`` once the budget reaches
    ``halting(i)``; a negative halting stage means it never converges.  This
    makes convergence monotone in the budget by construction.
    """

    def __init__(self, value: Generator, halting: Callable[[np.ndarray], np.ndarray], description: dict | None = None):
        self.value = value
        self._halting = halting
        self._description = description

    def halting_stage(self, idx) -> np.ndarray:
        idx = _index_array(idx)
        return np.broadcast_to(np.asarray(self._halting(idx), dtype=np.int64), idx.shape)

    def evaluate_many(self, idx, budget: int) -> np.ndarray:
        """Values at ``idx`` under ``budget`` as ``int8``, with DIVERGED = -1."""
        idx = _index_array(idx)
        halt = self.halting_stage(idx)
        out = self.value.bits_at(idx).astype(np.int8)
        out[(halt < 0) | (halt > budget)] = DIVERGED
        return out

    def converges_on(self, idx, budget: int) -> bool:
        return bool((self.evaluate_many(idx, budget) != DIVERGED).all())

    def describe(self) -> dict:
        if self._description is None:
            raise PreconditionError("partial generator has no JSON description")
        return self._description

    @classmethod
    def total(cls, g: Generator, stage: int = 0):
        desc = _maybe_describe(g, {"rule": "constant", "stage": stage})
        return cls(g, lambda i: np.full(i.shape, stage, dtype=np.int64), desc)

    @classmethod
    def never(cls):
        g = FormulaGenerator.zeros()
        return cls(g, lambda i: np.full(i.shape, -1, dtype=np.int64), _maybe_describe(g, {"rule": "never"}))

    @classmethod
    def linear(cls, g: Generator, a: int, b: int = 0):
        """Index ``i`` halts after ``a * i + b`` steps."""
        return cls(g, lambda i: a * i + b, _maybe_describe(g, {"rule": "linear", "a": a, "b": b}))

    @classmethod
    def on_domain(cls, g: Generator, domain: Generator, stage: int = 0):
        """Converges (at ``stage``) exactly on the ones of ``domain``."""
        def halting(i):
            return np.where(domain.bits_at(i) == 1, stage, -1)

        halt_desc = {"rule": "domain", "stage": stage}
        try:
            halt_desc["domain"] = domain.describe()
        except PreconditionError:
            halt_desc = None
        return cls(g, halting, _maybe_describe(g, halt_desc) if halt_desc else None)

    @classmethod
    def from_stages(cls, g: Generator, stages: Sequence[int]):
        """Explicit per-index halting stages; indices past the list never halt."""
        table = np.asarray(stages, dtype=np.int64)

        def halting(i):
            out = np.full(i.shape, -1, dtype=np.int64)
            inside = i < table.size
            out[inside] = table[i[inside]]
            return out

        return cls(g, halting, _maybe_describe(g, {"rule": "table", "stages": table.tolist()}))


def _maybe_describe(g: Generator, halt: dict) -> dict | None:
    try:
        return {"kind": "partial", "value": g.describe(), "halt": halt}
    except PreconditionError:
        return None


def evaluate_budgeted(phi: PartialGenerator, i: int, s: int) -> int:
    """Value of ``phi`` at ``i`` within ``s`` steps, or :data:`DIVERGED`."""
    return int(phi.evaluate_many([i], s)[0])


class GeneratorLibrary(Sequence):
    """A finite, densely indexed list of generators (total or partial)."""

    def __init__(self, entries: Iterable[Generator | PartialGenerator] = ()):
        self.entries = tuple(entries)

    def __getitem__(self, e):
        return self.entries[e]

    def __len__(self):
        return len(self.entries)

    def prefixes(self, n: int) -> list[BitPrefix]:
        return [g.prefix(n) for g in self.entries]

    def describe(self) -> list[dict]:
        return [g.describe() for g in self.entries]

    def __repr__(self):
        return f"GeneratorLibrary({list(self.entries)!r})"


_NAMED_FORMULAS = {
    "zeros": lambda d, base: FormulaGenerator.zeros(),
    "ones": lambda d, base: FormulaGenerator.ones(),
    "evens": lambda d, base: FormulaGenerator.evens(),
    "odds": lambda d, base: FormulaGenerator.odds(),
    "mod": lambda d, base: FormulaGenerator.residues(int(d["modulus"]), [int(r) for r in d["residues"]]),
    "rn": lambda d, base: FormulaGenerator.rn(int(d["n"])),
    "complement": lambda d, base: FormulaGenerator.complement_of(generator_from_dict(d["of"], base)),
}


def generator_from_dict(desc: dict, base_dir=None) -> Generator:
    """Build a total generator from its JSON description.

    Recognized kinds: ``formula`` (with ``name`` one of zeros, ones, evens,
    odds, mod, rn, complement), ``periodic``, ``random`` and ``table``
    (either inline ``bits`` or a ``path`` to a bit file).
    """
    if not isinstance(desc, dict) or "kind" not in desc:
        raise PreconditionError(f"generator description needs a 'kind': {desc!r}")
    kind = desc["kind"]
    try:
        if kind == "formula":
            return _NAMED_FORMULAS[desc["name"]](desc, base_dir)
        if kind == "periodic":
            return PeriodicGenerator(desc.get("preamble", ""), desc["period"])
        if kind == "random":
            return RandomGenerator(int(desc["seed"]), float(desc.get("p", 0.5)))
        if kind == "table":
            if "bits" in desc:
                return TableGenerator(BitPrefix.from_string(desc["bits"]))
            path = Path(desc["path"])
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            return TableGenerator.from_file(path, desc.get("length"))
    except KeyError as exc:
        raise PreconditionError(f"generator description {desc!r} is missing {exc}") from None
    raise PreconditionError(f"unknown generator kind {kind!r}")


def partial_from_dict(desc: dict, base_dir=None) -> PartialGenerator:
    """Build a partial generator; a plain total description halts at stage 0."""
    if desc.get("kind") != "partial":
        return PartialGenerator.total(generator_from_dict(desc, base_dir))
    value = generator_from_dict(desc["value"], base_dir)
    halt = desc.get("halt", {"rule": "constant", "stage": 0})
    rule = halt.get("rule")
    if rule == "constant":
        return PartialGenerator.total(value, int(halt.get("stage", 0)))
    if rule == "never":
        return PartialGenerator(value, lambda i: np.full(i.shape, -1, dtype=np.int64), desc)
    if rule == "linear":
        return PartialGenerator.linear(value, int(halt["a"]), int(halt.get("b", 0)))
    if rule == "domain":
        return PartialGenerator.on_domain(value, generator_from_dict(halt["domain"], base_dir), int(halt.get("stage", 0)))
    if rule == "table":
        return PartialGenerator.from_stages(value, halt["stages"])
    raise PreconditionError(f"unknown halting rule {rule!r}")


def library_from_list(items: Sequence[dict], base_dir=None, *, partial: bool = False) -> GeneratorLibrary:
    build = partial_from_dict if partial else generator_from_dict
    return GeneratorLibrary(build(d, base_dir) for d in items)


def load_generator(path) -> Generator:
    path = Path(path)
    return generator_from_dict(json.loads(path.read_text()), path.parent)
