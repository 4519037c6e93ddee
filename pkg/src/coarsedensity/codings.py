"""Structured set constructions.

* ``R_n = {k : 2^n | k and 2^(n+1) does not divide k}`` and the coding
  ``R(A) = union of R_n over n in A``, with its finite approximants C_k.
* The factorial-interval coding ``I(A) = union of [n!, (n+1)!) over n in A``.
* Non-terminating binary expansions and the slice decomposition S_e = R_{c_e}.
* Images of sets under strictly increasing maps, and the transform
  ``C -> h(C) u complement(R)`` used to move agreement densities into
  ``[s * gamma + (1 - s), 1]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .bitseq import BitPrefix, FormulaGenerator, Generator
from .errors import PreconditionError


def _trailing_zeros(k: np.ndarray) -> np.ndarray:
    """2-adic valuation of positive integers (vectorized, exact)."""
    low = k & -k
    return np.log2(low).astype(np.int64)


def rn_membership(n: int, k: int) -> int:
    return int(k > 0 and k % (1 << n) == 0 and k % (1 << (n + 1)) != 0)


def rn_index(k: np.ndarray) -> np.ndarray:
    """The unique n with k in R_n, and -1 for k = 0."""
    k = np.asarray(k, dtype=np.int64)
    out = np.full(k.shape, -1, dtype=np.int64)
    pos = k > 0
    out[pos] = _trailing_zeros(k[pos])
    return out


def rn_element(n: int, j: np.ndarray | int):
    """The j-th element (from 0) of R_n in increasing order: 2^n (2j + 1)."""
    return (1 << n) * (2 * np.asarray(j, dtype=np.int64) + 1)


def _source_bits(a: BitPrefix | Generator, needed: int) -> np.ndarray:
    """Bits 0..needed-1 of a prefix or generator, rejecting short prefixes."""
    if isinstance(a, Generator):
        return a.bits_at(np.arange(needed, dtype=np.int64))
    if len(a) < needed:
        raise PreconditionError(f"need {needed} bits of A, prefix has {len(a)}")
    return a.bits[:needed]


def r_code(a: BitPrefix | Generator, N: int) -> BitPrefix:
    """Prefix of length N of R(A); bit 0 is always 0."""
    if N <= 1:
        return BitPrefix.zeros(max(N, 0))
    needed = (N - 1).bit_length()  # R_n meets [0, N) iff 2^n < N
    src = _source_bits(a, needed)
    n = rn_index(np.arange(N, dtype=np.int64))
    out = np.zeros(N, dtype=np.uint8)
    out[1:] = src[n[1:]]
    return BitPrefix(out)


def ck_approximant(a: BitPrefix, k: int) -> Generator:
    """Generator of C_k = union of R_n over n in A with n < k."""
    if k < 0 or len(a) < k:
        raise PreconditionError(f"C_{k} needs {k} bits of A, prefix has {len(a)}")
    keep = np.zeros(k + 1, dtype=np.uint8)
    keep[:k] = a.bits[:k]

    def rule(i):
        n = rn_index(i)
        live = (n >= 0) & (n < k)
        out = np.zeros(i.shape, dtype=np.uint8)
        out[live] = keep[n[live]]
        return out

    return FormulaGenerator(rule)


def factorial_block(k: np.ndarray) -> np.ndarray:
    """The unique n >= 1 with n! <= k < (n+1)!, and 0 for k = 0."""
    k = np.asarray(k, dtype=np.int64)
    top = int(k.max()) if k.size else 0
    facts = [1]
    while facts[-1] <= top:
        facts.append(facts[-1] * (len(facts)))
    # facts[m] = m!; searchsorted over 1!, 2!, ... gives the block index
    bounds = np.asarray(facts[1:], dtype=np.int64)
    n = np.searchsorted(bounds, k, side="right")
    return np.where(k == 0, 0, n)


def interval_code(a: BitPrefix | Generator, N: int) -> BitPrefix:
    """Prefix of length N of I(A); bit 0 lies in no block and is 0."""
    if N <= 1:
        return BitPrefix.zeros(max(N, 0))
    n = factorial_block(np.arange(N, dtype=np.int64))
    src = _source_bits(a, int(n.max()) + 1)
    out = src[n].copy()
    out[0] = 0
    return BitPrefix(out)


def factorial_interval(n: int) -> tuple[int, int]:
    return math.factorial(n), math.factorial(n + 1)


def binary_expansion_set(r: Fraction | int | str, bits: int) -> BitPrefix:
    """First ``bits`` digits of the non-terminating binary expansion of r in (0, 1].

    Dyadic rationals take the form ending in all ones, so 1/2 = 0.0111...
    """
    r = Fraction(r)
    if not 0 < r <= 1:
        raise PreconditionError(f"r = {r} outside (0, 1]")
    out = np.zeros(bits, dtype=np.uint8)
    x = r
    for i in range(bits):
        if 2 * x > 1:
            out[i] = 1
            x = 2 * x - 1
        else:
            x = 2 * x
    return BitPrefix(out)


@dataclass(frozen=True)
class SliceDecomposition:
    """Slices S_e = R_{c_e} of S = R(B), for the ones c_0 < c_1 < ... of B."""

    B: BitPrefix
    c: tuple[int, ...]

    def __len__(self):
        return len(self.c)

    def slice(self, e: int) -> Generator:
        return FormulaGenerator.rn(self.c[e])

    def slice_density(self, e: int) -> Fraction:
        return Fraction(1, 2 ** (self.c[e] + 1))

    def union_density(self, n: int | None = None) -> Fraction:
        """Exact density of S_0 u ... u S_{n-1} (all materialized slices by default)."""
        n = len(self.c) if n is None else n
        return sum((self.slice_density(e) for e in range(n)), Fraction(0))

    @property
    def density(self) -> Fraction:
        return self.union_density()

    def slice_of(self, k: np.ndarray) -> np.ndarray:
        """Index e with k in S_e, or -1 when k lies outside S."""
        lookup = np.full(len(self.B) + 1, -1, dtype=np.int64)
        lookup[list(self.c)] = np.arange(len(self.c))
        n = rn_index(k)
        out = np.full(n.shape, -1, dtype=np.int64)
        ok = (n >= 0) & (n < len(self.B))
        out[ok] = lookup[n[ok]]
        return out

    def in_S(self, k: np.ndarray) -> np.ndarray:
        return self.slice_of(k) >= 0


def slice_decomposition(B: BitPrefix) -> SliceDecomposition:
    c = tuple(int(x) for x in B.ones_positions())
    if not c:
        raise PreconditionError("slice decomposition of an empty B-prefix")
    return SliceDecomposition(B, c)


def slices_for_rate(r: Fraction, N: int) -> SliceDecomposition:
    """Slices of R(B) for B the expansion of r, enough to cover [0, N)."""
    return slice_decomposition(binary_expansion_set(r, max(1, (max(N, 2) - 1).bit_length())))


class IncreasingMap:
    """A strictly increasing map h on the naturals.

    Either affine ``h(k) = a*k + b`` with ``a >= 1`` or backed by a finite
    strictly increasing table.
    """

    def __init__(self, *, a: int | None = None, b: int = 0, table=None):
        if table is not None:
            table = np.asarray(table, dtype=np.int64)
            if table.size == 0 or table[0] < 0 or (np.diff(table) <= 0).any():
                raise PreconditionError("table must be a nonempty strictly increasing list of naturals")
            self.table, self.a, self.b = table, None, None
        else:
            if a is None or a < 1 or b < 0:
                raise PreconditionError("affine map needs a >= 1 and b >= 0")
            self.table, self.a, self.b = None, int(a), int(b)

    @classmethod
    def from_dict(cls, desc: dict) -> IncreasingMap:
        kind = desc.get("kind")
        if kind == "affine":
            return cls(a=int(desc["a"]), b=int(desc.get("b", 0)))
        if kind == "table":
            return cls(table=desc["values"])
        raise PreconditionError(f"unknown map kind {kind!r}")

    def describe(self) -> dict:
        if self.table is None:
            return {"kind": "affine", "a": self.a, "b": self.b}
        return {"kind": "table", "values": self.table.tolist()}

    def __call__(self, k):
        k = np.asarray(k, dtype=np.int64)
        if self.table is None:
            return self.a * k + self.b
        if k.size and k.max() >= self.table.size:
            raise PreconditionError(f"map table of length {self.table.size} queried at {int(k.max())}")
        return self.table[k]

    def g(self, u):
        """Least k with h(k) >= u.

        A table-backed map is defined on [0, len(table)) only; past its last
        entry g is len(table), i.e. the whole domain maps below u.
        """
        u = np.asarray(u, dtype=np.int64)
        if self.table is None:
            return np.maximum(0, -((self.b - u) // self.a))
        return np.searchsorted(self.table, u, side="left")

    def range_prefix(self, N: int) -> BitPrefix:
        k = np.arange(int(self.g(N)))
        return BitPrefix.from_set(self(k).tolist(), N)


def monotone_image(h: IncreasingMap, x: BitPrefix, N: int) -> BitPrefix:
    """Prefix of length N of h(X) = {h(k) : k in X}."""
    need = int(h.g(N))
    if need > len(x):
        raise PreconditionError(f"h(X) below {N} needs {need} bits of X, prefix has {len(x)}")
    k = np.flatnonzero(x.bits[:need])
    out = np.zeros(N, dtype=np.uint8)
    out[h(k)] = 1
    return BitPrefix(out)


def preimage(h: IncreasingMap, y: BitPrefix) -> BitPrefix:
    """h^{-1}(Y) restricted to the k with h(k) inside the prefix of Y."""
    k = np.arange(int(h.g(len(y))))
    return BitPrefix(y.bits[h(k)])


def prod_identity_residuals(h: IncreasingMap, x: BitPrefix, N: int) -> np.ndarray:
    """Cross-multiplied residual of rho_u(h(X)) = rho_u(range h) * rho_{g(u)}(X).

    Entry ``u - 1`` is ``|h(X)|u| * g(u) - |range h|u| * |X|g(u)|``; the
    identity holds exactly at u iff this integer is zero.  When g(u) = 0
    both sides are 0.
    """
    hx = monotone_image(h, x, N).cumulative()
    y = h.range_prefix(N).cumulative()
    u = np.arange(1, N + 1, dtype=np.int64)
    g = h.g(u)
    xc = x.cumulative()
    return hx[u] * g - y[u] * xc[g]


def spectrum_transform(C: BitPrefix, h: IncreasingMap, R: Generator | BitPrefix, N: int) -> BitPrefix:
    """Prefix of h(C) u complement(R), after checking range(h) = R below N."""
    r_bits = R.prefix(N) if isinstance(R, Generator) else R.truncate(N)
    if r_bits != h.range_prefix(N):
        raise PreconditionError("range of h does not match the ones of R on the prefix")
    return monotone_image(h, C, N) | r_bits.complement()


def table_map_from_set(r: BitPrefix) -> IncreasingMap:
    """The increasing enumeration of the ones of a prefix."""
    return IncreasingMap(table=r.ones_positions())

