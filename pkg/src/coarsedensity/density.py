"""Prefix densities, windowed liminf/limsup estimates, dyadic blocks, and gamma-hat.

Everything here is exact: densities are :class:`fractions.Fraction` values
backed by integer running counts.  The true lower and upper densities are
limits and cannot be read off a prefix, so the estimators report the min and
max of ``rho_j`` over a declared tail window ``[tail_start, N]`` together
with the window itself.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .bitseq import BitPrefix, FormulaGenerator, Generator, GeneratorLibrary, PeriodicGenerator, symagree, symdiff
from .errors import PreconditionError


@dataclass(frozen=True, eq=False)
class DensityProfile:
    """The sequence rho_1 .. rho_N of a prefix, stored as running counts."""

    counts: np.ndarray  # counts[n] = ones below n, length N + 1

    @property
    def N(self) -> int:
        return int(self.counts.size - 1)

    def rho(self, n: int) -> Fraction:
        if not 1 <= n <= self.N:
            raise PreconditionError(f"rho_{n} outside profile of horizon {self.N}")
        return Fraction(int(self.counts[n]), n)

    @property
    def values(self) -> list[Fraction]:
        return [Fraction(int(c), n) for n, c in enumerate(self.counts[1:].tolist(), start=1)]

    def as_floats(self) -> np.ndarray:
        return self.counts[1:] / np.arange(1, self.N + 1)

    def __eq__(self, other):
        if not isinstance(other, DensityProfile):
            return NotImplemented
        return bool(np.array_equal(self.counts, other.counts))

    def write_csv(self, fh) -> None:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["n", "rho_n"])
        for n, c in enumerate(self.counts[1:].tolist(), start=1):
            out.writerow([n, str(Fraction(c, n))])


@dataclass(frozen=True, eq=False)
class DyadicProfile:
    """Block densities d_0 .. d_K on I_k = [2^k - 1, 2^(k+1) - 1)."""

    block_counts: np.ndarray  # ones in I_k, k = 0..K

    @property
    def K(self) -> int:
        return int(self.block_counts.size - 1)

    def d(self, k: int) -> Fraction:
        return Fraction(int(self.block_counts[k]), 2**k)

    @property
    def values(self) -> list[Fraction]:
        return [self.d(k) for k in range(self.K + 1)]

    def write_csv(self, fh) -> None:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["k", "d_k"])
        for k, value in enumerate(self.values):
            out.writerow([k, str(value)])


@dataclass(frozen=True)
class DensityEstimate:
    liminf_est: Fraction
    limsup_est: Fraction
    tail_start: int
    horizon: int
    argmin: int
    argmax: int

    def to_dict(self) -> dict:
        return {
            "liminf_est": str(self.liminf_est),
            "limsup_est": str(self.limsup_est),
            "liminf_est_float": float(self.liminf_est),
            "limsup_est_float": float(self.limsup_est),
            "window": {"tail_start": self.tail_start, "horizon": self.horizon},
            "argmin": self.argmin,
            "argmax": self.argmax,
        }


def prefix_density(a: BitPrefix, n: int) -> Fraction:
    if not 1 <= n <= len(a):
        raise PreconditionError(f"rho_{n} undefined for a prefix of length {len(a)}")
    return Fraction(a.count(n), n)


def density_profile(a: BitPrefix) -> DensityProfile:
    if len(a) == 0:
        raise PreconditionError("density profile of an empty prefix")
    return DensityProfile(a.cumulative())


def default_tail(n: int) -> int:
    return max(1, n // 2)


def _exact_extreme(counts: np.ndarray, lo: int, hi: int, *, largest: bool) -> tuple[Fraction, int]:
    j = np.arange(lo, hi + 1)
    ratio = counts[lo : hi + 1] / j
    if largest:
        ratio = -ratio
    # distinct ratios with denominators <= 2^22 differ by far more than 1e-12
    best = ratio.min()
    candidates = j[ratio <= best + 1e-12]
    pick = max if largest else min
    value = pick(Fraction(int(counts[c]), int(c)) for c in candidates)
    where = next(int(c) for c in candidates if Fraction(int(counts[c]), int(c)) == value)
    return value, where


def estimate_liminf_limsup(p: DensityProfile, tail_start: int | None = None) -> DensityEstimate:
    """Min and max of rho_j over ``tail_start <= j <= N`` (ties at least j)."""
    tail_start = default_tail(p.N) if tail_start is None else tail_start
    if not 1 <= tail_start <= p.N:
        raise PreconditionError(f"tail_start {tail_start} outside [1, {p.N}]")
    lo, argmin = _exact_extreme(p.counts, tail_start, p.N, largest=False)
    hi, argmax = _exact_extreme(p.counts, tail_start, p.N, largest=True)
    return DensityEstimate(lo, hi, tail_start, p.N, argmin, argmax)


_NAMED_DENSITIES = {
    "zeros": lambda p: Fraction(0),
    "ones": lambda p: Fraction(1),
    "evens": lambda p: Fraction(1, 2),
    "odds": lambda p: Fraction(1, 2),
    "mod": lambda p: Fraction(len({r % p["modulus"] for r in p["residues"]}), p["modulus"]),
    "rn": lambda p: Fraction(1, 2 ** (p["n"] + 1)),
}


def exact_density(g: Generator) -> Fraction | None:
    """Limiting density when it is known in closed form: eventually periodic
    generators and the named formulas.  None otherwise."""
    if isinstance(g, PeriodicGenerator):
        return Fraction(int(g.period.sum()), int(g.period.size))
    if isinstance(g, FormulaGenerator):
        if g.name == "complement":
            inner = exact_density(g.params["of"])
            return None if inner is None else 1 - inner
        if g.name in _NAMED_DENSITIES:
            return _NAMED_DENSITIES[g.name](g.params)
    return None


def dyadic_horizon(n: int) -> int:
    """Largest K with every block I_0 .. I_K inside a prefix of length n."""
    if n < 1:
        raise PreconditionError("no dyadic block fits in an empty prefix")
    return (n + 1).bit_length() - 2


def block_counts(bits: np.ndarray, K: int) -> np.ndarray:
    """Ones per dyadic block I_k for k = 0..K, from a raw bit array."""
    if bits.size < 2 ** (K + 1) - 1:
        raise PreconditionError(f"prefix of length {bits.size} does not cover block I_{K}")
    cum = np.concatenate(([0], np.cumsum(bits[: 2 ** (K + 1) - 1], dtype=np.int64)))
    edges = 2 ** np.arange(K + 2, dtype=np.int64) - 1
    return np.diff(cum[edges])


def dyadic_densities(a: BitPrefix, K: int | None = None) -> DyadicProfile:
    K = dyadic_horizon(len(a)) if K is None else K
    if K < 0:
        raise PreconditionError("K must be natural")
    return DyadicProfile(block_counts(a.bits, K))


def metric_profile(a: BitPrefix, b: BitPrefix) -> DensityProfile:
    """Profile of the symmetric difference; its limsup estimate approximates D(A, B)."""
    return density_profile(symdiff(a, b))


def gamma_hat(a: BitPrefix, lib: GeneratorLibrary, tail_start: int | None = None) -> tuple[Fraction, int]:
    """Best windowed lower-density estimate of agreement with a library member.

    Returns the value and the least library index attaining it.
    """
    if len(lib) == 0:
        raise PreconditionError("gamma_hat needs a nonempty library")
    best, best_index = None, -1
    for e, g in enumerate(lib):
        agree = density_profile(symagree(a, g.prefix(len(a))))
        value = estimate_liminf_limsup(agree, tail_start).liminf_est
        if best is None or value > best:
            best, best_index = value, e
    return best, best_index
