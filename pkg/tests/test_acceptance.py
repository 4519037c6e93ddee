"""Acceptance criteria, one test each.

Every test prints a single ``[PASS]``/``[FAIL]`` line (collected again in the
terminal summary).  Run directly with ``python tests/test_acceptance.py`` to
get just those lines.
"""

import itertools
import math
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest

from coarsedensity.adversary import (
    non_extremal_build,
    slices_needed,
    verify_certificates,
    verify_segments,
    weak_generic_defeat,
    witness_q_description,
)
from coarsedensity.bitseq import (
    BitPrefix,
    FormulaGenerator,
    GeneratorLibrary,
    PartialGenerator,
    PeriodicGenerator,
    RandomGenerator,
    symagree,
)
from coarsedensity.codings import (
    IncreasingMap,
    ck_approximant,
    interval_code,
    prod_identity_residuals,
    r_code,
    rn_index,
    slices_for_rate,
    spectrum_transform,
)
from coarsedensity.decoders import corrupt_blocks, decode_prefix
from coarsedensity.density import block_counts, density_profile, estimate_liminf_limsup, gamma_hat
from coarsedensity.stagecraft import (
    JumpProbe,
    random_enumeration,
    run_nonlow_construction,
    run_permitting_construction,
    verify_gtable,
    verify_half_density,
    verify_interval_conditions,
    verify_nothing_else_enters,
    verify_permitting_soundness,
    verify_restraints,
    verify_success_bound,
    verify_total_disagreement,
)
from coarsedensity.trust import WitnessFamily, block_length, merge_with_report, planted_family

RESULTS: list[str] = []


def verdict(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {number:2d}. {title}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def test_01_complement_identity():
    rng = np.random.default_rng(1)
    bad = 0
    for _ in range(1000):
        n = int(rng.integers(1, 2**12 + 1))
        a = BitPrefix(rng.random(n) < rng.random())
        ca, cb = a.cumulative()[1:], (~a).cumulative()[1:]
        # rho_j(A) + rho_j(complement A) = 1  <=>  |A|j| + |~A|j| = j
        bad += int((ca + cb != np.arange(1, n + 1)).sum())
        lo = estimate_liminf_limsup(density_profile(a))
        hi = estimate_liminf_limsup(density_profile(~a))
        bad += int(lo.liminf_est != 1 - hi.limsup_est)
    verdict(1, "complement identity", bad == 0, f"1000 prefixes up to 2^12, {bad} mismatches")


def test_02_rn_densities():
    N = 2**16
    j = np.arange(1, N + 1)
    bad = 0
    for n in range(11):
        cum = FormulaGenerator.rn(n).prefix(N).cumulative()[1:]
        step = 2 ** (n + 1)
        at = j % step == 0
        bad += int((cum[at] * step != j[at]).sum())
    verdict(2, "R_n densities", bad == 0, f"n <= 10, N <= 2^16, {bad} mismatches")


def test_03_ck_approximant():
    N = 2**16
    rng = np.random.default_rng(3)
    bad = 0
    x = np.arange(N)
    n_of = rn_index(x)
    for k in range(9):
        a = BitPrefix(rng.integers(0, 2, 20))
        agree = symagree(ck_approximant(a, k).prefix(N), r_code(a, N))
        low = (n_of >= 0) & (n_of < k)
        bad += int((agree.bits[low] == 0).sum())
        cum = np.concatenate(([0], np.cumsum(low)))
        Ns = np.arange(2**k, N + 1, 2**k)
        # rho_N(low slices) = 1 - 2^-k, cross-multiplied
        bad += int((cum[Ns] * 2**k != Ns * (2**k - 1)).sum())
    verdict(3, "C_k approximant", bad == 0, f"k <= 8, N = 2^16, {bad} failures")


def test_04_majority_coding():
    failures = 0
    trials = 0
    for bits in itertools.product((0, 1), repeat=6):
        a = BitPrefix(bits)
        code = interval_code(a, 720)
        expected = BitPrefix((0,) + bits[1:])
        for seed in range(100):
            rng = np.random.default_rng(seed)
            flips = {}
            for n in range(1, 6):
                size = math.factorial(n + 1) - math.factorial(n)
                # density < 1/2 - 1/(2 size), i.e. count < (size - 1) / 2
                most = math.ceil((size - 1) / 2) - 1
                flips[n] = int(rng.integers(0, most + 1)) if most >= 0 else 0
            trials += 1
            failures += int(decode_prefix(corrupt_blocks(code, flips, seed), 5) != expected)
    evens = FormulaGenerator.evens().prefix(40320)
    worst = Fraction(0)
    bound_ok = True
    for bits in itertools.product((0, 1), repeat=8):
        agree = symagree(interval_code(BitPrefix(bits), 40320), evens).cumulative()
        for n in range(1, 8):
            m = math.factorial(n + 1)
            gap = abs(Fraction(int(agree[m]), m) - Fraction(1, 2))
            worst = max(worst, gap * (n + 1))
            bound_ok &= gap <= Fraction(1, n + 1)
    ok = failures == 0 and bound_ok
    verdict(
        4,
        "majority-vote coding",
        ok,
        f"{trials} corrupted decodes, {failures} wrong; max (n+1)|rho - 1/2| = {float(worst):.4f} <= 1",
    )


def test_05_factor2():
    rng = np.random.default_rng(5)
    K = 18
    L = block_length(K)
    bad_first = 0
    for t in range(500):
        p = rng.choice([rng.random(), rng.random() ** 4, 0.5])
        c = (rng.random(L) < p).astype(np.uint8)
        if t % 5 == 0:
            c[: int(rng.integers(0, L))] = 0
        counts = block_counts(c, K)
        cum = np.concatenate(([0], np.cumsum(c, dtype=np.int64)))
        ends = 2 ** (np.arange(K + 1) + 1) - 1
        # d_k <= 2 rho_{2^(k+1)-1}:  count_k * (2^(k+1)-1) <= 2 * 2^k * |C|2^(k+1)-1|
        lhs = counts.astype(object) * ends.astype(object)
        rhs = 2 * (2 ** np.arange(K + 1)).astype(object) * cum[ends].astype(object)
        bad_first += int(sum(1 for x, y in zip(lhs, rhs) if x > y))
    # second chain: rho_j < 2 max_{i<=m} d_i for j - 1 in I_m, on sets empty below j0
    bad_second = 0
    K2 = 14
    L2 = block_length(K2)
    for t in range(500):
        j0 = int(rng.integers(0, L2 // 2))
        c = (rng.random(L2) < rng.random()).astype(np.uint8)
        c[:j0] = 0
        counts = block_counts(c, K2)
        cum = np.concatenate(([0], np.cumsum(c, dtype=np.int64)))
        best = Fraction(0)
        for m in range(K2 + 1):
            best = max(best, Fraction(int(counts[m]), 2**m))
            j = np.arange(2**m, 2 ** (m + 1))
            lhs = cum[j] * best.denominator
            rhs = 2 * j * best.numerator
            strict = cum[j] > 0
            bad_second += int((lhs[strict] >= rhs[strict]).sum()) + int((lhs > rhs).sum())
    ok = bad_first == 0 and bad_second == 0
    verdict(5, "factor-2 inequalities", ok, f"500 sets to k = 18 and 500 sets to k = 14: {bad_first} + {bad_second} violations")


def test_06_trust_merge():
    K, M = 20, 10
    A = RandomGenerator(6).prefix(block_length(K))
    members, burn_in = planted_family(A, M, K, seed=6)
    report = merge_with_report(WitnessFamily(members), K, A)
    bad = []
    checked = 0
    for n in range(M + 1):
        k0 = max(n, max(burn_in[: n + 1]))
        for k in range(k0, K + 1):
            checked += 1
            # d_k(A xor C) < 2^(3 - n), exact
            if not report.target_errors[k] * 2**n < 2 ** (k + 3):
                bad.append((n, k))
    verdict(6, "trust merge", not bad, f"K = 20, n <= 10, {checked} (n, k) checks, {len(bad)} violations")


def random_increasing_table(rng, length):
    return IncreasingMap(table=np.cumsum(rng.integers(1, 5, length)))


def test_07_prod_identity():
    rng = np.random.default_rng(7)
    U = 2**14
    maps = {"2k": IncreasingMap(a=2), "3k": IncreasingMap(a=3), "2k+1": IncreasingMap(a=2, b=1)}
    bad = 0
    for name in list(maps) + ["table"]:
        for t in range(50):
            h = maps.get(name) or random_increasing_table(rng, U + 1)
            x = BitPrefix(rng.random(U) < rng.random())
            bad += int(np.count_nonzero(prod_identity_residuals(h, x, U)))
    verdict(7, "monotone-image product identity", bad == 0, f"u <= 2^14, 4 maps x 50 sets, {bad} nonzero residuals")


def spectrum_library(A_gen, seed):
    def noisy(p, s):
        return FormulaGenerator(lambda i: A_gen.bits_at(i) ^ RandomGenerator(s, p).bits_at(i))

    return GeneratorLibrary(
        [
            FormulaGenerator.evens(),
            FormulaGenerator.zeros(),
            FormulaGenerator.ones(),
            PeriodicGenerator("1", "011"),
            RandomGenerator(seed),
            noisy(0.1, seed + 1),
            noisy(0.25, seed + 2),
            FormulaGenerator.rn(1),
        ]
    )


def test_08_spectrum_transform():
    N = 2**16
    h, R = IncreasingMap(a=2), FormulaGenerator.evens()
    s = Fraction(1, 2)
    worst = 0.0
    for seed in range(20):
        A_gen = RandomGenerator(1000 + seed, 0.3 + 0.02 * seed)
        lib = spectrum_library(A_gen, seed)
        A = A_gen.prefix(N // 2)
        B = spectrum_transform(A, h, R, N)
        lib_b = GeneratorLibrary(FormulaGenerator.from_prefix(spectrum_transform(c.prefix(N // 2), h, R, N)) for c in lib)
        # windows line up: j in [N/2, N] for B covers g(j) in [N/4, N/2] for A
        gamma_a, _ = gamma_hat(A, lib, N // 4)
        gamma_b, _ = gamma_hat(B, lib_b, N // 2)
        worst = max(worst, abs(float(gamma_b - (s * gamma_a + 1 - s))))
    verdict(8, "spectrum transform", worst <= 0.02, f"20 seeds at 2^16, max |gamma_B - (s gamma_A + 1 - s)| = {worst:.2e}")


def adversary_library():
    return GeneratorLibrary(
        [
            FormulaGenerator.evens(),
            FormulaGenerator.zeros(),
            PeriodicGenerator("1", "011"),
            RandomGenerator(1),
            RandomGenerator(2, 0.3),
            RandomGenerator(3, 0.7),
            FormulaGenerator.rn(1),
            FormulaGenerator.residues(5, [0, 3]),
        ]
    )


def test_09_non_extremal():
    N = 2**16
    r = Fraction(1, 2)
    lib = adversary_library()
    z, schedule = weak_generic_defeat(lib, [Fraction(1, 8)], N)
    A = non_extremal_build(r, lib, z, N)
    slices = slices_for_rate(r, N)
    part_a = []
    for q in (Fraction(1, 10), Fraction(2, 10), Fraction(3, 10), Fraction(4, 10)):
        n = slices_needed(slices, q)
        C = witness_q_description(r, lib, n, N).prefix(N)
        est = estimate_liminf_limsup(density_profile(symagree(A, C)), N // 2).liminf_est
        part_a.append(est >= q - Fraction(2, 100))
    # (b) at each opponent's certified horizons the agreement density is below r
    part_b = []
    for e in range(len(lib)):
        profile = density_profile(symagree(A, lib[e].prefix(N)))
        lengths = schedule.certified_lengths(e)
        dips = [
            estimate_liminf_limsup(density_profile(symagree(A, lib[e].prefix(N)).truncate(L)), max(1, L // 2)).liminf_est < r
            for L in lengths
        ]
        part_b.append(bool(lengths) and all(dips) and all(profile.rho(L) < r for L in lengths))
    ok = all(part_a) and all(part_b)
    verdict(9, "non-extremal construction", ok, f"witnesses q = 0.1..0.4: {sum(part_a)}/4, dips below r: {sum(part_b)}/8")


def test_10_stagecraft():
    r = Fraction(1, 2)
    cap = 2**14
    slices = slices_for_rate(r, cap)
    permitting_successes = nonlow_successes = 0
    failures = []
    for seed in range(50):
        rng = np.random.default_rng(seed)
        stages = 150
        enum = random_enumeration(seed, stages, rate=float(rng.uniform(0.2, 0.6)), spread=int(rng.integers(2, 5)))
        lib = GeneratorLibrary(
            PartialGenerator.linear(RandomGenerator(100 * seed + e, float(rng.uniform(0.2, 0.8))), int(rng.integers(0, 2)), int(rng.integers(0, 6)))
            for e in range(3)
        )
        state = run_permitting_construction(enum, lib, r, stages, cap=cap)
        permitting_successes += len(state.successes())
        if verify_permitting_soundness(state, enum) or verify_interval_conditions(state.intervals, slices):
            failures.append(("permitting", seed))
        if verify_total_disagreement(state, lib) or verify_nothing_else_enters(state):
            failures.append(("permitting-disagreement", seed))

        uses = rng.integers(1, 3, 2)
        probes = [JumpProbe(int(u + rng.integers(1, 8)), use=int(u), delay=int(rng.integers(1, 3))) for u in uses]
        C = random_enumeration(seed + 10_000, stages, rate=float(rng.uniform(0.1, 0.4)), spread=2)
        state = run_nonlow_construction(C, probes, lib, stages)
        nonlow_successes += len(state.successes())
        if verify_permitting_soundness(state, C) or verify_gtable(state) or verify_restraints(state):
            failures.append(("nonlow", seed))
        if not all(b["holds"] for b in verify_success_bound(state, lib)):
            failures.append(("nonlow-bound", seed))
        if not all(verify_half_density(state, e, i).ok for e, i in state.params["requirements"]):
            failures.append(("nonlow-half", seed))
    ok = not failures and permitting_successes > 0 and nonlow_successes > 0
    verdict(
        10,
        "stagecraft verification",
        ok,
        f"50 seeds x 2 constructions, {permitting_successes} + {nonlow_successes} successes, failures {failures}",
    )


def brute_agreements(z: str, opp: str, L: int) -> int:
    return sum(1 for x, y in zip(z[:L], opp[:L]) if x == y)


def test_11_adversary_certificates():
    N = 2**15
    lib = adversary_library()
    thresholds = [Fraction(1, 2), Fraction(1, 3), Fraction(1, 4), Fraction(1, 8)]
    z, schedule = weak_generic_defeat(lib, thresholds, N)
    checks = verify_certificates(z, lib, schedule)
    zs = str(z)
    brute_ok = True
    gamma_ok = True
    for c in schedule.certificates:
        opp = str(lib[c.opponent].prefix(c.length))
        brute_ok &= brute_agreements(zs, opp, c.length) == c.agreements and Fraction(c.agreements, c.length) < c.threshold
        value, _ = gamma_hat(z.truncate(c.length), GeneratorLibrary([lib[c.opponent]]), max(1, c.length // 2))
        gamma_ok &= value < c.threshold
    ok = all(checks) and brute_ok and gamma_ok and verify_segments(schedule, N) and len(checks) > 0
    verdict(11, "adversary certificates", ok, f"{len(checks)} certificates, all re-verified: {ok}")


CLI_CONFIGS = {
    "density": '{"generator": {"kind": "random", "seed": 2}, "horizon": 65536}',
    "code-decode": '{"A": {"kind": "random", "seed": 3}, "n_max": 6, "corruption": {"density": 0.3}, "seed": 9}',
    "trust": '{"planted": {"target": {"kind": "random", "seed": 1}, "members": 8}, "K": 16, "seed": 3}',
    "adversary": '{"opponents": [{"kind": "formula", "name": "zeros"}, {"kind": "random", "seed": 4}], "thresholds": ["1/2", "1/4"], "horizon": 20000}',
    "stage": '{"construction": "nonlow", "library": [{"kind": "random", "seed": 1}], "enumeration": {"random": {"rate": 0.3}}, "probes": [{"start": 3, "use": 2}], "horizon": 300, "seed": 5}',
    "spectrum": '{"A": {"kind": "random", "seed": 4}, "library": [{"kind": "formula", "name": "evens"}, {"kind": "random", "seed": 8}], "horizon": 65536}',
}


def test_12_cli_determinism(tmp_path):
    mismatched = []
    for command, config in CLI_CONFIGS.items():
        cfg = tmp_path / f"{command}.json"
        cfg.write_text(config)
        outs = []
        for attempt in ("a", "b"):
            out = tmp_path / f"{command}-{attempt}"
            proc = subprocess.run(
                [sys.executable, "-m", "coarsedensity.cli", command, "--config", str(cfg), "--out", str(out)],
                capture_output=True,
                text=True,
            )
            if proc.returncode != 0:
                mismatched.append(f"{command} exit {proc.returncode}")
            outs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())} if out.exists() else {})
        if not outs[0] or outs[0] != outs[1]:
            mismatched.append(command)
    verdict(12, "CLI determinism", not mismatched, f"6 commands run twice, differing: {mismatched or 'none'}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
