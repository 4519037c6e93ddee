"""Command-line front end.

Every subcommand reads a JSON config (``--config``), applies flag overrides,
writes its outputs into one directory and embeds the resolved config, its
hash, the horizon, the estimation window, the seed and the caps in every
JSON report.  Nothing time- or host-dependent is written, so re-running a
command with the same config reproduces its outputs byte for byte.

Exit codes: 0 success, 2 invalid config, 3 precondition violation,
4 cap-limited result (outputs are still written).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from fractions import Fraction
from pathlib import Path


from . import __version__
from .adversary import verify_certificates, verify_segments, weak_generic_defeat
from .bitseq import (
    MAX_PREFIX,
    BitPrefix,
    FormulaGenerator,
    GeneratorLibrary,
    generator_from_dict,
    library_from_list,
)
from .codings import IncreasingMap, interval_code, spectrum_transform
from .decoders import corrupt_blocks, decode_prefix
from .density import (
    default_tail,
    density_profile,
    dyadic_densities,
    dyadic_horizon,
    estimate_liminf_limsup,
    exact_density,
    gamma_hat,
)
from .errors import PreconditionError, SearchCapExceeded
from .stagecraft import (
    DEFAULT_POSITION_CAP,
    Enumeration,
    JumpProbe,
    random_enumeration,
    run_nonlow_construction,
    run_permitting_construction,
    slices_for_rate,
    verify_gtable,
    verify_half_density,
    verify_interval_conditions,
    verify_nothing_else_enters,
    verify_permitting_soundness,
    verify_restraints,
    verify_success_bound,
    verify_total_disagreement,
)
from .trust import WitnessFamily, block_length, merge_with_report, planted_family

OUT_ENV = "COARSEDENSITY_OUT"

EXIT_OK, EXIT_CONFIG, EXIT_PRECONDITION, EXIT_CAP = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Config plumbing


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _set_path(config: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = config
    for key in keys[:-1]:
        node = node.setdefault(key, {})
        if not isinstance(node, dict):
            raise ConfigError(f"cannot set {dotted}: {key} is not an object")
    node[keys[-1]] = value


def load_config(args: argparse.Namespace) -> dict:
    config: dict = {}
    if args.config is not None:
        try:
            config = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(config, dict):
            raise ConfigError("config must be a JSON object")
    for item in args.set or ():
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        _set_path(config, key, _parse_value(value))
    for key in ("horizon", "tail_start", "seed"):
        value = getattr(args, key)
        if value is not None:
            config[key] = value
    return config


def config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _int(config: dict, key: str, default=None, *, minimum: int = 0) -> int:
    value = config.get(key, default)
    if value is None:
        raise ConfigError(f"missing required key {key!r}")
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key} must be an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(f"{key} must be at least {minimum}, got {value}")
    return value


def _fraction(value, key: str) -> Fraction:
    try:
        return Fraction(str(value))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"{key} must be a rational number, got {value!r}") from exc


def _require(config: dict, key: str):
    if key not in config:
        raise ConfigError(f"missing required key {key!r}")
    return config[key]


def _descriptor(value, base_dir: Path, key: str):
    """Inline descriptor, or the name of a JSON file holding one."""
    if isinstance(value, str):
        path = base_dir / value
        try:
            return json.loads(path.read_text()), path.parent
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{key}: cannot read descriptor file {path}: {exc}") from exc
    if not isinstance(value, (dict, list)):
        raise ConfigError(f"{key} must be a descriptor object, list or file name")
    return value, base_dir


def _generator(config: dict, key: str, base_dir: Path):
    desc, where = _descriptor(_require(config, key), base_dir, key)
    try:
        return generator_from_dict(desc, where)
    except (PreconditionError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: bad generator descriptor: {exc}") from exc


def _library(config: dict, key: str, base_dir: Path, *, partial: bool = False) -> GeneratorLibrary:
    items, where = _descriptor(_require(config, key), base_dir, key)
    if not isinstance(items, list):
        raise ConfigError(f"{key} must be a list of descriptors")
    try:
        return library_from_list(items, where, partial=partial)
    except (PreconditionError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: bad descriptor: {exc}") from exc


def _horizon(config: dict, default: int) -> int:
    N = _int(config, "horizon", default, minimum=1)
    cap = config.get("caps", {}).get("prefix", MAX_PREFIX)
    if N > cap:
        raise PreconditionError(f"horizon {N} exceeds the prefix cap {cap}")
    return N


def _tail(config: dict, N: int) -> int:
    tail = _int(config, "tail_start", default_tail(N), minimum=1)
    if tail > N:
        raise ConfigError(f"tail_start {tail} exceeds horizon {N}")
    return tail


class Run:
    """Resolved settings shared by the subcommands, plus output helpers."""

    def __init__(self, command: str, config: dict, out: Path, base_dir: Path):
        self.command, self.config, self.out, self.base_dir = command, config, out, base_dir
        self.hash = config_hash(config)
        self.seed = _int(config, "seed", 0)
        self.caps = {"prefix": MAX_PREFIX, **config.get("caps", {})}
        self.meta: dict = {}

    def header(self) -> dict:
        return {
            "command": self.command,
            "version": __version__,
            "config": self.config,
            "config_hash": self.hash,
            "seed": self.seed,
            "caps": self.caps,
            "horizon": self.meta.get("horizon"),
            "tail_start": self.meta.get("tail_start"),
        }

    def write_json(self, name: str, body: dict) -> None:
        report = {**self.header(), **body}
        (self.out / name).write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")

    def write_bits(self, name: str, bits: BitPrefix) -> None:
        bits.save(self.out / name)

    def write_text(self, name: str, text: str) -> None:
        (self.out / name).write_text(text)


# ---------------------------------------------------------------------------
# Subcommands


def cmd_density(run: Run) -> int:
    """Density profile, dyadic block densities and tail estimate of one set."""
    N = _horizon(run.config, 1024)
    tail = _tail(run.config, N)
    run.meta.update(horizon=N, tail_start=tail)
    gen = _generator(run.config, "generator", run.base_dir)
    a = gen.prefix(N)
    profile = density_profile(a)
    K = _int(run.config, "K", dyadic_horizon(N))
    if block_length(K) > N:
        raise PreconditionError(f"dyadic blocks through I_{K} need {block_length(K)} bits, horizon is {N}")
    dyadic = dyadic_densities(a, K)
    with open(run.out / "profile.csv", "w", newline="") as fh:
        profile.write_csv(fh)
    with open(run.out / "dyadic.csv", "w", newline="") as fh:
        dyadic.write_csv(fh)
    run.write_bits("prefix.bin", a)
    exact = exact_density(gen)
    run.write_json(
        "estimate.json",
        {
            "generator": run.config["generator"],
            "rho_N": str(profile.rho(N)),
            "estimate": estimate_liminf_limsup(profile, tail).to_dict(),
            "exact_density": None if exact is None else str(exact),
            "K": K,
        },
    )
    return EXIT_OK


def _corruption_flips(spec: dict, n_max: int) -> dict[int, int]:
    """Per-block flip counts: ``density`` for every block, ``blocks`` for
    individual overrides, each flipping floor(density * block size) bits."""
    if not isinstance(spec, dict):
        raise ConfigError("corruption must be an object")
    rates = {n: spec.get("density", 0) for n in range(1, n_max + 1)}
    for key, value in spec.get("blocks", {}).items():
        n = int(key)
        if not 1 <= n <= n_max:
            raise ConfigError(f"corruption block {n} outside [1, {n_max}]")
        rates[n] = value
    flips = {}
    for n, rate in rates.items():
        rate = _fraction(rate, "corruption density")
        if not 0 <= rate <= 1:
            raise ConfigError(f"corruption density {rate} outside [0, 1]")
        size = math.factorial(n + 1) - math.factorial(n)
        flips[n] = math.floor(rate * size)
    return flips


def cmd_code_decode(run: Run) -> int:
    """Code A into I(A), corrupt blocks and majority-decode."""
    n_max = _int(run.config, "n_max", 5, minimum=1)
    needed = math.factorial(n_max + 1)
    N = _horizon(run.config, needed)
    if N < needed:
        raise PreconditionError(f"decoding up to n = {n_max} needs horizon (n_max+1)! = {needed}, got {N}")
    run.meta.update(horizon=N, tail_start=None)
    gen = _generator(run.config, "A", run.base_dir)
    a = gen.prefix(n_max + 1)
    code = interval_code(gen, N)
    flips = _corruption_flips(run.config.get("corruption", {}), n_max)
    corrupted = corrupt_blocks(code, flips, run.seed)
    decoded = decode_prefix(corrupted, n_max)
    rows = ["n,block_start,block_end,flips,expected,decoded,correct"]
    table = []
    for n in range(1, n_max + 1):
        lo, hi = math.factorial(n), math.factorial(n + 1)
        row = {"n": n, "flips": flips[n], "expected": a[n], "decoded": decoded[n], "correct": a[n] == decoded[n]}
        table.append(row)
        rows.append(f"{n},{lo},{hi},{flips[n]},{a[n]},{decoded[n]},{int(row['correct'])}")
    run.write_text("blocks.csv", "\n".join(rows) + "\n")
    run.write_bits("code.bin", code)
    run.write_bits("corrupted.bin", corrupted)
    run.write_bits("decoded.bin", decoded)
    run.write_json(
        "report.json",
        {
            "n_max": n_max,
            "A": run.config["A"],
            "A_prefix": str(a),
            "decoded": str(decoded),
            "blocks": table,
            "all_correct": all(r["correct"] for r in table),
        },
    )
    return EXIT_OK


def cmd_trust(run: Run) -> int:
    """Merge a family of descriptions by the trust rule."""
    config = run.config
    if "K" in config:
        K = _int(config, "K", minimum=0)
    else:
        K = dyadic_horizon(_horizon(config, 2**11 - 1))
    length = block_length(K)
    if length > run.caps["prefix"]:
        raise PreconditionError(f"blocks through I_{K} need {length} bits, above the prefix cap")
    run.meta.update(horizon=length, tail_start=None)
    body: dict = {}
    if "planted" in config:
        spec = config["planted"]
        if not isinstance(spec, dict):
            raise ConfigError("planted must be an object")
        target = _generator(spec, "target", run.base_dir).prefix(length)
        M = _int(spec, "members", 10)
        burn_in = spec.get("burn_in")
        members, burn_in = planted_family(target, M, K, run.seed, burn_in)
        body["burn_in"] = burn_in
        family = WitnessFamily(members)
    else:
        family = WitnessFamily(list(_library(config, "family", run.base_dir)))
        target = _generator(config, "target", run.base_dir).prefix(length) if "target" in config else None
    report = merge_with_report(family, K, target)
    run.write_bits("merged.bin", report.merged)
    body.update(report.to_dict())
    body["members"] = family.M + 1
    run.write_json("report.json", body)
    return EXIT_OK


def cmd_adversary(run: Run) -> int:
    """Build a set defeating a library, with certificates."""
    N = _horizon(run.config, 4096)
    run.meta.update(horizon=N, tail_start=None)
    opponents = _library(run.config, "opponents", run.base_dir)
    raw = _require(run.config, "thresholds")
    if not isinstance(raw, list):
        raise ConfigError("thresholds must be a list")
    thresholds = [_fraction(t, "thresholds") for t in raw]
    z, schedule = weak_generic_defeat(opponents, thresholds, N)
    checks = verify_certificates(z, opponents, schedule)
    run.write_bits("z.bin", z)
    run.write_json("schedule.json", {"schedule": schedule.to_dict()})
    run.write_json(
        "verification.json",
        {
            "certificates": len(checks),
            "certificates_verified": sum(checks),
            "segments_cover_horizon": verify_segments(schedule, N),
            "uncovered_targets": len(schedule.uncovered),
            "cap_limited": bool(schedule.uncovered),
        },
    )
    return EXIT_CAP if schedule.uncovered else EXIT_OK


def _enumeration(spec, base_dir: Path, stages: int, seed: int, key: str) -> Enumeration:
    """Enumeration from ``{"additions": {stage: [..]}}``, ``{"random": {...}}``,
    ``{"never": true}`` or a file name holding an additions map."""
    if isinstance(spec, str):
        spec, _ = _descriptor(spec, base_dir, key)
        spec = {"additions": spec}
    if not isinstance(spec, dict):
        raise ConfigError(f"{key} must be an object or a file name")
    try:
        if spec.get("never"):
            return Enumeration.never(stages)
        if "random" in spec:
            params = spec["random"]
            return random_enumeration(
                int(params.get("seed", seed)), stages, float(params.get("rate", 0.3)), int(params.get("spread", 3))
            )
        if "additions" in spec:
            return Enumeration.from_additions({int(k): v for k, v in spec["additions"].items()}, stages)
    except (TypeError, ValueError, AttributeError) as exc:
        raise ConfigError(f"{key}: bad enumeration: {exc}") from exc
    raise ConfigError(f"{key}: expected one of additions, random, never")


def cmd_stage(run: Run) -> int:
    """Run a permitting or nonlow construction and verify its trace."""
    config = run.config
    stages = _int(config, "horizon", 200, minimum=1)
    run.meta.update(horizon=stages, tail_start=None)
    kind = config.get("construction", "permitting")
    lib = _library(config, "library", run.base_dir, partial=True)
    if len(lib) == 0:
        raise ConfigError("library is empty")
    if kind == "permitting":
        enum = _enumeration(_require(config, "enumeration"), run.base_dir, stages, run.seed, "enumeration")
        r = _fraction(config.get("r", "1/2"), "r")
        cap = int(run.caps.get("position", DEFAULT_POSITION_CAP))
        run.caps["position"] = cap
        state = run_permitting_construction(enum, lib, r, stages, count=_int(config, "count", 3, minimum=1), cap=cap)
        slices = slices_for_rate(r, cap)
        checks = {
            "permitting_soundness": verify_permitting_soundness(state, enum),
            "interval_conditions": verify_interval_conditions(state.intervals, slices),
            "total_disagreement": [list(t) for t in verify_total_disagreement(state, lib)],
            "nothing_else_enters": verify_nothing_else_enters(state),
        }
        passed = not any(checks.values())
    elif kind == "nonlow":
        enum = _enumeration(_require(config, "enumeration"), run.base_dir, stages, run.seed, "enumeration")
        raw = _require(config, "probes")
        if not isinstance(raw, list) or not raw:
            raise ConfigError("probes must be a nonempty list")
        try:
            probes = [JumpProbe.from_dict(p) for p in raw]
        except (TypeError, ValueError, AttributeError) as exc:
            raise ConfigError(f"probes: {exc}") from exc
        state = run_nonlow_construction(enum, probes, lib, stages)
        bounds = verify_success_bound(state, lib)
        halves = {}
        for e, i in state.params["requirements"]:
            rep = verify_half_density(state, e, i)
            halves[f"{e},{i}"] = {"pairs_checked": rep.pairs_checked, "exceptions": rep.exceptions, "ok": rep.ok}
        checks = {
            "permitting_soundness": verify_permitting_soundness(state, enum),
            "success_bound": bounds,
            "half_density": halves,
            "gtable": [list(t) for t in verify_gtable(state)],
            "restraints": verify_restraints(state),
        }
        passed = (
            not checks["permitting_soundness"]
            and all(b["holds"] for b in bounds)
            and all(h["ok"] for h in halves.values())
            and not checks["gtable"]
            and not checks["restraints"]
        )
    else:
        raise ConfigError(f"construction must be permitting or nonlow, got {kind!r}")

    top = max(state.entered, default=-1) + 1
    run.write_text("trace.jsonl", state.trace_lines())
    run.write_bits("a.bin", state.a_prefix(max(top, stages + 1)))
    run.write_json(
        "verification.json",
        {
            "construction": kind,
            "stages": stages,
            "successes": len(state.successes()),
            "intervals": [rec.to_dict() for rec in state.intervals],
            "outcomes": {f"{e},{i}": v for (e, i), v in sorted(state.outcomes.items())},
            "checks": checks,
            "passed": passed,
        },
    )
    return EXIT_OK


def _map(config: dict) -> IncreasingMap:
    desc = config.get("map", {"kind": "affine", "a": 2, "b": 0})
    try:
        return IncreasingMap.from_dict(desc)
    except (PreconditionError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"map: {exc}") from exc


def cmd_spectrum(run: Run) -> int:
    """Transform A and a library by a monotone map and compare bounds."""
    config = run.config
    N = _horizon(config, 2**16)
    h = _map(config)
    R = _generator(config, "R", run.base_dir) if "R" in config else generator_from_dict({"kind": "formula", "name": "evens"})
    a_len = int(h.g(N))
    a_tail = _int(config, "tail_start_A", default_tail(a_len), minimum=1)
    b_tail = _tail(config, N)
    run.meta.update(horizon=N, tail_start=b_tail)
    A = _generator(config, "A", run.base_dir).prefix(a_len)
    lib = _library(config, "library", run.base_dir)
    if len(lib) == 0:
        raise ConfigError("library is empty")
    B = spectrum_transform(A, h, R, N)
    lib_b = GeneratorLibrary(FormulaGenerator.from_prefix(spectrum_transform(c.prefix(a_len), h, R, N)) for c in lib)
    gamma_a, arg_a = gamma_hat(A, lib, a_tail)
    gamma_b, arg_b = gamma_hat(B, lib_b, b_tail)
    s = exact_density(R)
    s_source = "exact"
    if s is None:
        s, s_source = density_profile(R.prefix(N)).rho(N), "rho_N"
    if s == 0:
        raise PreconditionError("R must have positive density")
    predicted = s * gamma_a + (1 - s)
    run.write_bits("a.bin", A)
    run.write_bits("b.bin", B)
    run.write_json(
        "report.json",
        {
            "map": h.describe(),
            "A_length": a_len,
            "tail_start_A": a_tail,
            "s": str(s),
            "s_source": s_source,
            "gamma_hat_A": str(gamma_a),
            "gamma_hat_A_argmax": arg_a,
            "gamma_hat_B": str(gamma_b),
            "gamma_hat_B_argmax": arg_b,
            "predicted_B": str(predicted),
            "gamma_hat_B_float": float(gamma_b),
            "predicted_B_float": float(predicted),
            "gap": float(gamma_b - predicted),
        },
    )
    return EXIT_OK


COMMANDS = {
    "density": cmd_density,
    "code-decode": cmd_code_decode,
    "trust": cmd_trust,
    "adversary": cmd_adversary,
    "stage": cmd_stage,
    "spectrum": cmd_spectrum,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coarsedensity", description="Finite-horizon density experiments.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        summary = fn.__doc__.rstrip(".")
        p = sub.add_parser(name, help=summary, description=fn.__doc__)
        p.add_argument("--config", "-c", help="JSON config file")
        p.add_argument("--out", "-o", help=f"output directory (default: ${OUT_ENV} or ./out)")
        p.add_argument("--horizon", "-N", type=int)
        p.add_argument("--tail-start", dest="tail_start", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key (dots nest)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args)
        out = Path(args.out or os.environ.get(OUT_ENV) or "out")
        out.mkdir(parents=True, exist_ok=True)
        base_dir = Path(args.config).parent if args.config else Path.cwd()
        run = Run(args.command, config, out, base_dir)
        code = COMMANDS[args.command](run)
    except ConfigError as exc:
        print(f"coarsedensity: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PreconditionError as exc:
        print(f"coarsedensity: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except SearchCapExceeded as exc:
        print(f"coarsedensity: cap-limited: {exc}", file=sys.stderr)
        return EXIT_CAP
    if code == EXIT_CAP:
        print("coarsedensity: cap-limited result, see the reports", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
