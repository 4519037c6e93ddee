import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from coarsedensity.bitseq import (
    DIVERGED,
    BitPrefix,
    FormulaGenerator,
    GeneratorLibrary,
    PartialGenerator,
    PeriodicGenerator,
    RandomGenerator,
    TableGenerator,
    evaluate_budgeted,
    evaluate_prefix,
    generator_from_dict,
    library_from_list,
    load_generator,
    partial_from_dict,
    pointwise,
    symagree,
    symdiff,
)
from coarsedensity.errors import PreconditionError

from conftest import bit_strings, prefix_pairs, prefixes


# evaluate_prefix


def test_zeros_prefix():
    assert str(evaluate_prefix(FormulaGenerator.zeros(), 4)) == "0000"


def test_parity_prefix():
    assert str(evaluate_prefix(FormulaGenerator.odds(), 4)) == "0101"


def test_eventually_periodic_prefix():
    assert str(evaluate_prefix(PeriodicGenerator("1", "0"), 5)) == "10000"


def test_prefix_cap():
    with pytest.raises(PreconditionError):
        FormulaGenerator.ones().prefix(100, cap=50)
    with pytest.raises(PreconditionError):
        FormulaGenerator.ones().prefix(-1)


def test_periodic_brute_force():
    g = PeriodicGenerator("110", "0101")
    text = "110" + "0101" * 30
    assert str(g.prefix(100)) == text[:100]
    with pytest.raises(PreconditionError):
        PeriodicGenerator("1", "")


def test_residues_and_rn_against_definition():
    g = FormulaGenerator.residues(6, [1, 4])
    assert [g(i) for i in range(30)] == [int(i % 6 in (1, 4)) for i in range(30)]
    r2 = FormulaGenerator.rn(2)
    assert [r2(i) for i in range(40)] == [int(i > 0 and i % 4 == 0 and i % 8 != 0) for i in range(40)]


def test_complement_of():
    g = FormulaGenerator.complement_of(FormulaGenerator.evens())
    assert str(g.prefix(6)) == "010101"


def test_from_prefix_fill():
    g = FormulaGenerator.from_prefix(BitPrefix.from_string("101"), fill=1)
    assert str(g.prefix(6)) == "101111"


# pointwise


def test_symagree_identity():
    a = BitPrefix.from_string("1010")
    assert str(symagree(a, a)) == "1111"


def test_symagree_and_symdiff():
    a, b = BitPrefix.from_string("0101"), BitPrefix.from_string("0011")
    assert str(symagree(a, b)) == "1001"
    assert str(symdiff(a, b)) == "0110"


def test_pointwise_ops():
    a, b = BitPrefix.from_string("0101"), BitPrefix.from_string("0011")
    assert str(pointwise("union", a, b)) == "0111"
    assert str(pointwise("intersect", a, b)) == "0001"
    assert str(pointwise("complement", a)) == "1010"


def test_pointwise_length_mismatch():
    with pytest.raises(PreconditionError):
        symagree(BitPrefix.from_string("01"), BitPrefix.from_string("011"))
    with pytest.raises(PreconditionError):
        pointwise("nand", BitPrefix.from_string("0"), BitPrefix.from_string("0"))


@given(prefix_pairs())
def test_symdiff_is_complement_of_symagree(pair):
    a, b = pair
    assert symdiff(a, b) == ~symagree(a, b)


@given(prefix_pairs())
def test_pointwise_matches_brute_force(pair):
    a, b = pair
    sa, sb = str(a), str(b)
    assert str(pointwise("union", a, b)) == "".join(str(int(x == "1" or y == "1")) for x, y in zip(sa, sb))
    assert str(pointwise("symagree", a, b)) == "".join(str(int(x == y)) for x, y in zip(sa, sb))


# BitPrefix


def test_bitprefix_rejects_non_bits():
    with pytest.raises(PreconditionError):
        BitPrefix([0, 2])
    with pytest.raises(PreconditionError):
        BitPrefix.from_string("01x")


def test_bitprefix_is_immutable():
    a = BitPrefix.from_string("0101")
    with pytest.raises(ValueError):
        a.bits[0] = 1


def test_bitprefix_slicing_and_counts():
    a = BitPrefix.from_string("0110100")
    assert str(a[1:4]) == "110"
    assert a[2] == 1
    assert a.count() == 3
    assert a.count(3) == 2
    assert list(a.cumulative()) == [0, 0, 1, 2, 2, 3, 3, 3]
    assert list(a.ones_positions()) == [1, 2, 4]
    assert BitPrefix.from_set([1, 2, 4, 99], 7) == a


@given(bit_strings(0, 200))
def test_bytes_round_trip(text):
    a = BitPrefix.from_string(text)
    assert BitPrefix.from_bytes(a.to_bytes(), len(a)) == a


def test_bit_file_is_little_endian(tmp_path):
    a = BitPrefix.from_string("100000001")
    path = tmp_path / "a.bin"
    a.save(path)
    assert path.read_bytes() == bytes([0b00000001, 0b00000001])
    assert BitPrefix.load(path, 9) == a


# random and table generators


def test_random_generator_is_seeded_and_random_access():
    g = RandomGenerator(7, 0.5)
    full = g.prefix(3 * 2**16 + 10)
    idx = np.array([5, 2**16 + 3, 3 * 2**16 + 9, 5])
    assert list(g.bits_at(idx)) == list(full.bits[idx])
    assert RandomGenerator(7, 0.5).prefix(1000) == full.truncate(1000)
    assert RandomGenerator(8, 0.5).prefix(1000) != full.truncate(1000)


def test_random_generator_rate():
    ones = RandomGenerator(3, 0.25).prefix(2**16).count()
    assert abs(ones / 2**16 - 0.25) < 0.01


def test_table_generator_bounds(tmp_path):
    g = TableGenerator(BitPrefix.from_string("0110"))
    assert g(2) == 1
    with pytest.raises(PreconditionError):
        g(4)
    path = tmp_path / "t.bin"
    BitPrefix.from_string("0110").save(path)
    h = TableGenerator.from_file(path, 4)
    assert str(h.prefix(4)) == "0110"


# budgeted evaluation


def test_never_converging():
    assert evaluate_budgeted(PartialGenerator.never(), 7, 1000) == DIVERGED


def test_convergence_stage():
    phi = PartialGenerator.from_stages(FormulaGenerator.ones(), [0] * 7 + [3])
    assert evaluate_budgeted(phi, 7, 2) == DIVERGED
    assert evaluate_budgeted(phi, 7, 5) == 1


@given(st.integers(0, 5), st.integers(0, 5), st.integers(0, 40), st.integers(0, 60))
def test_budgeted_evaluation_is_monotone(a, b, i, s):
    phi = PartialGenerator.linear(FormulaGenerator.evens(), a, b)
    now, later = evaluate_budgeted(phi, i, s), evaluate_budgeted(phi, i, s + 1)
    if now != DIVERGED:
        assert later == now
    assert (now != DIVERGED) == (a * i + b <= s)


def test_on_domain():
    phi = PartialGenerator.on_domain(FormulaGenerator.ones(), FormulaGenerator.evens(), stage=2)
    assert list(phi.evaluate_many(np.arange(4), 2)) == [1, -1, 1, -1]
    assert list(phi.evaluate_many(np.arange(4), 1)) == [-1, -1, -1, -1]


# descriptors


@pytest.mark.parametrize(
    "desc",
    [
        {"kind": "formula", "name": "zeros"},
        {"kind": "formula", "name": "mod", "modulus": 3, "residues": [0, 2]},
        {"kind": "formula", "name": "rn", "n": 3},
        {"kind": "formula", "name": "complement", "of": {"kind": "formula", "name": "evens"}},
        {"kind": "periodic", "preamble": "11", "period": "001"},
        {"kind": "random", "seed": 4, "p": 0.3},
        {"kind": "table", "bits": "0110"},
    ],
)
def test_descriptor_round_trip(desc):
    g = generator_from_dict(desc)
    again = generator_from_dict(json.loads(json.dumps(g.describe())))
    assert g.prefix(4) == again.prefix(4)


def test_bad_descriptors():
    for desc in ({"kind": "bogus"}, {"name": "zeros"}, {"kind": "periodic"}, {"kind": "formula", "name": "nope"}):
        with pytest.raises(PreconditionError):
            generator_from_dict(desc)


def test_table_descriptor_from_file(tmp_path):
    BitPrefix.from_string("1011").save(tmp_path / "bits.bin")
    (tmp_path / "g.json").write_text(json.dumps({"kind": "table", "path": "bits.bin", "length": 4}))
    assert str(load_generator(tmp_path / "g.json").prefix(4)) == "1011"


def test_partial_descriptors():
    phi = partial_from_dict(
        {"kind": "partial", "value": {"kind": "formula", "name": "ones"}, "halt": {"rule": "linear", "a": 2, "b": 1}}
    )
    assert evaluate_budgeted(phi, 3, 6) == DIVERGED
    assert evaluate_budgeted(phi, 3, 7) == 1
    total = partial_from_dict({"kind": "formula", "name": "odds"})
    assert evaluate_budgeted(total, 3, 0) == 1
    never = partial_from_dict({"kind": "partial", "value": {"kind": "formula", "name": "ones"}, "halt": {"rule": "never"}})
    assert evaluate_budgeted(never, 0, 10**6) == DIVERGED


def test_library():
    lib = library_from_list([{"kind": "formula", "name": "evens"}, {"kind": "formula", "name": "ones"}])
    assert isinstance(lib, GeneratorLibrary) and len(lib) == 2
    assert [str(p) for p in lib.prefixes(3)] == ["101", "111"]
    assert lib.describe()[1] == {"kind": "formula", "name": "ones"}


@given(prefixes(max_size=80))
def test_complement_involution(a):
    assert ~~a == a
    assert (a | ~a).count() == len(a)
    assert (a & ~a).count() == 0
