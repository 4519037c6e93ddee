import pytest
from hypothesis import settings, strategies as st

from coarsedensity.bitseq import BitPrefix

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def bit_strings(min_size=1, max_size=64):
    return st.text(alphabet="01", min_size=min_size, max_size=max_size)


def prefixes(min_size=1, max_size=64):
    return bit_strings(min_size, max_size).map(BitPrefix.from_string)


@st.composite
def prefix_pairs(draw, min_size=1, max_size=64):
    n = draw(st.integers(min_size, max_size))
    a = draw(bit_strings(n, n))
    b = draw(bit_strings(n, n))
    return BitPrefix.from_string(a), BitPrefix.from_string(b)


@pytest.fixture
def bp():
    return BitPrefix.from_string


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance")
        for line in RESULTS:
            terminalreporter.write_line(line)
