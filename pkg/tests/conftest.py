import pytest
from hypothesis import strategies as st

from toeplitz_fp import CoefficientSequence, GeometricTail, ToeplitzSymbol

coef = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)
positive_coef = st.floats(min_value=0.05, max_value=1.0, allow_nan=False)


@st.composite
def sequences(draw, max_explicit=5):
    explicit = draw(st.lists(coef, max_size=max_explicit))
    tail = None
    if draw(st.booleans()):
        tail = GeometricTail(draw(coef), draw(st.floats(min_value=0.0, max_value=0.95)))
    return CoefficientSequence(tuple(explicit), tail)


@st.composite
def symbols(draw, max_n=3):
    n = draw(st.integers(min_value=1, max_value=max_n))
    upper = draw(st.lists(coef, min_size=n - 1, max_size=n - 1)) + [draw(positive_coef)]
    return ToeplitzSymbol(tuple(upper), draw(coef), draw(sequences()))


@pytest.fixture
def double_root():
    return ToeplitzSymbol.of([0.8], 0.2, [0.2])


@pytest.fixture
def unit_sum():
    return ToeplitzSymbol.of([0.6], 0.2, [0.2])


@pytest.fixture
def growth():
    return ToeplitzSymbol.of([0.5], 0.2, [0.1])


@pytest.fixture
def shift():
    return ToeplitzSymbol.of([1.0])


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
