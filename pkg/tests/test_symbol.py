import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from toeplitz_fp import (
    CoefficientSequence,
    GeometricTail,
    ToeplitzSymbol,
    check_root_convexity,
    eval_tau,
    first_moment,
    lower_plus_diag_sum,
    total_sum,
    upper_sum,
)

from conftest import sequences, symbols


def brute_series(seq, terms=10_000):
    return seq.values(terms)


class TestCoefficientSequence:
    def test_values_and_tail_indexing(self):
        seq = CoefficientSequence.of([1.0, 2.0], tail=(0.5, 0.5))
        assert seq.values(5).tolist() == [1.0, 2.0, 0.5, 0.25, 0.125]
        assert seq.value(4) == 0.125

    def test_no_tail_is_zero_beyond_prefix(self):
        seq = CoefficientSequence.of([0.3])
        assert seq.value(7) == 0.0
        assert seq.sum() == 0.3

    @pytest.mark.parametrize("bad", [-0.1, math.inf, math.nan])
    def test_rejects_bad_entries(self, bad):
        with pytest.raises(ValueError):
            CoefficientSequence.of([0.1, bad])

    @pytest.mark.parametrize("a, r", [(-1.0, 0.5), (1.0, 1.0), (1.0, -0.1)])
    def test_rejects_bad_tail(self, a, r):
        with pytest.raises(ValueError):
            GeometricTail(a, r)

    @settings(max_examples=200)
    @given(sequences(), st.integers(min_value=-3, max_value=3))
    def test_closed_forms_match_explicit_summation(self, seq, offset):
        vals = brute_series(seq)
        i = np.arange(len(vals))
        assert seq.sum() == pytest.approx(math.fsum(vals), rel=1e-9, abs=1e-300)
        assert seq.moment1(offset) == pytest.approx(
            math.fsum((i + offset) * vals), rel=1e-9, abs=1e-12
        )
        for k in (0, 1, 3, 8):
            assert seq.tail_sum(k) == pytest.approx(math.fsum(vals[k:]), rel=1e-9, abs=1e-300)
            assert seq.partial_sum(k) == pytest.approx(math.fsum(vals[:k]), rel=1e-9, abs=1e-300)

    @settings(max_examples=100)
    @given(sequences(), st.floats(min_value=0.0, max_value=1.0))
    def test_gf_derivatives_match_termwise_series(self, seq, z):
        vals = brute_series(seq)
        i = np.arange(len(vals), dtype=float)
        powers = z ** np.maximum(i - 2, 0)
        terms0 = vals * z**i
        terms1 = np.where(i >= 1, i * vals * z ** np.maximum(i - 1, 0), 0.0)
        terms2 = np.where(i >= 2, i * (i - 1) * vals * powers, 0.0)
        assert seq.gf(z) == pytest.approx(math.fsum(terms0), rel=1e-9, abs=1e-12)
        assert seq.gf(z, 1) == pytest.approx(math.fsum(terms1), rel=1e-9, abs=1e-12)
        assert seq.gf(z, 2) == pytest.approx(math.fsum(terms2), rel=1e-8, abs=1e-10)

    def test_strict_positivity(self):
        assert CoefficientSequence.of([0.1], tail=(0.1, 0.5)).is_strictly_positive()
        assert not CoefficientSequence.of([0.1, 0.0], tail=(0.1, 0.5)).is_strictly_positive()
        assert not CoefficientSequence.of([0.1]).is_strictly_positive()


class TestToeplitzSymbol:
    def test_requires_positive_last_upper(self):
        with pytest.raises(ValueError):
            ToeplitzSymbol.of([0.5, 0.0])
        with pytest.raises(ValueError):
            ToeplitzSymbol.of([])

    def test_rejects_negative_coefficients(self):
        with pytest.raises(ValueError, match="diag"):
            ToeplitzSymbol.of([0.5], -0.1)

    def test_coefficient_lookup(self):
        s = ToeplitzSymbol.of([0.2, 0.4], 0.1, [0.3], lower_tail=(0.2, 0.5))
        assert [s.coefficient(i) for i in range(-3, 5)] == [0.0, 0.4, 0.2, 0.1, 0.3, 0.2, 0.1, 0.05]
        assert s.series().values(4).tolist() == [0.4, 0.2, 0.1, 0.3]


@pytest.mark.parametrize(
    "symbol, z, expected",
    [
        (ToeplitzSymbol.of([0.6], 0.2, [0.2]), 1.0, 1.0),
        (ToeplitzSymbol.of([1.0]), 0.0, 1.0),
        (ToeplitzSymbol.of([0.5], 0.2, lower_tail=(0.1, 0.5)), 1.0, 0.9),
    ],
)
def test_eval_tau_examples(symbol, z, expected):
    assert eval_tau(symbol, z) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("z", [-0.01, 1.01])
def test_eval_tau_domain(z):
    with pytest.raises(ValueError):
        eval_tau(ToeplitzSymbol.of([1.0]), z)


@pytest.mark.parametrize(
    "upper, diag, lower, total, up, alpha",
    [
        ([0.8], 0.2, [0.2], 1.2, 0.8, 0.4),
        ([1.0], 0.0, [], 1.0, 1.0, 0.0),
        ([0.5], 0.2, [0.1], 0.8, 0.5, 0.3),
    ],
)
def test_sums(upper, diag, lower, total, up, alpha):
    s = ToeplitzSymbol.of(upper, diag, lower)
    assert total_sum(s) == pytest.approx(total, rel=1e-14)
    assert upper_sum(s) == pytest.approx(up, rel=1e-14)
    assert lower_plus_diag_sum(s) == pytest.approx(alpha, abs=1e-15)


@pytest.mark.parametrize(
    "symbol, expected",
    [
        (ToeplitzSymbol.of([0.6], 0.2, [0.2]), 0.6),
        (ToeplitzSymbol.of([1.0]), 0.0),
        (ToeplitzSymbol.of([0.2, 0.4], 0.1), 0.4),
    ],
)
def test_first_moment_examples(symbol, expected):
    assert first_moment(symbol) == pytest.approx(expected, abs=1e-15)


def test_root_convexity_examples():
    ok = check_root_convexity(ToeplitzSymbol.of([0.0, 0.4], 0.1))
    assert ok.holds
    assert ok.min_h == pytest.approx(0.08, abs=1e-12)
    bad = check_root_convexity(ToeplitzSymbol.of([0.2, 0.4]))
    assert not bad.holds
    assert bad.min_h == pytest.approx(-0.02, abs=1e-12)


def test_root_convexity_matches_finite_difference_of_root():
    # g = tau^(1/n); sign of the second difference must agree with h where |h| is not tiny
    s = ToeplitzSymbol.of([0.3, 0.5], 0.05, [0.2], lower_tail=(0.1, 0.6))
    z = np.linspace(0.05, 0.95, 19)
    d = 1e-3
    g = lambda u: np.array([eval_tau(s, v) for v in u]) ** (1 / s.n)
    second = (g(z + d) - 2 * g(z) + g(z - d)) / d**2
    series = s.series()
    h = series.gf(z, 2) * series.gf(z) - 0.5 * series.gf(z, 1) ** 2
    mask = np.abs(h) > 1e-3
    assert np.all(np.sign(second[mask]) == np.sign(h[mask]))


@settings(max_examples=200)
@given(symbols())
def test_tau_at_one_equals_total(symbol):
    assert eval_tau(symbol, 1.0) == pytest.approx(total_sum(symbol), rel=1e-12)


@settings(max_examples=100)
@given(symbols())
def test_tau_nondecreasing(symbol):
    vals = [eval_tau(symbol, z) for z in np.linspace(0, 1, 41)]
    assert all(b >= a - 1e-15 for a, b in zip(vals, vals[1:]))


@settings(max_examples=200)
@given(symbols())
def test_first_moment_zero_iff_single_term(symbol):
    m = first_moment(symbol)
    assert m >= 0.0
    assert (m == 0.0) == symbol.series().only_leading_nonzero()


@settings(max_examples=100)
@given(symbols(max_n=1))
def test_root_convexity_always_holds_for_n1(symbol):
    assert check_root_convexity(symbol, grid_points=101).holds
