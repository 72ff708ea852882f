import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from toeplitz_fp import (
    Case,
    SeedVector,
    SummabilityVerdict,
    ToeplitzSymbol,
    Verdict,
    classify,
    limit_value,
    solve_recurrence,
    summability_diagnostic,
    equal_seed,
    total_sum,
    verify_residual,
)

from conftest import symbols


def exact_prefix(upper, diag, lower, seed, N):
    """Rational oracle: solve row j of x = Tx for x_{j+n}, with finitely supported lower part."""
    up = [Fraction(v) for v in upper]
    lo = [Fraction(v) for v in lower]
    n = len(up)
    x = [Fraction(v) for v in seed]
    coef = lambda i: up[-i - 1] if i < 0 else (Fraction(diag) if i == 0 else (lo[i - 1] if i <= len(lo) else 0))
    for j in range(N - n + 1):
        known = sum(coef(j - c) * x[c] for c in range(j + n) if -n <= j - c)
        x.append((x[j] - known) / coef(-n))
    return x


class TestRecurrence:
    def test_decaying_example(self, double_root):
        x = solve_recurrence(double_root, [1.0], 200)
        assert x.entries[:5] == pytest.approx([1.0, 1.0, 0.75, 0.5, 0.3125], abs=1e-12)
        assert x.positive
        assert x.entries[200] < 1e-10

    def test_growth_example(self, growth):
        x = solve_recurrence(growth, [1.0], 50)
        assert x.entries[1:4] == pytest.approx([1.6, 2.36, 3.456], abs=1e-12)
        assert np.all(np.diff(x.entries) >= 0)

    def test_detects_first_negative(self):
        x = solve_recurrence(ToeplitzSymbol.of([0.7], 0.3, [0.3]), [1.0], 10)
        assert x.first_negative_index == 4
        assert not x.first_negative_is_zero
        assert x.entries[4] == pytest.approx(-0.10204, abs=1e-5)

    def test_entry_that_is_zero_up_to_roundoff(self, shift):
        # t_{-1} = 1, t_0 = 1 leaves x_1 = (1 - 1) x_0 = 0
        x = solve_recurrence(ToeplitzSymbol.of([1.0], 1.0), [1.0], 5)
        assert x.first_negative_index == 1
        assert x.first_negative_is_zero

    def test_tiny_but_positive_entries_not_flagged(self, double_root):
        x = solve_recurrence(double_root, [1.0], 400)
        assert x.positive

    def test_n2_seed_construction(self):
        s = ToeplitzSymbol.of([0.2, 0.4], 0.1, [0.1])
        x = solve_recurrence(s, equal_seed(s), 100)
        assert x.entries[2] == pytest.approx(1.75, abs=1e-12)
        assert x.entries[3] == pytest.approx(1.125, abs=1e-12)

    def test_matches_rational_oracle(self):
        upper, diag, lower, seed = [0.2, 0.4], 0.1, [0.1, 0.05], [1.0, 0.5]
        s = ToeplitzSymbol.of(upper, diag, lower)
        x = solve_recurrence(s, seed, 40)
        exact = exact_prefix(upper, diag, lower, seed, 40)
        scale = max(abs(float(v)) for v in exact)
        assert np.max(np.abs(x.entries - [float(v) for v in exact])) <= 1e-10 * scale

    def test_bad_arguments(self, double_root):
        with pytest.raises(ValueError):
            solve_recurrence(double_root, [1.0, 1.0], 10)
        with pytest.raises(ValueError):
            solve_recurrence(ToeplitzSymbol.of([0.2, 0.4]), [1.0, 1.0], 1)
        with pytest.raises(ValueError):
            SeedVector((1.0, 0.0))

    def test_normalizations(self, double_root):
        x = solve_recurrence(double_root, [2.0], 30)
        assert x.normalized("x0_equals_1").entries[0] == 1.0
        assert np.sum(x.normalized("unit_l1").entries) == pytest.approx(1.0, rel=1e-14)
        assert x.normalized("unit_l1").residual_max <= x.residual_max

    def test_prefix_is_read_only(self, double_root):
        x = solve_recurrence(double_root, [1.0], 10)
        with pytest.raises(ValueError):
            x.entries[0] = 5.0


class TestResidual:
    def test_perturbed_prefix_detected(self, unit_sum):
        x = np.array(solve_recurrence(unit_sum, [1.0], 30).entries)
        x[10] += 0.1
        # row 10 sees x_10 with weight t_0 - 1 = -0.8
        assert verify_residual(unit_sum, x) >= 0.08 - 1e-12

    def test_needs_enough_entries(self, unit_sum):
        with pytest.raises(ValueError):
            verify_residual(unit_sum, [1.0])

    @settings(max_examples=100, deadline=None)
    @given(symbols(), st.integers(min_value=5, max_value=60))
    def test_solver_output_satisfies_equations(self, symbol, N):
        N = max(N, symbol.n)
        x = solve_recurrence(symbol, equal_seed(symbol), N)
        scale = float(np.max(np.abs(x.entries)))
        assert x.residual_max <= 1e-10 * scale


@pytest.mark.parametrize("c", [0.5, 2.0, 10.0])
@settings(max_examples=50, deadline=None)
@given(symbol=symbols(), seed=st.lists(st.floats(0.1, 10.0), min_size=3, max_size=3))
def test_scaling_equivariance(symbol, seed, c):
    seed = SeedVector(tuple(seed[: symbol.n]))
    a = solve_recurrence(symbol, seed.scaled(c), 30).entries
    b = c * solve_recurrence(symbol, seed, 30).entries
    # relative to the running magnitude so entries passing near zero are fair
    running = np.maximum.accumulate(np.abs(b))
    assert np.all(np.abs(a - b) <= 1e-12 * running)


@settings(max_examples=100, deadline=None)
@given(symbols(max_n=1))
def test_n1_nondecreasing_when_total_at_most_one(symbol):
    if total_sum(symbol) > 1.0:
        return
    x = solve_recurrence(symbol, [1.0], 60).entries
    assert np.all(np.diff(x) >= -1e-12 * x[1:])


class TestClassify:
    @pytest.mark.parametrize(
        "upper, diag, lower, case, verdict",
        [
            ([0.8], 0.2, [0.2], Case.SUM_ABOVE_ONE, Verdict.BOUNDED),
            ([0.6], 0.2, [0.2], Case.SUM_EQUALS_ONE, Verdict.BOUNDED),
            ([0.5], 0.2, [0.1], Case.SUM_BELOW_ONE, Verdict.UNBOUNDED),
            ([1.0], 0.0, [], Case.SUM_EQUALS_ONE, Verdict.BOUNDED),
            ([0.2], 0.0, [0.0, 0.8], Case.SUM_EQUALS_ONE, Verdict.UNBOUNDED),
            ([0.5], 0.0, [0.5], Case.SUM_EQUALS_ONE, Verdict.UNKNOWN),
        ],
    )
    def test_cases(self, upper, diag, lower, case, verdict):
        r = classify(ToeplitzSymbol.of(upper, diag, lower))
        assert (r.case, r.bounded_verdict) == (case, verdict)
        assert r.conditional_on_root_convexity == (case is Case.SUM_EQUALS_ONE)

    def test_unit_sum_attaches_limit(self, unit_sum):
        assert classify(unit_sum).limit_value == pytest.approx(1.5, abs=1e-15)

    def test_report_serializes(self, unit_sum):
        d = classify(unit_sum).to_dict()
        assert d["case"] == "SumEqualsOne"
        assert d["root_convexity"]["holds"] is True


class TestLimit:
    def test_formula(self, unit_sum, shift):
        assert limit_value(unit_sum) == pytest.approx(1.5, abs=1e-15)
        assert limit_value(shift, 3.0) == 3.0

    def test_recurrence_approaches_limit(self, unit_sum):
        x = solve_recurrence(unit_sum, [1.0], 500)
        assert abs(x.entries[500] - limit_value(unit_sum)) < 1e-6

    def test_geometric_tail_limit(self):
        s = ToeplitzSymbol.of([0.6], 0.2, lower_tail=(0.1, 0.5))
        x = solve_recurrence(s, [1.0], 2000)
        assert x.entries[-1] == pytest.approx(limit_value(s), rel=1e-6)

    def test_rejections(self, double_root):
        with pytest.raises(NotImplementedError):
            limit_value(ToeplitzSymbol.of([0.5, 0.5]))
        with pytest.raises(ValueError):
            limit_value(double_root)
        with pytest.raises(ValueError):
            limit_value(ToeplitzSymbol.of([0.2], 0.0, [0.0, 0.8]))


class TestSummability:
    def test_decaying_is_summable(self, double_root):
        r = summability_diagnostic(solve_recurrence(double_root, [1.0], 200))
        assert r.verdict is SummabilityVerdict.SUMMABLE
        assert r.tail_ratio_estimate < 1.0
        assert np.all(np.abs(np.diff(r.partial_sums[-10:])) < 1e-10)
        # closed form: x_k = (1 + k) 2^-k sums to 4
        assert r.partial_sums[-1] + r.remainder_estimate == pytest.approx(4.0, abs=1e-12)

    def test_growth_diverges(self, growth):
        r = summability_diagnostic(solve_recurrence(growth, [1.0], 60))
        assert r.verdict is SummabilityVerdict.DIVERGING
        assert r.to_dict()["remainder_estimate"] is None

    def test_constant_is_inconclusive(self, shift):
        r = summability_diagnostic(solve_recurrence(shift, [1.0], 30))
        assert r.verdict is SummabilityVerdict.INCONCLUSIVE

    def test_rejects_nonpositive(self):
        x = solve_recurrence(ToeplitzSymbol.of([0.7], 0.3, [0.3]), [1.0], 10)
        with pytest.raises(ValueError):
            summability_diagnostic(x)
