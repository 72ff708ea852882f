"""Solution prefixes of ``x = T x`` for a banded-above Toeplitz ``T``.

Row ``j`` of the system reads::

    0 = (t_0 - 1) x_j + sum_{i=1}^{j} t_i x_{j-i} + sum_{i=1}^{n} t_{-i} x_{j+i}

and since ``t_{-n} > 0`` it can be solved for ``x_{j+n}``.  Fixing the seed
``x_0, ..., x_{n-1}`` therefore determines the whole sequence.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .symbol import (
    RootConvexityResult,
    ToeplitzSymbol,
    check_root_convexity,
    first_moment,
    total_sum,
)

__all__ = [
    "Normalization",
    "SeedVector",
    "SolutionPrefix",
    "Case",
    "Verdict",
    "ClassificationReport",
    "SummabilityVerdict",
    "SummabilityReport",
    "solve_recurrence",
    "equal_seed",
    "classify",
    "limit_value",
    "verify_residual",
    "summability_diagnostic",
    "TIE_TOLERANCE",
    "ZERO_BAND",
]

TIE_TOLERANCE = 1e-12
# relative to the magnitude of the terms feeding each new entry
ZERO_BAND = 1e-14


class Normalization(str, enum.Enum):
    RAW = "raw"
    UNIT_L1 = "unit_l1"
    X0_EQUALS_1 = "x0_equals_1"


@dataclass(frozen=True)
class SeedVector:
    """Initial entries ``x_0 .. x_{n-1}``; all strictly positive."""

    entries: tuple[float, ...]

    def __post_init__(self):
        entries = tuple(float(v) for v in self.entries)
        if not entries:
            raise ValueError("seed must not be empty")
        for k, v in enumerate(entries):
            if not (math.isfinite(v) and v > 0.0):
                raise ValueError(f"seed[{k}] must be finite and > 0, got {v!r}")
        object.__setattr__(self, "entries", entries)

    def __len__(self) -> int:
        return len(self.entries)

    def scaled(self, c: float) -> "SeedVector":
        return SeedVector(tuple(c * v for v in self.entries))


@dataclass(frozen=True, eq=False)
class SolutionPrefix:
    """Computed entries ``x_0 .. x_N`` with diagnostics.

    ``first_negative_index`` is the first index whose entry is not strictly
    positive (``None`` if all are).  ``first_negative_is_zero`` tells whether
    that entry was only zero up to round-off rather than clearly negative.
    """

    entries: np.ndarray
    seed: SeedVector
    n: int
    first_negative_index: int | None = None
    first_negative_is_zero: bool = False
    residual_max: float = 0.0
    normalization: Normalization = Normalization.RAW

    def __post_init__(self):
        entries = np.array(self.entries, dtype=float)
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def N(self) -> int:
        return len(self.entries) - 1

    @property
    def positive(self) -> bool:
        return self.first_negative_index is None

    def normalized(self, mode: Normalization | str) -> "SolutionPrefix":
        """Rescale to the requested convention; the residual scales along."""
        mode = Normalization(mode)
        raw_scale = {
            Normalization.RAW: 1.0,
            Normalization.UNIT_L1: float(np.sum(np.abs(self.entries))),
            Normalization.X0_EQUALS_1: float(self.entries[0]),
        }[mode]
        factor = 1.0 / raw_scale
        return replace(
            self,
            entries=self.entries * factor,
            residual_max=self.residual_max * abs(factor),
            normalization=mode,
        )

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "N": self.N,
            "seed": list(self.seed.entries),
            "first_negative_index": self.first_negative_index,
            "first_negative_is_zero": self.first_negative_is_zero,
            "residual_max": self.residual_max,
            "normalization": self.normalization.value,
        }


def equal_seed(symbol: ToeplitzSymbol) -> SeedVector:
    """Equal-entry seed ``(1, ..., 1)`` of length ``n``."""
    return SeedVector((1.0,) * symbol.n)


def solve_recurrence(
    symbol: ToeplitzSymbol,
    seed: SeedVector | Sequence[float],
    N: int,
    normalization: Normalization | str = Normalization.RAW,
) -> SolutionPrefix:
    """Compute ``x_0 .. x_N`` from the seed by the forward recurrence.

    A nonpositive entry does not stop the computation; its index is recorded
    in ``first_negative_index``.
    """
    if not isinstance(seed, SeedVector):
        seed = SeedVector(tuple(seed))
    n = symbol.n
    if len(seed) != n:
        raise ValueError(f"seed has {len(seed)} entries, symbol needs n = {n}")
    if N < n:
        raise ValueError(f"N = {N} must be >= n = {n}")

    t_lower = symbol.lower_values(N)  # t_1 .. t_N
    upper = np.asarray(symbol.upper[:-1])  # t_{-1} .. t_{-(n-1)}
    t_minus_n = symbol.upper[-1]
    one_minus_diag = 1.0 - symbol.diag

    x = np.zeros(N + 1)
    x[:n] = seed.entries
    first_bad = None
    bad_is_zero = False
    for j in range(N - n + 1):
        diag_term = one_minus_diag * x[j]
        if j:
            lower_terms = t_lower[:j] * x[j - 1 :: -1]
        else:
            lower_terms = np.empty(0)
        upper_terms = upper * x[j + 1 : j + n]
        value = (diag_term - lower_terms.sum() - upper_terms.sum()) / t_minus_n
        x[j + n] = value
        if first_bad is None:
            scale = (
                abs(diag_term) + np.abs(lower_terms).sum() + np.abs(upper_terms).sum()
            ) / t_minus_n
            if abs(value) <= ZERO_BAND * scale:
                first_bad, bad_is_zero = j + n, True
            elif value < 0.0:
                first_bad = j + n

    residual = verify_residual(symbol, x)
    prefix = SolutionPrefix(
        entries=x,
        seed=seed,
        n=n,
        first_negative_index=first_bad,
        first_negative_is_zero=bad_is_zero,
        residual_max=residual,
    )
    if Normalization(normalization) is not Normalization.RAW:
        prefix = prefix.normalized(normalization)
    return prefix


def _dense_rows(symbol: ToeplitzSymbol, rows: int, cols: int) -> np.ndarray:
    """Rows ``0 .. rows-1`` of T restricted to columns ``0 .. cols-1``."""
    n = symbol.n
    r = np.arange(rows)[:, None]
    c = np.arange(cols)[None, :]
    offset = r - c
    # table indexed by offset + n for offsets -n .. cols-1
    table = np.concatenate(
        [np.asarray(symbol.upper[::-1]), [symbol.diag], symbol.lower_values(max(cols - 1, 0))]
    )
    out = np.zeros((rows, cols))
    inside = offset >= -n
    out[inside] = table[offset[inside] + n]
    return out


def verify_residual(symbol: ToeplitzSymbol, prefix: SolutionPrefix | Sequence[float]) -> float:
    """``max_j |(T x)_j - x_j|`` over the rows fully determined by the stored entries.

    Row ``j`` touches columns up to ``j + n``, so rows ``0 .. N - n`` are checked
    by an explicit dense matrix-vector product.
    """
    x = np.asarray(prefix.entries if isinstance(prefix, SolutionPrefix) else prefix, dtype=float)
    rows = len(x) - symbol.n
    if rows < 1:
        raise ValueError("prefix needs at least n + 1 entries")
    A = _dense_rows(symbol, rows, len(x))
    return float(np.max(np.abs(A @ x - x[:rows])))


class Case(str, enum.Enum):
    SUM_ABOVE_ONE = "SumAboveOne"
    SUM_EQUALS_ONE = "SumEqualsOne"
    SUM_BELOW_ONE = "SumBelowOne"


class Verdict(str, enum.Enum):
    BOUNDED = "Bounded"
    UNBOUNDED = "Unbounded"
    BOUNDED_IFF_MOMENT = "BoundedIffMoment"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class ClassificationReport:
    case: Case
    total_sum: float
    first_moment: float
    moment_bound_n: int
    bounded_verdict: Verdict
    root_convexity: RootConvexityResult
    conditional_on_root_convexity: bool
    limit_value: float | None = None

    def to_dict(self) -> dict:
        return {
            "case": self.case.value,
            "total_sum": self.total_sum,
            "first_moment": self.first_moment,
            "moment_bound_n": self.moment_bound_n,
            "bounded_verdict": self.bounded_verdict.value,
            "conditional_on_root_convexity": self.conditional_on_root_convexity,
            "root_convexity": self.root_convexity.to_dict(),
            "limit_value": self.limit_value,
        }


def classify(
    symbol: ToeplitzSymbol, grid_points: int = 1001, tolerance: float = 1e-12
) -> ClassificationReport:
    """Boundedness of positive solutions from the sign of ``sum t_i - 1``.

    Above one: positive solutions (if any) decay to zero.  Equal to one: they
    are bounded iff ``tau'(1) < n``; this relies on convexity of
    ``tau**(1/n)``, whose check is attached.  Below one: positive solutions
    are unbounded.
    """
    total = total_sum(symbol)
    moment = first_moment(symbol)
    convexity = check_root_convexity(symbol, grid_points, tolerance)
    n = symbol.n
    limit = None
    conditional = False
    if abs(total - 1.0) <= TIE_TOLERANCE:
        case = Case.SUM_EQUALS_ONE
        conditional = True
        if abs(moment - n) <= TIE_TOLERANCE:
            verdict = Verdict.UNKNOWN
        elif moment < n:
            verdict = Verdict.BOUNDED
            if n == 1:
                limit = limit_value(symbol, 1.0)
        else:
            verdict = Verdict.UNBOUNDED
    elif total > 1.0:
        case, verdict = Case.SUM_ABOVE_ONE, Verdict.BOUNDED
    else:
        case, verdict = Case.SUM_BELOW_ONE, Verdict.UNBOUNDED
    return ClassificationReport(
        case=case,
        total_sum=total,
        first_moment=moment,
        moment_bound_n=n,
        bounded_verdict=verdict,
        root_convexity=convexity,
        conditional_on_root_convexity=conditional,
        limit_value=limit,
    )


def limit_value(symbol: ToeplitzSymbol, x0: float = 1.0) -> float:
    """``lim x_i = x0 t_{-1} / (1 - sum_{i>=1} i t_{i-1})`` for ``n = 1`` and unit total sum."""
    if symbol.n != 1:
        raise NotImplementedError("limit formula is only available for n = 1")
    if abs(total_sum(symbol) - 1.0) > TIE_TOLERANCE:
        raise ValueError("limit formula requires the coefficients to sum to 1")
    denom = 1.0 - first_moment(symbol)
    if denom <= 0.0:
        raise ValueError(f"limit formula requires sum i t_(i-1) < 1, denominator is {denom!r}")
    if not x0 > 0.0:
        raise ValueError("x0 must be > 0")
    return x0 * symbol.upper[0] / denom


class SummabilityVerdict(str, enum.Enum):
    SUMMABLE = "Summable"
    DIVERGING = "Diverging"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True, eq=False)
class SummabilityReport:
    partial_sums: np.ndarray
    tail_ratio_estimate: float
    verdict: SummabilityVerdict
    remainder_estimate: float

    def to_dict(self) -> dict:
        return {
            "partial_sum": float(self.partial_sums[-1]),
            "tail_ratio_estimate": self.tail_ratio_estimate,
            "remainder_estimate": (
                self.remainder_estimate if math.isfinite(self.remainder_estimate) else None
            ),
            "verdict": self.verdict.value,
        }


def summability_diagnostic(prefix: SolutionPrefix, window: int = 10) -> SummabilityReport:
    """Ratio test on the last ``window`` entries of a positive prefix.

    Summable needs every ratio ``x_k / x_{k-1}`` in the window below
    ``1 - 1e-6``; Diverging needs their mean above ``1 + 1e-6``.
    """
    if not prefix.positive:
        raise ValueError("summability diagnostic needs a positive prefix")
    x = np.asarray(prefix.entries)
    window = max(1, min(int(window), len(x) - 1))
    partial = np.cumsum(x)
    ratios = x[-window:] / x[-window - 1 : -1]
    rho = float(np.mean(ratios))
    if np.all(ratios < 1.0 - 1e-6):
        verdict = SummabilityVerdict.SUMMABLE
        remainder = float(x[-1] * rho / (1.0 - rho))
    elif rho > 1.0 + 1e-6:
        verdict = SummabilityVerdict.DIVERGING
        remainder = math.inf
    else:
        verdict = SummabilityVerdict.INCONCLUSIVE
        remainder = math.inf
    return SummabilityReport(partial, rho, verdict, remainder)
