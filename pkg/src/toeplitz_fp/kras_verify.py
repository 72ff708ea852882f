"""Numerical audit of the premises of the split fixed-point argument.

``T`` is written as ``T1 + T2`` with ``T1`` the lower triangle including the
diagonal (coefficients ``t_0, t_1, ...``) and ``T2`` the strictly upper part
(``t_{-1}, t_{-2}, ...``).  The audits here are finite evidence: they test that
``T1`` contracts in l1 with constant ``alpha = sum_{i>=0} t_i`` and that ``T2``
maps a family of unit-norm positive vectors to a set that is equismall at
infinity.  They prove nothing on their own.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .symbol import CoefficientSequence, GeometricTail, ToeplitzSymbol

__all__ = [
    "SplitOperators",
    "ContractionAudit",
    "FamilyVector",
    "EquismallnessReport",
    "DEFAULT_RNG_SEED",
    "split",
    "audit_contraction",
    "audit_equismallness",
    "geometric_family_vector",
    "exact_image_tail",
]

DEFAULT_RNG_SEED = 20240607


@dataclass(frozen=True)
class SplitOperators:
    lower: CoefficientSequence  # t_0, t_1, ...
    upper: CoefficientSequence  # t_{-1}, t_{-2}, ...

    @property
    def alpha(self) -> float:
        return self.lower.sum()

    @property
    def upper_sum(self) -> float:
        return self.upper.sum()

    def recombine(self) -> ToeplitzSymbol:
        """Reassemble the banded symbol; needs a finitely supported upper part."""
        if not self.upper.has_finite_support:
            raise ValueError("upper part has an infinite tail and no banded symbol form")
        upper = list(self.upper.explicit)
        while upper and upper[-1] == 0.0:
            upper.pop()
        lower = self.lower
        diag = lower.value(0)
        rest = CoefficientSequence(lower.explicit[1:], lower.tail)
        if not lower.explicit and lower.tail is not None:
            a, r = lower.tail.a, lower.tail.r
            rest = CoefficientSequence((), GeometricTail(a * r, r))
        return ToeplitzSymbol(tuple(upper), diag, rest)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "upper_sum": self.upper_sum,
            "lower_explicit": list(self.lower.explicit),
            "upper_explicit": list(self.upper.explicit),
        }


def split(source, row: int | None = None) -> SplitOperators:
    """Split a :class:`ToeplitzSymbol`, or row ``row`` of a general spec."""
    if isinstance(source, ToeplitzSymbol):
        return SplitOperators(
            lower=source.lower.prepended((source.diag,)),
            upper=CoefficientSequence(source.upper),
        )
    if row is None:
        raise ValueError("a general spec needs the row to split")
    return SplitOperators(lower=source.lower_row(row), upper=source.upper_row(row))


@dataclass(frozen=True)
class ContractionAudit:
    max_ratio: float
    alpha: float
    trials: int
    support_len: int
    rng_seed: int
    passed: bool

    def to_dict(self) -> dict:
        return {
            "kind": "audit",
            "max_ratio": self.max_ratio,
            "alpha": self.alpha,
            "trials": self.trials,
            "support_len": self.support_len,
            "rng_seed": self.rng_seed,
            "pass": self.passed,
        }


def _t1_norm_ratio(lower: CoefficientSequence, x: np.ndarray) -> float:
    """``||T1 x||_1 / ||x||_1`` for finitely supported nonnegative ``x``.

    The image is computed exactly on a prefix covering the support plus the
    explicit coefficients; the mass beyond it, ``sum_c x_c * tail(P - c)``, is
    added in closed form.
    """
    L = len(x)
    P = L + lower.prefix_len
    image = np.convolve(lower.values(P), x)[:P]
    beyond = math.fsum(x[c] * lower.tail_sum(P - c) for c in range(L) if x[c])
    return (math.fsum(image) + beyond) / math.fsum(x)


def audit_contraction(
    ops: SplitOperators,
    trials: int = 100,
    support_len: int = 50,
    rng_seed: int = DEFAULT_RNG_SEED,
    extra_vectors: Sequence[np.ndarray] = (),
) -> ContractionAudit:
    """Largest observed ``||T1 x|| / ||x||`` over seeded uniform random vectors.

    Passes when the ratio stays below ``alpha + 1e-10``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(rng_seed)
    ratios = []
    for _ in range(trials):
        x = rng.uniform(size=support_len)
        while not x.any():
            x = rng.uniform(size=support_len)
        ratios.append(_t1_norm_ratio(ops.lower, x))
    for x in extra_vectors:
        ratios.append(_t1_norm_ratio(ops.lower, np.asarray(x, dtype=float)))
    worst = max(ratios)
    return ContractionAudit(
        max_ratio=worst,
        alpha=ops.alpha,
        trials=trials,
        support_len=support_len,
        rng_seed=rng_seed,
        passed=worst <= ops.alpha + 1e-10,
    )


@dataclass(frozen=True)
class FamilyVector:
    """Unit-l1 nonnegative vector: explicit entries plus a certified tail envelope.

    ``envelope`` bounds the entries past the explicit prefix from above; when
    ``exact`` is set it gives them exactly.  The vector is normalised at
    construction using the envelope mass.
    """

    entries: CoefficientSequence
    exact: bool = True

    def __post_init__(self):
        total = self.entries.sum()
        if total <= 0.0:
            raise ValueError("family vector must have positive mass")
        object.__setattr__(self, "entries", self.entries.scaled(1.0 / total))

    def tail_bound(self, k: int) -> float:
        """Upper bound on ``sum_{i>=k} m_i``."""
        return self.entries.tail_sum(k)


def geometric_family_vector(ratio: float) -> FamilyVector:
    """``m_k = (1 - ratio) * ratio**k``."""
    return FamilyVector(CoefficientSequence((), GeometricTail(1.0 - ratio, ratio)))


@dataclass(frozen=True)
class EquismallnessReport:
    epsilon: float
    n_epsilon: int
    family_size: int
    max_tail_observed: float
    upper_sum: float

    def to_dict(self) -> dict:
        return {
            "kind": "audit",
            "epsilon": self.epsilon,
            "n_epsilon": self.n_epsilon,
            "family_size": self.family_size,
            "max_tail_observed": self.max_tail_observed,
            "upper_sum": self.upper_sum,
        }


def audit_equismallness(
    ops: SplitOperators, epsilon: float, family: Sequence[FamilyVector], max_index: int = 1_000_000
) -> EquismallnessReport:
    """Smallest ``N`` with ``sum_{k>=N} (T2 m)_k <= epsilon`` for the whole family.

    Uses the reduction ``sum_{k>=N} (T2 m)_k <= (sum_i t_{-i}) * sum_{k>=N+1} m_k``,
    so only the tail bounds of the family members are needed.
    """
    if not epsilon > 0.0:
        raise ValueError("epsilon must be > 0")
    if not family:
        raise ValueError("family must not be empty")
    for m in family:
        if not isinstance(m, FamilyVector):
            raise TypeError("family members need a tail certificate (FamilyVector)")
    U = ops.upper_sum

    def worst(N: int) -> float:
        return U * max(m.tail_bound(N + 1) for m in family)

    # worst(N) is nonincreasing in N: bracket, then bisect
    lo, hi = -1, 0
    while worst(hi) > epsilon:
        lo, hi = hi, max(1, 2 * hi)
        if hi > max_index:
            raise ValueError(f"no N <= {max_index} reaches epsilon = {epsilon}")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if worst(mid) <= epsilon:
            hi = mid
        else:
            lo = mid
    return EquismallnessReport(
        epsilon=epsilon,
        n_epsilon=hi,
        family_size=len(family),
        max_tail_observed=worst(hi),
        upper_sum=U,
    )


def exact_image_tail(ops: SplitOperators, m: FamilyVector, N: int, length: int = 4000) -> float:
    """``sum_{k>=N} (T2 m)_k`` evaluated term by term on ``length`` coordinates.

    Requires a finitely supported upper part and an exact family vector; the
    neglected remainder is bounded by ``U * tail(m, N + length)`` and added.
    """
    if not ops.upper.has_finite_support:
        raise ValueError("exact evaluation needs a finitely supported upper part")
    t = np.asarray(ops.upper.explicit)
    n = len(t)
    mv = m.entries.values(N + length + n + 1)
    image = np.array([t @ mv[k + 1 : k + 1 + n] for k in range(N, N + length)])
    return math.fsum(image) + ops.upper_sum * m.tail_bound(N + length + 1)
