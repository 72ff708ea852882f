"""Coefficient sequences and the infinite banded-above Toeplitz symbol.

A :class:`ToeplitzSymbol` describes the matrix with entries ``T[r, c] = t_{r-c}``
where ``t_{-n}, ..., t_{-1}`` sit above the diagonal, ``t_0`` on it and the
lower coefficients ``t_1, t_2, ...`` below it.  Every scalar functional used
by the solvers (sums, moments, the generating function and its derivatives)
is evaluated in closed form, so no truncation error enters here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "GeometricTail",
    "CoefficientSequence",
    "ToeplitzSymbol",
    "RootConvexityResult",
    "eval_tau",
    "total_sum",
    "upper_sum",
    "lower_plus_diag_sum",
    "first_moment",
    "check_root_convexity",
]


def _check_coefficient(value, name: str) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    if value < 0.0:
        raise ValueError(f"{name} must be >= 0, got {value!r}")
    return value


@dataclass(frozen=True)
class GeometricTail:
    """Tail ``a, a*r, a*r**2, ...`` appended after the explicit entries."""

    a: float
    r: float

    def __post_init__(self):
        object.__setattr__(self, "a", _check_coefficient(self.a, "tail a"))
        r = _check_coefficient(self.r, "tail r")
        if r >= 1.0:
            raise ValueError(f"tail r must be < 1, got {r!r}")
        object.__setattr__(self, "r", r)


@dataclass(frozen=True)
class CoefficientSequence:
    """Nonnegative sequence ``c_0, c_1, ...``: explicit prefix plus optional geometric tail.

    With ``L = len(explicit)`` the tail supplies ``c_{L+q} = a * r**q`` for
    ``q >= 0``.  Without a tail every entry past the prefix is zero.
    """

    explicit: tuple[float, ...] = ()
    tail: GeometricTail | None = None

    def __post_init__(self):
        values = tuple(
            _check_coefficient(v, f"coefficient[{k}]") for k, v in enumerate(self.explicit)
        )
        object.__setattr__(self, "explicit", values)
        tail = self.tail
        if tail is not None and not isinstance(tail, GeometricTail):
            tail = GeometricTail(*tail)
        if tail is not None and tail.a == 0.0:
            tail = None
        object.__setattr__(self, "tail", tail)

    @classmethod
    def of(cls, explicit: Iterable[float] = (), tail: tuple[float, float] | None = None):
        return cls(tuple(explicit), None if tail is None else GeometricTail(*tail))

    @property
    def prefix_len(self) -> int:
        return len(self.explicit)

    @property
    def has_finite_support(self) -> bool:
        return self.tail is None

    def value(self, k: int) -> float:
        if k < 0:
            raise IndexError(k)
        if k < len(self.explicit):
            return self.explicit[k]
        if self.tail is None:
            return 0.0
        return self.tail.a * self.tail.r ** (k - len(self.explicit))

    def values(self, count: int) -> np.ndarray:
        """First ``count`` entries as a float array."""
        out = np.zeros(count)
        L = min(count, len(self.explicit))
        out[:L] = self.explicit[:L]
        if self.tail is not None and count > len(self.explicit):
            q = np.arange(count - len(self.explicit))
            out[len(self.explicit):] = self.tail.a * self.tail.r ** q
        return out

    def sum(self) -> float:
        return self.tail_sum(0)

    def tail_sum(self, k: int) -> float:
        """``sum_{i >= k} c_i`` in closed form."""
        k = max(int(k), 0)
        L = len(self.explicit)
        head = math.fsum(self.explicit[k:]) if k < L else 0.0
        if self.tail is None:
            return head
        a, r = self.tail.a, self.tail.r
        return head + a * r ** max(k - L, 0) / (1.0 - r)

    def partial_sum(self, count: int) -> float:
        """``sum_{i < count} c_i``."""
        count = max(int(count), 0)
        L = len(self.explicit)
        head = math.fsum(self.explicit[:count])
        if self.tail is None or count <= L:
            return head
        a, r = self.tail.a, self.tail.r
        return head + a * (1.0 - r ** (count - L)) / (1.0 - r)

    def moment1(self, offset: int = 0) -> float:
        """``sum_i (i + offset) * c_i``."""
        L = len(self.explicit)
        head = math.fsum((i + offset) * c for i, c in enumerate(self.explicit))
        if self.tail is None:
            return head
        a, r = self.tail.a, self.tail.r
        return head + a * ((L + offset) / (1.0 - r) + r / (1.0 - r) ** 2)

    def gf(self, z, derivative: int = 0):
        """d-th derivative of ``sum_i c_i z**i``; ``z`` may be an array with ``|r z| < 1``."""
        z = np.asarray(z, dtype=float)
        poly = np.polynomial.polynomial
        coeffs = np.asarray(self.explicit, dtype=float)
        if coeffs.size:
            out = poly.polyval(z, poly.polyder(coeffs, derivative) if derivative else coeffs)
        else:
            out = np.zeros_like(z)
        if self.tail is not None:
            # a z^L / (1 - r z), differentiated by the Leibniz rule
            a, r, L = self.tail.a, self.tail.r, len(self.explicit)
            denom = 1.0 - r * z
            acc = np.zeros_like(z)
            for k in range(derivative + 1):
                if k > L:
                    break
                power = math.perm(L, k) * z ** (L - k)
                p = derivative - k
                acc = acc + math.comb(derivative, k) * power * math.factorial(p) * r**p / denom ** (p + 1)
            out = out + a * acc
        return out if out.ndim else float(out)

    def scaled(self, factor: float) -> "CoefficientSequence":
        factor = _check_coefficient(factor, "scale factor")
        tail = None if self.tail is None else GeometricTail(self.tail.a * factor, self.tail.r)
        return CoefficientSequence(tuple(c * factor for c in self.explicit), tail)

    def prepended(self, values: Sequence[float]) -> "CoefficientSequence":
        return CoefficientSequence(tuple(values) + self.explicit, self.tail)

    def is_strictly_positive(self) -> bool:
        """True when every entry of the infinite sequence is > 0."""
        if any(c <= 0.0 for c in self.explicit):
            return False
        return self.tail is not None and self.tail.r > 0.0

    def only_leading_nonzero(self) -> bool:
        return all(c == 0.0 for c in self.explicit[1:]) and (
            self.tail is None or (len(self.explicit) == 0 and self.tail.r == 0.0)
        )


@dataclass(frozen=True)
class ToeplitzSymbol:
    """Coefficients of a nonnegative Toeplitz matrix with upper bandwidth ``n``.

    ``upper`` lists ``t_{-1}, ..., t_{-n}`` (so ``upper[k]`` is ``t_{-(k+1)}``),
    ``diag`` is ``t_0`` and ``lower`` holds ``t_1, t_2, ...`` (``lower.value(k)``
    is ``t_{k+1}``).  ``t_{-n}`` must be strictly positive.
    """

    upper: tuple[float, ...]
    diag: float = 0.0
    lower: CoefficientSequence = field(default_factory=CoefficientSequence)

    def __post_init__(self):
        upper = tuple(_check_coefficient(v, f"upper[{k}]") for k, v in enumerate(self.upper))
        if not upper:
            raise ValueError("upper band must contain at least t_{-1}")
        if upper[-1] <= 0.0:
            raise ValueError(f"t_{{-n}} = upper[{len(upper) - 1}] must be > 0")
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "diag", _check_coefficient(self.diag, "diag"))
        lower = self.lower
        if not isinstance(lower, CoefficientSequence):
            lower = CoefficientSequence(tuple(lower))
        object.__setattr__(self, "lower", lower)

    @classmethod
    def of(
        cls,
        upper: Sequence[float],
        diag: float = 0.0,
        lower: Sequence[float] = (),
        lower_tail: tuple[float, float] | None = None,
    ) -> "ToeplitzSymbol":
        return cls(tuple(upper), diag, CoefficientSequence.of(lower, lower_tail))

    @property
    def n(self) -> int:
        return len(self.upper)

    def coefficient(self, i: int) -> float:
        """``t_i`` for any integer offset ``i``."""
        if i < 0:
            return self.upper[-i - 1] if -i <= self.n else 0.0
        if i == 0:
            return self.diag
        return self.lower.value(i - 1)

    def lower_values(self, count: int) -> np.ndarray:
        """``t_1, ..., t_count``."""
        return self.lower.values(count)

    def series(self) -> CoefficientSequence:
        """Power-series coefficients of ``tau(z) = sum_{i>=0} t_{i-n} z**i``."""
        return self.lower.prepended(self.upper[::-1] + (self.diag,))


@dataclass(frozen=True)
class RootConvexityResult:
    holds: bool
    min_h: float
    argmin_z: float

    def to_dict(self) -> dict:
        return {"holds": self.holds, "min_h": self.min_h, "argmin_z": self.argmin_z}


def eval_tau(symbol: ToeplitzSymbol, z: float, derivative: int = 0) -> float:
    """Generating function ``tau_{-n}`` (or a derivative) at ``0 <= z <= 1``."""
    z = float(z)
    if not 0.0 <= z <= 1.0:
        raise ValueError(f"z must lie in [0, 1], got {z!r}")
    return float(symbol.series().gf(z, derivative))


def total_sum(symbol: ToeplitzSymbol) -> float:
    """``sum_{i >= -n} t_i``, which is also the matrix norm used for T."""
    return symbol.series().sum()


def upper_sum(symbol: ToeplitzSymbol) -> float:
    return math.fsum(symbol.upper)


def lower_plus_diag_sum(symbol: ToeplitzSymbol) -> float:
    """``alpha = sum_{i >= 0} t_i``, the contraction constant of the lower part."""
    return symbol.lower.prepended((symbol.diag,)).sum()


def first_moment(symbol: ToeplitzSymbol) -> float:
    """``sum_{i >= 0} i * t_{i-n}``, i.e. ``tau'(1)``."""
    return symbol.series().moment1(0)


def check_root_convexity(
    symbol: ToeplitzSymbol, grid_points: int = 1001, tolerance: float = 1e-12
) -> RootConvexityResult:
    """Grid test that ``d/dz tau(z)**(1/n)`` is nondecreasing on [0, 1].

    Uses ``sign(g'') = sign(h)`` with ``h = tau'' tau - (1 - 1/n) tau'**2``, which
    avoids fractional powers; the condition holds when ``min h >= -tolerance``.
    """
    if grid_points < 2:
        raise ValueError("grid_points must be >= 2")
    z = np.linspace(0.0, 1.0, int(grid_points))
    series = symbol.series()
    tau = series.gf(z)
    d1 = series.gf(z, 1)
    d2 = series.gf(z, 2)
    h = d2 * tau - (1.0 - 1.0 / symbol.n) * d1 * d1
    k = int(np.argmin(h))
    min_h = float(h[k])
    return RootConvexityResult(holds=min_h >= -tolerance, min_h=min_h, argmin_z=float(z[k]))
