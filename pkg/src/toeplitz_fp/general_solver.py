"""Row-varying nonnegative infinite matrices and their finite truncations.

Entry ``(r, c)`` (both 0-based) of the matrix is ``t_{r-c}^{(r+1)}``: row ``j``
(1-based) carries its own two-sided coefficient sequence.  A spec exposes each
row as a lower sequence ``t_0^{(j)}, t_1^{(j)}, ...`` and an upper sequence
``t_{-1}^{(j)}, t_{-2}^{(j)}, ...``.
"""

from __future__ import annotations

import enum
import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .symbol import CoefficientSequence, ToeplitzSymbol, _check_coefficient

log = logging.getLogger(__name__)

__all__ = [
    "GeneralMatrixSpec",
    "TableSpec",
    "PerturbedToeplitzSpec",
    "HypothesisReport",
    "TruncationKind",
    "PerronResult",
    "TruncationStudy",
    "check_hypotheses",
    "truncate_T",
    "perron_solve",
    "truncation_study",
    "export_matrix_csv",
]


class GeneralMatrixSpec:
    """Base class; subclasses supply ``lower_row`` and ``upper_row``."""

    strict: bool = False
    max_row: int | None = None

    def lower_row(self, j: int) -> CoefficientSequence:
        raise NotImplementedError

    def upper_row(self, j: int) -> CoefficientSequence:
        raise NotImplementedError

    def coefficient(self, j: int, i: int) -> float:
        """``t_i^{(j)}`` for row ``j >= 1`` and any offset ``i``."""
        self._check_row(j)
        if i >= 0:
            return self.lower_row(j).value(i)
        return self.upper_row(j).value(-i - 1)

    def row_sum(self, j: int) -> float:
        """In-matrix mass of row ``j``: ``sum_{i=0}^{j-1} t_i^{(j)} + sum_{i>=1} t_{-i}^{(j)}``."""
        return self.lower_row(j).partial_sum(j) + self.upper_row(j).sum()

    def is_strictly_positive(self) -> bool:
        raise NotImplementedError

    def _check_row(self, j: int) -> None:
        if j < 1:
            raise IndexError(f"rows are numbered from 1, got {j}")
        if self.max_row is not None and j > self.max_row:
            raise IndexError(f"row {j} exceeds the table size {self.max_row}")

    def _validate_positivity(self) -> None:
        if self.strict and not self.is_strictly_positive():
            raise ValueError("strict mode requires every coefficient t_i^(j) to be > 0")


@dataclass(frozen=True)
class TableSpec(GeneralMatrixSpec):
    """Explicit per-row ``(lower, upper)`` sequences for rows ``1 .. len(rows)``."""

    rows: tuple[tuple[CoefficientSequence, CoefficientSequence], ...]
    strict: bool = False

    def __post_init__(self):
        if not self.rows:
            raise ValueError("table needs at least one row")
        self._validate_positivity()

    @property
    def max_row(self) -> int:
        return len(self.rows)

    def lower_row(self, j: int) -> CoefficientSequence:
        self._check_row(j)
        return self.rows[j - 1][0]

    def upper_row(self, j: int) -> CoefficientSequence:
        self._check_row(j)
        return self.rows[j - 1][1]

    def is_strictly_positive(self) -> bool:
        return all(lo.is_strictly_positive() and up.is_strictly_positive() for lo, up in self.rows)


@dataclass(frozen=True)
class PerturbedToeplitzSpec(GeneralMatrixSpec):
    """``t_i^{(j)} = base_i * (1 + e / j)``.

    With ``factor_upper=False`` only the lower side (``i >= 0``) carries the
    row factor and the upper coefficients are row independent.
    """

    lower: CoefficientSequence
    upper: CoefficientSequence
    e: float = 0.0
    factor_upper: bool = True
    strict: bool = False

    def __post_init__(self):
        object.__setattr__(self, "e", _check_coefficient(self.e, "row factor e"))
        self._validate_positivity()

    @classmethod
    def from_symbol(cls, symbol: ToeplitzSymbol, strict: bool = False) -> "PerturbedToeplitzSpec":
        """Constant-Toeplitz spec equal to ``symbol`` (row factor ``e = 0``)."""
        return cls(
            lower=symbol.lower.prepended((symbol.diag,)),
            upper=CoefficientSequence(symbol.upper),
            e=0.0,
            strict=strict,
        )

    def row_factor(self, j: int) -> float:
        return 1.0 + self.e / j

    def lower_row(self, j: int) -> CoefficientSequence:
        self._check_row(j)
        return self.lower.scaled(self.row_factor(j)) if self.e else self.lower

    def upper_row(self, j: int) -> CoefficientSequence:
        self._check_row(j)
        if self.e and self.factor_upper:
            return self.upper.scaled(self.row_factor(j))
        return self.upper

    def is_strictly_positive(self) -> bool:
        return self.lower.is_strictly_positive() and self.upper.is_strictly_positive()


@dataclass(frozen=True)
class HypothesisReport:
    cond1_value: float
    cond1_pass: bool
    cond2_value: float
    cond2_pass: bool
    cond3_liminf_estimate: float
    cond3_pass: bool
    rows_examined: int
    cond3_exact: bool
    cond3_rows: tuple[int, int]
    strictly_positive: bool

    def to_dict(self) -> dict:
        return {
            "cond1_value": self.cond1_value,
            "cond1_pass": self.cond1_pass,
            "cond2_value": self.cond2_value,
            "cond2_pass": self.cond2_pass,
            "cond3_liminf_estimate": self.cond3_liminf_estimate,
            "cond3_pass": self.cond3_pass,
            "cond3_exact": self.cond3_exact,
            "cond3_rows": list(self.cond3_rows),
            "rows_examined": self.rows_examined,
            "strictly_positive": self.strictly_positive,
        }


def _sum_of_sup(sequences: Sequence[CoefficientSequence], tol: float = 1e-16) -> float:
    """``sum_i max_k c_i^{(k)}`` for finitely many sequences.

    Summed entrywise until the combined remaining mass of all sequences drops
    below ``tol``; that remaining mass is added as a conservative bound.
    """
    start = max(s.prefix_len for s in sequences)
    block = max(start, 64)
    total = 0.0
    done = 0
    while True:
        count = done + block
        vals = np.max([s.values(count)[done:] for s in sequences], axis=0)
        total += math.fsum(vals)
        done = count
        remainder = math.fsum(s.tail_sum(done) for s in sequences)
        if remainder <= tol or done > 10_000_000:
            return total + remainder
        block *= 2


def check_hypotheses(spec: GeneralMatrixSpec, rows_to_scan: int = 200) -> HypothesisReport:
    """Evaluate the three existence conditions for a row-varying matrix.

    1. ``sum_{i>=0} sup_k t_i^{(k+1)} < 1``
    2. ``sup_k sum_{i>=1} t_{-i}^{(k)} < inf``
    3. ``liminf_k [sum_{i=0}^{k} t_i^{(k+1)} + sum_{i>=1} t_{-i}^{(k+1)}] > 1``

    For a :class:`PerturbedToeplitzSpec` the suprema sit at row 1 and the
    liminf is the exact limit of the row sums.  For a table the suprema run
    over the scanned rows and the liminf is estimated by the smallest row sum
    in the second half of the scanned range.
    """
    if rows_to_scan < 1:
        raise ValueError("rows_to_scan must be >= 1")
    if spec.max_row is not None and rows_to_scan > spec.max_row:
        raise ValueError(f"rows_to_scan = {rows_to_scan} exceeds the table size {spec.max_row}")
    positive = spec.is_strictly_positive()
    if not positive:
        warnings.warn("spec has zero coefficients; the strict positivity hypothesis fails")

    first_tail_row = rows_to_scan // 2 + 1
    if isinstance(spec, PerturbedToeplitzSpec):
        top = 1.0 + spec.e
        cond1 = spec.lower.sum() * top
        cond2 = spec.upper.sum() * (top if spec.factor_upper else 1.0)
        cond3 = spec.lower.sum() + spec.upper.sum()
        exact = True
    else:
        rows = range(1, rows_to_scan + 1)
        cond1 = _sum_of_sup([spec.lower_row(j) for j in rows])
        cond2 = max(spec.upper_row(j).sum() for j in rows)
        cond3 = min(spec.row_sum(j) for j in range(first_tail_row, rows_to_scan + 1))
        exact = False
    return HypothesisReport(
        cond1_value=cond1,
        cond1_pass=cond1 < 1.0,
        cond2_value=cond2,
        cond2_pass=math.isfinite(cond2),
        cond3_liminf_estimate=cond3,
        cond3_pass=cond3 > 1.0,
        rows_examined=rows_to_scan,
        cond3_exact=exact,
        cond3_rows=(first_tail_row, rows_to_scan),
        strictly_positive=positive,
    )


class TruncationKind(str, enum.Enum):
    TOEPLITZ_FROM_ROW = "ToeplitzFromRow"
    LEADING_PRINCIPAL = "LeadingPrincipal"


def _place_row(out: np.ndarray, r: int, lower: CoefficientSequence, upper: CoefficientSequence):
    size = out.shape[1]
    # columns c <= r take t_{r-c}; columns c > r take t_{-(c-r)}
    out[r, : r + 1] = lower.values(r + 1)[::-1]
    out[r, r + 1 :] = upper.values(size - r - 1)


def truncate_T(
    spec: GeneralMatrixSpec, j: int, kind: TruncationKind | str = TruncationKind.LEADING_PRINCIPAL
) -> np.ndarray:
    """Dense ``(j+1) x (j+1)`` truncation.

    ``ToeplitzFromRow`` builds the Toeplitz matrix ``t_{r-c}^{(j+1)}`` from row
    ``j + 1`` alone; ``LeadingPrincipal`` is the top-left block
    ``t_{r-c}^{(r+1)}`` of the full matrix.
    """
    kind = TruncationKind(kind)
    if j < 0:
        raise ValueError("j must be >= 0")
    size = j + 1
    out = np.zeros((size, size))
    if kind is TruncationKind.TOEPLITZ_FROM_ROW:
        lower, upper = spec.lower_row(j + 1), spec.upper_row(j + 1)
        for r in range(size):
            _place_row(out, r, lower, upper)
    else:
        for r in range(size):
            _place_row(out, r, spec.lower_row(r + 1), spec.upper_row(r + 1))
    return out


def export_matrix_csv(matrix: np.ndarray, path: str | Path) -> None:
    np.savetxt(path, matrix, delimiter=",", fmt="%.17g")


@dataclass(frozen=True, eq=False)
class PerronResult:
    lam: float
    v: np.ndarray
    iterations: int
    converged: bool
    damped: bool


def perron_solve(
    M: np.ndarray,
    tol: float = 1e-12,
    max_iter: int = 1_000_000,
    damping: bool = True,
    v0: np.ndarray | None = None,
) -> PerronResult:
    """Dominant eigenpair of a nonnegative matrix by l1-normalised power iteration.

    Starts from the all-ones vector unless ``v0`` is given and stops once
    successive iterates differ by less than ``tol`` in l1.  If the step
    length stops shrinking for a while (periodic matrices), the iteration
    switches to averaging each iterate with its predecessor, which keeps the
    fixed point.  The returned ``lam`` is ``||M v||_1`` for the unit-l1 ``v``.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("M must be square")
    if np.any(M < 0):
        raise ValueError("M must be entrywise nonnegative")
    v = np.ones(M.shape[0]) if v0 is None else np.array(v0, dtype=float)
    v /= v.sum()
    damped = False
    prev_step = math.inf
    stalled = 0
    for it in range(1, max_iter + 1):
        w = M @ v
        lam = w.sum()
        if lam == 0.0:
            # nilpotent direction: nothing to iterate
            return PerronResult(0.0, v, it, False, damped)
        w /= lam
        if damped:
            w = 0.5 * (w + v)
            w /= w.sum()
        step = np.abs(w - v).sum()
        if step < tol:
            return PerronResult(float((M @ v).sum()), v, it, True, damped)
        if damping and not damped:
            stalled = stalled + 1 if step >= prev_step * (1.0 - 1e-9) else 0
            if stalled >= 20:
                damped = True
        prev_step = step
        v = w
    warnings.warn("power iteration did not converge")
    return PerronResult(float((M @ v).sum()), v, max_iter, False, damped)


@dataclass(frozen=True, eq=False)
class TruncationStudy:
    sizes: list[int]
    eigenvalues: list[float]
    prefix_distances: list[float]
    residuals_vs_full: list[float]
    tail_coefficient_mass: list[float]
    converged: list[bool]
    iterations: list[int]
    vectors: list[np.ndarray] = field(repr=False)
    normalization: str = "x0"

    def to_dict(self) -> dict:
        return {
            "sizes": list(self.sizes),
            "eigenvalues": list(self.eigenvalues),
            "defects": [abs(lam - 1.0) for lam in self.eigenvalues],
            "prefix_distances": list(self.prefix_distances),
            "residuals_vs_full": list(self.residuals_vs_full),
            "tail_coefficient_mass": list(self.tail_coefficient_mass),
            "converged": list(self.converged),
            "iterations": list(self.iterations),
            "normalization": self.normalization,
        }


def _normalise(v: np.ndarray, mode: str) -> np.ndarray:
    if mode == "x0":
        return v / v[0]
    if mode == "unit_l1":
        return v / np.abs(v).sum()
    raise ValueError(f"unknown normalization {mode!r}")


def _solve_size(spec, j, tol, max_iter):
    M = truncate_T(spec, j, TruncationKind.LEADING_PRINCIPAL)
    return perron_solve(M, tol=tol, max_iter=max_iter)


def truncation_study(
    spec: GeneralMatrixSpec,
    j_list: Sequence[int],
    tol: float = 1e-12,
    max_iter: int = 1_000_000,
    prefix_len: int = 20,
    normalization: str = "x0",
    workers: int = 1,
) -> TruncationStudy:
    """Perron vectors of growing leading-principal truncations.

    For each size ``j`` the normalised Perron vector of the truncation is kept.
    ``prefix_distances[k]`` is the l1 distance between the vectors for
    ``j_list[k]`` and ``j_list[k+1]`` on the first ``prefix_len`` coordinates.
    ``residuals_vs_full`` measures the zero-padded vector against the first
    ``prefix_len`` rows of the infinite matrix; the coefficient mass of those
    rows falling outside the truncation is reported in
    ``tail_coefficient_mass`` (it multiplies the unknown remainder of ``x``).
    """
    sizes = [int(j) for j in j_list]
    if not sizes:
        raise ValueError("j_list must not be empty")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("j_list must be strictly increasing")
    if prefix_len < 1 or prefix_len > min(sizes) + 1:
        raise ValueError("prefix_len must lie in 1 .. min(j_list) + 1")

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda j: _solve_size(spec, j, tol, max_iter), sizes))
    else:
        results = [_solve_size(spec, j, tol, max_iter) for j in sizes]

    vectors, residuals, tails = [], [], []
    for j, res in zip(sizes, results):
        log.info("size %d: lambda=%.15g iterations=%d converged=%s", j, res.lam, res.iterations, res.converged)
        x = _normalise(res.v, normalization)
        vectors.append(x)
        rows = np.zeros((prefix_len, j + 1))
        mass = []
        for r in range(prefix_len):
            lower, upper = spec.lower_row(r + 1), spec.upper_row(r + 1)
            _place_row(rows, r, lower, upper)
            mass.append(upper.tail_sum(j - r))
        residuals.append(float(np.max(np.abs(rows @ x - x[:prefix_len]))))
        tails.append(max(mass))

    distances = [
        float(np.abs(a[:prefix_len] - b[:prefix_len]).sum()) for a, b in zip(vectors, vectors[1:])
    ]
    return TruncationStudy(
        sizes=sizes,
        eigenvalues=[r.lam for r in results],
        prefix_distances=distances,
        residuals_vs_full=residuals,
        tail_coefficient_mass=tails,
        converged=[r.converged for r in results],
        iterations=[r.iterations for r in results],
        vectors=vectors,
        normalization=normalization,
    )
