"""Positive solutions of ``x = T x`` for infinite nonnegative Toeplitz and row-varying matrices."""

__version__ = "0.1.0"

from .symbol import (
    CoefficientSequence,
    RootConvexityResult,
    GeometricTail,
    ToeplitzSymbol,
    check_root_convexity,
    eval_tau,
    first_moment,
    lower_plus_diag_sum,
    total_sum,
    upper_sum,
)
from .toeplitz_solver import (
    Case,
    ClassificationReport,
    Normalization,
    SeedVector,
    SolutionPrefix,
    SummabilityVerdict,
    Verdict,
    classify,
    limit_value,
    solve_recurrence,
    summability_diagnostic,
    equal_seed,
    verify_residual,
)
from .general_solver import (
    HypothesisReport,
    PerturbedToeplitzSpec,
    TableSpec,
    TruncationKind,
    TruncationStudy,
    check_hypotheses,
    perron_solve,
    truncate_T,
    truncation_study,
)
from .kras_verify import (
    EquismallnessReport,
    FamilyVector,
    SplitOperators,
    audit_contraction,
    audit_equismallness,
    geometric_family_vector,
    split,
)
