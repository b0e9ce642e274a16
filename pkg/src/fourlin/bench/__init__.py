"""Numerical experiments and checks for diagonal Fourier operator learning."""

from .adversarial import (
    FiniteSupportDistribution,
    SparseField,
    build_adversarial_distribution,
    class_infimum,
    exact_risk,
    high_mode_counterexample,
    lower_bound_rhs,
    verify_lower_bound,
)
from .curves import ErrorCurve, count_inversions, loglog_slope
from .lemmas import (
    check_aliasing,
    check_coefficient_decay,
    check_tail_sum,
    check_weighted_sum,
    lattice_tail_sum,
    run_lemma_suite,
)
from .report import CheckReport
from .sweeps import ExperimentConfig, sweep_discretization, sweep_statistical, sweep_truncation

__all__ = [
    "CheckReport",
    "ErrorCurve",
    "ExperimentConfig",
    "FiniteSupportDistribution",
    "SparseField",
    "build_adversarial_distribution",
    "check_aliasing",
    "check_coefficient_decay",
    "check_tail_sum",
    "check_weighted_sum",
    "class_infimum",
    "count_inversions",
    "exact_risk",
    "high_mode_counterexample",
    "lattice_tail_sum",
    "loglog_slope",
    "lower_bound_rhs",
    "run_lemma_suite",
    "sweep_discretization",
    "sweep_statistical",
    "sweep_truncation",
    "verify_lower_bound",
]
