"""Estimate CDFs, densities, quantiles, and moments from binned data.

The centerpiece is a monotone interpolating cubic-spline CDF fitted
through the cumulative relative frequencies of a binned table, with
heuristic, step-CDF, and kernel estimators alongside for comparison, and
a reproducible Monte-Carlo harness that benchmarks all of them against
known generating distributions.
"""

__version__ = "0.1.0"

from .binned import (
    BinnedTable,
    CumulativeCurve,
    augment_curve,
    bin_sample,
    read_table_csv,
    to_cumulative,
    validate_table,
)
from .distributions import DistributionSpec, parse_spec, sample, theoretical
from .errors import BincdfError, NumericalError, ValidationError
from .estimators import (
    EstimatorReport,
    KernelCdf,
    LinearCdf,
    ParetoTail,
    StepCdf,
    ecdf_estimator,
    heuristic_stats,
    kernel_estimator,
    linear_quantile,
    midpoints,
    pareto_tail,
    rcfp_estimator,
)
from .simulate import (
    SimConfig,
    StudySummary,
    make_edges,
    paired_differences,
    run_replicate,
    run_study,
    summarize,
)
from .spline import MonotoneCubicCdf, fit, hyman_filter, initial_slopes

__all__ = [
    "__version__",
    "BincdfError",
    "ValidationError",
    "NumericalError",
    "BinnedTable",
    "CumulativeCurve",
    "validate_table",
    "bin_sample",
    "to_cumulative",
    "augment_curve",
    "read_table_csv",
    "MonotoneCubicCdf",
    "initial_slopes",
    "hyman_filter",
    "fit",
    "EstimatorReport",
    "ParetoTail",
    "midpoints",
    "linear_quantile",
    "heuristic_stats",
    "pareto_tail",
    "StepCdf",
    "LinearCdf",
    "KernelCdf",
    "ecdf_estimator",
    "kernel_estimator",
    "rcfp_estimator",
    "DistributionSpec",
    "parse_spec",
    "sample",
    "theoretical",
    "SimConfig",
    "StudySummary",
    "make_edges",
    "run_replicate",
    "paired_differences",
    "summarize",
    "run_study",
]
