"""Bias-corrected measurement of between-group model performance disparities."""

from .bootstrap import (
    BootstrapConfig,
    BootstrapResult,
    BootstrapStatisticError,
    Statistic,
    bootstrap_statistic,
    bootstrap_statistics,
    percentile_interval,
    resample_group,
)
from .estimators import (
    CORRECTED,
    DOUBLE_CORRECTED,
    UNCORRECTED,
    VarianceEstimate,
    bootstrap_sample_variance,
    corrected_variance,
    double_corrected_variance,
)
from .groups import (
    BaseMetric,
    ClassificationRecord,
    GroupMetricVector,
    GroupOutcome,
    InsufficientGroupsError,
    aggregate,
    group_counts,
    intersect_groups,
    plug_in_variance,
)
from .metametrics import (
    MetaMetricKind,
    MetaMetricResult,
    UndefinedMetaMetricError,
    generalized_entropy,
    meta_metric,
)
from .reporting import AnalysisRequest, DataError, DisparityReport, emit_report, load_records, run_analysis
from .simulation import (
    BiasSweepConfig,
    CoverageReport,
    Scenario,
    bias_sweep,
    coverage_study,
    draw_replicate,
    replicate_study,
    standard_scenarios,
)

__version__ = "0.1.0"
