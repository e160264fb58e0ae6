"""
evaluation/ - 가설 집계 & 평가 지표 패키지
"""
from .metrics import (
    MetricReport,
    auc,
    evaluate,
    evaluate_arrays,
    mpjpe,
    p_mpjpe,
    pck,
    procrustes_align,
    report_to_csv,
)
from .aggregate import (
    AggregationResult,
    ConfidenceFilterResult,
    aggregate,
    aggregate_average,
    aggregate_median,
    confidence,
    confidence_filter,
    joint_spread,
    select_best,
    select_best_jointwise,
    select_random,
)

__all__ = [
    "MetricReport",
    "auc",
    "evaluate",
    "evaluate_arrays",
    "mpjpe",
    "p_mpjpe",
    "pck",
    "procrustes_align",
    "report_to_csv",
    "AggregationResult",
    "ConfidenceFilterResult",
    "aggregate",
    "aggregate_average",
    "aggregate_median",
    "confidence",
    "confidence_filter",
    "joint_spread",
    "select_best",
    "select_best_jointwise",
    "select_random",
]
