"""Fairness-aware flood damage prediction and aid prioritization."""

from ._core import (
    SCHEMA_VERSION,
    DataError,
    Dataset,
    FloodAidError,
    Model,
    NumericError,
    UsageError,
    equal_opportunity,
    generate_synthetic,
    grl_backward,
    improvement_pct,
    load_checkpoint,
    min_max_norm,
    pearson,
    performance_metrics,
    prediction_variance,
    priority_scores,
    regional_fairness_gap,
    run_experiment,
    spearman,
    statistical_parity_difference,
    stratified_split,
    train,
)

__all__ = [
    "SCHEMA_VERSION",
    "DataError",
    "Dataset",
    "FloodAidError",
    "Model",
    "NumericError",
    "UsageError",
    "equal_opportunity",
    "generate_synthetic",
    "grl_backward",
    "improvement_pct",
    "load_checkpoint",
    "min_max_norm",
    "pearson",
    "performance_metrics",
    "prediction_variance",
    "priority_scores",
    "regional_fairness_gap",
    "run_experiment",
    "spearman",
    "statistical_parity_difference",
    "stratified_split",
    "train",
]
