"""Filtered causal discovery for multivariate time series.

A transfer-entropy filter prunes variables and proposes candidate parents;
PC condition selection and MCI tests then produce a lag-specific graph.
"""

from ._causa import (
    CausalGraph,
    DiscoveryConfig,
    DiscoveryRun,
    EstimationError,
    EstimatorConfig,
    Error,
    EvaluationReport,
    FilterResult,
    InputError,
    LagWindow,
    LaggedEdge,
    TestResult,
    TimeSeriesDataset,
    discover,
    estimate_cmi,
    format_csv,
    generate_toy,
    generate_var,
    load_csv,
    nmae,
    nrmse,
    parse_csv,
    run_report_json,
    score_graph,
    select_features,
    shrink,
    te_score,
    test_dependence,
)

__all__ = [name for name in dir() if not name.startswith("_")]
