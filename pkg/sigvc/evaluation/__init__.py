from .harness import EvaluationOutcome, ScoringResult, plan_conversions, run_evaluation
from .plots import emit_comparison_plots, emit_plots, plot_from_json
from .similarity import (
    ConvertedItem,
    DistributionSummary,
    SimilarityCondition,
    SimilarityRecord,
    SimilarityReport,
    build_three_condition_report,
    cosine_similarity,
    leave_one_out_average,
)
from .threshold import ThresholdReport, acceptance_rate, roc_convex_hull, threshold_analysis

__all__ = [
    'ConvertedItem',
    'DistributionSummary',
    'EvaluationOutcome',
    'SimilarityCondition',
    'SimilarityRecord',
    'ScoringResult',
    'SimilarityReport',
    'ThresholdReport',
    'acceptance_rate',
    'build_three_condition_report',
    'cosine_similarity',
    'emit_comparison_plots',
    'emit_plots',
    'leave_one_out_average',
    'plan_conversions',
    'plot_from_json',
    'roc_convex_hull',
    'run_evaluation',
    'threshold_analysis',
]
