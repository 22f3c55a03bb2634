"""Failure-detection evaluation for classifier prediction dumps.

Risk-coverage curves, AURC, E-AURC, E-AUoptRC, Trust Index and ECE, plus
comparison tables and SVG plots.
"""

__version__ = "0.1.0"

from .calibration import BinStats, EceReport, ece, ece_at_optimal_point, reliability_bins
from .ingest import PredictionRecord, PredictionSet, load_predictions, validate, write_predictions
from .metrics import (
    FdMetrics,
    aurc,
    auor,
    e_aurc,
    e_auoptrc,
    evaluate_fd,
    optimal_point_index,
    trust_index,
)
from .report import ComparisonTable, MetricsReport, build_report, compare_models, render_table_markdown
from .scoring import ScoredSample, ScoredSet, ScoreKind, entropy_uncertainty, margin_uncertainty, msp_confidence, score_set
from .selection import (
    Partition,
    RankedSet,
    RCCurve,
    empirical_risk_curve,
    optimal_risk_curve,
    rank,
    reject_at_threshold,
    risk_at_coverage,
    threshold_for_coverage,
)
from .synth import SynthConfig, generate_synthetic
from .plot import ModelCurves, PlotSpec, model_curves, render_rc_svg
