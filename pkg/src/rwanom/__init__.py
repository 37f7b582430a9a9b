"""Reaction-wheel friction anomaly classification with verified robustness.

The package covers the full loop on synthetic telemetry: a seeded generator
for reaction-wheel friction series with labelled anomalies, a changepoint /
regression feature pipeline, a hybrid threshold-plus-network classifier, a
complete ReLU-network verifier with its own LP feasibility solver, and
perturbation machinery for verified local-robustness sweeps and global
class-region certification.
"""

from .classifier import (ClassifierBundle, EvalReport, Thresholds,
                         classify_series, classify_summary, evaluate,
                         fit_bundle, load_bundle, save_bundle,
                         split_train_eval)
from .lp import LinearConstraint, LpError, SolverStallError, solve_feasibility
from .mlp import (MlpModel, TrainConfig, classify, forward, load_model,
                  save_model, train)
from .perturb import (Envelope, Perturbation, Snr, apply, build_envelope,
                      deterministic_strengths, snr)
from .pipeline import (PipelineConfig, PipelineError, PipelineSummary,
                       detect_changepoints, fit_window, run_pipeline)
from .robustness import (GlobalConstraintSet, SweepProtocol, certify_global,
                         run_sweep, sample_evaluation_set, strength_ladder,
                         synthesize_constraints, weighted_sum, window_means)
from .telemetry import (AnomalyProfile, DegenerateDesignError, GenConfig,
                        SpinProfile, Status, STATUS_LABELS, TelemetryError,
                        TimeSeries, default_mix, generate_dataset,
                        generate_series, profile_for)
from .verifier import (InputRegion, Verdict, verify_local_robustness,
                       verify_query)

__version__ = "0.1.0"

__all__ = [
    "AnomalyProfile", "ClassifierBundle", "DegenerateDesignError",
    "Envelope", "EvalReport",
    "GenConfig", "GlobalConstraintSet", "InputRegion", "LinearConstraint",
    "LpError", "MlpModel", "Perturbation", "PipelineConfig", "PipelineError",
    "PipelineSummary", "Snr", "SolverStallError", "SpinProfile", "Status",
    "TelemetryError",
    "STATUS_LABELS", "SweepProtocol", "Thresholds", "TimeSeries",
    "TrainConfig", "Verdict", "apply", "build_envelope", "certify_global",
    "classify", "classify_series", "classify_summary", "default_mix",
    "deterministic_strengths", "detect_changepoints", "evaluate",
    "fit_bundle", "fit_window", "forward", "generate_dataset",
    "generate_series", "load_bundle", "load_model",
    "profile_for", "run_pipeline", "run_sweep", "sample_evaluation_set",
    "save_bundle", "save_model", "snr", "solve_feasibility",
    "split_train_eval", "strength_ladder", "synthesize_constraints",
    "train", "verify_local_robustness", "verify_query", "weighted_sum",
    "window_means",
]
