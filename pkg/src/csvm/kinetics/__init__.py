"""Kinetics layer: progress-curve fits and ODE model integration."""
from .ode import (
    OdeModel,
    Term,
    eval_monitor,
    integrate_rk4,
    parse_expression,
    parse_ode_model,
    rk4_trajectory,
)
from .progress import (
    FitResult,
    ProgressCurve,
    SlowBindingParams,
    aggregate_results,
    eval_progress,
    fit_k_vs_inhibitor,
    fit_ki_star,
    fit_progress,
    fit_result_to_document,
    levenberg_marquardt,
)

__all__ = [
    "FitResult", "OdeModel", "ProgressCurve", "SlowBindingParams", "Term",
    "aggregate_results", "eval_monitor", "eval_progress", "fit_k_vs_inhibitor",
    "fit_ki_star", "fit_progress", "fit_result_to_document", "integrate_rk4",
    "levenberg_marquardt", "parse_expression", "parse_ode_model", "rk4_trajectory",
]
