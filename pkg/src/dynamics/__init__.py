"""Piecewise-linear puck dynamics: frames, identification and persistence."""

from .frames import MIRRORS, Frame, frame_for, mallet_frame, wall_frame
from .identification import (
    RankDeficiencyError,
    TransitionSample,
    canonical_arrays,
    collect_transitions,
    fit_arrays,
    fit_mode,
    fit_piecewise,
    one_step_rmse,
)
from .model import (
    DYNAMICS_SCHEMA_VERSION,
    Linearization,
    LinearMode,
    PiecewiseModel,
    analytic_model,
    load_model,
    predict_mean,
    save_model,
)

__all__ = [
    "MIRRORS",
    "Frame",
    "frame_for",
    "mallet_frame",
    "wall_frame",
    "RankDeficiencyError",
    "TransitionSample",
    "canonical_arrays",
    "collect_transitions",
    "fit_arrays",
    "fit_mode",
    "fit_piecewise",
    "one_step_rmse",
    "DYNAMICS_SCHEMA_VERSION",
    "Linearization",
    "LinearMode",
    "PiecewiseModel",
    "analytic_model",
    "load_model",
    "predict_mean",
    "save_model",
]
