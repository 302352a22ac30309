"""Puck state estimation."""

from .ekf import (
    EstimationError,
    PuckTracker,
    ekf_predict,
    ekf_update,
    nees,
    propagate,
    rollout_belief,
)

__all__ = [
    "EstimationError",
    "PuckTracker",
    "ekf_predict",
    "ekf_update",
    "nees",
    "propagate",
    "rollout_belief",
]
