"""
Extended Kalman filter over the piecewise-linear puck model.

The mode is chosen from the belief mean only (no mode mixing). Covariance is
never reset at contacts.
"""

from typing import Optional, Sequence

import numpy as np
import structlog
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from ..dynamics import PiecewiseModel
from ..logging import TraceLogger
from ..models import Belief, DynamicsMode, EstimatorConfig, HockeyError, ObservationModel

log = structlog.get_logger(__name__)


class EstimationError(HockeyError):
    """Raised when a filter step produces unusable numbers."""

    pass


def propagate(
    mean: np.ndarray,
    cov: np.ndarray,
    s_m: Optional[np.ndarray],
    model: PiecewiseModel,
    mode: Optional[DynamicsMode] = None,
) -> tuple[np.ndarray, np.ndarray, DynamicsMode]:
    """Array-level predict step. Returns (mean', cov', mode used)."""
    lin = model.linearize(mean, s_m, mode)
    new_cov = lin.F @ cov @ lin.F.T + lin.Q
    new_cov = 0.5 * (new_cov + new_cov.T)
    if not (np.all(np.isfinite(lin.mean)) and np.all(np.isfinite(new_cov))):
        raise EstimationError(f"non-finite prediction in {lin.mode.value} mode")
    return lin.mean, new_cov, lin.mode


def ekf_predict(
    belief: Belief,
    s_m: Optional[np.ndarray],
    model: PiecewiseModel,
    mode: Optional[DynamicsMode] = None,
) -> Belief:
    """
    Propagate the belief one model step.

    mean' = A_i mean + B_i s_m and cov' = A_i cov A_i^T + Sigma_i, expressed
    in table coordinates. s_m=None means no mallet nearby. mode forces the
    dynamics mode instead of classifying the mean.
    """
    mean, cov, _ = propagate(belief.mean, belief.cov, s_m, model, mode)
    return Belief(mean=mean, cov=cov, stamp=belief.stamp + model.dt)


def ekf_update(belief: Belief, z, obs: ObservationModel) -> Belief:
    """Kalman update with the Joseph-form covariance."""
    z = np.asarray(z, dtype=float)
    H, R = obs.H, obs.R
    innovation = z - H @ belief.mean
    S = H @ belief.cov @ H.T + R
    try:
        factor = cho_factor(S)
    except LinAlgError as e:
        raise EstimationError(f"innovation covariance is singular: {S.tolist()}") from e
    # K = P H^T S^-1
    K = cho_solve(factor, H @ belief.cov).T
    mean = belief.mean + K @ innovation
    I_KH = np.eye(4) - K @ H
    cov = I_KH @ belief.cov @ I_KH.T + K @ R @ K.T
    if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
        raise EstimationError("non-finite update")
    return Belief(mean=mean, cov=cov, stamp=belief.stamp)


def rollout_belief(
    belief: Belief,
    mallet_plan: Optional[Sequence] = None,
    K: int = 1,
    model: Optional[PiecewiseModel] = None,
) -> list[Belief]:
    """
    K repeated predictions; returns K + 1 beliefs starting with the input.

    Without a mallet plan the mallet is treated as far away.
    """
    if model is None:
        raise ValueError("rollout_belief needs a model")
    if K < 1:
        raise ValueError("K must be at least 1")
    if mallet_plan is not None and len(mallet_plan) < K:
        raise ValueError(f"mallet_plan has {len(mallet_plan)} entries, need {K}")
    beliefs = [belief]
    for k in range(K):
        s_m = None if mallet_plan is None else np.asarray(mallet_plan[k], dtype=float)
        beliefs.append(ekf_predict(beliefs[-1], s_m, model))
    return beliefs


def nees(belief: Belief, truth) -> float:
    """Normalized estimation error squared of truth under the belief."""
    err = np.asarray(truth, dtype=float) - belief.mean
    return float(err @ cho_solve(cho_factor(belief.cov), err))


class PuckTracker:
    """
    Per-match filter state: initialise from the first observation, then
    predict and update once per control tick.
    """

    def __init__(
        self,
        model: PiecewiseModel,
        config: Optional[EstimatorConfig] = None,
        trace: Optional[TraceLogger] = None,
    ):
        self.model = model
        self.config = config or EstimatorConfig()
        self.obs = ObservationModel.position_only(self.config.obs_sigma)
        self.trace = trace
        self.belief: Optional[Belief] = None
        self.last_mode: Optional[DynamicsMode] = None

    def reset(self):
        self.belief = None
        self.last_mode = None

    def step(self, z, s_m: Optional[np.ndarray], stamp: float) -> Belief:
        """
        Fold in one observation taken at `stamp`.

        s_m is the mallet state over the step that just ended.
        """
        if self.belief is None:
            belief = Belief.from_position(z, self.config.init_cov_diag, stamp=stamp)
            self.last_mode = self.model.classify(belief.mean, s_m)
        else:
            mean, cov, self.last_mode = propagate(
                self.belief.mean, self.belief.cov, s_m, self.model
            )
            predicted = Belief(mean=mean, cov=cov, stamp=stamp)
            belief = ekf_update(predicted, z, self.obs)
        self.belief = belief
        if self.trace is not None:
            self.trace.log_estimate(
                stamp, z, belief.mean, np.diag(belief.cov), self.last_mode.value
            )
        return belief
