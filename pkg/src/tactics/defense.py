"""
Sample-based defense planner.

The puck belief is predicted without the mallet until its mean crosses the
defense line. Candidate contacts are placed on the predicted path around the
crossing; each is pushed through the learned Mallet mode and scored by the
remaining goal-axis speed |vx_post|. Contacts that would send the puck into
our goal mouth are rejected outright.
"""

import math
from typing import NamedTuple, Optional

import numpy as np
import structlog

from ..dynamics import PiecewiseModel
from ..estimation import propagate
from ..models import (
    Belief,
    ContactPlan,
    DynamicsMode,
    HockeyError,
    MalletState,
    ObjectiveKind,
    SimConfig,
    TacticConfig,
)

log = structlog.get_logger(__name__)

NORMAL_JITTER = 0.35  # rad
SPEED_JITTER = 0.3  # m/s
STEP_JITTER = 2


class NoPlanError(HockeyError):
    """Raised when a tactic planner finds no usable contact."""

    pass


class PredictedPath(NamedTuple):
    means: list[np.ndarray]  # index k is the mean k steps ahead
    crossing: int


def predict_crossing(
    belief: Belief,
    model: PiecewiseModel,
    line_x: float,
    horizon_s: float,
) -> PredictedPath:
    """Mallet-free prediction until the mean crosses x = line_x moving toward our goal."""
    n = max(1, math.ceil(horizon_s / model.dt - 1e-9))
    mean, cov = belief.mean, belief.cov
    means = [mean]
    for k in range(1, n + 1):
        mean, cov, _ = propagate(mean, cov, None, model)
        means.append(mean)
        if mean[0] <= line_x:
            # a couple of extra steps for the jittered candidates
            for _ in range(STEP_JITTER):
                mean, cov, _ = propagate(mean, cov, None, model)
                means.append(mean)
            return PredictedPath(means, k)
    raise NoPlanError(
        f"puck at ({belief.mean[0]:.3f}, {belief.mean[1]:.3f}) does not reach "
        f"the defense line x={line_x:.3f} within {horizon_s} s"
    )


def post_contact_state(
    model: PiecewiseModel, puck_mean: np.ndarray, mallet_xy, mallet_v
) -> np.ndarray:
    s_m = np.array([mallet_xy[0], mallet_xy[1], mallet_v[0], mallet_v[1]])
    return model.linearize(puck_mean, s_m, DynamicsMode.MALLET).mean


def kill_speed(model: PiecewiseModel, puck_mean, mallet_xy, normal, cap: float) -> float:
    """Mallet speed along the normal that zeroes the post-contact vx (affine in the speed)."""
    f0 = post_contact_state(model, puck_mean, mallet_xy, (0.0, 0.0))[2]
    f1 = post_contact_state(model, puck_mean, mallet_xy, normal)[2]
    slope = f1 - f0
    if abs(slope) < 1e-9:
        return 0.0
    return float(np.clip(-f0 / slope, -cap, cap))


def heads_into_goal(post: np.ndarray, sim_config: SimConfig) -> bool:
    """Straight-line test of the post-contact velocity against our goal mouth."""
    geom = sim_config.geometry
    if post[2] >= 0.0:
        return False
    t = (-geom.length / 2 - post[0]) / post[2]
    return abs(post[1] + post[3] * t) < geom.goal_width / 2


def rotate_vector(v: np.ndarray, angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([c * v[0] - s * v[1], s * v[0] + c * v[1]])


def plan_defense(
    belief: Belief,
    model: PiecewiseModel,
    config: TacticConfig,
    rng: np.random.Generator,
    n_samples: Optional[int] = None,
    sim_config: Optional[SimConfig] = None,
) -> ContactPlan:
    """
    Contact plan that kills the puck's motion toward our goal.

    Candidate 0 is the stationary block on the crossing point, candidate 1
    the kill velocity there; the rest jitter the contact step, the contact
    normal and the mallet speed.
    """
    n_samples = config.defense_samples if n_samples is None else n_samples
    if n_samples < 1:
        raise ValueError("plan_defense needs at least one candidate")
    sim_config = sim_config or SimConfig()
    geom = sim_config.geometry
    cap = sim_config.mallet_speed_cap
    x_min, x_max, y_max = sim_config.mallet_bounds()
    r = geom.contact_distance

    path = predict_crossing(
        belief, model, config.defense_line_x(geom), config.defense_horizon
    )
    v_cross = path.means[path.crossing][2:]
    speed = float(np.hypot(*v_cross))
    base_normal = -v_cross / speed if speed > 1e-9 else np.array([1.0, 0.0])

    # (step, normal, offset from the kill speed); offset None is the stationary block
    candidates: list[tuple[int, np.ndarray, Optional[float]]] = [
        (path.crossing, base_normal, None),
        (path.crossing, base_normal, 0.0),
    ]
    for _ in range(n_samples - 2):
        k = int(np.clip(path.crossing + rng.integers(-STEP_JITTER, STEP_JITTER + 1),
                        1, len(path.means) - 1))
        normal = rotate_vector(base_normal, rng.normal(0.0, NORMAL_JITTER))
        candidates.append((k, normal, float(rng.normal(0.0, SPEED_JITTER))))
    candidates = candidates[:n_samples]

    best = None
    for k, normal, u in candidates:
        puck = path.means[k]
        mallet_xy = puck[:2] - r * normal
        if not (x_min <= mallet_xy[0] <= x_max and abs(mallet_xy[1]) <= y_max):
            continue
        if u is None:
            speed_n = 0.0
        else:
            kill = kill_speed(model, puck, mallet_xy, normal, cap)
            speed_n = float(np.clip(kill + u, -cap, cap))
        mallet_v = speed_n * normal
        post = post_contact_state(model, puck, mallet_xy, mallet_v)
        if heads_into_goal(post, sim_config):
            continue
        objective = abs(float(post[2]))
        if best is None or objective < best[0]:
            best = (objective, k, mallet_xy, mallet_v)

    if best is None:
        raise NoPlanError("every defense candidate is out of reach or sends the puck at our goal")
    objective, k, mallet_xy, mallet_v = best
    log.debug("defense_planned", step=k, objective=round(objective, 4))
    return ContactPlan(
        created_at=belief.stamp,
        contact_time=belief.stamp + k * model.dt,
        contact_mallet_state=MalletState(
            x=float(mallet_xy[0]), y=float(mallet_xy[1]),
            vx=float(mallet_v[0]), vy=float(mallet_v[1]),
        ),
        objective=ObjectiveKind.KILL_VELOCITY,
        expected_cost=objective,
    )
