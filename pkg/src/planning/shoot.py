"""
Stochastic optimal shooting.

A shot is parametrized by a single contact angle a: the mallet touches the
puck from the side opposite to (cos a, sin a) and moves along that direction
at the maximum speed available there. The mallet contact happens exactly at
the planning instant; afterwards the belief is rolled forward until its mean
crosses the opponent goal line.
"""

import math
from typing import NamedTuple, Optional

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict
from scipy.special import erf

from ..dynamics import PiecewiseModel
from ..estimation import propagate
from ..models import (
    Belief,
    DynamicsMode,
    HockeyError,
    MalletState,
    ShotConfig,
    ShotPlan,
    ShotWeights,
    SimConfig,
    TableGeometry,
)
from .speed_model import ConstantSpeedModel, SpeedModel

log = structlog.get_logger(__name__)

SIGMA_FLOOR = 1e-9


class NoShotError(HockeyError):
    """Raised when no contact angle gives a feasible shot."""

    pass


class ContactPose(NamedTuple):
    position: np.ndarray
    feasible: bool


class ShotEvaluation(BaseModel):
    """Cost of one contact angle and the diagnostics behind it."""

    model_config = ConfigDict(frozen=True)

    angle: float
    cost: float
    feasible: bool
    p_goal: float = 0.0
    expected_speed: float = 0.0
    crossing_step: Optional[float] = None  # fractional rollout step of the crossing
    contact_speed: float = 0.0


def contact_pose_from_angle(
    puck_pos,
    a: float,
    geom: TableGeometry,
    sim_config: Optional[SimConfig] = None,
) -> ContactPose:
    """Mallet position x^p - (r^m + r^p)(cos a, sin a) and whether the mallet can be there."""
    sim_config = sim_config or SimConfig(geometry=geom)
    r = geom.contact_distance
    pos = np.array([puck_pos[0] - r * math.cos(a), puck_pos[1] - r * math.sin(a)])
    x_min, x_max, y_max = sim_config.mallet_bounds()
    feasible = bool(x_min <= pos[0] <= x_max and abs(pos[1]) <= y_max)
    return ContactPose(pos, feasible)


def goal_probability(mu_y: float, var_y: float, goal_width: float) -> float:
    """Gaussian mass of N(mu_y, var_y) inside (-goal_width/2, goal_width/2)."""
    sigma = max(math.sqrt(max(var_y, 0.0)), SIGMA_FLOOR)
    half = goal_width / 2
    s2 = sigma * math.sqrt(2.0)
    p = 0.5 * (float(erf((half - mu_y) / s2)) + float(erf((half + mu_y) / s2)))
    return min(max(p, 0.0), 1.0)


def shot_cost(
    a: float,
    belief_at_contact: Belief,
    geom: TableGeometry,
    model: PiecewiseModel,
    weights: ShotWeights,
    K: int,
    speed_model: Optional[SpeedModel] = None,
    sim_config: Optional[SimConfig] = None,
) -> ShotEvaluation:
    """
    cost = -w_goal p_goal - w_vel E[vx at crossing] + w_penalty 1{p_goal < p_min}

    No crossing within K steps counts as p_goal = 0. An infeasible contact
    returns cost +inf with feasible=False.
    """
    pose = contact_pose_from_angle(belief_at_contact.position, a, geom, sim_config)
    if not pose.feasible:
        return ShotEvaluation(angle=a, cost=math.inf, feasible=False)
    speed_model = speed_model or ConstantSpeedModel()
    u = speed_model.speed(pose.position)
    if u <= 0.0:
        return ShotEvaluation(angle=a, cost=math.inf, feasible=False)

    s_m = np.array([pose.position[0], pose.position[1], u * math.cos(a), u * math.sin(a)])
    mean, cov, _ = propagate(
        belief_at_contact.mean, belief_at_contact.cov, s_m, model, DynamicsMode.MALLET
    )

    goal_x = geom.length / 2
    p_goal, vx_goal, crossing = 0.0, 0.0, None
    for k in range(1, K + 1):
        if mean[0] >= goal_x:
            break
        if mean[0] < -goal_x - geom.puck_radius:
            break  # left through our own goal mouth
        prev_mean, prev_var = mean, cov[1, 1]
        mean, cov, _ = propagate(mean, cov, None, model)
        if mean[0] >= goal_x:
            f = (goal_x - prev_mean[0]) / (mean[0] - prev_mean[0])
            mu_y = prev_mean[1] + f * (mean[1] - prev_mean[1])
            var_y = prev_var + f * (cov[1, 1] - prev_var)
            vx_goal = prev_mean[2] + f * (mean[2] - prev_mean[2])
            p_goal = goal_probability(mu_y, var_y, geom.goal_width)
            crossing = k - 1 + f
            break

    cost = -weights.w_goal * p_goal - weights.w_vel * vx_goal
    if p_goal < weights.p_min:
        cost += weights.w_penalty
    return ShotEvaluation(
        angle=a,
        cost=cost,
        feasible=True,
        p_goal=p_goal,
        expected_speed=vx_goal,
        crossing_step=crossing,
        contact_speed=u,
    )


def angle_grid(bounds: tuple[float, float], n: int) -> np.ndarray:
    """Uniform grid over the angle interval; exactly mirror-symmetric for symmetric bounds."""
    lo, hi = bounds
    if lo == -hi:
        i = np.arange(n)
        return ((2 * i - (n - 1)) / (n - 1)) * hi
    return np.linspace(lo, hi, n)


def _better(e: ShotEvaluation, best: Optional[ShotEvaluation]) -> bool:
    if not e.feasible:
        return False
    if best is None:
        return True
    return (e.cost, abs(e.angle)) < (best.cost, abs(best.angle))


def belief_at_contact_time(
    belief: Belief,
    model: PiecewiseModel,
    lead_time: float,
) -> Belief:
    """Mallet-free prediction of the belief at stamp + lead_time (on the model's dt grid)."""
    n = max(0, int(round(lead_time / model.dt)))
    mean, cov = belief.mean, belief.cov
    for _ in range(n):
        mean, cov, _ = propagate(mean, cov, None, model)
    return Belief(mean=mean, cov=cov, stamp=belief.stamp + n * model.dt)


def search_angles(
    belief_at_contact: Belief,
    model: PiecewiseModel,
    config: ShotConfig,
    speed_model: Optional[SpeedModel] = None,
    sim_config: Optional[SimConfig] = None,
    grid_n: Optional[int] = None,
) -> ShotEvaluation:
    """
    Grid search over the angle interval followed by bisection refinement.

    Ties go to the smaller |a|, then to the lower grid index.
    """
    geom = model.geometry
    grid_n = grid_n or config.grid_n
    if grid_n < 8:
        raise ValueError("grid_n must be at least 8")
    K = config.horizon_steps(model.dt)
    speed_model = speed_model or ConstantSpeedModel(config.constant_speed)

    def evaluate(a: float) -> ShotEvaluation:
        return shot_cost(
            a, belief_at_contact, geom, model, config.weights, K, speed_model, sim_config
        )

    grid = angle_grid(config.angle_bounds, grid_n)
    best: Optional[ShotEvaluation] = None
    for a in grid:
        e = evaluate(float(a))
        if _better(e, best):
            best = e
    if best is None:
        raise NoShotError(
            f"no feasible contact angle for puck at "
            f"({belief_at_contact.mean[0]:.3f}, {belief_at_contact.mean[1]:.3f})"
        )

    lo, hi = config.angle_bounds
    step = (hi - lo) / (grid_n - 1)
    for _ in range(config.refine_passes):
        step /= 2
        center = best.angle
        for a in (center - step, center + step):
            if lo <= a <= hi:
                e = evaluate(a)
                if _better(e, best):
                    best = e
    return best


def solve_shot(
    belief: Belief,
    model: PiecewiseModel,
    config: Optional[ShotConfig] = None,
    speed_model: Optional[SpeedModel] = None,
    sim_config: Optional[SimConfig] = None,
    grid_n: Optional[int] = None,
) -> ShotPlan:
    """
    Best shot for a belief.

    The contact is preset at stamp + contact_lead_time; the belief is
    predicted to that instant before the angle search.
    """
    config = config or ShotConfig()
    at_contact = belief_at_contact_time(belief, model, config.contact_lead_time)
    best = search_angles(at_contact, model, config, speed_model, sim_config, grid_n)
    pose = contact_pose_from_angle(at_contact.position, best.angle, model.geometry, sim_config)
    u = best.contact_speed
    contact_state = MalletState(
        x=float(pose.position[0]),
        y=float(pose.position[1]),
        vx=u * math.cos(best.angle),
        vy=u * math.sin(best.angle),
    )
    log.debug(
        "shot_solved",
        angle=round(best.angle, 5),
        p_goal=round(best.p_goal, 4),
        cost=round(best.cost, 5),
    )
    return ShotPlan(
        angle=best.angle,
        contact_mallet_state=contact_state,
        contact_time=at_contact.stamp,
        predicted_p_goal=best.p_goal,
        predicted_cost=best.cost,
    )
