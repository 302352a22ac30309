"""
Preparation planner: move a slow puck back toward the centerline.

The target point sits a little ahead of the puck on the centerline. Off the
centerline the puck is banked off the nearer side wall so that the
restitution-scaled specular reflection heads for the target; on the
centerline it is nudged straight forward. Candidate contacts around the
heuristic are scored by the closest approach of the model-predicted puck
path to the target point.
"""

import math
from typing import NamedTuple, Optional

import numpy as np
import structlog

from ..dynamics import PiecewiseModel, predict_mean
from ..models import (
    Belief,
    ContactPlan,
    MalletState,
    ObjectiveKind,
    SimConfig,
    TableGeometry,
    TacticConfig,
)
from ..planning import belief_at_contact_time
from .defense import NoPlanError, post_contact_state, rotate_vector

log = structlog.get_logger(__name__)

ANGLE_JITTER = 0.08  # rad
SPEED_SCALE_JITTER = 0.15
ROLLOUT_HORIZON = 1.5  # s


class PrepareTarget(NamedTuple):
    point: np.ndarray
    puck_velocity: np.ndarray  # desired puck velocity right after contact
    bank_point: Optional[np.ndarray]  # None for the straight nudge


def prepare_heuristic(puck_xy, config: TacticConfig, geometry: TableGeometry) -> PrepareTarget:
    """
    Desired post-contact puck velocity.

    With a bank point (x_w, y_w) on the wall line, the reflected direction
    (e_t dx, -e_n dy) must point at the target T, which gives

        x_w (e_t (T_y - y_w) - e_n (y_w - y_p)) = e_t (T_y - y_w) x_p - e_n (y_w - y_p) T_x
    """
    x_p, y_p = float(puck_xy[0]), float(puck_xy[1])
    target = np.array([x_p + config.prepare_target_advance, 0.0])
    speed = config.target_prepare_speed
    if abs(y_p) < config.centerline_tolerance:
        return PrepareTarget(target, np.array([speed, 0.0]), None)

    e_n = geometry.wall_restitution
    e_t = geometry.wall_tangential_retention
    y_w = math.copysign(geometry.puck_y_limit, y_p)
    a = e_t * (target[1] - y_w)
    b = e_n * (y_w - y_p)
    x_w = (a * x_p - b * target[0]) / (a - b)
    d = np.array([x_w - x_p, y_w - y_p])
    d /= np.linalg.norm(d)
    # pre-bounce speed that leaves the wall at the target speed
    pre_speed = speed / math.hypot(e_t * d[0], e_n * d[1])
    return PrepareTarget(target, pre_speed * d, np.array([x_w, y_w]))


def in_goal_corner(puck_xy, geometry: TableGeometry) -> bool:
    """Puck center within one contact distance of both our end wall and a side wall."""
    r = geometry.contact_distance
    return (
        float(puck_xy[0]) + geometry.puck_x_limit < r
        and geometry.puck_y_limit - abs(float(puck_xy[1])) < r
    )


def miss_distance(
    model: PiecewiseModel, post_state: np.ndarray, target: np.ndarray, horizon_s: float
) -> float:
    """Closest approach of the predicted (mallet-free) mean path to the target point."""
    state = post_state
    best = float(np.linalg.norm(state[:2] - target))
    for _ in range(max(1, int(round(horizon_s / model.dt)))):
        state = predict_mean(model, state)
        best = min(best, float(np.linalg.norm(state[:2] - target)))
        if state[0] > target[0] + 0.1:
            break
    return best


def push_speed(model: PiecewiseModel, puck_mean, mallet_xy, normal, desired: float, cap: float):
    """Mallet speed along the normal giving the desired post-contact puck speed along it."""
    g0 = float(post_contact_state(model, puck_mean, mallet_xy, (0.0, 0.0))[2:] @ normal)
    g1 = float(post_contact_state(model, puck_mean, mallet_xy, normal)[2:] @ normal)
    if abs(g1 - g0) < 1e-9:
        return 0.0
    return float(np.clip((desired - g0) / (g1 - g0), 0.0, cap))


def plan_prepare(
    belief: Belief,
    model: PiecewiseModel,
    config: TacticConfig,
    rng: np.random.Generator,
    n_samples: Optional[int] = None,
    sim_config: Optional[SimConfig] = None,
) -> ContactPlan:
    n_samples = config.prepare_samples if n_samples is None else n_samples
    if n_samples < 1:
        raise ValueError("plan_prepare needs at least one candidate")
    sim_config = sim_config or SimConfig()
    geom = sim_config.geometry
    cap = sim_config.mallet_speed_cap
    x_min, x_max, y_max = sim_config.mallet_bounds()
    r = geom.contact_distance

    at_contact = belief_at_contact_time(belief, model, config.prepare_lead_time)
    if at_contact.stamp <= belief.stamp:
        at_contact = belief_at_contact_time(belief, model, model.dt)
    puck = at_contact.mean
    if in_goal_corner(puck[:2], geom):
        raise NoPlanError(
            f"puck at ({puck[0]:.3f}, {puck[1]:.3f}) is pinned in our goal corner"
        )
    heuristic = prepare_heuristic(puck[:2], config, geom)
    desired_speed = float(np.linalg.norm(heuristic.puck_velocity))
    base = heuristic.puck_velocity / desired_speed

    offsets = [(0.0, 1.0)] + [
        (rng.normal(0.0, ANGLE_JITTER), 1.0 + rng.normal(0.0, SPEED_SCALE_JITTER))
        for _ in range(n_samples - 1)
    ]
    best = None
    for angle, scale in offsets:
        normal = rotate_vector(base, angle)
        mallet_xy = puck[:2] - r * normal
        if not (x_min <= mallet_xy[0] <= x_max and abs(mallet_xy[1]) <= y_max):
            continue
        u = push_speed(model, puck, mallet_xy, normal, desired_speed * max(scale, 0.1), cap)
        post = post_contact_state(model, puck, mallet_xy, u * normal)
        miss = miss_distance(model, post, heuristic.point, ROLLOUT_HORIZON)
        if best is None or miss < best[0]:
            best = (miss, mallet_xy, u * normal)

    if best is None:
        raise NoPlanError(
            f"no reachable preparation contact for puck at ({puck[0]:.3f}, {puck[1]:.3f})"
        )
    miss, mallet_xy, mallet_v = best
    log.debug("prepare_planned", miss=round(miss, 4), bank=heuristic.bank_point is not None)
    return ContactPlan(
        created_at=belief.stamp,
        contact_time=at_contact.stamp,
        contact_mallet_state=MalletState(
            x=float(mallet_xy[0]), y=float(mallet_xy[1]),
            vx=float(mallet_v[0]), vy=float(mallet_v[1]),
        ),
        objective=ObjectiveKind.PREPARE_TARGET,
        target_velocity=(float(heuristic.puck_velocity[0]), float(heuristic.puck_velocity[1])),
        expected_cost=miss,
    )
