"""
Shot and rest plans for the agent.

Online shots query the energy policy for the angle and place the mallet on
the contact circle; without a trained policy the angle search runs directly.
"""

import math
from typing import Optional

import numpy as np

from ..dynamics import PiecewiseModel
from ..models import (
    Belief,
    ContactPlan,
    MalletState,
    ObjectiveKind,
    SamplerConfig,
    ShotConfig,
    SimConfig,
    TacticConfig,
)
from ..planning import (
    NoShotError,
    SpeedModel,
    belief_at_contact_time,
    contact_pose_from_angle,
    solve_shot,
)
from ..planning.speed_model import ConstantSpeedModel
from ..policy import EnergyModelParams, ebm_infer
from .defense import NoPlanError


def plan_shot(
    belief: Belief,
    model: PiecewiseModel,
    shot_config: ShotConfig,
    rng: np.random.Generator,
    policy: Optional[EnergyModelParams] = None,
    sampler: Optional[SamplerConfig] = None,
    speed_model: Optional[SpeedModel] = None,
    sim_config: Optional[SimConfig] = None,
) -> ContactPlan:
    """ShotAngle contact plan at stamp + contact_lead_time."""
    sim_config = sim_config or SimConfig()
    speed_model = speed_model or ConstantSpeedModel(shot_config.constant_speed)
    at_contact = belief_at_contact_time(belief, model, shot_config.contact_lead_time)
    if at_contact.stamp <= belief.stamp:
        raise NoPlanError("contact lead time is shorter than one model step")

    if policy is None:
        try:
            shot = solve_shot(belief, model, shot_config, speed_model, sim_config)
        except NoShotError as e:
            raise NoPlanError(str(e)) from e
        angle = shot.angle
        contact_state = shot.contact_mallet_state
        cost = shot.predicted_cost
    else:
        angle = ebm_infer(policy, at_contact.mean, sampler, rng)
        pose = contact_pose_from_angle(at_contact.position, angle, model.geometry, sim_config)
        if not pose.feasible:
            raise NoPlanError(f"policy angle {angle:.3f} puts the mallet out of reach")
        u = speed_model.speed(pose.position)
        if u <= 0.0:
            raise NoPlanError(f"no contact speed available at angle {angle:.3f}")
        contact_state = MalletState(
            x=float(pose.position[0]),
            y=float(pose.position[1]),
            vx=u * math.cos(angle),
            vy=u * math.sin(angle),
        )
        cost = None

    return ContactPlan(
        created_at=belief.stamp,
        contact_time=at_contact.stamp,
        contact_mallet_state=contact_state,
        objective=ObjectiveKind.SHOT_ANGLE,
        shot_angle=angle,
        expected_cost=cost,
    )


def plan_home(now: float, config: TacticConfig, sim_config: Optional[SimConfig] = None) -> ContactPlan:
    """Rest pose in front of our goal, reached at rest after home_lead_time."""
    sim_config = sim_config or SimConfig()
    x, y = config.home_position(sim_config.geometry)
    return ContactPlan(
        created_at=now,
        contact_time=now + config.home_lead_time,
        contact_mallet_state=MalletState(x=x, y=y),
        objective=ObjectiveKind.HOME,
    )
