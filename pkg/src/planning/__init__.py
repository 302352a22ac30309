"""Shot planning: contact geometry, speed models and the angle search."""

from .dataset import (
    load_shot_dataset,
    plan_shot_records,
    sample_shot_belief,
    write_shot_dataset,
)
from .shoot import (
    ContactPose,
    NoShotError,
    ShotEvaluation,
    angle_grid,
    belief_at_contact_time,
    contact_pose_from_angle,
    goal_probability,
    search_angles,
    shot_cost,
    solve_shot,
)
from .speed_model import (
    ArmSpeedMap,
    ConstantSpeedModel,
    SpeedModel,
    make_speed_model,
    max_contact_speed,
)

__all__ = [
    "load_shot_dataset",
    "plan_shot_records",
    "sample_shot_belief",
    "write_shot_dataset",
    "ContactPose",
    "NoShotError",
    "ShotEvaluation",
    "angle_grid",
    "belief_at_contact_time",
    "contact_pose_from_angle",
    "goal_probability",
    "search_angles",
    "shot_cost",
    "solve_shot",
    "ArmSpeedMap",
    "ConstantSpeedModel",
    "SpeedModel",
    "make_speed_model",
    "max_contact_speed",
]
