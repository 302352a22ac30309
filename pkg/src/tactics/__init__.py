"""Behavior state machine and the online contact planners."""

from .defense import (
    NoPlanError,
    PredictedPath,
    heads_into_goal,
    kill_speed,
    plan_defense,
    post_contact_state,
    predict_crossing,
    rotate_vector,
)
from .prepare import (
    PrepareTarget,
    in_goal_corner,
    miss_distance,
    plan_prepare,
    prepare_heuristic,
    push_speed,
)
from .shooting import plan_home, plan_shot
from .state_machine import decide_mode, select_behavior

__all__ = [
    "NoPlanError",
    "PredictedPath",
    "heads_into_goal",
    "kill_speed",
    "plan_defense",
    "post_contact_state",
    "predict_crossing",
    "rotate_vector",
    "PrepareTarget",
    "in_goal_corner",
    "miss_distance",
    "plan_prepare",
    "prepare_heuristic",
    "push_speed",
    "plan_home",
    "plan_shot",
    "decide_mode",
    "select_behavior",
]
