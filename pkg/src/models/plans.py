from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .enums import BehaviorKind, ObjectiveKind
from .table import MalletState


class BehaviorMode(BaseModel):
    """Current state-machine mode and when it was entered."""

    model_config = ConfigDict(frozen=True)

    kind: BehaviorKind = BehaviorKind.HOME
    entered_at: float = 0.0
    reason: str = "start"  # rule that selected the mode


class ContactPlan(BaseModel):
    """
    Target mallet state at a fixed future contact time.

    Produced by the shoot, defend and prepare planners (and by Home, which
    targets the rest pose). The objective tag says what the contact is for:
    - ShotAngle: shot_angle holds the contact angle a
    - KillVelocity: stop the puck's motion toward our goal
    - PrepareTarget: target_velocity is the desired puck velocity after contact
    """

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    created_at: float
    contact_time: float  # absolute simulation time
    contact_mallet_state: MalletState
    objective: ObjectiveKind
    shot_angle: Optional[float] = None
    target_velocity: Optional[tuple[float, float]] = None
    expected_cost: Optional[float] = None

    @model_validator(mode="after")
    def _check_tag(self) -> "ContactPlan":
        if self.contact_time <= self.created_at:
            raise ValueError("contact_time must lie in the future")
        if self.objective == ObjectiveKind.SHOT_ANGLE and self.shot_angle is None:
            raise ValueError("ShotAngle plans need shot_angle")
        if (
            self.objective == ObjectiveKind.PREPARE_TARGET
            and self.target_velocity is None
        ):
            raise ValueError("PrepareTarget plans need target_velocity")
        return self

    @property
    def desired_velocity(self):
        return (self.contact_mallet_state.vx, self.contact_mallet_state.vy)


class ShotPlan(BaseModel):
    """Solution of the stochastic shooting problem for one belief."""

    model_config = ConfigDict(frozen=True)

    angle: float
    contact_mallet_state: MalletState
    contact_time: float
    predicted_p_goal: float = Field(ge=0.0, le=1.0)
    predicted_cost: float
