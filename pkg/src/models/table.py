"""
Table, puck and mallet records.

Frame: origin at the table center, +x toward the opponent goal, +y to the
agent's left. All lengths in meters, velocities in m/s.
"""

import math
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .enums import ContactKind, Side


class TableGeometry(BaseModel):
    """Table dimensions and contact parameters."""

    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    length: float = Field(default=1.948, gt=0)  # x-extent
    width: float = Field(default=1.038, gt=0)  # y-extent
    goal_width: float = Field(default=0.25, gt=0)
    puck_radius: float = Field(default=0.03165, gt=0)
    mallet_radius: float = Field(default=0.04815, gt=0)
    wall_restitution: float = Field(default=0.9, gt=0, le=1)
    wall_tangential_retention: float = Field(default=0.95, gt=0, le=1)
    mallet_restitution: float = Field(default=0.9, gt=0, le=1)
    damping_coeff: float = Field(default=0.1, ge=0)  # 1/s

    @model_validator(mode="after")
    def _check_fits(self) -> "TableGeometry":
        if self.goal_width >= self.width:
            raise ValueError("goal_width must be smaller than width")
        if self.puck_radius + self.mallet_radius >= self.width / 2:
            raise ValueError("puck_radius + mallet_radius must be below width/2")
        return self

    @property
    def contact_distance(self) -> float:
        """Center distance at which puck and mallet touch (r^m + r^p)."""
        return self.mallet_radius + self.puck_radius

    @property
    def puck_x_limit(self) -> float:
        return self.length / 2 - self.puck_radius

    @property
    def puck_y_limit(self) -> float:
        return self.width / 2 - self.puck_radius


class PuckState(BaseModel):
    """Planar puck state s^p = (x, y, vx, vy)."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    x: float
    y: float
    vx: float = 0.0
    vy: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.vx, self.vy])

    @classmethod
    def from_array(cls, s) -> "PuckState":
        return cls(x=float(s[0]), y=float(s[1]), vx=float(s[2]), vy=float(s[3]))

    @property
    def speed(self) -> float:
        return math.hypot(self.vx, self.vy)


class MalletState(BaseModel):
    """Planar mallet state s^m = (x, y, vx, vy)."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    x: float
    y: float
    vx: float = 0.0
    vy: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.vx, self.vy])

    @classmethod
    def from_array(cls, s) -> "MalletState":
        return cls(x=float(s[0]), y=float(s[1]), vx=float(s[2]), vy=float(s[3]))

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])

    @property
    def velocity(self) -> np.ndarray:
        return np.array([self.vx, self.vy])


class ContactEvent(BaseModel):
    """A wall or mallet contact recorded during a step."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    kind: ContactKind
    time: float
    contact_normal: tuple[float, float]  # Points from the obstacle into the puck

    @field_validator("contact_normal")
    @classmethod
    def _unit_normal(cls, v: tuple[float, float]) -> tuple[float, float]:
        if abs(math.hypot(v[0], v[1]) - 1.0) > 1e-9:
            raise ValueError(f"contact_normal must be a unit vector, got {v}")
        return v


class MalletCommand(BaseModel):
    """Velocity reference applied to the mallet for the next step."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    target_velocity: tuple[float, float] = (0.0, 0.0)
    infeasible: bool = False  # Set when every MPC candidate violated a limit

    def clamped(self, speed_cap: float) -> "MalletCommand":
        """Return the command with its speed limited to speed_cap."""
        vx, vy = self.target_velocity
        speed = math.hypot(vx, vy)
        if speed <= speed_cap:
            return self
        scale = speed_cap / speed
        return MalletCommand(
            target_velocity=(vx * scale, vy * scale), infeasible=self.infeasible
        )


class WorldState(BaseModel):
    """Complete simulator state. Steps produce new instances."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    puck: PuckState
    mallet: MalletState
    sim_time: float = 0.0
    last_contact: Optional[ContactEvent] = None
    opponent: Optional[MalletState] = None
    goal: Optional[Side] = None  # Set once the puck crossed a goal line
