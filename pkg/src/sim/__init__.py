"""Ground-truth air-hockey simulator."""

from .physics import (
    DEFAULT_CONTACT_TOLERANCE,
    DegenerateContactError,
    Reflection,
    SimulationError,
    Wall,
    check_goal,
    classify_mode,
    classify_xy,
    nearest_wall,
    reflect_wall,
    resolve_mallet_contact,
    table_walls,
    wall_gap,
)
from .world import AirHockeySim, rotate_half_turn

__all__ = [
    "DEFAULT_CONTACT_TOLERANCE",
    "DegenerateContactError",
    "Reflection",
    "SimulationError",
    "Wall",
    "check_goal",
    "classify_mode",
    "classify_xy",
    "nearest_wall",
    "reflect_wall",
    "resolve_mallet_contact",
    "table_walls",
    "wall_gap",
    "AirHockeySim",
    "rotate_half_turn",
]
