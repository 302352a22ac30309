"""
Contact physics for the planar table.

Walls and mallets are treated as infinitely heavy: a contact only changes the
puck velocity. Normals always point from the obstacle into the puck.
"""

import math
from typing import NamedTuple, Optional

import numpy as np
import structlog

from ..models import (
    DynamicsMode,
    HockeyError,
    MalletState,
    PuckState,
    Side,
    TableGeometry,
)

log = structlog.get_logger(__name__)

DEFAULT_CONTACT_TOLERANCE = 0.001


class SimulationError(HockeyError):
    """Raised when the simulator is handed invalid input."""

    pass


class DegenerateContactError(SimulationError):
    """Raised when puck and mallet centers coincide (no contact normal)."""

    pass


class Wall(NamedTuple):
    """A straight wall seen by the puck center."""

    name: str
    normal: tuple[float, float]  # unit, into the table
    limit: float  # puck center satisfies p . normal >= -limit


class Reflection(NamedTuple):
    velocity: np.ndarray
    applied: bool  # False when the velocity was already separating


def table_walls(geom: TableGeometry) -> tuple[Wall, ...]:
    return (
        Wall("top", (0.0, -1.0), geom.puck_y_limit),
        Wall("bottom", (0.0, 1.0), geom.puck_y_limit),
        Wall("theirs", (-1.0, 0.0), geom.puck_x_limit),
        Wall("ours", (1.0, 0.0), geom.puck_x_limit),
    )


def wall_gap(x: float, y: float, wall: Wall) -> float:
    """Signed distance from the puck center to the wall's contact line."""
    return x * wall.normal[0] + y * wall.normal[1] + wall.limit


def nearest_wall(x: float, y: float, geom: TableGeometry) -> tuple[Wall, float]:
    """
    Closest wall to a puck center, with its gap.

    End walls only exist outside the goal mouth, so a puck lined up with a
    goal never reports an end wall.
    """
    best: Optional[Wall] = None
    best_gap = math.inf
    in_mouth = abs(y) < geom.goal_width / 2
    for wall in table_walls(geom):
        if wall.normal[0] != 0.0 and in_mouth:
            continue
        gap = wall_gap(x, y, wall)
        if gap < best_gap:
            best, best_gap = wall, gap
    return best, best_gap


def reflect_wall(v, normal, e_n: float, e_t: float) -> Reflection:
    """
    Reflect a velocity off a wall.

    The normal component is reversed and scaled by e_n, the tangential one
    scaled by e_t. A separating velocity (v . normal >= 0) is returned
    unchanged with applied=False.
    """
    v = np.asarray(v, dtype=float)
    n = np.asarray(normal, dtype=float)
    vn = float(v @ n)
    if vn >= 0.0:
        return Reflection(v.copy(), False)
    v_normal = vn * n
    v_tangent = v - v_normal
    return Reflection(e_t * v_tangent - e_n * v_normal, True)


def _mallet_impulse(
    px: float, py: float, pvx: float, pvy: float,
    mx: float, my: float, mvx: float, mvy: float,
    e_m: float, contact_distance: float,
) -> tuple[float, float, float, float, float, float]:
    """Scalar core of the puck/mallet contact. Returns puck state and normal."""
    dx = px - mx
    dy = py - my
    dist = math.hypot(dx, dy)
    if dist < 1e-12:
        raise DegenerateContactError("puck and mallet centers coincide")
    nx = dx / dist
    ny = dy / dist
    # relative velocity in the mallet frame
    rvx = pvx - mvx
    rvy = pvy - mvy
    vn = rvx * nx + rvy * ny
    if vn < 0.0:
        k = (1.0 + e_m) * vn
        rvx -= k * nx
        rvy -= k * ny
    # push out of penetration
    if dist < contact_distance:
        px = mx + nx * contact_distance
        py = my + ny * contact_distance
    return px, py, mvx + rvx, mvy + rvy, nx, ny


def resolve_mallet_contact(
    puck: PuckState,
    mallet: MalletState,
    e_m: float,
    geom: TableGeometry,
    tolerance: float = DEFAULT_CONTACT_TOLERANCE,
) -> PuckState:
    """Apply a puck/mallet contact with restitution e_m in the mallet frame."""
    dist = math.hypot(puck.x - mallet.x, puck.y - mallet.y)
    if dist > geom.contact_distance + tolerance:
        raise SimulationError(
            f"puck and mallet are not in contact (distance {dist:.4f} m)"
        )
    px, py, vx, vy, _, _ = _mallet_impulse(
        puck.x, puck.y, puck.vx, puck.vy,
        mallet.x, mallet.y, mallet.vx, mallet.vy,
        e_m, geom.contact_distance,
    )
    return PuckState(x=px, y=py, vx=vx, vy=vy)


def classify_mode(
    puck: PuckState,
    mallet: Optional[MalletState],
    geom: TableGeometry,
    tolerance: float = DEFAULT_CONTACT_TOLERANCE,
) -> DynamicsMode:
    """
    Dynamics mode of a puck/mallet configuration.

    Mallet contact wins over wall contact. A missing mallet counts as far away.
    """
    return classify_xy(
        puck.x, puck.y,
        None if mallet is None else (mallet.x, mallet.y),
        geom, tolerance,
    )


def classify_xy(
    x: float,
    y: float,
    mallet_xy: Optional[tuple[float, float]],
    geom: TableGeometry,
    tolerance: float = DEFAULT_CONTACT_TOLERANCE,
) -> DynamicsMode:
    if mallet_xy is not None:
        dist = math.hypot(x - mallet_xy[0], y - mallet_xy[1])
        if dist <= geom.contact_distance + tolerance:
            return DynamicsMode.MALLET
    _, gap = nearest_wall(x, y, geom)
    if gap <= tolerance:
        return DynamicsMode.WALL
    return DynamicsMode.FREE


def check_goal(puck: PuckState, geom: TableGeometry) -> Optional[Side]:
    """Report the goal the puck center has crossed into, if any."""
    if abs(puck.y) >= geom.goal_width / 2:
        return None
    if puck.x > geom.length / 2:
        return Side.THEIRS
    if puck.x < -geom.length / 2:
        return Side.OURS
    return None
