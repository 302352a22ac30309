"""
Rule-based behavior selection.

Rules in priority order:
1. Defend  - puck in our half moving toward our goal faster than v_defend_threshold
2. Shoot   - puck in our half, slow, away from the side walls, in front of the
             defense line, and a shot is available
3. Prepare - puck slow in our half but near a side wall or behind the defense line
4. Home    - everything else

A switch is suppressed until the current mode has lasted min_dwell.
"""

from typing import Callable, Optional

import structlog

from ..models import Belief, BehaviorKind, BehaviorMode, TableGeometry, TacticConfig

log = structlog.get_logger(__name__)

ShotCheck = Callable[[Belief], bool]


def select_behavior(
    belief: Belief,
    config: TacticConfig,
    geometry: TableGeometry,
    can_shoot: Optional[ShotCheck] = None,
) -> tuple[BehaviorKind, str]:
    """Rule table without hysteresis. Returns the kind and the rule that fired."""
    x, y, vx, _ = (float(v) for v in belief.mean)
    if x >= 0.0:
        return BehaviorKind.HOME, "puck_in_opponent_half"
    if vx < -config.v_defend_threshold:
        return BehaviorKind.DEFEND, "puck_incoming"
    if belief.speed >= config.v_slow:
        return BehaviorKind.HOME, "puck_moving"

    near_wall = abs(y) > geometry.puck_y_limit - config.prepare_wall_margin
    behind_line = x < config.defense_line_x(geometry)
    if near_wall or behind_line:
        return BehaviorKind.PREPARE, "near_wall" if near_wall else "behind_defense_line"
    if can_shoot is None or can_shoot(belief):
        return BehaviorKind.SHOOT, "slow_puck"
    return BehaviorKind.HOME, "no_feasible_shot"


def decide_mode(
    belief: Belief,
    current: BehaviorMode,
    config: TacticConfig,
    now: float,
    geometry: Optional[TableGeometry] = None,
    can_shoot: Optional[ShotCheck] = None,
) -> BehaviorMode:
    """
    Next behavior mode. Pure in its arguments; with min_dwell = 0 the
    result depends only on the belief.
    """
    geometry = geometry or TableGeometry()
    if now - current.entered_at < config.min_dwell:
        return current
    kind, reason = select_behavior(belief, config, geometry, can_shoot)
    if kind == current.kind:
        return current
    log.debug("mode_switch", frm=current.kind.value, to=kind.value, reason=reason, t=now)
    return BehaviorMode(kind=kind, entered_at=now, reason=reason)
