"""
Ground-truth air-hockey world.

The puck is integrated with semi-implicit Euler on fixed substeps (1 ms by
default) with exponential velocity damping; walls and mallets are resolved
after every substep. Mallets are velocity-commanded discs clamped to their
half of the table. step() never mutates its input.
"""

import math
from typing import Optional

import numpy as np
import structlog

from ..models import (
    ContactEvent,
    ContactKind,
    MalletCommand,
    MalletState,
    PuckState,
    Side,
    SimConfig,
    WorldState,
)
from .physics import SimulationError, _mallet_impulse

log = structlog.get_logger(__name__)


def rotate_half_turn(state):
    """Rotate a puck or mallet state by 180 degrees about the table center."""
    return type(state)(x=-state.x, y=-state.y, vx=-state.vx, vy=-state.vy)


class AirHockeySim:
    """
    Deterministic, seedable planar air-hockey table.

    Usage:
        sim = AirHockeySim(SimConfig())
        world = sim.reset(PuckState(x=-0.4, y=0.0), mallet_xy=(-0.8, 0.0))
        world = sim.step(world, MalletCommand(target_velocity=(0.5, 0.0)), 0.02)
    """

    def __init__(self, config: Optional[SimConfig] = None):
        self.config = config or SimConfig()
        self.geometry = self.config.geometry

    def reset(
        self,
        puck: PuckState,
        mallet_xy: tuple[float, float],
        opponent_xy: Optional[tuple[float, float]] = None,
        sim_time: float = 0.0,
    ) -> WorldState:
        opponent = None
        if opponent_xy is not None:
            opponent = MalletState(x=opponent_xy[0], y=opponent_xy[1])
        return WorldState(
            puck=puck,
            mallet=MalletState(x=mallet_xy[0], y=mallet_xy[1]),
            opponent=opponent,
            sim_time=sim_time,
        )

    def opponent_bounds(self) -> tuple[float, float, float]:
        """(x_min, x_max, |y|_max) for the opponent mallet center."""
        x_min, x_max, y_max = self.config.mallet_bounds()
        return (-x_max, -x_min, y_max)

    def step(
        self,
        world: WorldState,
        cmd: MalletCommand,
        dt: float,
        rng: Optional[np.random.Generator] = None,
        opponent_cmd: Optional[MalletCommand] = None,
    ) -> WorldState:
        """
        Advance the world by dt seconds.

        Puck velocity noise is only applied when an rng is given. A puck that
        crossed a goal line stays frozen there until the caller resets it.
        """
        if not (math.isfinite(dt) and dt > 0):
            raise SimulationError(f"dt must be finite and positive, got {dt}")

        cfg = self.config
        geom = self.geometry
        n_sub = max(1, int(round(dt / cfg.substep)))
        h = dt / n_sub
        decay = math.exp(-geom.damping_coeff * h)
        e_n = geom.wall_restitution
        e_t = geom.wall_tangential_retention
        e_m = geom.mallet_restitution
        r_contact = geom.contact_distance
        x_lim = geom.puck_x_limit
        y_lim = geom.puck_y_limit
        half_goal = geom.goal_width / 2
        half_length = geom.length / 2

        noise = None
        if rng is not None and cfg.puck_velocity_noise > 0:
            noise = rng.normal(size=(n_sub, 2)) * (cfg.puck_velocity_noise * math.sqrt(h))

        px, py, pvx, pvy = world.puck.x, world.puck.y, world.puck.vx, world.puck.vy
        mallets = [
            self._mallet_track(world.mallet, cmd, cfg.mallet_bounds())
        ]
        if world.opponent is not None:
            mallets.append(
                self._mallet_track(
                    world.opponent, opponent_cmd or MalletCommand(), self.opponent_bounds()
                )
            )

        goal = world.goal
        contact: Optional[ContactEvent] = world.last_contact
        t0 = world.sim_time

        for i in range(n_sub):
            for m in mallets:
                m.advance(h)
            if goal is not None:
                continue

            if noise is not None:
                pvx += noise[i, 0]
                pvy += noise[i, 1]
            pvx *= decay
            pvy *= decay
            px += pvx * h
            py += pvy * h
            t_sub = t0 + (i + 1) * h

            for m in mallets:
                if math.hypot(px - m.x, py - m.y) <= r_contact:
                    px, py, pvx, pvy, nx, ny = _mallet_impulse(
                        px, py, pvx, pvy, m.x, m.y, m.vx, m.vy, e_m, r_contact
                    )
                    contact = ContactEvent(
                        kind=ContactKind.MALLET, time=t_sub, contact_normal=(nx, ny)
                    )

            # side walls
            if py > y_lim:
                if pvy > 0:
                    pvy = -e_n * pvy
                    pvx *= e_t
                    py = y_lim - e_n * (py - y_lim)
                    contact = ContactEvent(
                        kind=ContactKind.WALL, time=t_sub, contact_normal=(0.0, -1.0)
                    )
                py = min(py, y_lim)
            elif py < -y_lim:
                if pvy < 0:
                    pvy = -e_n * pvy
                    pvx *= e_t
                    py = -y_lim - e_n * (py + y_lim)
                    contact = ContactEvent(
                        kind=ContactKind.WALL, time=t_sub, contact_normal=(0.0, 1.0)
                    )
                py = max(py, -y_lim)

            # end walls, open where the goal mouth is
            in_mouth = cfg.goals_open and abs(py) < half_goal
            if abs(px) > x_lim and not in_mouth:
                sign = 1.0 if px > 0 else -1.0
                if pvx * sign > 0:
                    pvx = -e_n * pvx
                    pvy *= e_t
                    px = sign * x_lim - e_n * (px - sign * x_lim)
                    contact = ContactEvent(
                        kind=ContactKind.WALL, time=t_sub, contact_normal=(-sign, 0.0)
                    )
                px = max(-x_lim, min(px, x_lim))
            elif in_mouth and abs(px) > half_length:
                goal = Side.THEIRS if px > 0 else Side.OURS
                log.debug("goal", side=goal.value, t=round(t_sub, 6))

        return WorldState(
            puck=PuckState(x=px, y=py, vx=pvx, vy=pvy),
            mallet=mallets[0].state(),
            opponent=mallets[1].state() if len(mallets) > 1 else None,
            sim_time=t0 + dt,
            last_contact=contact,
            goal=goal,
        )

    def observe(
        self,
        world: WorldState,
        rng: np.random.Generator,
        sigma_obs: Optional[float] = None,
    ) -> np.ndarray:
        """Noisy puck position: truth plus i.i.d. N(0, sigma_obs^2) per axis."""
        sigma = self.config.observation_noise if sigma_obs is None else sigma_obs
        if sigma < 0:
            raise SimulationError("sigma_obs must be non-negative")
        z = np.array([world.puck.x, world.puck.y])
        if sigma == 0:
            return z
        return z + rng.normal(0.0, sigma, size=2)

    def puck_inside(self, puck: PuckState) -> bool:
        """Whether a puck center satisfies the table bounds (goal-mouth aside)."""
        tol = self.config.position_tolerance
        return (
            abs(puck.x) <= self.geometry.puck_x_limit + tol
            and abs(puck.y) <= self.geometry.puck_y_limit + tol
        )

    def _mallet_track(self, mallet, cmd, bounds) -> "_MalletTrack":
        clamped = cmd.clamped(self.config.mallet_speed_cap)
        vx, vy = clamped.target_velocity
        return _MalletTrack(mallet.x, mallet.y, vx, vy, bounds)


class _MalletTrack:
    """Mutable per-step mallet integrator (scalar math on the hot path)."""

    __slots__ = ("x", "y", "vx", "vy", "cmd_vx", "cmd_vy", "bounds")

    def __init__(self, x, y, vx, vy, bounds):
        self.x, self.y = x, y
        self.cmd_vx, self.cmd_vy = vx, vy
        self.vx, self.vy = vx, vy
        self.bounds = bounds

    def advance(self, h: float) -> None:
        x_min, x_max, y_max = self.bounds
        x = self.x + self.cmd_vx * h
        y = self.y + self.cmd_vy * h
        # a mallet pressed against its bound stops along that axis
        self.vx = self.cmd_vx
        self.vy = self.cmd_vy
        if x < x_min or x > x_max:
            x = min(max(x, x_min), x_max)
            self.vx = 0.0
        if abs(y) > y_max:
            y = math.copysign(y_max, y)
            self.vy = 0.0
        self.x, self.y = x, y

    def state(self) -> MalletState:
        return MalletState(x=self.x, y=self.y, vx=self.vx, vy=self.vy)
