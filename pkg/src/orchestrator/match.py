"""
Match runner: steps the simulator at dt, feeds noisy observations to the
agent, records traces and computes match metrics.

RNG streams (serve, process noise, observation noise, agent, opponent agent)
are spawned from one SeedSequence, so a seed fixes the whole match.
"""

import json
import math
from pathlib import Path
from typing import Optional

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..dynamics import PiecewiseModel
from ..logging import TraceLogger, get_trace_logger, init_trace_logger
from ..models import (
    BehaviorKind,
    ContactKind,
    MalletCommand,
    MatchConfig,
    OpponentKind,
    PuckStart,
    PuckState,
    Side,
    WorldState,
)
from ..policy import EnergyModelParams
from ..sim import AirHockeySim
from .agent import Agent, MirrorAgent

log = structlog.get_logger(__name__)

STATIC_WALL_OFFSET = 0.1  # from the opponent goal line
TRIAL_DURATION = 3.0  # s per shooting trial


class Metrics(BaseModel):
    """Outcome of one match."""

    model_config = ConfigDict(frozen=True)

    goals_for: int = Field(default=0, ge=0)
    goals_against: int = Field(default=0, ge=0)
    shots_attempted: int = Field(default=0, ge=0)
    shot_success_rate: float = Field(default=0.0, ge=0.0, le=1.0)
    latency_mean_ms: Optional[float] = None
    latency_p50_ms: Optional[float] = None
    latency_p95_ms: Optional[float] = None
    mode_occupancy: dict[str, float] = Field(default_factory=dict)
    estimator_rmse: float = Field(default=0.0, ge=0.0)  # puck position, m
    mode_transitions: int = Field(default=0, ge=0)
    cycles: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _check_occupancy(self) -> "Metrics":
        if self.cycles > 0 and abs(sum(self.mode_occupancy.values()) - 1.0) > 1e-9:
            raise ValueError("mode occupancy fractions must sum to 1")
        return self


class ShotTrials(BaseModel):
    """Stationary-puck shooting trials."""

    model_config = ConfigDict(frozen=True)

    trials: int = Field(ge=0)
    goals: int = Field(ge=0)
    own_goals: int = Field(default=0, ge=0)
    success_rate: float = Field(ge=0.0, le=1.0)


def serve_puck(config: MatchConfig, rng: np.random.Generator, start: Optional[PuckStart] = None) -> PuckState:
    """A launched puck from the opponent half aimed into ours, or a puck at rest in ours."""
    geom = config.sim.geometry
    start = start or config.start
    if start == PuckStart.STATIONARY:
        return PuckState(
            x=rng.uniform(-geom.length / 2 + 0.25, -0.2),
            y=rng.uniform(-geom.puck_y_limit + 0.1, geom.puck_y_limit - 0.1),
        )
    x = rng.uniform(0.3, 0.6)
    y = rng.uniform(-0.3, 0.3)
    aim_y = rng.uniform(-0.8, 0.8) * geom.puck_y_limit
    speed = rng.uniform(*config.serve_speed)
    heading = math.atan2(aim_y - y, -geom.length / 2 - x)
    return PuckState(x=x, y=y, vx=speed * math.cos(heading), vy=speed * math.sin(heading))


class MatchRunner:
    """
    One match against the configured opponent.

    Usage:
        runner = MatchRunner(config, model, policy)
        metrics = runner.run()
        runner.stage_ms  # per-cycle stage timings when record_latency is set
    """

    def __init__(
        self,
        config: MatchConfig,
        model: PiecewiseModel,
        policy: Optional[EnergyModelParams] = None,
        trace: Optional[TraceLogger] = None,
    ):
        self.config = config
        self.model = model
        self.policy = policy
        self.trace = trace if trace is not None else get_trace_logger()
        self.sim = AirHockeySim(config.sim)

        streams = np.random.SeedSequence(config.seed).spawn(5)
        self.serve_rng, self.process_rng, self.obs_rng, agent_rng, opponent_rng = (
            np.random.default_rng(s) for s in streams
        )
        self.agent = Agent(model, config, policy, trace=self.trace, rng=agent_rng)
        self.opponent: Optional[MirrorAgent] = None
        if config.opponent == OpponentKind.MIRROR_AGENT:
            self.opponent = MirrorAgent(
                Agent(model, config, policy, rng=opponent_rng, name="opponent")
            )
        self.stage_ms: list[dict[str, float]] = []

    def _opponent_start(self) -> Optional[tuple[float, float]]:
        geom = self.config.sim.geometry
        if self.config.opponent == OpponentKind.STATIC_WALL:
            return (geom.length / 2 - STATIC_WALL_OFFSET, 0.0)
        if self.config.opponent == OpponentKind.MIRROR_AGENT:
            x, y = self.config.tactics.home_position(geom)
            return (-x, -y)
        return None

    def start(self, puck: PuckState, now: float = 0.0, world: Optional[WorldState] = None) -> WorldState:
        """Place the puck; mallets start at home or stay where they are on a re-serve."""
        if world is None:
            mallet_xy = self.config.tactics.home_position(self.config.sim.geometry)
            opponent_xy = self._opponent_start()
        else:
            mallet_xy = (world.mallet.x, world.mallet.y)
            opponent_xy = None if world.opponent is None else (world.opponent.x, world.opponent.y)
        world = self.sim.reset(puck, mallet_xy, opponent_xy, sim_time=now)
        self.agent.reset(now, world.mallet)
        if self.opponent is not None:
            self.opponent.reset(now, world.opponent)
        return world

    def run(self, duration: Optional[float] = None, start: Optional[PuckStart] = None) -> Metrics:
        cfg = self.config
        dt = cfg.sim.dt
        duration = cfg.duration if duration is None else duration
        n_cycles = int(round(duration / dt))

        world = self.start(serve_puck(cfg, self.serve_rng, start))
        self.trace.log_world(world, "serve")

        goals = {Side.THEIRS: 0, Side.OURS: 0}
        occupancy = {kind.value: 0 for kind in BehaviorKind}
        latencies: list[float] = []
        sq_errors: list[float] = []
        transitions = 0
        shots = successes = 0
        shot_pending = False
        previous_mode: Optional[BehaviorKind] = None

        for _ in range(n_cycles):
            now = world.sim_time
            z = self.sim.observe(world, self.obs_rng)
            out = self.agent.cycle(z, world.mallet, now)
            occupancy[out.mode.value] += 1
            if previous_mode is not None and out.mode != previous_mode:
                transitions += 1
            previous_mode = out.mode
            if out.latency_ms is not None:
                latencies.append(out.latency_ms)
                self.stage_ms.append(out.stage_ms)
            err = out.belief.mean[:2] - np.array([world.puck.x, world.puck.y])
            sq_errors.append(float(err @ err))

            opponent_cmd = None
            if self.opponent is not None and world.opponent is not None:
                opponent_cmd = self.opponent.cycle(z, world.opponent, now)
            elif world.opponent is not None:
                opponent_cmd = MalletCommand()

            nxt = self.sim.step(world, out.command, dt, rng=self.process_rng, opponent_cmd=opponent_cmd)
            contact = nxt.last_contact
            event = None
            if contact is not None and contact is not world.last_contact and contact.kind == ContactKind.MALLET:
                ours = nxt.puck.x < 0.0
                event = "hit" if ours else "opponent_hit"
                # a shot resolves at the next mallet contact or goal
                shot_pending = ours and out.mode == BehaviorKind.SHOOT
                shots += int(shot_pending)
            world = nxt

            if world.goal is not None:
                side = world.goal
                goals[side] += 1
                if side == Side.THEIRS and shot_pending:
                    successes += 1
                shot_pending = False
                self.trace.log_world(world, "goal_for" if side == Side.THEIRS else "goal_against")
                log.info("goal", side=side.value, t=round(world.sim_time, 4))
                world = self.start(serve_puck(cfg, self.serve_rng, start), world.sim_time, world)
                self.trace.log_world(world, "serve")
                previous_mode = None
            else:
                self.trace.log_world(world, event)

        cycles = n_cycles
        metrics = Metrics(
            goals_for=goals[Side.THEIRS],
            goals_against=goals[Side.OURS],
            shots_attempted=shots,
            shot_success_rate=successes / shots if shots else 0.0,
            latency_mean_ms=float(np.mean(latencies)) if latencies else None,
            latency_p50_ms=float(np.percentile(latencies, 50)) if latencies else None,
            latency_p95_ms=float(np.percentile(latencies, 95)) if latencies else None,
            mode_occupancy={k: v / cycles for k, v in occupancy.items()} if cycles else {},
            estimator_rmse=math.sqrt(float(np.mean(sq_errors))) if sq_errors else 0.0,
            mode_transitions=transitions,
            cycles=cycles,
        )
        log.info("match_finished", **metrics.model_dump(exclude={"mode_occupancy"}))
        return metrics


def run_match(
    config: MatchConfig,
    model: PiecewiseModel,
    policy: Optional[EnergyModelParams] = None,
    out_dir=None,
) -> Metrics:
    """
    Run one match; with out_dir, write the traces and metrics.json there.

    The global trace logger points at out_dir for the duration of the match.
    """
    init_trace_logger(out_dir)
    try:
        metrics = MatchRunner(config, model, policy).run()
        if out_dir is not None:
            get_trace_logger().flush()
            with open(Path(out_dir) / "metrics.json", "w") as f:
                json.dump(metrics.model_dump(), f, indent=2, sort_keys=True)
    finally:
        init_trace_logger()
    return metrics


def run_shooting_trials(
    config: MatchConfig,
    model: PiecewiseModel,
    policy: Optional[EnergyModelParams] = None,
    n_trials: int = 100,
    seed: Optional[int] = None,
    trial_duration: float = TRIAL_DURATION,
) -> ShotTrials:
    """
    Independent stationary-puck trials, each ended by the first goal or the
    timeout. Every trial gets its own seed stream.
    """
    if n_trials < 0:
        raise ValueError("n_trials must be non-negative")
    seed = config.seed if seed is None else seed
    dt = config.sim.dt
    goals = own_goals = 0
    trial_seeds = np.random.SeedSequence(seed).generate_state(max(n_trials, 1))
    for i in range(n_trials):
        trial_cfg = config.model_copy(
            update={"seed": int(trial_seeds[i]), "opponent": OpponentKind.NONE}
        )
        runner = MatchRunner(trial_cfg, model, policy)
        world = runner.start(serve_puck(trial_cfg, runner.serve_rng, PuckStart.STATIONARY))
        for _ in range(int(round(trial_duration / dt))):
            z = runner.sim.observe(world, runner.obs_rng)
            out = runner.agent.cycle(z, world.mallet, world.sim_time)
            world = runner.sim.step(world, out.command, dt, rng=runner.process_rng)
            if world.goal is not None:
                break
        goals += int(world.goal == Side.THEIRS)
        own_goals += int(world.goal == Side.OURS)
    rate = goals / n_trials if n_trials else 0.0
    log.info("shooting_trials", trials=n_trials, goals=goals, own_goals=own_goals, success_rate=rate)
    return ShotTrials(trials=n_trials, goals=goals, own_goals=own_goals, success_rate=rate)
