"""
The hierarchical agent: one 50 Hz cycle per observation.

Flow:
1. Filter the noisy puck position (EKF over the learned model)
2. Pick a behavior mode (rule-based state machine with hysteresis)
3. Plan a contact for the mode, or keep the committed plan until its contact time
4. Track the contact with the sampling MPC
5. Optionally turn the mallet command into joint motion through the arm QP
"""

import math
import time
from typing import Optional

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict

from ..control import (
    JointState,
    fk,
    ik_dls,
    jacobian,
    min_singular_value,
    qp_track,
    track_contact,
)
from ..dynamics import PiecewiseModel
from ..estimation import PuckTracker
from ..logging import TraceLogger
from ..models import (
    Belief,
    BehaviorKind,
    BehaviorMode,
    ContactPlan,
    MalletCommand,
    MalletState,
    MatchConfig,
)
from ..planning import SpeedModel, make_speed_model
from ..policy import EnergyModelParams
from ..tactics import (
    NoPlanError,
    decide_mode,
    plan_defense,
    plan_home,
    plan_prepare,
    plan_shot,
)

log = structlog.get_logger(__name__)

STAGES = ("estimate", "decide", "plan", "mpc", "qp")
ARM_SYNC_TOLERANCE = 1e-4  # m


class CycleOutput(BaseModel):
    """What one agent cycle produced."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    command: MalletCommand
    mode: BehaviorKind
    belief: Belief
    new_plan: Optional[ContactPlan] = None  # set on cycles that created a plan
    latency_ms: Optional[float] = None
    stage_ms: Optional[dict[str, float]] = None


class Agent:
    """
    Per-match agent state: filter, behavior mode, committed plan and, when
    the arm is enabled, the joint state.

    Usage:
        agent = Agent(model, config, policy=params)
        out = agent.cycle(z, world.mallet, world.sim_time)
        world = sim.step(world, out.command, config.sim.dt)
    """

    def __init__(
        self,
        model: PiecewiseModel,
        config: MatchConfig,
        policy: Optional[EnergyModelParams] = None,
        speed_model: Optional[SpeedModel] = None,
        trace: Optional[TraceLogger] = None,
        rng: Optional[np.random.Generator] = None,
        name: str = "agent",
    ):
        self.model = model
        self.config = config
        self.policy = policy
        self.speed_model = speed_model or make_speed_model(config.shot, config.arm, config.sim)
        self.trace = trace
        self.rng = rng if rng is not None else np.random.default_rng(config.seed)
        self.name = name
        self.tracker = PuckTracker(model, config.estimator, trace)
        self.mode = BehaviorMode()
        self.plan: Optional[ContactPlan] = None
        self.joints: Optional[JointState] = None
        self._pending_shot: Optional[ContactPlan] = None
        self._last_mallet: Optional[MalletState] = None

    def reset(self, now: float = 0.0, mallet: Optional[MalletState] = None):
        """Forget the puck (after a goal or a re-serve) and return to Home."""
        self.tracker.reset()
        self.mode = BehaviorMode(entered_at=now)
        self.plan = None
        self._pending_shot = None
        self._last_mallet = None
        if self.config.arm_enabled and mallet is not None:
            self.joints = self.initial_joints(mallet)

    def initial_joints(self, mallet: MalletState) -> JointState:
        q = ik_dls(mallet.position, self.config.arm)
        return JointState(q=tuple(q.tolist()))

    def _can_shoot(self, belief: Belief) -> bool:
        # a committed shot stays valid until its contact time
        if self.mode.kind == BehaviorKind.SHOOT and not self._plan_expired(belief.stamp):
            return True
        try:
            self._pending_shot = plan_shot(
                belief,
                self.model,
                self.config.shot,
                self.rng,
                self.policy,
                self.config.sampler,
                self.speed_model,
                self.config.sim,
            )
        except NoPlanError:
            self._pending_shot = None
        return self._pending_shot is not None

    def _plan_for_mode(self, belief: Belief, now: float) -> ContactPlan:
        cfg = self.config
        kind = self.mode.kind
        try:
            if kind == BehaviorKind.SHOOT:
                if self._pending_shot is not None and self._pending_shot.created_at == now:
                    return self._pending_shot
                return plan_shot(
                    belief, self.model, cfg.shot, self.rng, self.policy,
                    cfg.sampler, self.speed_model, cfg.sim,
                )
            if kind == BehaviorKind.DEFEND:
                return plan_defense(belief, self.model, cfg.tactics, self.rng, sim_config=cfg.sim)
            if kind == BehaviorKind.PREPARE:
                return plan_prepare(belief, self.model, cfg.tactics, self.rng, sim_config=cfg.sim)
        except NoPlanError as e:
            log.debug("plan_fallback_home", mode=kind.value, reason=str(e), agent=self.name)
        return plan_home(now, cfg.tactics, cfg.sim)

    def _plan_expired(self, now: float) -> bool:
        return self.plan is None or now >= self.plan.contact_time - 1e-9

    def _joint_command(self, cmd: MalletCommand, mallet: MalletState, now: float) -> MalletCommand:
        """Track the command with the arm QP; the mallet follows fk of the new joints."""
        cfg = self.config
        if self.joints is None:
            self.joints = self.initial_joints(mallet)
        elif np.linalg.norm(fk(self.joints.q_array, cfg.arm) - mallet.position) > ARM_SYNC_TOLERANCE:
            # the sim clamped the mallet (speed cap or bounds); follow it
            q = ik_dls(mallet.position, cfg.arm, q0=self.joints.q_array)
            self.joints = JointState(q=tuple(q.tolist()), q_dot=self.joints.q_dot)
        q_ref = None
        if self.mode.kind == BehaviorKind.SHOOT and cfg.arm.q_ref_shoot is not None:
            q_ref = cfg.arm.q_ref_shoot
        self.joints = qp_track(self.joints, cmd, cfg.arm, cfg.sim.dt, q_ref)
        target = fk(self.joints.q_array, cfg.arm)
        v = (target - mallet.position) / cfg.sim.dt
        if self.trace is not None:
            sv = min_singular_value(jacobian(self.joints.q_array, cfg.arm))
            self.trace.log_joints(now, self.joints.q, self.joints.q_dot, sv)
        return MalletCommand(target_velocity=(float(v[0]), float(v[1])), infeasible=cmd.infeasible)

    def cycle(self, z, mallet: MalletState, now: float) -> CycleOutput:
        """One control tick: observation z at time now, current mallet state."""
        record = self.config.record_latency
        marks = [time.perf_counter()] if record else None
        cfg = self.config

        # mallet position at the start of the step, velocity it moved with
        start = self._last_mallet or mallet
        s_m = np.array([start.x, start.y, mallet.vx, mallet.vy])
        self._last_mallet = mallet
        belief = self.tracker.step(z, s_m, now)
        if record:
            marks.append(time.perf_counter())

        previous = self.mode
        self._pending_shot = None
        self.mode = decide_mode(
            belief, previous, cfg.tactics, now, cfg.sim.geometry, self._can_shoot
        )
        if self.mode is not previous:
            self.plan = None
            if self.trace is not None:
                self.trace.log_mode_switch(
                    now, previous.kind.value, self.mode.kind.value, self.mode.reason
                )
        if record:
            marks.append(time.perf_counter())

        new_plan = None
        if self._plan_expired(now):
            self.plan = new_plan = self._plan_for_mode(belief, now)
        if record:
            marks.append(time.perf_counter())

        cmd = track_contact(mallet, self.plan, now, cfg.mpc, self.rng, cfg.sim, self.trace)
        if record:
            marks.append(time.perf_counter())

        if cfg.arm_enabled:
            cmd = self._joint_command(cmd, mallet, now)
        cmd = cmd.clamped(cfg.sim.mallet_speed_cap)
        if not all(math.isfinite(c) for c in cmd.target_velocity):
            log.error("non_finite_command", agent=self.name, t=now)
            cmd = MalletCommand(infeasible=True)
        if record:
            marks.append(time.perf_counter())

        latency_ms = stage_ms = None
        if record:
            stage_ms = {
                stage: (b - a) * 1e3 for stage, a, b in zip(STAGES, marks, marks[1:])
            }
            latency_ms = (marks[-1] - marks[0]) * 1e3
        return CycleOutput(
            command=cmd,
            mode=self.mode.kind,
            belief=belief,
            new_plan=new_plan,
            latency_ms=latency_ms,
            stage_ms=stage_ms,
        )


class MirrorAgent:
    """
    The same agent playing the far side: observations and the opponent mallet
    are rotated by 180 degrees into its frame, commands rotated back.
    """

    def __init__(self, agent: Agent):
        self.agent = agent

    def reset(self, now: float = 0.0, mallet: Optional[MalletState] = None):
        self.agent.reset(now, None if mallet is None else _half_turn_mallet(mallet))

    def cycle(self, z, mallet: MalletState, now: float) -> MalletCommand:
        out = self.agent.cycle(-np.asarray(z, dtype=float), _half_turn_mallet(mallet), now)
        vx, vy = out.command.target_velocity
        return MalletCommand(target_velocity=(-vx, -vy), infeasible=out.command.infeasible)


def _half_turn_mallet(m: MalletState) -> MalletState:
    return MalletState(x=-m.x, y=-m.y, vx=-m.vx, vy=-m.vy)
