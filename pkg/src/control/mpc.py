"""
Sampling MPC toward a planned contact state.

Every cycle the terminal mallet velocity vT is sampled around the plan's
desired contact velocity (the desired velocity itself is candidate 0). Each
candidate is the minimum-acceleration trajectory from the current mallet
state to the contact position at the contact time, scored by

    w ||vT - v_des||^2 + penalty_weight * (wall hinge + speed hinge)

The lowest-cost candidate's first step is returned as a velocity command.
"""

import math
from typing import NamedTuple, Optional

import numpy as np
import structlog

from ..logging import TraceLogger
from ..models import ContactPlan, MalletCommand, MalletState, MpcConfig, SimConfig
from .basis import MIN_HORIZON, BasisSet, HorizonTooShortError, build_basis

log = structlog.get_logger(__name__)


class TrajectoryCandidate(NamedTuple):
    vT: np.ndarray
    positions: np.ndarray  # (K+1, 2)
    velocities: np.ndarray
    accelerations: np.ndarray
    cost: float
    penalty: float
    feasible: bool


class CandidateScores(NamedTuple):
    vT: np.ndarray  # (N, 2)
    positions: np.ndarray  # (N, K+1, 2)
    velocities: np.ndarray
    accelerations: np.ndarray
    cost: np.ndarray  # (N,)
    penalty: np.ndarray  # (N,) weighted hinge part of cost
    feasible: np.ndarray  # (N,) bool


def allowed_region(sim_config: SimConfig, wall_margin: float) -> tuple[float, float, float]:
    """
    Mallet bounds pulled in by the wall margin: (x_min, x_max, |y|_max).

    The centerline limit x_max is not a wall and keeps no extra margin.
    """
    x_min, x_max, y_max = sim_config.mallet_bounds()
    return x_min + wall_margin, x_max, y_max - wall_margin


def steps_to_contact(contact: ContactPlan, now: float, dt: float) -> int:
    return int(round((contact.contact_time - now) / dt))


def basis_for_contact(contact: ContactPlan, now: float, dt: float) -> BasisSet:
    """Cached basis for the time left until contact, quantized to the dt grid."""
    return build_basis(steps_to_contact(contact, now, dt), dt)


def score_candidates(
    basis: BasisSet,
    x0,
    v0,
    contact: ContactPlan,
    vT: np.ndarray,
    config: MpcConfig,
    sim_config: SimConfig,
) -> CandidateScores:
    """Vectorized rollout of candidate terminal velocities vT (N, 2)."""
    vT = np.atleast_2d(np.asarray(vT, dtype=float))
    target = contact.contact_mallet_state
    known = np.stack(
        [np.asarray(x0, float), np.asarray(v0, float), np.array([target.x, target.y])]
    )
    fixed, fixed_v, fixed_a = (M[:, :3] @ known for M in (basis.P, basis.V, basis.A))
    pos = fixed[None] + basis.P[None, :, 3, None] * vT[:, None, :]
    vel = fixed_v[None] + basis.V[None, :, 3, None] * vT[:, None, :]
    acc = fixed_a[None] + basis.A[None, :, 3, None] * vT[:, None, :]

    x_min, x_max, y_max = allowed_region(sim_config, config.wall_margin)
    tol = config.hinge_tolerance
    # the current state (k = 0) is not a decision and is never penalized
    p, v = pos[:, 1:], vel[:, 1:]
    wall = (
        np.maximum(0.0, x_min - p[..., 0] - tol)
        + np.maximum(0.0, p[..., 0] - x_max - tol)
        + np.maximum(0.0, np.abs(p[..., 1]) - y_max - tol)
    ).sum(axis=1)
    speed = np.maximum(0.0, np.linalg.norm(v, axis=2) - config.speed_cap - tol).sum(axis=1)
    hinge = wall + speed
    desired = np.array([target.vx, target.vy])
    penalty = config.penalty_weight * hinge
    cost = config.w_vel_err * np.sum((vT - desired) ** 2, axis=1) + penalty
    return CandidateScores(vT, pos, vel, acc, cost, penalty, hinge == 0.0)


def rollout_candidate(
    basis: BasisSet,
    x0,
    v0,
    contact: ContactPlan,
    vT,
    config: Optional[MpcConfig] = None,
    sim_config: Optional[SimConfig] = None,
) -> TrajectoryCandidate:
    """Trajectory reaching the contact position at contact time with terminal velocity vT."""
    if basis.K < MIN_HORIZON:
        raise HorizonTooShortError(f"horizon of {basis.K} steps is below {MIN_HORIZON}")
    scores = score_candidates(
        basis, x0, v0, contact, np.asarray(vT, float)[None, :],
        config or MpcConfig(), sim_config or SimConfig(),
    )
    return TrajectoryCandidate(
        vT=scores.vT[0],
        positions=scores.positions[0],
        velocities=scores.velocities[0],
        accelerations=scores.accelerations[0],
        cost=float(scores.cost[0]),
        penalty=float(scores.penalty[0]),
        feasible=bool(scores.feasible[0]),
    )


def sample_terminal_velocities(
    contact: ContactPlan, config: MpcConfig, rng: np.random.Generator
) -> np.ndarray:
    """Candidate 0 is the desired contact velocity; the rest are Gaussian around it."""
    desired = np.array(contact.desired_velocity, dtype=float)
    samples = np.empty((config.n_candidates, 2))
    samples[0] = desired
    if config.n_candidates > 1:
        samples[1:] = desired + config.sigma * rng.normal(size=(config.n_candidates - 1, 2))
    return samples


def mpc_step(
    mallet: MalletState,
    contact: ContactPlan,
    basis: BasisSet,
    config: MpcConfig,
    rng: np.random.Generator,
    sim_config: Optional[SimConfig] = None,
    trace: Optional[TraceLogger] = None,
    now: Optional[float] = None,
) -> MalletCommand:
    """
    One MPC cycle.

    The command is the average velocity over the first step of the winning
    trajectory, so the mallet lands on the planned grid point. Ties go to
    the lowest candidate index. When every candidate violates a limit, the
    lowest-penalty candidate is used and the command carries infeasible=True.
    """
    sim_config = sim_config or SimConfig()
    vT = sample_terminal_velocities(contact, config, rng)
    scores = score_candidates(
        basis, mallet.position, mallet.velocity, contact, vT, config, sim_config
    )
    n_feasible = int(np.count_nonzero(scores.feasible))
    if n_feasible:
        best = int(np.argmin(scores.cost))
    else:
        best = int(np.argmin(scores.penalty))
    infeasible = not bool(scores.feasible[best])
    first = (scores.positions[best, 1] - scores.positions[best, 0]) / basis.dt
    cmd = MalletCommand(
        target_velocity=(float(first[0]), float(first[1])), infeasible=infeasible
    ).clamped(config.speed_cap)
    if trace is not None and now is not None:
        trace.log_mpc(now, n_feasible, float(scores.cost[best]), scores.vT[best])
    if n_feasible == 0:
        log.debug("mpc_all_infeasible", penalty=round(float(scores.penalty[best]), 4))
    return cmd


def final_approach_command(
    mallet: MalletState,
    contact: ContactPlan,
    now: float,
    dt: float,
    speed_cap: float,
) -> MalletCommand:
    """
    Straight-line velocity to the contact point when the horizon is under two steps.

    Past the contact time the desired contact velocity is held.
    """
    remaining = steps_to_contact(contact, now, dt)
    if remaining <= 0:
        vx, vy = contact.desired_velocity
        return MalletCommand(target_velocity=(vx, vy)).clamped(speed_cap)
    target = contact.contact_mallet_state
    span = remaining * dt
    v = ((target.x - mallet.x) / span, (target.y - mallet.y) / span)
    if not all(math.isfinite(c) for c in v):
        v = (0.0, 0.0)
    return MalletCommand(target_velocity=v).clamped(speed_cap)


def track_contact(
    mallet: MalletState,
    contact: ContactPlan,
    now: float,
    config: MpcConfig,
    rng: np.random.Generator,
    sim_config: Optional[SimConfig] = None,
    trace: Optional[TraceLogger] = None,
) -> MalletCommand:
    """mpc_step when the horizon allows it, final_approach_command otherwise."""
    sim_config = sim_config or SimConfig()
    try:
        basis = basis_for_contact(contact, now, sim_config.dt)
    except HorizonTooShortError:
        return final_approach_command(mallet, contact, now, sim_config.dt, config.speed_cap)
    return mpc_step(mallet, contact, basis, config, rng, sim_config, trace, now)
