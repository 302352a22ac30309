"""
Tests for the minimum-acceleration basis and the sampling MPC toward a contact plan.
"""

import math

import numpy as np
import pytest

from src.control import (
    HorizonTooShortError,
    acceleration_functional,
    allowed_region,
    build_basis,
    mpc_step,
    rollout_candidate,
    score_candidates,
    track_contact,
)
from src.logging import TraceLogger
from src.models import (
    ContactPlan,
    MalletCommand,
    MalletState,
    MpcConfig,
    ObjectiveKind,
    PuckState,
    SimConfig,
)
from src.sim import AirHockeySim

DT = 0.02


def _plan(x, y, vx, vy, contact_time, created_at=0.0):
    return ContactPlan(
        created_at=created_at,
        contact_time=contact_time,
        contact_mallet_state=MalletState(x=x, y=y, vx=vx, vy=vy),
        objective=ObjectiveKind.KILL_VELOCITY,
    )


def test_zero_boundaries_give_zero_trajectory():
    basis = build_basis(20, DT)
    pos, vel, acc = basis.trajectory(np.zeros(2), np.zeros(2), np.zeros(2), np.zeros(2))
    assert not pos.any() and not vel.any() and not acc.any()


def test_hermite_midpoint():
    basis = build_basis(10, 0.1)
    pos, vel, _ = basis.trajectory(0.0, 0.0, 1.0, 1.5)
    assert pos[5] == pytest.approx(0.3125)
    assert pos[0] == 0.0 and pos[-1] == 1.0
    assert vel[0] == 0.0 and vel[-1] == 1.5


def test_basis_minimizes_acceleration():
    K = 200
    basis = build_basis(K, 1.0 / K)
    x0, v0, xT, vT = np.array([0.0, 0.2]), np.array([0.5, -0.3]), np.array([1.0, 0.0]), np.array([1.5, 0.4])
    _, _, acc = basis.trajectory(x0, v0, xT, vT)
    best = acceleration_functional(acc, basis.dt)

    s = basis.times / basis.T
    rng = np.random.default_rng(0)
    for _ in range(1000):
        # bump with zero endpoint positions and velocities: s^2 (1 - s)^2 (1 + b s)
        b = rng.uniform(-1.0, 1.0, 2)
        c = rng.uniform(0.1, 2.0, 2) * rng.choice([-1.0, 1.0], 2)
        bump_acc = 2 + 6 * (b - 2) * s[:, None] + 12 * (1 - 2 * b) * s[:, None] ** 2 + 20 * b * s[:, None] ** 3
        perturbed = acc + c * bump_acc / basis.T**2
        assert best <= acceleration_functional(perturbed, basis.dt)


def test_horizon_too_short():
    with pytest.raises(HorizonTooShortError):
        build_basis(1, DT)


def test_candidate_endpoints_are_exact():
    plan = _plan(-0.5, 0.1, 0.8, 0.3, 0.6)
    basis = build_basis(30, DT)
    vT = np.random.default_rng(1).normal(size=(16, 2))
    scores = score_candidates(basis, (-0.8, -0.1), (0.2, 0.0), plan, vT, MpcConfig(), SimConfig())
    np.testing.assert_allclose(scores.positions[:, 0], np.tile([-0.8, -0.1], (16, 1)), atol=1e-9)
    np.testing.assert_allclose(scores.positions[:, -1], np.tile([-0.5, 0.1], (16, 1)), atol=1e-9)
    np.testing.assert_allclose(scores.velocities[:, 0], np.tile([0.2, 0.0], (16, 1)), atol=1e-9)
    np.testing.assert_allclose(scores.velocities[:, -1], vT, atol=1e-9)


def test_desired_velocity_on_clear_path_costs_nothing():
    plan = _plan(-0.5, 0.0, 0.5, 0.0, 1.0)
    cand = rollout_candidate(build_basis(50, DT), (-0.8, 0.0), (0.0, 0.0), plan, (0.5, 0.0))
    assert cand.feasible
    assert cand.cost == 0.0


def test_contact_beyond_wall_margin_is_penalized():
    sim_config = SimConfig()
    config = MpcConfig()
    _, _, y_max = allowed_region(sim_config, config.wall_margin)
    plan = _plan(-0.5, y_max + 0.005, 0.0, 0.0, 0.5)
    cand = rollout_candidate(build_basis(25, DT), (-0.5, 0.0), (0.0, 0.0), plan, (0.0, 0.0), config, sim_config)
    assert not cand.feasible
    assert cand.penalty > 0.0


def test_centerline_limit_has_no_extra_margin():
    sim_config = SimConfig()
    x_min, x_max, _ = allowed_region(sim_config, 0.01)
    assert x_max == sim_config.mallet_bounds()[1]
    assert x_min == pytest.approx(sim_config.mallet_bounds()[0] + 0.01)


def test_cost_is_continuous_in_terminal_velocity():
    plan = _plan(-0.5, 0.1, 0.6, 0.2, 0.8)
    basis = build_basis(40, DT)
    vT = np.array([0.5, 0.3])
    h = 1e-6
    pair = score_candidates(
        basis, (-0.8, 0.0), (0.0, 0.0), plan, np.array([vT, vT + [h, 0.0]]), MpcConfig(), SimConfig()
    )
    assert pair.feasible.all()
    assert abs(pair.cost[1] - pair.cost[0]) / h < 10.0


def test_single_candidate_follows_desired_trajectory():
    plan = _plan(-0.5, 0.1, 0.6, 0.2, 0.8)
    basis = build_basis(40, DT)
    config = MpcConfig(n_candidates=1)
    mallet = MalletState(x=-0.8, y=0.0)
    cmd = mpc_step(mallet, plan, basis, config, np.random.default_rng(0))
    cand = rollout_candidate(basis, (-0.8, 0.0), (0.0, 0.0), plan, (0.6, 0.2))
    expected = (cand.positions[1] - cand.positions[0]) / DT
    np.testing.assert_allclose(cmd.target_velocity, expected)
    assert not cmd.infeasible


def test_selected_cost_never_exceeds_desired_candidate(tmp_path):
    trace = TraceLogger(tmp_path)
    plan = _plan(-0.3, 0.35, 1.8, 0.9, 0.6)
    basis = build_basis(30, DT)
    mallet = MalletState(x=-0.7, y=-0.2)
    mpc_step(mallet, plan, basis, MpcConfig(), np.random.default_rng(2), trace=trace, now=0.0)
    desired = rollout_candidate(basis, (-0.7, -0.2), (0.0, 0.0), plan, (1.8, 0.9))
    entry = trace.entries["mpc"][0]
    assert entry["best_cost"] <= desired.cost


def test_unreachable_contact_is_flagged():
    plan = _plan(-0.2, 0.4, 0.0, 0.0, 0.04)
    cmd = mpc_step(
        MalletState(x=-0.9, y=-0.4), plan, build_basis(2, DT), MpcConfig(), np.random.default_rng(3)
    )
    assert cmd.infeasible
    assert math.hypot(*cmd.target_velocity) <= MpcConfig().speed_cap + 1e-9


def _run_closed_loop(plan, start: MalletState, replan: bool = True) -> MalletState:
    sim = AirHockeySim(SimConfig())
    world = sim.reset(PuckState(x=0.6, y=0.3), mallet_xy=(start.x, start.y))
    world = world.model_copy(update={"mallet": start})
    rng = np.random.default_rng(4)
    config = MpcConfig()
    first = rollout_candidate(
        build_basis(int(round(plan.contact_time / DT)), DT),
        (start.x, start.y), (start.vx, start.vy), plan, plan.desired_velocity,
    )
    open_loop = np.diff(first.positions, axis=0) / DT
    while world.sim_time < plan.contact_time - 1e-9:
        if replan:
            cmd = track_contact(world.mallet, plan, world.sim_time, config, rng)
        else:
            k = int(round(world.sim_time / DT))
            cmd = MalletCommand(target_velocity=tuple(open_loop[k]))
        world = sim.step(world, cmd, DT)
    return world.mallet


def test_closed_loop_reaches_contact_state():
    rng = np.random.default_rng(5)
    for _ in range(50):
        a = rng.uniform(-0.5, 0.5)
        direction = np.array([math.cos(a), math.sin(a)])
        contact = np.array([rng.uniform(-0.3, -0.15), rng.uniform(-0.2, 0.2)])
        start = contact - 0.5 * direction
        plan = _plan(contact[0], contact[1], *direction, 1.0)
        mallet = _run_closed_loop(plan, MalletState(x=start[0], y=start[1]))
        assert math.hypot(mallet.x - contact[0], mallet.y - contact[1]) < 0.005
        heading = math.atan2(mallet.vy, mallet.vx)
        assert abs(heading - a) < math.radians(5)


def test_replanning_matches_open_loop_without_disturbance():
    plan = _plan(-0.3, 0.15, 0.8, 0.2, 0.8)
    start = MalletState(x=-0.7, y=-0.1, vx=0.1, vy=0.05)
    replanned = _run_closed_loop(plan, start, replan=True)
    open_loop = _run_closed_loop(plan, start, replan=False)
    assert math.hypot(replanned.x - open_loop.x, replanned.y - open_loop.y) < 0.001
