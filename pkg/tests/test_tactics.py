"""
Tests for the behavior state machine and the defend / prepare / shoot / home planners.
"""

import math

import numpy as np
import pytest

from src.control import track_contact
from src.models import (
    BehaviorKind,
    BehaviorMode,
    ContactKind,
    MpcConfig,
    ObjectiveKind,
    PuckState,
    ShotConfig,
    SimConfig,
    TableGeometry,
    TacticConfig,
)
from src.policy import EnergyModelParams
from src.sim import AirHockeySim
from src.tactics import (
    NoPlanError,
    decide_mode,
    heads_into_goal,
    in_goal_corner,
    plan_defense,
    plan_home,
    plan_prepare,
    plan_shot,
    post_contact_state,
    predict_crossing,
    prepare_heuristic,
    select_behavior,
)
from tests.conftest import tight_belief


def _kind(belief, config=None, geometry=None, can_shoot=None):
    return select_behavior(belief, config or TacticConfig(), geometry or TableGeometry(), can_shoot)[0]


def test_rule_table_examples(geometry):
    assert _kind(tight_belief(0.3, 0.0, 1.0, 0.0)) == BehaviorKind.HOME
    strict = TacticConfig(v_defend_threshold=0.5)
    assert _kind(tight_belief(-0.4, 0.0, -1.5, 0.0), strict) == BehaviorKind.DEFEND
    wall_y = geometry.width / 2 - geometry.puck_radius - 0.01
    assert _kind(tight_belief(-0.4, wall_y)) == BehaviorKind.PREPARE
    assert _kind(tight_belief(-0.9, 0.0)) == BehaviorKind.PREPARE
    assert _kind(tight_belief(-0.4, 0.0)) == BehaviorKind.SHOOT
    assert _kind(tight_belief(-0.4, 0.0, 0.5, 0.0)) == BehaviorKind.HOME


def test_shoot_requires_a_feasible_shot(geometry):
    kind, reason = select_behavior(
        tight_belief(-0.4, 0.0), TacticConfig(), geometry, lambda b: False
    )
    assert kind == BehaviorKind.HOME
    assert reason == "no_feasible_shot"


def test_decide_mode_respects_dwell():
    config = TacticConfig()
    current = BehaviorMode(kind=BehaviorKind.HOME, entered_at=0.0)
    incoming = tight_belief(-0.4, 0.0, -1.5, 0.0)
    assert decide_mode(incoming, current, config, 0.05) is current
    switched = decide_mode(incoming, current, config, 0.2)
    assert switched.kind == BehaviorKind.DEFEND
    assert switched.entered_at == 0.2
    assert switched.reason == "puck_incoming"


def test_decide_mode_is_memoryless_without_dwell():
    config = TacticConfig(min_dwell=0.0)
    rng = np.random.default_rng(0)
    for _ in range(50):
        b = tight_belief(rng.uniform(-0.9, 0.9), rng.uniform(-0.45, 0.45), rng.normal(), rng.normal())
        kinds = {
            decide_mode(b, BehaviorMode(kind=k, entered_at=0.0), config, 1.0).kind
            for k in BehaviorKind
        }
        assert len(kinds) == 1


def test_mode_switches_are_rate_limited():
    config = TacticConfig()
    rng = np.random.default_rng(1)
    mode = BehaviorMode()
    switch_times = []
    for k in range(500):
        now = 0.02 * k
        b = tight_belief(rng.uniform(-0.9, 0.3), rng.uniform(-0.45, 0.45), rng.normal(), rng.normal())
        nxt = decide_mode(b, mode, config, now)
        if nxt.kind != mode.kind:
            switch_times.append(now)
        mode = nxt
    times = np.array(switch_times)
    assert len(times) > 5
    for t in times:
        in_window = np.count_nonzero((times >= t) & (times < t + 1.0))
        assert in_window <= 1 / config.min_dwell + 1


def test_defense_kills_incoming_puck(model):
    config = TacticConfig()
    sim_config = SimConfig()
    belief = tight_belief(-0.2, 0.0, -1.5, 0.0)
    plan = plan_defense(belief, model, config, np.random.default_rng(2), sim_config=sim_config)
    assert plan.objective == ObjectiveKind.KILL_VELOCITY
    assert plan.contact_time > belief.stamp
    assert plan.contact_mallet_state.x <= sim_config.mallet_bounds()[1]

    path = predict_crossing(belief, model, config.defense_line_x(sim_config.geometry), config.defense_horizon)
    puck = path.means[path.crossing]
    block_xy = puck[:2] - sim_config.geometry.contact_distance * np.array([1.0, 0.0])
    block = abs(post_contact_state(model, puck, block_xy, (0.0, 0.0))[2])
    assert plan.expected_cost <= block
    assert plan.expected_cost < 0.1


def test_defense_never_aims_at_own_goal(model):
    config = TacticConfig()
    sim_config = SimConfig()
    rng = np.random.default_rng(3)
    planned = 0
    for _ in range(20):
        belief = tight_belief(
            rng.uniform(-0.3, 0.0), rng.uniform(-0.3, 0.3), rng.uniform(-2.5, -0.5), rng.uniform(-0.5, 0.5)
        )
        try:
            plan = plan_defense(belief, model, config, rng, n_samples=16)
        except NoPlanError:
            continue
        planned += 1
        path = predict_crossing(belief, model, config.defense_line_x(sim_config.geometry), config.defense_horizon)
        k = int(round((plan.contact_time - belief.stamp) / model.dt))
        m = plan.contact_mallet_state
        post = post_contact_state(model, path.means[k], (m.x, m.y), (m.vx, m.vy))
        assert not heads_into_goal(post, sim_config)
    assert planned >= 5


def test_defense_contact_stops_the_puck_in_closed_loop(model):
    sim_config = SimConfig(puck_velocity_noise=0.0, observation_noise=0.0)
    sim = AirHockeySim(sim_config)
    config = TacticConfig()
    puck = PuckState(x=0.3, y=0.0, vx=-0.8, vy=0.0)
    rng = np.random.default_rng(8)
    plan = plan_defense(tight_belief(puck.x, puck.y, puck.vx, puck.vy), model, config, rng, sim_config=sim_config)

    world = sim.reset(puck, mallet_xy=config.home_position(sim_config.geometry))
    contact = None
    for _ in range(100):
        cmd = track_contact(world.mallet, plan, world.sim_time, MpcConfig(), rng, sim_config)
        world = sim.step(world, cmd, sim_config.dt)
        if world.last_contact is not None and world.last_contact.kind == ContactKind.MALLET:
            contact = world.last_contact
            break
    assert contact is not None
    assert abs(contact.time - plan.contact_time) < 2 * sim_config.dt
    assert abs(world.puck.vx) < 0.1
    assert world.goal is None


def test_defense_errors(model):
    config = TacticConfig()
    with pytest.raises(ValueError):
        plan_defense(tight_belief(-0.2, 0.0, -1.5, 0.0), model, config, np.random.default_rng(0), n_samples=0)
    with pytest.raises(NoPlanError):
        plan_defense(tight_belief(-0.2, 0.0, 1.0, 0.0), model, config, np.random.default_rng(0))


def test_prepare_on_centerline_nudges_forward(model):
    heuristic = prepare_heuristic((-0.8, 0.0), TacticConfig(), model.geometry)
    assert heuristic.bank_point is None
    plan = plan_prepare(tight_belief(-0.8, 0.0), model, TacticConfig(), np.random.default_rng(4))
    assert plan.objective == ObjectiveKind.PREPARE_TARGET
    assert plan.target_velocity[0] > 0.0
    assert plan.target_velocity[1] == 0.0
    assert plan.contact_mallet_state.vx > 0.0


def test_prepare_near_wall_banks_off_it(model):
    config = TacticConfig()
    heuristic = prepare_heuristic((-0.5, 0.35), config, model.geometry)
    assert heuristic.bank_point is not None
    assert heuristic.bank_point[1] == pytest.approx(model.geometry.puck_y_limit)
    plan = plan_prepare(tight_belief(-0.5, 0.35), model, config, np.random.default_rng(5))
    assert plan.target_velocity[1] > 0.0

    # the specular reflection off the bank point heads for the target
    e_n = model.geometry.wall_restitution
    e_t = model.geometry.wall_tangential_retention
    v = heuristic.puck_velocity
    reflected = np.array([e_t * v[0], -e_n * v[1]])
    to_target = heuristic.point - heuristic.bank_point
    cross = reflected[0] * to_target[1] - reflected[1] * to_target[0]
    assert abs(cross) < 1e-9
    assert reflected @ to_target > 0


def test_fuzzed_plans_keep_their_invariants(model):
    rng = np.random.default_rng(6)
    config = TacticConfig()
    for _ in range(15):
        b = tight_belief(rng.uniform(-0.9, -0.2), rng.uniform(-0.45, 0.45), *rng.normal(0, 0.1, 2), stamp=1.0)
        try:
            plan = plan_prepare(b, model, config, rng, n_samples=8)
        except NoPlanError:
            continue
        assert plan.contact_time > plan.created_at == 1.0
        assert plan.target_velocity is not None
        assert math.isfinite(plan.expected_cost)


def test_plan_shot_with_and_without_policy(model):
    b = tight_belief(-0.5, 0.05, stamp=2.0)
    shot_config = ShotConfig()
    searched = plan_shot(b, model, shot_config, np.random.default_rng(0))
    assert searched.objective == ObjectiveKind.SHOT_ANGLE
    assert searched.contact_time == pytest.approx(2.5)
    assert searched.expected_cost is not None

    cloned = plan_shot(b, model, shot_config, np.random.default_rng(0), policy=EnergyModelParams.zeros(8))
    lo, hi = shot_config.angle_bounds
    assert lo <= cloned.shot_angle <= hi
    m = cloned.contact_mallet_state
    assert math.hypot(m.vx, m.vy) == pytest.approx(shot_config.constant_speed)
    assert math.hypot(m.x + 0.5, m.y - 0.05) == pytest.approx(model.geometry.contact_distance, abs=1e-6)


def test_plan_shot_out_of_reach(model):
    with pytest.raises(NoPlanError):
        plan_shot(tight_belief(0.8, 0.0), model, ShotConfig(), np.random.default_rng(0))


def test_plan_home():
    config = TacticConfig()
    plan = plan_home(1.0, config)
    assert plan.objective == ObjectiveKind.HOME
    assert plan.contact_time == pytest.approx(1.0 + config.home_lead_time)
    assert (plan.contact_mallet_state.x, plan.contact_mallet_state.y) == config.home_position(
        SimConfig().geometry
    )
    assert plan.desired_velocity == (0.0, 0.0)


def test_prepare_refuses_a_puck_pinned_in_our_corner(model, geometry):
    corner = (-geometry.puck_x_limit + 0.02, geometry.puck_y_limit - 0.02)
    assert in_goal_corner(corner, geometry)
    assert not in_goal_corner((-0.5, geometry.puck_y_limit - 0.02), geometry)
    assert not in_goal_corner((corner[0], 0.0), geometry)
    with pytest.raises(NoPlanError, match="corner"):
        plan_prepare(tight_belief(*corner), model, TacticConfig(), np.random.default_rng(9))
