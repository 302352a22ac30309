"""
Tests for the shot planner: contact geometry, goal probability, the angle search
and the offline shot dataset.
"""

import math

import numpy as np
import pytest

from src.models import (
    ArmModel,
    Belief,
    MalletCommand,
    MatchConfig,
    MissingArtifactError,
    PuckState,
    ShotConfig,
    ShotWeights,
    Side,
)
from src.planning import (
    ArmSpeedMap,
    ConstantSpeedModel,
    NoShotError,
    angle_grid,
    belief_at_contact_time,
    contact_pose_from_angle,
    goal_probability,
    load_shot_dataset,
    max_contact_speed,
    plan_shot_records,
    sample_shot_belief,
    search_angles,
    shot_cost,
    solve_shot,
    write_shot_dataset,
)
from tests.conftest import tight_belief


def test_contact_pose_examples(geometry):
    r = geometry.contact_distance
    assert r == pytest.approx(0.0798)
    pose = contact_pose_from_angle((0.0, 0.0), 0.0, geometry)
    np.testing.assert_allclose(pose.position, [-r, 0.0])
    assert pose.feasible
    pose = contact_pose_from_angle((-0.5, 0.0), math.pi / 2, geometry)
    np.testing.assert_allclose(pose.position, [-0.5, -r], atol=1e-15)
    for a in np.linspace(-math.pi, math.pi, 13):
        pose = contact_pose_from_angle((-0.4, 0.1), a, geometry)
        assert abs(np.linalg.norm(pose.position - [-0.4, 0.1]) - r) < 1e-9


def test_contact_pose_outside_bounds_is_infeasible(geometry):
    assert not contact_pose_from_angle((0.5, 0.0), 0.0, geometry).feasible
    assert not contact_pose_from_angle((0.0, 0.0), math.pi, geometry).feasible


def test_constant_speed_model():
    assert max_contact_speed((-0.3, 0.2)) == 2.0
    assert ConstantSpeedModel(1.5).speed((0.0, 0.0)) == 1.5


def test_arm_speed_map_is_symmetric_and_capped():
    m = ArmSpeedMap(ArmModel(), cap=2.0, joint_samples=15, n_directions=8)
    np.testing.assert_array_equal(m.table, m.table[:, ::-1])
    assert np.all(m.table <= 2.0)
    assert np.count_nonzero(m.table) > 0
    # outside the mallet region nothing is reachable
    assert m.speed((0.5, 0.0)) == 0.0


def test_goal_probability():
    assert goal_probability(0.0, 1e-10, 0.25) == pytest.approx(1.0)
    assert goal_probability(1.0, 1e-10, 0.25) == pytest.approx(0.0)
    assert goal_probability(0.05, 0.01, 0.25) == pytest.approx(goal_probability(-0.05, 0.01, 0.25))
    assert goal_probability(0.0, 0.0, 0.25) == 1.0
    assert goal_probability(0.0, 1.0, 0.25) < goal_probability(0.0, 0.01, 0.25)


def test_angle_grid_is_symmetric():
    np.testing.assert_array_equal(angle_grid((-1.0, 1.0), 5), [-1.0, -0.5, 0.0, 0.5, 1.0])
    g = angle_grid((-math.pi / 2, math.pi / 2), 64)
    np.testing.assert_array_equal(g, -g[::-1])


def test_straight_shot_from_center_scores(model, geometry):
    weights = ShotWeights()
    e = shot_cost(0.0, tight_belief(0.0, 0.0), geometry, model, weights, 150)
    assert e.feasible
    assert e.p_goal >= 0.999
    assert e.expected_speed > 3.0
    assert e.cost == pytest.approx(-weights.w_goal * e.p_goal - weights.w_vel * e.expected_speed)
    assert e.crossing_step is not None


def test_shot_toward_own_goal_is_penalized(model, geometry):
    weights = ShotWeights()
    e = shot_cost(math.pi, tight_belief(-0.5, 0.0), geometry, model, weights, 150)
    assert e.feasible
    assert e.p_goal == 0.0
    assert e.cost == pytest.approx(weights.w_penalty)


def test_infeasible_contact_costs_infinity(model, geometry):
    e = shot_cost(math.pi, tight_belief(0.0, 0.0), geometry, model, ShotWeights(), 150)
    assert not e.feasible
    assert e.cost == math.inf


def test_centerline_puck_shoots_straight(model):
    plan = solve_shot(tight_belief(-0.5, 0.0), model)
    assert abs(plan.angle) <= math.pi / 63
    assert plan.predicted_p_goal >= 0.99
    assert plan.contact_time == pytest.approx(0.5)
    assert math.hypot(plan.contact_mallet_state.vx, plan.contact_mallet_state.vy) == pytest.approx(2.0)


def test_off_center_puck_aims_back_to_goal(model):
    plan = solve_shot(tight_belief(-0.5, 0.2), model)
    assert plan.angle < 0.0
    assert plan.predicted_p_goal > 0.5


def test_solution_mirrors_with_the_puck(model):
    b = Belief(mean=np.array([-0.5, 0.15, 0.1, -0.05]), cov=np.diag([1e-5, 1e-5, 1e-3, 1e-3]))
    m = Belief(mean=np.array([-0.5, -0.15, 0.1, 0.05]), cov=b.cov)
    assert solve_shot(m, model).angle == pytest.approx(-solve_shot(b, model).angle, abs=1e-9)


def test_argmin_unchanged_by_scaling_weights(model):
    b = tight_belief(-0.4, -0.1)
    base = ShotConfig()
    w = base.weights
    scaled = base.model_copy(
        update={
            "weights": ShotWeights(
                w_goal=2 * w.w_goal, w_vel=2 * w.w_vel, w_penalty=2 * w.w_penalty, p_min=w.p_min
            )
        }
    )
    assert solve_shot(b, model, scaled).angle == solve_shot(b, model, base).angle


def test_goal_probability_falls_as_speed_weight_grows(model):
    b = Belief(mean=np.array([-0.5, 0.25, 0.0, 0.0]), cov=np.diag([1e-4, 1e-4, 1e-2, 1e-2]))
    previous = math.inf
    for w_vel in (0.0, 0.1, 0.5, 2.0):
        config = ShotConfig(weights=ShotWeights(w_vel=w_vel), refine_passes=0)
        e = search_angles(b, model, config)
        assert e.p_goal <= previous + 1e-12
        previous = e.p_goal


def test_no_feasible_angle_raises(model):
    with pytest.raises(NoShotError):
        solve_shot(tight_belief(0.8, 0.0), model)


def test_grid_must_not_be_tiny(model):
    with pytest.raises(ValueError):
        solve_shot(tight_belief(-0.5, 0.0), model, grid_n=4)


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(100))
def test_refined_search_matches_dense_grid(model, seed):
    config = MatchConfig()
    belief = sample_shot_belief(np.random.default_rng(seed), config)
    try:
        coarse = solve_shot(belief, model)
    except NoShotError:
        pytest.skip("no feasible shot for this belief")
    at_contact = belief_at_contact_time(belief, model, config.shot.contact_lead_time)
    dense = search_angles(at_contact, model, ShotConfig(refine_passes=0), grid_n=1024)
    # refined resolution is a quarter of the coarse grid step
    lo, hi = config.shot.angle_bounds
    resolution = (hi - lo) / (config.shot.grid_n - 1) / 4
    same_angle = abs(coarse.angle - dense.angle) <= resolution
    assert same_angle or coarse.predicted_cost - dense.cost < 0.02


@pytest.mark.slow
def test_goal_probability_matches_simulated_rate(model, sim):
    belief = Belief(
        mean=np.array([-0.5, 0.1, 0.0, 0.0]), cov=np.diag([1e-8, 1e-8, 0.0625, 0.0625])
    )
    e = search_angles(belief, model, ShotConfig())
    assert 0.3 < e.p_goal < 0.95
    pose = contact_pose_from_angle(belief.position, e.angle, model.geometry)
    hit = MalletCommand(
        target_velocity=(e.contact_speed * math.cos(e.angle), e.contact_speed * math.sin(e.angle))
    )

    rng = np.random.default_rng(7)
    n = 400
    goals = 0
    for s in rng.multivariate_normal(belief.mean, belief.cov, size=n):
        world = sim.reset(
            PuckState(x=s[0], y=s[1], vx=s[2], vy=s[3]),
            mallet_xy=(float(pose.position[0]), float(pose.position[1])),
        )
        world = sim.step(world, hit, 0.02, rng=rng)
        for _ in range(100):
            if world.goal is not None:
                break
            world = sim.step(world, MalletCommand(), 0.02, rng=rng)
        goals += int(world.goal == Side.THEIRS)

    tolerance = 4 * math.sqrt(e.p_goal * (1 - e.p_goal) / n) + 0.03
    assert abs(goals / n - e.p_goal) < tolerance


def test_shot_dataset_roundtrip(tmp_path, model):
    config = MatchConfig()
    records = plan_shot_records(3, np.random.default_rng(4), model, config)
    assert 0 < len(records) <= 3
    assert set(records[0]) == {"puck_state", "angle", "cost", "p_goal"}
    lo, hi = config.shot.angle_bounds
    assert all(lo <= r["angle"] <= hi for r in records)

    path = write_shot_dataset(tmp_path / "shots.jsonl", records)
    states, angles = load_shot_dataset(path)
    assert states.shape == (len(records), 4)
    np.testing.assert_array_equal(angles, [r["angle"] for r in records])


def test_missing_shot_dataset(tmp_path):
    with pytest.raises(MissingArtifactError, match="plan-shots"):
        load_shot_dataset(tmp_path / "shots.jsonl")
