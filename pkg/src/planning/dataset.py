"""
Offline shot dataset for behavior cloning.

Each record holds the predicted puck state at contact time and the planner's
optimal angle: {puck_state, angle, cost, p_goal}.
"""

from pathlib import Path
from typing import Optional

import numpy as np
import structlog

from ..dynamics import PiecewiseModel
from ..logging import read_jsonl, write_jsonl
from ..models import Belief, EstimatorConfig, MatchConfig, MissingArtifactError
from .shoot import NoShotError, belief_at_contact_time, search_angles
from .speed_model import SpeedModel, make_speed_model

log = structlog.get_logger(__name__)

# steady-state filter uncertainty used for planned beliefs
_VELOCITY_STD = 0.05


def sample_shot_belief(
    rng: np.random.Generator,
    config: MatchConfig,
    estimator: Optional[EstimatorConfig] = None,
) -> Belief:
    """A slow puck somewhere in the agent half, as the filter would report it."""
    geom = config.sim.geometry
    estimator = estimator or config.estimator
    x = rng.uniform(-geom.length / 2 + 0.15, -0.15)
    y = rng.uniform(-geom.puck_y_limit + 0.08, geom.puck_y_limit - 0.08)
    speed = rng.uniform(0.0, config.tactics.v_slow)
    heading = rng.uniform(-np.pi, np.pi)
    mean = np.array([x, y, speed * np.cos(heading), speed * np.sin(heading)])
    sigma = estimator.obs_sigma
    cov = np.diag([sigma**2, sigma**2, _VELOCITY_STD**2, _VELOCITY_STD**2])
    return Belief(mean=mean, cov=cov)


def plan_shot_records(
    n: int,
    rng: np.random.Generator,
    model: PiecewiseModel,
    config: Optional[MatchConfig] = None,
    speed_model: Optional[SpeedModel] = None,
) -> list[dict]:
    """Solve n random shooting problems. Beliefs with no feasible shot are skipped."""
    config = config or MatchConfig()
    speed_model = speed_model or make_speed_model(config.shot, config.arm, config.sim)
    records: list[dict] = []
    skipped = 0
    for _ in range(n):
        belief = sample_shot_belief(rng, config)
        at_contact = belief_at_contact_time(belief, model, config.shot.contact_lead_time)
        try:
            best = search_angles(at_contact, model, config.shot, speed_model, config.sim)
        except NoShotError:
            skipped += 1
            continue
        records.append(
            {
                "puck_state": at_contact.mean.tolist(),
                "angle": best.angle,
                "cost": best.cost,
                "p_goal": best.p_goal,
            }
        )
    log.info("shots_planned", records=len(records), skipped=skipped)
    return records


def write_shot_dataset(path, records: list[dict]) -> Path:
    path = Path(path)
    write_jsonl(path, records)
    return path


def load_shot_dataset(path) -> tuple[np.ndarray, np.ndarray]:
    """States (N, 4) and angles (N,) from a shots JSON-lines file."""
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(f"Shot dataset not found: {path} (run `plan-shots`)")
    states, angles = [], []
    for record in read_jsonl(path):
        states.append(record["puck_state"])
        angles.append(record["angle"])
    return np.array(states, dtype=float).reshape(-1, 4), np.array(angles, dtype=float)
