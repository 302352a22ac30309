"""
Configuration blocks.

Every block carries the declared defaults; MatchConfig aggregates them and is
what `--config` files populate. Files are read with yaml.safe_load, which also
accepts plain JSON.
"""

import math
from pathlib import Path
from typing import Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .enums import OpponentKind, PuckStart, SpeedModelKind
from .errors import ConfigError
from .table import TableGeometry


class _Block(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)


class SimConfig(_Block):
    """Simulator settings around the table geometry."""

    geometry: TableGeometry = Field(default_factory=TableGeometry)
    dt: float = Field(default=0.02, gt=0)  # control period (50 Hz)
    substep: float = Field(default=0.001, gt=0)
    mallet_speed_cap: float = Field(default=2.0, gt=0)
    mallet_margin: float = Field(default=0.02, ge=0)  # mallet x <= -margin
    contact_tolerance: float = Field(default=0.001, ge=0)
    position_tolerance: float = Field(default=1e-6, ge=0)
    puck_velocity_noise: float = Field(default=0.01, ge=0)  # m/s per sqrt(s)
    observation_noise: float = Field(default=0.005, ge=0)
    goals_open: bool = True

    def mallet_bounds(self) -> tuple[float, float, float]:
        """(x_min, x_max, |y|_max) for the agent mallet center."""
        g = self.geometry
        return (
            -g.length / 2 + g.mallet_radius,
            -self.mallet_margin,
            g.width / 2 - g.mallet_radius,
        )


class ExplorationPolicy(_Block):
    """Randomized episodes used to collect dynamics data."""

    n_steps: int = Field(default=100, ge=1)
    launch_speed: tuple[float, float] = (0.5, 3.0)
    sweep_speed: tuple[float, float] = (0.2, 2.0)
    sweep_period: float = Field(default=0.5, gt=0)
    staged_mallet_fraction: float = Field(default=0.5, ge=0, le=1)
    staged_wall_fraction: float = Field(default=0.25, ge=0, le=1)

    @model_validator(mode="after")
    def _check_fractions(self) -> "ExplorationPolicy":
        if self.staged_mallet_fraction + self.staged_wall_fraction > 1:
            raise ValueError("staged fractions must sum to at most 1")
        return self


class EstimatorConfig(_Block):
    obs_sigma: float = Field(default=0.005, gt=0)
    init_cov_diag: tuple[float, float, float, float] = (1e-4, 1e-4, 0.25, 0.25)


class ShotWeights(_Block):
    """Trade-off between scoring probability and goal-line speed."""

    w_goal: float = Field(default=1.0, ge=0)
    w_vel: float = Field(default=0.1, ge=0)  # s/m
    w_penalty: float = Field(default=10.0, ge=0)
    p_min: float = Field(default=0.2, ge=0, le=1)


class ShotConfig(_Block):
    weights: ShotWeights = Field(default_factory=ShotWeights)
    contact_lead_time: float = Field(default=0.5, gt=0)  # preset contact time T_c
    horizon_s: float = Field(default=3.0, gt=0)
    grid_n: int = Field(default=64, ge=8)
    refine_passes: int = Field(default=2, ge=0)
    angle_bounds: tuple[float, float] = (-math.pi / 2, math.pi / 2)
    speed_model: SpeedModelKind = SpeedModelKind.CONSTANT
    constant_speed: float = Field(default=2.0, gt=0)

    def horizon_steps(self, dt: float) -> int:
        return math.ceil(self.horizon_s / dt - 1e-9)


class SamplerConfig(_Block):
    """Derivative-free argmin sampler for the energy model."""

    n_samples: int = Field(default=512, ge=2)
    n_iters: int = Field(default=3, ge=1)
    shrink: float = Field(default=0.5, gt=0, lt=1)
    init_sigma: float = Field(default=0.5, gt=0)  # radians
    temperature: float = Field(default=1.0, gt=0)
    angle_bounds: tuple[float, float] = (-math.pi / 2, math.pi / 2)


class TrainConfig(_Block):
    n_negatives: int = Field(default=256, ge=1)
    learning_rate: float = Field(default=1e-3, gt=0)
    batch_size: int = Field(default=64, ge=1)
    epochs: int = Field(default=30, ge=1)
    steps: Optional[int] = Field(default=None, ge=1)  # overrides epochs when set
    hidden: int = Field(default=64, ge=1)
    seed: int = 0
    angle_bounds: tuple[float, float] = (-math.pi / 2, math.pi / 2)


class TacticConfig(_Block):
    v_defend_threshold: float = Field(default=0.3, gt=0)
    v_slow: float = Field(default=0.2, gt=0)
    prepare_wall_margin: float = Field(default=0.12, gt=0)
    min_dwell: float = Field(default=0.1, ge=0)
    defense_line_offset: float = Field(default=0.25, gt=0)  # from our goal line
    target_prepare_speed: float = Field(default=0.5, gt=0)
    prepare_target_advance: float = Field(default=0.15, gt=0)
    centerline_tolerance: float = Field(default=0.02, gt=0)
    defense_samples: int = Field(default=64, ge=1)
    prepare_samples: int = Field(default=64, ge=1)
    defense_horizon: float = Field(default=1.5, gt=0)
    prepare_lead_time: float = Field(default=0.4, gt=0)
    home_offset: float = Field(default=0.2, gt=0)  # rest pose distance from goal line
    home_lead_time: float = Field(default=0.3, gt=0)

    def defense_line_x(self, geometry: TableGeometry) -> float:
        return -geometry.length / 2 + self.defense_line_offset

    def home_position(self, geometry: TableGeometry) -> tuple[float, float]:
        return (-geometry.length / 2 + self.home_offset, 0.0)


class MpcConfig(_Block):
    n_candidates: int = Field(default=128, ge=1)
    sigma: float = Field(default=0.4, ge=0)  # m/s
    speed_cap: float = Field(default=2.0, gt=0)
    wall_margin: float = Field(default=0.01, ge=0)
    w_vel_err: float = Field(default=1.0, ge=0)
    penalty_weight: float = Field(default=1e3, gt=0)
    hinge_tolerance: float = Field(default=1e-6, ge=0)


class ArmModel(_Block):
    """Planar 3-link arm standing in for the manipulator."""

    base: tuple[float, float] = (-1.2, 0.0)
    lengths: tuple[float, float, float] = (0.55, 0.45, 0.35)
    q_min: tuple[float, float, float] = (-2.6, -2.6, -2.6)
    q_max: tuple[float, float, float] = (2.6, 2.6, 2.6)
    qd_max: tuple[float, float, float] = (3.0, 3.0, 3.0)
    q_ref: tuple[float, float, float] = (1.0, -1.8, 0.8)
    q_ref_shoot: Optional[tuple[float, float, float]] = None
    lam: float = Field(default=0.01, ge=0)

    @model_validator(mode="after")
    def _check_limits(self) -> "ArmModel":
        if any(length <= 0 for length in self.lengths):
            raise ValueError("link lengths must be positive")
        for lo, hi in zip(self.q_min, self.q_max):
            if lo >= hi:
                raise ValueError("joint position limits must be well ordered")
        if any(v <= 0 for v in self.qd_max):
            raise ValueError("joint velocity limits must be positive")
        for ref in (self.q_ref, self.q_ref_shoot):
            if ref is None:
                continue
            if any(not (lo <= q <= hi) for q, lo, hi in zip(ref, self.q_min, self.q_max)):
                raise ValueError("reference configuration outside position limits")
        return self


class MatchConfig(_Block):
    """Everything a match (or the pipeline) needs."""

    sim: SimConfig = Field(default_factory=SimConfig)
    estimator: EstimatorConfig = Field(default_factory=EstimatorConfig)
    exploration: ExplorationPolicy = Field(default_factory=ExplorationPolicy)
    shot: ShotConfig = Field(default_factory=ShotConfig)
    sampler: SamplerConfig = Field(default_factory=SamplerConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    tactics: TacticConfig = Field(default_factory=TacticConfig)
    mpc: MpcConfig = Field(default_factory=MpcConfig)
    arm: ArmModel = Field(default_factory=ArmModel)
    arm_enabled: bool = False
    opponent: OpponentKind = OpponentKind.NONE
    start: PuckStart = PuckStart.LAUNCH
    serve_speed: tuple[float, float] = (0.8, 2.0)
    duration: float = Field(default=10.0, gt=0)
    seed: int = 0
    artifact_dir: str = "artifacts"  # transitions, models, shot data
    log_dir: Optional[str] = None  # defaults to <artifact_dir>/logs
    record_latency: bool = False
    latency_budget_ms: float = Field(default=20.0, gt=0)  # median full-cycle target


def load_config(path: Union[str, Path, None] = None, **overrides) -> MatchConfig:
    """
    Load a MatchConfig from a YAML or JSON file.

    Missing blocks keep their defaults. Keyword overrides replace top-level
    fields after the file is read (used for --seed and --out).
    """
    data: dict = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"Config file not found: {path}")
        try:
            with open(path, "r") as f:
                data = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"Config file {path} is not valid YAML/JSON: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"Config file {path} must contain a mapping")
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return MatchConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"Invalid configuration: {e}") from e
