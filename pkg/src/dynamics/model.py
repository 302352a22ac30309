"""
Piecewise-linear stochastic puck dynamics.

Each mode i carries (A_i, B_i, Sigma_i) acting in the mode's canonical frame:

    c' = A_i c_p + B_i c_m + w,   w ~ N(0, Sigma_i)

where c_p, c_m are the puck and mallet states mapped by frames.frame_for.
"""

import json
import math
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, field_serializer, field_validator, model_validator

from ..models import (
    DynamicsMode,
    MissingArtifactError,
    SchemaVersionError,
    SimConfig,
    TableGeometry,
)
from ..sim.physics import DEFAULT_CONTACT_TOLERANCE, classify_xy
from .frames import Frame, frame_for

log = structlog.get_logger(__name__)

DYNAMICS_SCHEMA_VERSION = 1


def _matrix(v) -> np.ndarray:
    arr = np.array(v, dtype=float)
    if arr.shape != (4, 4):
        raise ValueError(f"expected a 4x4 matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite entries")
    return arr


class LinearMode(BaseModel):
    """One (A, B, Sigma) triple. Sigma is symmetrized and must be PSD."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    A: np.ndarray
    B: np.ndarray
    Sigma: np.ndarray

    @field_validator("A", "B", mode="before")
    @classmethod
    def _check_matrix(cls, v) -> np.ndarray:
        arr = _matrix(v)
        arr.setflags(write=False)
        return arr

    @field_validator("Sigma", mode="before")
    @classmethod
    def _check_sigma(cls, v) -> np.ndarray:
        arr = _matrix(v)
        arr = 0.5 * (arr + arr.T)
        if np.linalg.eigvalsh(arr)[0] < -1e-10:
            raise ValueError("Sigma must be positive semidefinite")
        arr.setflags(write=False)
        return arr

    @field_serializer("A", "B", "Sigma")
    def _dump(self, v: np.ndarray) -> list:
        return v.tolist()

    @classmethod
    def identity(cls, sigma: float = 0.0) -> "LinearMode":
        return cls(A=np.eye(4), B=np.zeros((4, 4)), Sigma=np.eye(4) * sigma**2)


class Linearization(NamedTuple):
    """mean' = F s_p + c,  cov' = F cov F^T + Q (all in table coordinates)."""

    mode: DynamicsMode
    F: np.ndarray
    c: np.ndarray
    Q: np.ndarray
    mean: np.ndarray  # F s_p + c, evaluated directly


class PiecewiseModel(BaseModel):
    """The three-mode dynamics model identified at control period dt."""

    model_config = ConfigDict(frozen=True)

    modes: dict[DynamicsMode, LinearMode]
    dt: float
    geometry: TableGeometry = TableGeometry()
    contact_tolerance: float = DEFAULT_CONTACT_TOLERANCE

    @model_validator(mode="after")
    def _all_modes(self) -> "PiecewiseModel":
        missing = [m.value for m in DynamicsMode if m not in self.modes]
        if missing:
            raise ValueError(f"missing modes: {missing}")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError("dt must be finite and positive")
        return self

    def classify(self, s_p, s_m: Optional[np.ndarray]) -> DynamicsMode:
        mallet_xy = None if s_m is None else (float(s_m[0]), float(s_m[1]))
        return classify_xy(
            float(s_p[0]), float(s_p[1]), mallet_xy, self.geometry, self.contact_tolerance
        )

    def linearize(
        self,
        s_p,
        s_m: Optional[np.ndarray] = None,
        mode: Optional[DynamicsMode] = None,
    ) -> Linearization:
        """
        Affine one-step map at s_p.

        The mode is classified from (s_p, s_m) unless forced. A missing mallet
        is treated as far away and contributes a zero state.
        """
        s_p = np.asarray(s_p, dtype=float)
        if mode is None:
            mode = self.classify(s_p, s_m)
        s_m_arr = np.zeros(4) if s_m is None else np.asarray(s_m, dtype=float)
        lm = self.modes[mode]
        if mode == DynamicsMode.FREE:
            mean = lm.A @ s_p + lm.B @ s_m_arr
            return Linearization(mode, lm.A, mean - lm.A @ s_p, lm.Sigma, mean)
        frame = frame_for(mode, s_p, s_m_arr, self.geometry)
        F = frame.G.T @ lm.A @ frame.G
        mean_c = lm.A @ frame.puck_in(s_p) + lm.B @ frame.mallet_in(s_m_arr)
        mean = frame.puck_out(mean_c)
        Q = frame.G.T @ lm.Sigma @ frame.G
        return Linearization(mode, F, mean - F @ s_p, Q, mean)

    def frame(self, mode: DynamicsMode, s_p, s_m=None) -> Frame:
        return frame_for(mode, s_p, s_m, self.geometry)


def predict_mean(model: PiecewiseModel, s_p, s_m=None) -> np.ndarray:
    """One-step mean prediction A_i s_p + B_i s_m, mode chosen by classify_mode."""
    s_p = np.asarray(s_p, dtype=float)
    return model.linearize(s_p, s_m).mean


def analytic_model(sim_cfg: Optional[SimConfig] = None, dt: Optional[float] = None) -> PiecewiseModel:
    """
    Physics-derived model of the simulator in the canonical frames.

    Exact for contact-free steps; contact modes assume the bounce happens
    inside the step and ignore penetration push-out.
    """
    sim_cfg = sim_cfg or SimConfig()
    geom = sim_cfg.geometry
    dt = sim_cfg.dt if dt is None else dt
    n_sub = max(1, int(round(dt / sim_cfg.substep)))
    h = dt / n_sub
    d_h = math.exp(-geom.damping_coeff * h)
    d = d_h**n_sub
    g = h * sum(d_h**j for j in range(1, n_sub + 1))
    e_n = geom.wall_restitution
    e_t = geom.wall_tangential_retention
    e_m = geom.mallet_restitution

    q = sim_cfg.puck_velocity_noise**2 * dt
    Sigma = np.diag([q * dt**2 / 3 + 1e-12, q * dt**2 / 3 + 1e-12, q + 1e-12, q + 1e-12])
    zeros = np.zeros((4, 4))

    A_free = np.array([
        [1.0, 0.0, g, 0.0],
        [0.0, 1.0, 0.0, g],
        [0.0, 0.0, d, 0.0],
        [0.0, 0.0, 0.0, d],
    ])
    A_wall = np.array([
        [1.0, 0.0, g * e_t, 0.0],
        [0.0, -e_n, 0.0, -g * e_n],
        [0.0, 0.0, e_t * d, 0.0],
        [0.0, 0.0, 0.0, -e_n * d],
    ])
    A_mallet = np.array([
        [1.0, 0.0, g, 0.0],
        [0.0, 1.0, 0.0, -e_m * g],
        [0.0, 0.0, d, 0.0],
        [0.0, 0.0, 0.0, -e_m * d],
    ])
    B_mallet = zeros.copy()
    B_mallet[1, 3] = (1 + e_m) * g
    B_mallet[3, 3] = (1 + e_m) * d

    return PiecewiseModel(
        modes={
            DynamicsMode.FREE: LinearMode(A=A_free, B=zeros, Sigma=Sigma),
            DynamicsMode.WALL: LinearMode(A=A_wall, B=zeros, Sigma=Sigma),
            DynamicsMode.MALLET: LinearMode(A=A_mallet, B=B_mallet, Sigma=Sigma),
        },
        dt=dt,
        geometry=geom,
        contact_tolerance=sim_cfg.contact_tolerance,
    )


def save_model(model: PiecewiseModel, path) -> Path:
    """Write {version, dt, geometry, contact_tolerance, modes} as JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = {
        "version": DYNAMICS_SCHEMA_VERSION,
        "dt": model.dt,
        "geometry": model.geometry.model_dump(),
        "contact_tolerance": model.contact_tolerance,
        "modes": {
            mode.value: model.modes[mode].model_dump() for mode in DynamicsMode
        },
    }
    with open(path, "w") as f:
        json.dump(data, f, indent=2)
    return path


def load_model(path) -> PiecewiseModel:
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(
            f"Dynamics model not found: {path} (run `gen-data` then `fit-dynamics`)"
        )
    with open(path, "r") as f:
        data = json.load(f)
    version = data.get("version")
    if version != DYNAMICS_SCHEMA_VERSION:
        raise SchemaVersionError(
            f"{path}: dynamics schema version {version}, expected "
            f"{DYNAMICS_SCHEMA_VERSION}; regenerate with `fit-dynamics`"
        )
    return PiecewiseModel(
        modes={DynamicsMode(k): LinearMode(**v) for k, v in data["modes"].items()},
        dt=data["dt"],
        geometry=TableGeometry(**data.get("geometry", {})),
        contact_tolerance=data.get("contact_tolerance", DEFAULT_CONTACT_TOLERANCE),
    )
