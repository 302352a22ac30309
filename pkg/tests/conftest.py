"""Shared fixtures: default configs, the physics-derived model and synthetic models."""

import numpy as np
import pytest

from src.dynamics import LinearMode, PiecewiseModel, analytic_model
from src.models import Belief, DynamicsMode, MatchConfig, SimConfig, TableGeometry
from src.sim import AirHockeySim


@pytest.fixture
def geometry() -> TableGeometry:
    return TableGeometry()


@pytest.fixture
def sim_config() -> SimConfig:
    return SimConfig()


@pytest.fixture
def sim(sim_config) -> AirHockeySim:
    return AirHockeySim(sim_config)


@pytest.fixture
def match_config() -> MatchConfig:
    return MatchConfig()


@pytest.fixture(scope="session")
def model() -> PiecewiseModel:
    """Physics-derived piecewise model of the default simulator."""
    return analytic_model(SimConfig())


def identity_model(sigma: float = 0.0, dt: float = 0.02) -> PiecewiseModel:
    mode = LinearMode.identity(sigma)
    return PiecewiseModel(modes={m: mode for m in DynamicsMode}, dt=dt)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(0)


def tight_belief(x: float, y: float, vx: float = 0.0, vy: float = 0.0, stamp: float = 0.0) -> Belief:
    return Belief(
        mean=np.array([x, y, vx, vy]),
        cov=np.diag([1e-8, 1e-8, 1e-8, 1e-8]),
        stamp=stamp,
    )
