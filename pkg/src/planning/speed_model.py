"""
Maximum mallet speed the robot can produce at a contact position.
"""

import math
from typing import Optional, Protocol

import numpy as np
import structlog

from ..control.arm import batch_fk_jacobian
from ..models import ArmModel, ShotConfig, SimConfig, SpeedModelKind

log = structlog.get_logger(__name__)


class SpeedModel(Protocol):
    def speed(self, pos) -> float: ...


class ConstantSpeedModel:
    """The same cap everywhere."""

    def __init__(self, cap: float = 2.0):
        self.cap = cap

    def speed(self, pos) -> float:
        return self.cap


class ArmSpeedMap:
    """
    Position-dependent speed cap derived from the arm's joint velocity limits.

    The joint box is swept on a grid; for every reached posture the speed
    the arm can produce in its worst direction is

        min over unit d of  min_i  qd_max_i / |(J^+ d)_i|

    and each table cell keeps its best posture. Cells no posture reaches
    report 0 (infeasible). The map is symmetrized about y = 0, which holds
    exactly for a base on the centerline and a symmetric joint box.
    """

    def __init__(
        self,
        arm: ArmModel,
        sim_config: Optional[SimConfig] = None,
        cap: float = 2.0,
        cell: float = 0.04,
        joint_samples: int = 29,
        n_directions: int = 16,
    ):
        sim_config = sim_config or SimConfig()
        self.arm = arm
        self.cap = cap
        self.cell = cell
        x_min, x_max, y_max = sim_config.mallet_bounds()
        self.x0 = x_min
        self.y0 = -y_max
        self.nx = max(1, int(math.ceil((x_max - x_min) / cell)))
        self.ny = max(1, int(math.ceil(2 * y_max / cell)))
        self.cell_y = 2 * y_max / self.ny
        self.table = self._sweep(joint_samples, n_directions)
        log.info(
            "arm_speed_map_built",
            cells=self.nx * self.ny,
            reached=int(np.count_nonzero(self.table)),
        )

    def _sweep(self, joint_samples: int, n_directions: int) -> np.ndarray:
        axes = [
            np.linspace(lo, hi, joint_samples)
            for lo, hi in zip(self.arm.q_min, self.arm.q_max)
        ]
        Q = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
        pos, J = batch_fk_jacobian(Q, self.arm)
        J_pinv = np.linalg.pinv(J)  # (N, 3, 2)
        angles = np.linspace(0.0, 2 * math.pi, n_directions, endpoint=False)
        D = np.stack([np.cos(angles), np.sin(angles)])  # (2, n_dir)
        qd = J_pinv @ D  # (N, 3, n_dir)
        qd_max = np.asarray(self.arm.qd_max)[None, :, None]
        with np.errstate(divide="ignore"):
            ratio = np.where(np.abs(qd) > 0, qd_max / np.abs(qd), np.inf)
        per_direction = ratio.min(axis=1)
        # directions outside the range of J (singular postures) are unreachable
        miss = np.linalg.norm(J @ qd - D[None], axis=1) > 1e-6
        per_direction[miss] = 0.0
        capacity = per_direction.min(axis=1)

        ix = np.floor((pos[:, 0] - self.x0) / self.cell).astype(int)
        iy = np.floor((pos[:, 1] - self.y0) / self.cell_y).astype(int)
        inside = (ix >= 0) & (ix < self.nx) & (iy >= 0) & (iy < self.ny)
        table = np.zeros((self.nx, self.ny))
        np.maximum.at(table, (ix[inside], iy[inside]), capacity[inside])
        table = np.maximum(table, table[:, ::-1])
        return np.minimum(table, self.cap)

    def speed(self, pos) -> float:
        ix = int(math.floor((pos[0] - self.x0) / self.cell))
        iy = int(math.floor((pos[1] - self.y0) / self.cell_y))
        if not (0 <= ix < self.nx and 0 <= iy < self.ny):
            return 0.0
        return float(self.table[ix, iy])


def make_speed_model(
    shot: ShotConfig,
    arm: Optional[ArmModel] = None,
    sim_config: Optional[SimConfig] = None,
) -> SpeedModel:
    if shot.speed_model == SpeedModelKind.ARM:
        return ArmSpeedMap(arm or ArmModel(), sim_config, cap=shot.constant_speed)
    return ConstantSpeedModel(shot.constant_speed)


def max_contact_speed(pos, speed_model: Optional[SpeedModel] = None) -> float:
    """Speed-cap model evaluated at a contact position (default: 2 m/s everywhere)."""
    return (speed_model or ConstantSpeedModel()).speed(pos)
