"""
Canonical frames for the contact modes.

A single linear map cannot describe bounces off walls or mallets with
different normals, so contact samples are expressed in a frame attached to
the contact before regression, and predictions are mapped back.

Coordinates in a canonical frame are ordered (t, n, vt, vn): tangent first,
normal pointing into the table (walls) or from mallet to puck (mallets).
"""

import math
from typing import NamedTuple, Optional

import numpy as np

from ..models import DynamicsMode, TableGeometry
from ..sim.physics import Wall, nearest_wall

# Mirror maps used to symmetrize fits: (puck map, mallet map) per mode.
_FLIP_Y = np.diag([1.0, -1.0, 1.0, -1.0])
_FLIP_T = np.diag([-1.0, 1.0, -1.0, 1.0])
# mallet-mode regressor: table-frame position, normal-frame velocity
_FLIP_MIXED = np.diag([1.0, -1.0, -1.0, 1.0])

MIRRORS = {
    DynamicsMode.FREE: (_FLIP_Y, _FLIP_Y),
    DynamicsMode.WALL: (_FLIP_T, _FLIP_T),
    DynamicsMode.MALLET: (_FLIP_T, _FLIP_MIXED),
}


class Frame(NamedTuple):
    """
    Affine map from table coordinates into a mode's canonical frame.

    G is blockdiag(R, R) with R orthonormal (rows t, n); offset is applied to
    positions only. mixed_mallet keeps the mallet position in table
    coordinates: in the contact-normal frame its tangent coordinate always
    equals the puck's, which would make the regressor rank-deficient.
    """

    mode: DynamicsMode
    G: np.ndarray
    offset: np.ndarray
    mixed_mallet: bool = False

    def puck_in(self, s_p) -> np.ndarray:
        return self.G @ (np.asarray(s_p, dtype=float) - self.offset)

    def mallet_in(self, s_m) -> np.ndarray:
        s_m = np.asarray(s_m, dtype=float)
        if self.mixed_mallet:
            R = self.G[:2, :2]
            return np.concatenate([s_m[:2], R @ s_m[2:]])
        return self.G @ (s_m - self.offset)

    def puck_out(self, c) -> np.ndarray:
        return self.G.T @ c + self.offset


_ZERO = np.zeros(4)


def _block(R: np.ndarray) -> np.ndarray:
    G = np.zeros((4, 4))
    G[:2, :2] = R
    G[2:, 2:] = R
    return G


def identity_frame() -> Frame:
    return Frame(DynamicsMode.FREE, np.eye(4), _ZERO)


def wall_frame(wall: Wall) -> Frame:
    """Frame on a wall's puck-center limit line, normal into the table."""
    n = wall.normal
    # side walls run along x, end walls along y; mirrored walls share coordinates
    t = (1.0, 0.0) if n[0] == 0.0 else (0.0, 1.0)
    R = np.array([t, n], dtype=float)
    origin = np.array([-wall.limit * n[0], -wall.limit * n[1], 0.0, 0.0])
    return Frame(DynamicsMode.WALL, _block(R), origin)


def mallet_frame(puck_xy, mallet_xy) -> Frame:
    """Rotation aligning n with the mallet-to-puck direction (no translation)."""
    dx = puck_xy[0] - mallet_xy[0]
    dy = puck_xy[1] - mallet_xy[1]
    dist = math.hypot(dx, dy)
    if dist < 1e-12:
        nx, ny = 1.0, 0.0
    else:
        nx, ny = dx / dist, dy / dist
    R = np.array([[-ny, nx], [nx, ny]])
    return Frame(DynamicsMode.MALLET, _block(R), _ZERO, mixed_mallet=True)


def frame_for(
    mode: DynamicsMode,
    s_p,
    s_m: Optional[np.ndarray],
    geom: TableGeometry,
) -> Frame:
    """Canonical frame for a puck/mallet configuration already classified as mode."""
    if mode == DynamicsMode.WALL:
        wall, _ = nearest_wall(float(s_p[0]), float(s_p[1]), geom)
        return wall_frame(wall)
    if mode == DynamicsMode.MALLET:
        if s_m is None:
            raise ValueError("mallet mode needs a mallet state")
        return mallet_frame(s_p[:2], s_m[:2])
    return identity_frame()
