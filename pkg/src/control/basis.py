"""
Minimum-acceleration trajectory basis.

For fixed endpoint positions and velocities the minimizer of the integrated
squared acceleration is the cubic Hermite interpolant. Per axis, with
s = t / T and boundary vector (x0, v0, xT, vT):

    x(t) = h00(s) x0 + T h10(s) v0 + h01(s) xT + T h11(s) vT

The basis evaluates position, velocity and acceleration rows on the grid
t_k = k dt, k = 0..K, so a trajectory is one matrix product per axis.
"""

from functools import lru_cache
from typing import NamedTuple

import numpy as np

from ..models import HockeyError

MIN_HORIZON = 2


class HorizonTooShortError(HockeyError):
    """Raised when fewer than two control steps remain before contact."""

    pass


class BasisSet(NamedTuple):
    K: int
    dt: float
    times: np.ndarray  # (K+1,)
    P: np.ndarray  # (K+1, 4) position rows over (x0, v0, xT, vT)
    V: np.ndarray  # (K+1, 4) velocity rows
    A: np.ndarray  # (K+1, 4) acceleration rows

    @property
    def T(self) -> float:
        return self.K * self.dt

    def trajectory(self, x0, v0, xT, vT) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Positions, velocities and accelerations (K+1, dims) for vector boundaries."""
        b = np.stack([np.asarray(x0, float), np.asarray(v0, float),
                      np.asarray(xT, float), np.asarray(vT, float)])
        return self.P @ b, self.V @ b, self.A @ b


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@lru_cache(maxsize=256)
def build_basis(K: int, dt: float) -> BasisSet:
    if K < MIN_HORIZON:
        raise HorizonTooShortError(f"horizon of {K} steps is below {MIN_HORIZON}")
    if dt <= 0:
        raise ValueError("dt must be positive")
    T = K * dt
    times = np.arange(K + 1) * dt
    s = np.arange(K + 1) / K
    s2, s3 = s * s, s * s * s
    P = np.stack(
        [2 * s3 - 3 * s2 + 1, T * (s3 - 2 * s2 + s), -2 * s3 + 3 * s2, T * (s3 - s2)],
        axis=1,
    )
    V = np.stack(
        [(6 * s2 - 6 * s) / T, 3 * s2 - 4 * s + 1, (-6 * s2 + 6 * s) / T, 3 * s2 - 2 * s],
        axis=1,
    )
    A = np.stack(
        [(12 * s - 6) / T**2, (6 * s - 4) / T, (-12 * s + 6) / T**2, (6 * s - 2) / T],
        axis=1,
    )
    # endpoint rows are exact interpolation conditions
    P[0], P[-1] = (1.0, 0.0, 0.0, 0.0), (0.0, 0.0, 1.0, 0.0)
    V[0], V[-1] = (0.0, 1.0, 0.0, 0.0), (0.0, 0.0, 0.0, 1.0)
    return BasisSet(K, dt, _readonly(times), _readonly(P), _readonly(V), _readonly(A))


def acceleration_functional(acc: np.ndarray, dt: float) -> float:
    """Trapezoidal sum of squared acceleration norms over the grid."""
    sq = np.sum(np.asarray(acc, dtype=float) ** 2, axis=-1)
    weights = np.full(len(sq), dt)
    weights[0] = weights[-1] = dt / 2
    return float(sq @ weights)
