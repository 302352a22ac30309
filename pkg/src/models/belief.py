import numpy as np
from pydantic import BaseModel, ConfigDict, field_serializer, field_validator

from .table import PuckState


def _as_matrix(value, shape: tuple[int, ...]) -> np.ndarray:
    arr = np.array(value, dtype=float)
    if arr.shape != shape:
        raise ValueError(f"expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite entries")
    arr.setflags(write=False)
    return arr


class Belief(BaseModel):
    """
    Gaussian puck-state estimate.

    mean is (x, y, vx, vy); cov is its 4x4 covariance, symmetrized on
    construction. stamp is the simulation time the estimate refers to.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    mean: np.ndarray
    cov: np.ndarray
    stamp: float = 0.0

    @field_validator("mean", mode="before")
    @classmethod
    def _check_mean(cls, v) -> np.ndarray:
        return _as_matrix(v, (4,))

    @field_validator("cov", mode="before")
    @classmethod
    def _check_cov(cls, v) -> np.ndarray:
        cov = np.array(v, dtype=float)
        return _as_matrix(0.5 * (cov + cov.T), (4, 4))

    @field_serializer("mean", "cov")
    def _dump_array(self, v: np.ndarray) -> list:
        return v.tolist()

    @property
    def position(self) -> np.ndarray:
        return self.mean[:2]

    @property
    def velocity(self) -> np.ndarray:
        return self.mean[2:]

    @property
    def speed(self) -> float:
        return float(np.hypot(self.mean[2], self.mean[3]))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.cov)[0])

    def to_puck(self) -> PuckState:
        return PuckState.from_array(self.mean)

    @classmethod
    def from_position(
        cls, position, cov_diag=(1e-4, 1e-4, 0.25, 0.25), stamp: float = 0.0
    ) -> "Belief":
        """Belief with a known position and uncertain (zero-mean) velocity."""
        mean = np.array([position[0], position[1], 0.0, 0.0])
        return cls(mean=mean, cov=np.diag(cov_diag), stamp=stamp)


class ObservationModel(BaseModel):
    """Linear position measurement z = H s + noise(R)."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    H: np.ndarray
    R: np.ndarray

    @field_validator("H", mode="before")
    @classmethod
    def _check_h(cls, v) -> np.ndarray:
        return _as_matrix(v, (2, 4))

    @field_validator("R", mode="before")
    @classmethod
    def _check_r(cls, v) -> np.ndarray:
        r = _as_matrix(v, (2, 2))
        if not np.allclose(r, r.T) or np.linalg.eigvalsh(r)[0] <= 0:
            raise ValueError("R must be symmetric positive definite")
        return r

    @classmethod
    def position_only(cls, sigma: float = 0.005) -> "ObservationModel":
        H = np.zeros((2, 4))
        H[0, 0] = 1.0
        H[1, 1] = 1.0
        return cls(H=H, R=np.eye(2) * sigma**2)
