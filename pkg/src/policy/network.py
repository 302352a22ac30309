"""
Energy network E(s, a) over puck state and contact angle.

Fully connected 5 -> hidden -> hidden -> 1 with tanh activations, evaluated
with numpy. Inputs are normalized: positions by the half-table extents,
velocities by VELOCITY_SCALE, the angle by pi.
"""

import json
import math
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..models import MissingArtifactError, SchemaVersionError, TableGeometry

EBM_SCHEMA_VERSION = 1
VELOCITY_SCALE = 5.0
INPUT_DIM = 5


class Normalization(BaseModel):
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    x_scale: float = Field(gt=0)
    y_scale: float = Field(gt=0)
    v_scale: float = Field(default=VELOCITY_SCALE, gt=0)
    a_scale: float = Field(default=math.pi, gt=0)

    @classmethod
    def for_table(cls, geometry: Optional[TableGeometry] = None) -> "Normalization":
        geometry = geometry or TableGeometry()
        return cls(x_scale=geometry.length / 2, y_scale=geometry.width / 2)

    def state_scale(self) -> np.ndarray:
        return np.array([self.x_scale, self.y_scale, self.v_scale, self.v_scale])


class Layer(NamedTuple):
    W: np.ndarray
    b: np.ndarray


class EnergyModelParams:
    """
    Weights of the energy network plus the normalization they were trained with.

    layers[0] maps the 5 normalized inputs (state first, angle last) to the
    first hidden layer; the last layer has a single output unit.
    """

    def __init__(self, layers: list[Layer], normalization: Normalization):
        if len(layers) != 3:
            raise ValueError(f"expected 3 layers, got {len(layers)}")
        if layers[0].W.shape[0] != INPUT_DIM or layers[-1].W.shape[1] != 1:
            raise ValueError("energy network must map 5 inputs to 1 output")
        for i, layer in enumerate(layers):
            if layer.b.shape != (layer.W.shape[1],):
                raise ValueError(f"layer {i}: bias does not match {layer.W.shape[1]} outputs")
            if not (np.all(np.isfinite(layer.W)) and np.all(np.isfinite(layer.b))):
                raise ValueError(f"layer {i}: non-finite parameters")
        self.layers = [
            Layer(np.array(layer.W, dtype=float), np.array(layer.b, dtype=float))
            for layer in layers
        ]
        self.normalization = normalization
        self.loss_curve: list[float] = []

    @property
    def hidden(self) -> tuple[int, int]:
        return (self.layers[0].W.shape[1], self.layers[1].W.shape[1])

    @property
    def arch(self) -> dict:
        return {"input": INPUT_DIM, "hidden": list(self.hidden), "activation": "tanh", "output": 1}

    def copy(self) -> "EnergyModelParams":
        params = EnergyModelParams(
            [Layer(layer.W.copy(), layer.b.copy()) for layer in self.layers], self.normalization
        )
        params.loss_curve = list(self.loss_curve)
        return params

    def arrays(self) -> list[np.ndarray]:
        """Flat list [W1, b1, W2, b2, W3, b3] sharing memory with the layers."""
        return [a for layer in self.layers for a in layer]

    @classmethod
    def zeros(cls, hidden: int = 64, normalization: Optional[Normalization] = None):
        normalization = normalization or Normalization.for_table()
        dims = [INPUT_DIM, hidden, hidden, 1]
        layers = [Layer(np.zeros((i, o)), np.zeros(o)) for i, o in zip(dims, dims[1:])]
        return cls(layers, normalization)

    @classmethod
    def initialize(
        cls,
        rng: np.random.Generator,
        hidden: int = 64,
        normalization: Optional[Normalization] = None,
    ) -> "EnergyModelParams":
        """Glorot-uniform weights and zero biases."""
        normalization = normalization or Normalization.for_table()
        dims = [INPUT_DIM, hidden, hidden, 1]
        layers = []
        for fan_in, fan_out in zip(dims, dims[1:]):
            limit = math.sqrt(6.0 / (fan_in + fan_out))
            layers.append(Layer(rng.uniform(-limit, limit, (fan_in, fan_out)), np.zeros(fan_out)))
        return cls(layers, normalization)


class ForwardCache(NamedTuple):
    s_norm: np.ndarray  # (N, 4)
    a_norm: np.ndarray  # (N, M)
    h1: np.ndarray  # (N, M, H1)
    h2: np.ndarray  # (N, M, H2)
    energy: np.ndarray  # (N, M)


def forward(params: EnergyModelParams, states, angles) -> ForwardCache:
    """
    Energies of M angles for each of N states.

    states has shape (N, 4) and angles (N, M). The state half of the first
    layer is computed once per state.
    """
    norm = params.normalization
    s_norm = np.asarray(states, dtype=float) / norm.state_scale()
    a_norm = np.asarray(angles, dtype=float) / norm.a_scale
    (W1, b1), (W2, b2), (W3, b3) = params.layers
    state_part = s_norm @ W1[:4] + b1  # (N, H1)
    h1 = np.tanh(state_part[:, None, :] + a_norm[..., None] * W1[4])
    h2 = np.tanh(h1 @ W2 + b2)
    energy = h2 @ W3[:, 0] + b3[0]
    return ForwardCache(s_norm, a_norm, h1, h2, energy)


def batch_energy(params: EnergyModelParams, s, angles) -> np.ndarray:
    """Energies of a vector of angles for one state."""
    angles = np.asarray(angles, dtype=float)
    return forward(params, np.asarray(s, dtype=float)[None, :], angles[None, :]).energy[0]


def ebm_energy(params: EnergyModelParams, s, a: float) -> float:
    return float(batch_energy(params, s, [a])[0])


def lipschitz_bound(params: EnergyModelParams) -> float:
    """Upper bound on |dE/da| from the angle column and the spectral norms."""
    (W1, _), (W2, _), (W3, _) = params.layers
    return float(
        np.linalg.norm(W1[4]) / params.normalization.a_scale
        * np.linalg.norm(W2, 2)
        * np.linalg.norm(W3, 2)
    )


def save_ebm(params: EnergyModelParams, path) -> Path:
    """Write {version, arch, normalization, layers} as JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = {
        "version": EBM_SCHEMA_VERSION,
        "arch": params.arch,
        "normalization": params.normalization.model_dump(),
        "layers": [{"W": layer.W.tolist(), "b": layer.b.tolist()} for layer in params.layers],
    }
    if params.loss_curve:
        data["final_loss"] = params.loss_curve[-1]
    with open(path, "w") as f:
        json.dump(data, f)
    return path


def load_ebm(path) -> EnergyModelParams:
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(
            f"Energy model not found: {path} (run `plan-shots` then `train-ebm`)"
        )
    with open(path, "r") as f:
        data = json.load(f)
    version = data.get("version")
    if version != EBM_SCHEMA_VERSION:
        raise SchemaVersionError(
            f"{path}: energy model schema version {version}, expected "
            f"{EBM_SCHEMA_VERSION}; retrain with `train-ebm`"
        )
    layers = [
        Layer(np.array(entry["W"], dtype=float), np.array(entry["b"], dtype=float))
        for entry in data["layers"]
    ]
    params = EnergyModelParams(layers, Normalization(**data["normalization"]))
    if list(params.hidden) != list(data["arch"]["hidden"]):
        raise SchemaVersionError(f"{path}: layer shapes do not match arch {data['arch']}")
    return params
