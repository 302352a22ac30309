"""
InfoNCE training of the energy network.

For each state the demonstrated angle competes with uniformly drawn negative
angles; the loss is the negative log-softmax of the demonstrated angle under
logits -E:

    loss = E(s, a+) + logsumexp_j(-E(s, a_j)),   a_0 = a+

Gradients are backpropagated by hand and the parameters updated with Adam.
"""

import math
from typing import Optional

import numpy as np
import structlog
from scipy.special import logsumexp, softmax

from ..models import HockeyError, TableGeometry, TrainConfig
from .network import EnergyModelParams, Normalization, forward

log = structlog.get_logger(__name__)


class TrainingError(HockeyError):
    """Raised when training diverges or receives no data."""

    pass


def info_nce_loss(params: EnergyModelParams, states, positives, negatives) -> float:
    candidates = np.concatenate([np.asarray(positives)[:, None], np.asarray(negatives)], axis=1)
    energy = forward(params, states, candidates).energy
    return float(np.mean(energy[:, 0] + logsumexp(-energy, axis=1)))


def ebm_grad(
    params: EnergyModelParams,
    states,
    positives,
    negatives,
) -> tuple[float, list[np.ndarray]]:
    """
    Mean InfoNCE loss over the batch and its gradient.

    states (B, 4), positives (B,), negatives (B, n). The gradient list
    follows params.arrays(): [W1, b1, W2, b2, W3, b3].
    """
    negatives = np.asarray(negatives, dtype=float)
    if negatives.ndim != 2 or negatives.shape[1] == 0:
        raise ValueError("negatives must be a non-empty (B, n) array")
    states = np.asarray(states, dtype=float)
    candidates = np.concatenate([np.asarray(positives, dtype=float)[:, None], negatives], axis=1)
    cache = forward(params, states, candidates)
    energy = cache.energy
    batch = energy.shape[0]
    loss = float(np.mean(energy[:, 0] + logsumexp(-energy, axis=1)))

    # d loss / d E_j = 1{j = 0} - softmax(-E)_j
    g_energy = -softmax(-energy, axis=1)
    g_energy[:, 0] += 1.0
    g_energy /= batch

    (W1, _), (W2, _), (W3, _) = params.layers
    gW3 = np.einsum("nmi,nm->i", cache.h2, g_energy)[:, None]
    gb3 = np.array([g_energy.sum()])
    g_z2 = g_energy[..., None] * W3[:, 0] * (1.0 - cache.h2**2)
    gW2 = np.einsum("nmi,nmj->ij", cache.h1, g_z2)
    gb2 = g_z2.sum(axis=(0, 1))
    g_z1 = (g_z2 @ W2.T) * (1.0 - cache.h1**2)
    gW1 = np.empty_like(W1)
    gW1[:4] = np.einsum("ni,nmj->ij", cache.s_norm, g_z1)
    gW1[4] = np.einsum("nm,nmj->j", cache.a_norm, g_z1)
    gb1 = g_z1.sum(axis=(0, 1))
    return loss, [gW1, gb1, gW2, gb2, gW3, gb3]


class Adam:
    def __init__(self, arrays: list[np.ndarray], lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = [np.zeros_like(a) for a in arrays]
        self.v = [np.zeros_like(a) for a in arrays]
        self.t = 0

    def step(self, arrays: list[np.ndarray], grads: list[np.ndarray]):
        """Update arrays in place."""
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for a, g, m, v in zip(arrays, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            a -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def ebm_train(
    states,
    angles,
    config: Optional[TrainConfig] = None,
    geometry: Optional[TableGeometry] = None,
    init: Optional[EnergyModelParams] = None,
) -> EnergyModelParams:
    """
    Minibatch Adam on the InfoNCE loss with fresh uniform negatives every step.

    Deterministic given config.seed. The per-step losses are kept on the
    returned params as loss_curve.
    """
    config = config or TrainConfig()
    states = np.asarray(states, dtype=float).reshape(-1, 4)
    angles = np.asarray(angles, dtype=float).reshape(-1)
    if len(states) == 0:
        raise TrainingError("training dataset is empty")
    if len(states) != len(angles):
        raise TrainingError(f"{len(states)} states but {len(angles)} angles")

    rng = np.random.default_rng(config.seed)
    params = (
        init.copy()
        if init is not None
        else EnergyModelParams.initialize(rng, config.hidden, Normalization.for_table(geometry))
    )
    arrays = params.arrays()
    optimizer = Adam(arrays, config.learning_rate)
    lo, hi = config.angle_bounds

    n = len(states)
    batch = min(config.batch_size, n)
    per_epoch = math.ceil(n / batch)
    total = config.steps if config.steps is not None else config.epochs * per_epoch
    losses: list[float] = []
    order = rng.permutation(n)
    cursor = 0
    for step in range(total):
        if cursor + batch > n:
            order = rng.permutation(n)
            cursor = 0
        idx = order[cursor : cursor + batch]
        cursor += batch
        negatives = rng.uniform(lo, hi, size=(len(idx), config.n_negatives))
        loss, grads = ebm_grad(params, states[idx], angles[idx], negatives)
        if not math.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads):
            norms = [round(float(np.linalg.norm(a)), 4) for a in arrays]
            raise TrainingError(
                f"non-finite loss {loss} at step {step} (lr={config.learning_rate}, "
                f"parameter norms {norms})"
            )
        optimizer.step(arrays, grads)
        losses.append(loss)
        if (step + 1) % max(1, total // 10) == 0:
            log.info("ebm_training", step=step + 1, total=total, loss=round(loss, 5))

    params.loss_curve = losses
    return params
