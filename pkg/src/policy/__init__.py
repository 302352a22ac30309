"""Energy-based shot policy: network, training and sampling inference."""

from .network import (
    EBM_SCHEMA_VERSION,
    EnergyModelParams,
    Layer,
    Normalization,
    batch_energy,
    ebm_energy,
    forward,
    lipschitz_bound,
    load_ebm,
    save_ebm,
)
from .sampler import dfo_argmin, ebm_infer, evaluate_policy
from .train import Adam, TrainingError, ebm_grad, ebm_train, info_nce_loss

__all__ = [
    "EBM_SCHEMA_VERSION",
    "EnergyModelParams",
    "Layer",
    "Normalization",
    "batch_energy",
    "ebm_energy",
    "forward",
    "lipschitz_bound",
    "load_ebm",
    "save_ebm",
    "dfo_argmin",
    "ebm_infer",
    "evaluate_policy",
    "Adam",
    "TrainingError",
    "ebm_grad",
    "ebm_train",
    "info_nce_loss",
]
