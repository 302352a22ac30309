"""
Derivative-free argmin of the energy over the angle interval.

Iteration 0 draws uniform samples. Each later iteration resamples the
previous population with softmax(-E / temperature) weights, adds Gaussian
noise, clips to the interval and shrinks the noise. The lowest-energy angle
seen in any iteration is returned.
"""

from typing import Callable, Optional

import numpy as np
from scipy.special import softmax

from ..models import SamplerConfig
from .network import EnergyModelParams, batch_energy

EnergyFn = Callable[[np.ndarray], np.ndarray]


def dfo_argmin(
    energy_fn: EnergyFn,
    config: SamplerConfig,
    rng: np.random.Generator,
) -> float:
    lo, hi = config.angle_bounds
    n = config.n_samples
    samples = rng.uniform(lo, hi, n)
    sigma = config.init_sigma
    best_a, best_e = float(samples[0]), np.inf
    for it in range(config.n_iters):
        energy = np.asarray(energy_fn(samples), dtype=float)
        i = int(np.argmin(energy))
        if energy[i] < best_e:
            best_a, best_e = float(samples[i]), float(energy[i])
        if it == config.n_iters - 1:
            break
        weights = softmax(-energy / config.temperature)
        picks = rng.choice(n, size=n, p=weights)
        samples = np.clip(samples[picks] + rng.normal(0.0, sigma, n), lo, hi)
        sigma *= config.shrink
    return best_a


def ebm_infer(
    params: EnergyModelParams,
    s,
    config: Optional[SamplerConfig] = None,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """Contact angle minimizing E(s, a); always inside the sampler's interval."""
    config = config or SamplerConfig()
    rng = rng if rng is not None else np.random.default_rng(0)
    s = np.asarray(s, dtype=float)
    return dfo_argmin(lambda a: batch_energy(params, s, a), config, rng)


def evaluate_policy(
    params: EnergyModelParams,
    states,
    angles,
    config: Optional[SamplerConfig] = None,
    seed: int = 0,
) -> dict:
    """Median and 95th-percentile absolute angle error against planner labels."""
    states = np.asarray(states, dtype=float).reshape(-1, 4)
    angles = np.asarray(angles, dtype=float).reshape(-1)
    rng = np.random.default_rng(seed)
    predicted = np.array([ebm_infer(params, s, config, rng) for s in states])
    errors = np.abs(predicted - angles)
    if len(errors) == 0:
        return {"n": 0, "median_error": None, "p95_error": None}
    return {
        "n": int(len(errors)),
        "median_error": float(np.median(errors)),
        "p95_error": float(np.percentile(errors, 95)),
    }
