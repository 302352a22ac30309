"""
Data collection and least-squares identification of the dynamics modes.
"""

import math
from typing import Optional, Sequence

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict
from scipy.linalg import cho_factor, cho_solve

from ..models import (
    ContactKind,
    DynamicsMode,
    ExplorationPolicy,
    HockeyError,
    MalletCommand,
    PuckState,
    SimConfig,
    TableGeometry,
)
from ..sim import AirHockeySim, classify_mode, table_walls
from .frames import MIRRORS, frame_for
from .model import LinearMode, PiecewiseModel

log = structlog.get_logger(__name__)

REGRESSOR_COLUMNS = ("p.x", "p.y", "p.vx", "p.vy", "m.x", "m.y", "m.vx", "m.vy")
CONDITION_LIMIT = 1e10

# contact that must have happened during a step for it to train a mode
_STEP_CONTACT = {
    DynamicsMode.FREE: None,
    DynamicsMode.WALL: ContactKind.WALL,
    DynamicsMode.MALLET: ContactKind.MALLET,
}


class RankDeficiencyError(HockeyError):
    """Raised when the stacked regressor does not have full column rank."""

    pass


class TransitionSample(BaseModel):
    """
    One labelled control step.

    s_m carries the mallet position at k and the velocity it moved with
    during the step. step_contact is the last contact that happened inside
    the step, if any.
    """

    model_config = ConfigDict(frozen=True)

    s_p: tuple[float, float, float, float]
    s_m: tuple[float, float, float, float]
    s_p_next: tuple[float, float, float, float]
    mode: DynamicsMode
    step_contact: Optional[ContactKind] = None
    episode: int = 0


def _stage_mallet_contact(sim: AirHockeySim, rng: np.random.Generator, tol: float):
    """Puck placed just inside the contact band of the mallet, closing in."""
    geom = sim.geometry
    x_min, x_max, y_max = sim.config.mallet_bounds()
    r = geom.contact_distance
    for _ in range(32):
        mx = rng.uniform(x_min + 0.05, x_max - 0.05)
        my = rng.uniform(-y_max + 0.05, y_max - 0.05)
        theta = rng.uniform(-math.pi, math.pi)
        nx, ny = math.cos(theta), math.sin(theta)
        dist = r + rng.uniform(0.0, 0.9) * tol
        px, py = mx + dist * nx, my + dist * ny
        if abs(px) < geom.puck_x_limit - 0.05 and abs(py) < geom.puck_y_limit - 0.05:
            break
    else:
        # fall back to a head-on configuration at the mallet's right
        mx, my, nx, ny = x_min + 0.2, 0.0, 1.0, 0.0
        px, py = mx + r, my
    puck_speed = rng.uniform(0.0, 2.0)
    tangent = rng.uniform(-1.0, 1.0)
    pvx = -puck_speed * nx - tangent * ny
    pvy = -puck_speed * ny + tangent * nx
    push = rng.uniform(0.0, 1.5)
    cmd = (push * nx, push * ny)
    return PuckState(x=px, y=py, vx=pvx, vy=pvy), (mx, my), cmd


def _stage_wall_contact(
    sim: AirHockeySim, rng: np.random.Generator, tol: float, speed_range: tuple[float, float]
):
    """Puck within the contact band of a random wall, moving into it."""
    geom = sim.geometry
    wall = table_walls(geom)[int(rng.integers(4))]
    nx, ny = wall.normal
    gap = rng.uniform(0.0, 0.9) * tol
    along = rng.uniform(-0.8, 0.8)
    if nx == 0.0:
        px = along * geom.puck_x_limit
        py = -ny * (geom.puck_y_limit - gap)
    else:
        px = -nx * (geom.puck_x_limit - gap)
        py = along * geom.puck_y_limit
    speed = rng.uniform(*speed_range)
    incidence = rng.uniform(-1.2, 1.2)
    # velocity into the wall, rotated by the incidence angle
    vx = -speed * (nx * math.cos(incidence) - ny * math.sin(incidence))
    vy = -speed * (ny * math.cos(incidence) + nx * math.sin(incidence))
    return PuckState(x=px, y=py, vx=vx, vy=vy)


def _random_mallet_far(sim: AirHockeySim, rng: np.random.Generator, puck: PuckState):
    x_min, x_max, y_max = sim.config.mallet_bounds()
    clearance = sim.geometry.contact_distance + 0.1
    for _ in range(32):
        mx = rng.uniform(x_min, x_max)
        my = rng.uniform(-y_max, y_max)
        if math.hypot(puck.x - mx, puck.y - my) > clearance:
            return mx, my
    return x_min, (-y_max if puck.y > 0 else y_max)


def _run_episode(
    episode: int,
    seed: int,
    policy: ExplorationPolicy,
    sim: AirHockeySim,
) -> list[TransitionSample]:
    rng = np.random.default_rng(seed)
    cfg = sim.config
    geom = sim.geometry
    tol = cfg.contact_tolerance

    sweep_dir = rng.uniform(-math.pi, math.pi)
    sweep_speed = rng.uniform(*policy.sweep_speed)
    sweep_phase = rng.uniform(0.0, 2 * math.pi)
    staged_cmd = None

    u = rng.random()
    if u < policy.staged_mallet_fraction:
        puck, mallet_xy, staged_cmd = _stage_mallet_contact(sim, rng, tol)
    elif u < policy.staged_mallet_fraction + policy.staged_wall_fraction:
        puck = _stage_wall_contact(sim, rng, tol, policy.launch_speed)
        mallet_xy = _random_mallet_far(sim, rng, puck)
    else:
        heading = rng.uniform(-math.pi, math.pi)
        speed = rng.uniform(*policy.launch_speed)
        puck = PuckState(
            x=rng.uniform(-geom.puck_x_limit + 0.05, geom.puck_x_limit - 0.05),
            y=rng.uniform(-geom.puck_y_limit + 0.05, geom.puck_y_limit - 0.05),
            vx=speed * math.cos(heading),
            vy=speed * math.sin(heading),
        )
        mallet_xy = _random_mallet_far(sim, rng, puck)

    world = sim.reset(puck, mallet_xy)
    samples: list[TransitionSample] = []
    omega = 2 * math.pi / policy.sweep_period
    for k in range(policy.n_steps):
        t = world.sim_time
        if k == 0 and staged_cmd is not None:
            cmd_v = staged_cmd
        else:
            s = sweep_speed * math.sin(omega * t + sweep_phase)
            cmd_v = (s * math.cos(sweep_dir), s * math.sin(sweep_dir))
            if rng.random() < 0.05:
                sweep_dir = rng.uniform(-math.pi, math.pi)
        mode = classify_mode(world.puck, world.mallet, geom, tol)
        nxt = sim.step(world, MalletCommand(target_velocity=cmd_v), cfg.dt, rng=rng)
        contact = nxt.last_contact
        fresh = contact is not None and contact is not world.last_contact
        step_contact = contact.kind if fresh else None
        samples.append(
            TransitionSample(
                s_p=(world.puck.x, world.puck.y, world.puck.vx, world.puck.vy),
                s_m=(world.mallet.x, world.mallet.y, nxt.mallet.vx, nxt.mallet.vy),
                s_p_next=(nxt.puck.x, nxt.puck.y, nxt.puck.vx, nxt.puck.vy),
                mode=mode,
                step_contact=step_contact,
                episode=episode,
            )
        )
        world = nxt
    return samples


def collect_transitions(
    n_episodes: int,
    policy: Optional[ExplorationPolicy] = None,
    rng: Optional[np.random.Generator] = None,
    sim_config: Optional[SimConfig] = None,
) -> list[TransitionSample]:
    """
    Run randomized exploration episodes and label every transition.

    Goals are closed during collection so end walls are hit everywhere.
    Each episode draws its own seed from rng up front, so episodes can be
    generated independently and are merged in episode order.
    """
    if n_episodes <= 0:
        raise ValueError("n_episodes must be positive")
    policy = policy or ExplorationPolicy()
    rng = rng if rng is not None else np.random.default_rng(0)
    sim_config = (sim_config or SimConfig()).model_copy(update={"goals_open": False})
    sim = AirHockeySim(sim_config)

    seeds = rng.integers(0, 2**63 - 1, size=n_episodes)
    samples: list[TransitionSample] = []
    for episode, seed in enumerate(seeds):
        samples.extend(_run_episode(episode, int(seed), policy, sim))

    counts = {m.value: 0 for m in DynamicsMode}
    for s in samples:
        counts[s.mode.value] += 1
    log.info("transitions_collected", episodes=n_episodes, samples=len(samples), **counts)
    return samples


def fit_arrays(S_p: np.ndarray, S_m: np.ndarray, S_next: np.ndarray) -> LinearMode:
    """
    Least-squares fit of S_next ~ A S_p + B S_m (rows are samples).

    Solved through the normal equations with a Cholesky factorization after
    column equilibration. Sigma is the unbiased residual covariance
    (divisor N - 8).
    """
    X = np.hstack([np.asarray(S_p, dtype=float), np.asarray(S_m, dtype=float)])
    Y = np.asarray(S_next, dtype=float)
    n, n_cols = X.shape
    if n < n_cols:
        raise RankDeficiencyError(
            f"need at least {n_cols} samples for the {n_cols}-column regressor, got {n}"
        )
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
        raise RankDeficiencyError("non-finite regressor or target values")

    scale = np.linalg.norm(X, axis=0)
    zero = [REGRESSOR_COLUMNS[i] for i in np.flatnonzero(scale == 0.0)]
    if zero:
        raise RankDeficiencyError(f"regressor columns are identically zero: {zero}")
    Xs = X / scale
    M = Xs.T @ Xs
    eigvals, eigvecs = np.linalg.eigh(M)
    if eigvals[0] <= 0 or eigvals[-1] / eigvals[0] > CONDITION_LIMIT:
        null = np.abs(eigvecs[:, 0])
        deficient = [REGRESSOR_COLUMNS[i] for i in np.flatnonzero(null > 0.1 * null.max())]
        raise RankDeficiencyError(
            f"regressor is rank deficient (condition {eigvals[-1] / max(eigvals[0], 1e-300):.3g}); "
            f"dependent columns: {deficient}"
        )

    W = cho_solve(cho_factor(M), Xs.T @ Y)
    theta = W / scale[:, None]  # (8, 4)
    residuals = Y - X @ theta
    dof = n - n_cols
    Sigma = residuals.T @ residuals / dof if dof > 0 else np.zeros((4, 4))
    return LinearMode(A=theta[:4].T, B=theta[4:].T, Sigma=0.5 * (Sigma + Sigma.T))


def fit_mode(samples: Sequence[TransitionSample]) -> LinearMode:
    """Fit one LinearMode from samples of a single mode (table coordinates)."""
    if len(samples) == 0:
        raise RankDeficiencyError("no samples")
    S_p = np.array([s.s_p for s in samples], dtype=float)
    S_m = np.array([s.s_m for s in samples], dtype=float)
    S_next = np.array([s.s_p_next for s in samples], dtype=float)
    return fit_arrays(S_p, S_m, S_next)


def _symmetrize(mode: DynamicsMode, lm: LinearMode) -> LinearMode:
    """Average the fit with its mirror image so mirror couplings vanish exactly."""
    S_p, S_m = MIRRORS[mode]
    return LinearMode(
        A=0.5 * (lm.A + S_p @ lm.A @ S_p),
        B=0.5 * (lm.B + S_p @ lm.B @ S_m),
        Sigma=0.5 * (lm.Sigma + S_p @ lm.Sigma @ S_p),
    )


def canonical_arrays(
    mode: DynamicsMode,
    samples: Sequence[TransitionSample],
    geom: TableGeometry,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Map samples of one mode into its canonical frames (rows are samples)."""
    C_p, C_m, C_next = [], [], []
    for s in samples:
        s_p = np.array(s.s_p)
        s_m = np.array(s.s_m)
        frame = frame_for(mode, s_p, s_m, geom)
        C_p.append(frame.puck_in(s_p))
        C_m.append(frame.mallet_in(s_m))
        C_next.append(frame.puck_in(s.s_p_next))
    return np.array(C_p), np.array(C_m), np.array(C_next)


def fit_piecewise(
    samples: Sequence[TransitionSample],
    dt: float,
    geom: Optional[TableGeometry] = None,
    contact_tolerance: float = 0.001,
    symmetrize: bool = True,
) -> PiecewiseModel:
    """
    Identify all three modes from labelled transitions.

    A contact mode is fitted only on steps that actually contained that
    contact (and Free only on contact-free steps), so a sample labelled
    Mallet whose puck separated before touching does not blur the fit.
    Each mode is augmented with its mirror image and symmetrized.
    """
    geom = geom or TableGeometry()
    modes: dict[DynamicsMode, LinearMode] = {}
    for mode in DynamicsMode:
        required = _STEP_CONTACT[mode]
        chosen = [s for s in samples if s.mode == mode and s.step_contact == required]
        C_p, C_m, C_next = canonical_arrays(mode, chosen, geom) if chosen else (
            np.zeros((0, 4)), np.zeros((0, 4)), np.zeros((0, 4))
        )
        if symmetrize and len(chosen):
            S_p, S_m = MIRRORS[mode]
            C_p = np.vstack([C_p, C_p @ S_p])
            C_m = np.vstack([C_m, C_m @ S_m])
            C_next = np.vstack([C_next, C_next @ S_p])
        try:
            lm = fit_arrays(C_p, C_m, C_next)
        except RankDeficiencyError as e:
            raise RankDeficiencyError(f"{mode.value} mode ({len(chosen)} samples): {e}") from e
        if symmetrize:
            lm = _symmetrize(mode, lm)
        modes[mode] = lm
        log.info(
            "mode_fitted",
            mode=mode.value,
            samples=len(chosen),
            sigma_trace=float(np.trace(lm.Sigma)),
        )
    return PiecewiseModel(
        modes=modes, dt=dt, geometry=geom, contact_tolerance=contact_tolerance
    )


def one_step_rmse(model: PiecewiseModel, samples: Sequence[TransitionSample]) -> np.ndarray:
    """Per-component RMSE of model.predict over held-out samples."""
    if not samples:
        return np.zeros(4)
    errs = []
    for s in samples:
        lin = model.linearize(np.array(s.s_p), np.array(s.s_m))
        errs.append(lin.mean - np.array(s.s_p_next))
    return np.sqrt(np.mean(np.square(errs), axis=0))
