"""
Offline pipeline and evaluation commands.

Each command reads and writes versioned artifacts in one directory:
- transitions.jsonl   gen-data
- dynamics.json       fit-dynamics
- shots.jsonl         plan-shots
- ebm.json            train-ebm
- logs/               play (match traces + metrics.json)

Every command draws its random numbers from its own stream of the run seed,
so re-running one command does not shift the others.
"""

import json
import platform
import time
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
import structlog

from ..dynamics import (
    PiecewiseModel,
    TransitionSample,
    collect_transitions,
    fit_piecewise,
    load_model,
    one_step_rmse,
    save_model,
)
from ..logging import read_jsonl, write_jsonl
from ..models import MatchConfig, MissingArtifactError
from ..planning import load_shot_dataset, make_speed_model, plan_shot_records, write_shot_dataset
from ..policy import EnergyModelParams, ebm_train, evaluate_policy, load_ebm, save_ebm
from .agent import STAGES
from .match import MatchRunner, run_match, run_shooting_trials

# Optional psutil for host information in bench reports
try:
    import psutil
    PSUTIL_AVAILABLE = True
except ImportError:
    PSUTIL_AVAILABLE = False

log = structlog.get_logger(__name__)

TRANSITIONS_FILE = "transitions.jsonl"
DYNAMICS_FILE = "dynamics.json"
SHOTS_FILE = "shots.jsonl"
EBM_FILE = "ebm.json"
LOG_DIR = "logs"

# stream index per command, mixed into the run seed
_STREAMS = {"gen-data": 1, "plan-shots": 2, "eval-ebm": 3}

HOLDOUT_FRACTION = 0.1


def command_rng(seed: int, command: str) -> np.random.Generator:
    return np.random.default_rng([seed, _STREAMS[command]])


def artifact_path(out_dir, name: str) -> Path:
    return Path(out_dir) / name


def gen_data(config: MatchConfig, out_dir, episodes: int = 200) -> dict:
    samples = collect_transitions(
        episodes, config.exploration, command_rng(config.seed, "gen-data"), config.sim
    )
    path = artifact_path(out_dir, TRANSITIONS_FILE)
    n = write_jsonl(path, (s.model_dump(mode="json") for s in samples))
    return {"transitions": n, "episodes": episodes, "path": str(path)}


def load_transitions(path) -> list[TransitionSample]:
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(f"Transitions not found: {path} (run `gen-data`)")
    return [TransitionSample.model_validate(r) for r in read_jsonl(path)]


def fit_dynamics(config: MatchConfig, out_dir, data=None) -> dict:
    """Fit the piecewise model on all but the last episodes, report held-out RMSE."""
    samples = load_transitions(data or artifact_path(out_dir, TRANSITIONS_FILE))
    episodes = sorted({s.episode for s in samples})
    n_holdout = int(len(episodes) * HOLDOUT_FRACTION)
    held = set(episodes[len(episodes) - n_holdout:]) if n_holdout else set()
    train = [s for s in samples if s.episode not in held]
    test = [s for s in samples if s.episode in held]

    model = fit_piecewise(
        train, config.sim.dt, config.sim.geometry, config.sim.contact_tolerance
    )
    path = save_model(model, artifact_path(out_dir, DYNAMICS_FILE))
    rmse = one_step_rmse(model, test)
    return {
        "train_samples": len(train),
        "holdout_samples": len(test),
        "holdout_rmse": rmse.tolist(),
        "path": str(path),
    }


def plan_shots(config: MatchConfig, out_dir, n: int = 5000) -> dict:
    model = load_model(artifact_path(out_dir, DYNAMICS_FILE))
    speed_model = make_speed_model(config.shot, config.arm, config.sim)
    records = plan_shot_records(
        n, command_rng(config.seed, "plan-shots"), model, config, speed_model
    )
    path = write_shot_dataset(artifact_path(out_dir, SHOTS_FILE), records)
    return {"requested": n, "records": len(records), "path": str(path)}


def train_ebm(config: MatchConfig, out_dir, data=None, model_file=None) -> dict:
    states, angles = load_shot_dataset(data or artifact_path(out_dir, SHOTS_FILE))
    train_cfg = config.train.model_copy(update={"seed": config.seed})
    params = ebm_train(states, angles, train_cfg, config.sim.geometry)
    path = save_ebm(params, model_file or artifact_path(out_dir, EBM_FILE))
    return {
        "samples": len(angles),
        "final_loss": params.loss_curve[-1] if params.loss_curve else None,
        "path": str(path),
    }


def eval_ebm(config: MatchConfig, out_dir, data=None, model_file=None) -> dict:
    """Angle error of the policy against planner labels (by default the shots file)."""
    params = load_ebm(model_file or artifact_path(out_dir, EBM_FILE))
    states, angles = load_shot_dataset(data or artifact_path(out_dir, SHOTS_FILE))
    seed = int(command_rng(config.seed, "eval-ebm").integers(2**31))
    return evaluate_policy(params, states, angles, config.sampler, seed)


def load_agent_artifacts(
    out_dir, use_policy: bool = True
) -> tuple[PiecewiseModel, Optional[EnergyModelParams]]:
    """Dynamics model and (optionally) the energy policy; raises with the commands to run."""
    model = load_model(artifact_path(out_dir, DYNAMICS_FILE))
    policy: Optional[EnergyModelParams] = None
    if use_policy:
        policy = load_ebm(artifact_path(out_dir, EBM_FILE))
    return model, policy


def play(config: MatchConfig, out_dir, use_policy: bool = True) -> dict:
    model, policy = load_agent_artifacts(out_dir, use_policy)
    log_dir = Path(config.log_dir) if config.log_dir else artifact_path(out_dir, LOG_DIR)
    metrics = run_match(config, model, policy, log_dir)
    return {"metrics": metrics.model_dump(), "log_dir": str(log_dir)}


def summarize_logs(log_dir) -> dict:
    """Summary of a match trace directory (modes, MPC and estimator channels)."""
    log_dir = Path(log_dir)
    trajectory = log_dir / "trajectory.jsonl"
    if not trajectory.exists():
        raise MissingArtifactError(f"No match logs in {log_dir} (run `play`)")

    def frame(channel: str) -> pd.DataFrame:
        path = log_dir / f"{channel}.jsonl"
        return pd.DataFrame(list(read_jsonl(path))) if path.exists() else pd.DataFrame()

    traj = frame("trajectory")
    modes = frame("modes")
    mpc = frame("mpc")
    est = frame("estimator")

    events = traj["event"].dropna().value_counts().to_dict() if "event" in traj else {}
    summary: dict = {
        "duration": float(traj["t"].max() - traj["t"].min()) if len(traj) else 0.0,
        "events": {k: int(v) for k, v in events.items()},
        "mode_switches": int(len(modes)),
    }
    if len(modes):
        summary["switches_to"] = {k: int(v) for k, v in modes["to"].value_counts().items()}
    if len(mpc):
        summary["mpc_cycles"] = int(len(mpc))
        summary["mpc_feasible_fraction"] = float((mpc["n_feasible"] > 0).mean())
        summary["mpc_median_cost"] = float(mpc["best_cost"].median())
    if len(est):
        summary["estimator_modes"] = {
            k: float(v) for k, v in est["mode"].value_counts(normalize=True).items()
        }
    metrics_path = log_dir / "metrics.json"
    if metrics_path.exists():
        with open(metrics_path, "r") as f:
            summary["metrics"] = json.load(f)
    return summary


def evaluate(config: MatchConfig, out_dir, trials: int = 0, use_policy: bool = True) -> dict:
    report: dict = {}
    log_dir = Path(config.log_dir) if config.log_dir else artifact_path(out_dir, LOG_DIR)
    if (log_dir / "trajectory.jsonl").exists():
        report["logs"] = summarize_logs(log_dir)
    if artifact_path(out_dir, EBM_FILE).exists() and artifact_path(out_dir, SHOTS_FILE).exists():
        report["ebm"] = eval_ebm(config, out_dir)
    if trials > 0:
        model, policy = load_agent_artifacts(out_dir, use_policy)
        report["shooting"] = run_shooting_trials(
            config, model, policy, trials, config.seed
        ).model_dump()
    if not report:
        raise MissingArtifactError(
            f"Nothing to evaluate in {out_dir} (run `play`, or `train-ebm`, or pass --trials)"
        )
    return report


def _percentiles(values) -> dict:
    values = np.asarray(values, dtype=float)
    return {
        "p50": float(np.percentile(values, 50)),
        "p95": float(np.percentile(values, 95)),
        "mean": float(values.mean()),
    }


def host_info() -> dict:
    info = {"python": platform.python_version(), "machine": platform.machine()}
    if PSUTIL_AVAILABLE:
        try:
            info["cpu_count"] = psutil.cpu_count(logical=True)
            info["cpu_percent"] = psutil.cpu_percent(interval=0.1)
            info["memory_total_mb"] = round(psutil.virtual_memory().total / 2**20)
        except Exception as e:
            info["psutil_error"] = str(e)
    return info


def bench(config: MatchConfig, out_dir, duration: Optional[float] = None, use_policy: bool = True) -> dict:
    """Per-stage cycle latency percentiles (ms) over one match with wall-clock timing on."""
    model, policy = load_agent_artifacts(out_dir, use_policy)
    config = config.model_copy(update={"record_latency": True})
    runner = MatchRunner(config, model, policy)
    started = time.perf_counter()
    metrics = runner.run(duration)
    wall_s = time.perf_counter() - started
    if not runner.stage_ms:
        return {"cycles": 0, "host": host_info()}

    stages = pd.DataFrame(runner.stage_ms, columns=list(STAGES))
    totals = stages.sum(axis=1)
    return {
        "cycles": int(len(stages)),
        "stages": {name: _percentiles(stages[name]) for name in STAGES},
        "total": _percentiles(totals),
        "stage_mean_sum": float(stages.mean().sum()),
        "budget_ms": config.latency_budget_ms,
        "within_budget": bool(totals.median() <= config.latency_budget_ms),
        "wall_s": wall_s,
        "metrics": metrics.model_dump(),
        "host": host_info(),
    }
