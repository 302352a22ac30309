"""
JSON-lines traces for matches and offline runs.

Traces are organized by channel, one file per channel in the run directory:
- trajectory.jsonl  {t, puck, mallet, event}
- modes.jsonl       {t, from, to, reason}
- mpc.jsonl         {t, n_feasible, best_cost, chosen_vT}
- estimator.jsonl   {t, z, mean, cov_diag, mode}
- joints.jsonl      {t, q, q_dot, sv_min}

Only logical simulation time is written, so two runs with the same seed
produce byte-identical files.
"""

import json
import math
from pathlib import Path
from typing import Iterable, Iterator, Optional

import numpy as np
import structlog

from ..models import WorldState

log = structlog.get_logger(__name__)

CHANNELS = ("trajectory", "modes", "mpc", "estimator", "joints")


def _plain(value):
    """Convert numpy values into JSON-ready python values."""
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def trajectory_record(world: WorldState, event: Optional[str] = None) -> dict:
    return {
        "t": world.sim_time,
        "puck": [world.puck.x, world.puck.y, world.puck.vx, world.puck.vy],
        "mallet": [world.mallet.x, world.mallet.y, world.mallet.vx, world.mallet.vy],
        "event": event,
    }


def write_jsonl(path, records: Iterable[dict]) -> int:
    """Write records to a JSON-lines file. Returns the record count."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with open(path, "w") as f:
        for record in records:
            f.write(json.dumps({k: _plain(v) for k, v in record.items()}) + "\n")
            n += 1
    return n


def read_jsonl(path) -> Iterator[dict]:
    with open(path, "r") as f:
        for line in f:
            line = line.strip()
            if line:
                yield json.loads(line)


class TraceLogger:
    """
    Buffered JSON-lines traces for one run.

    Entries are kept per channel and written out by flush(). A logger created
    with base_dir=None records nothing.
    """

    def __init__(self, base_dir=None):
        self.base_dir = Path(base_dir) if base_dir is not None else None
        self.entries: dict[str, list[dict]] = {name: [] for name in CHANNELS}
        if self.base_dir is not None:
            self.base_dir.mkdir(parents=True, exist_ok=True)

    @property
    def enabled(self) -> bool:
        return self.base_dir is not None

    def _add(self, channel: str, record: dict):
        if self.enabled:
            self.entries[channel].append({k: _plain(v) for k, v in record.items()})

    def log_world(self, world: WorldState, event: Optional[str] = None):
        if self.enabled:
            self._add("trajectory", trajectory_record(world, event))

    def log_mode_switch(self, t: float, frm: str, to: str, reason: str):
        self._add("modes", {"t": t, "from": frm, "to": to, "reason": reason})

    def log_mpc(self, t: float, n_feasible: int, best_cost: float, chosen_vT):
        self._add(
            "mpc",
            {"t": t, "n_feasible": n_feasible, "best_cost": best_cost, "chosen_vT": chosen_vT},
        )

    def log_estimate(self, t: float, z, mean, cov_diag, mode: str):
        self._add(
            "estimator",
            {"t": t, "z": z, "mean": mean, "cov_diag": cov_diag, "mode": mode},
        )

    def log_joints(self, t: float, q, q_dot, sv_min: float):
        self._add("joints", {"t": t, "q": q, "q_dot": q_dot, "sv_min": sv_min})

    def path(self, channel: str) -> Optional[Path]:
        if self.base_dir is None:
            return None
        return self.base_dir / f"{channel}.jsonl"

    def flush(self) -> dict[str, Path]:
        """Write every non-empty channel. Returns channel -> file path."""
        written: dict[str, Path] = {}
        if not self.enabled:
            return written
        for channel, records in self.entries.items():
            if not records:
                continue
            path = self.path(channel)
            with open(path, "w") as f:
                for record in records:
                    f.write(json.dumps(record) + "\n")
            written[channel] = path
        log.debug("traces_flushed", channels=sorted(written), base_dir=str(self.base_dir))
        return written


# Global trace logger instance
_logger: Optional[TraceLogger] = None


def get_trace_logger() -> TraceLogger:
    """Get the global trace logger (disabled until init_trace_logger is called)."""
    global _logger
    if _logger is None:
        _logger = TraceLogger()
    return _logger


def init_trace_logger(base_dir=None) -> TraceLogger:
    """Initialize the global trace logger."""
    global _logger
    _logger = TraceLogger(base_dir=base_dir)
    return _logger
