"""
Tests for the JSON-lines traces and the structlog setup.
"""

import json
import math

import numpy as np
import structlog

from src.logging import (
    TraceLogger,
    configure_logging,
    get_trace_logger,
    init_trace_logger,
    read_jsonl,
    trajectory_record,
    write_jsonl,
)
from src.models import MalletState, PuckState, WorldState


def _world(t=0.0):
    return WorldState(
        puck=PuckState(x=0.1, y=-0.2, vx=1.0, vy=0.0),
        mallet=MalletState(x=-0.7, y=0.0),
        sim_time=t,
    )


def test_write_and_read_jsonl(tmp_path):
    records = [{"a": np.float64(1.5), "b": np.arange(3)}, {"a": math.inf, "b": (1, 2)}]
    path = tmp_path / "nested" / "out.jsonl"
    assert write_jsonl(path, records) == 2
    back = list(read_jsonl(path))
    assert back == [{"a": 1.5, "b": [0, 1, 2]}, {"a": None, "b": [1, 2]}]


def test_trajectory_record():
    record = trajectory_record(_world(0.04), "hit")
    assert record == {
        "t": 0.04,
        "puck": [0.1, -0.2, 1.0, 0.0],
        "mallet": [-0.7, 0.0, 0.0, 0.0],
        "event": "hit",
    }


def test_trace_logger_writes_channels(tmp_path):
    trace = TraceLogger(tmp_path)
    trace.log_world(_world())
    trace.log_mode_switch(0.02, "Home", "Defend", "puck_incoming")
    trace.log_mpc(0.02, 3, 0.5, np.array([1.0, 0.0]))
    written = trace.flush()
    assert set(written) == {"trajectory", "modes", "mpc"}
    modes = list(read_jsonl(written["modes"]))
    assert modes == [{"t": 0.02, "from": "Home", "to": "Defend", "reason": "puck_incoming"}]
    mpc = json.loads((tmp_path / "mpc.jsonl").read_text())
    assert mpc["chosen_vT"] == [1.0, 0.0]


def test_disabled_trace_logger_records_nothing(tmp_path):
    trace = TraceLogger()
    assert not trace.enabled
    trace.log_world(_world())
    trace.log_estimate(0.0, [0.0, 0.0], [0.0] * 4, [1.0] * 4, "free")
    assert all(not entries for entries in trace.entries.values())
    assert trace.flush() == {}
    assert trace.path("trajectory") is None


def test_global_trace_logger(tmp_path):
    logger = init_trace_logger(tmp_path)
    assert get_trace_logger() is logger
    assert logger.enabled
    init_trace_logger()
    assert not get_trace_logger().enabled


def test_configure_logging_filters_by_level(capsys):
    try:
        configure_logging("WARNING")
        log = structlog.get_logger("test")
        log.info("hidden_event")
        log.warning("shown_event", value=1)
        err = capsys.readouterr().err
        assert "hidden_event" not in err
        assert "shown_event" in err

        configure_logging("bogus", json_output=True)
        structlog.get_logger("test").info("json_event", n=2)
        line = capsys.readouterr().err.strip().splitlines()[-1]
        assert json.loads(line)["event"] == "json_event"
    finally:
        structlog.reset_defaults()
