"""Structured logging and JSON-lines traces."""

from .setup import configure_logging
from .trace_logger import (
    TraceLogger,
    get_trace_logger,
    init_trace_logger,
    read_jsonl,
    trajectory_record,
    write_jsonl,
)

__all__ = [
    "configure_logging",
    "TraceLogger",
    "get_trace_logger",
    "init_trace_logger",
    "read_jsonl",
    "trajectory_record",
    "write_jsonl",
]
