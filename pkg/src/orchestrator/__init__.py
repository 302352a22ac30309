from .agent import Agent, CycleOutput, MirrorAgent
from .match import MatchRunner, Metrics, ShotTrials, run_match, run_shooting_trials, serve_puck

__all__ = [
    "Agent",
    "CycleOutput",
    "MirrorAgent",
    "MatchRunner",
    "Metrics",
    "ShotTrials",
    "run_match",
    "run_shooting_trials",
    "serve_puck",
]
