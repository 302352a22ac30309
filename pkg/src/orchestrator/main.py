"""
Command-line entry point.

    python -m src.orchestrator.main <command> [--config FILE] [--seed N] [--out DIR]

Commands: gen-data, fit-dynamics, plan-shots, train-ebm, eval-ebm, play,
eval, bench. train-ebm also takes the model file itself as --out (or
--model); eval-ebm reads it from --model. Results are printed to stdout as
JSON; on a domain error the process exits with 1 and writes
{"error", "message"} to stderr.
"""

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

from ..logging import configure_logging
from ..models import HockeyError, load_config
from . import pipeline


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="puckpilot", description="Air-hockey agent pipeline")
    sub = p.add_subparsers(dest="cmd", required=True)

    def add_common(s):
        s.add_argument("--config", default=None, help="YAML or JSON MatchConfig file")
        s.add_argument("--seed", type=int, default=None, help="Overrides the config seed")
        s.add_argument("--out", default=None, help="Artifact directory")
        s.add_argument("--log-level", default=None)

    s = sub.add_parser("gen-data", help="Collect labelled transitions")
    add_common(s)
    s.add_argument("--episodes", type=int, default=200)

    s = sub.add_parser("fit-dynamics", help="Identify the piecewise dynamics model")
    add_common(s)
    s.add_argument("--data", default=None, help="Transitions file (default <out>/transitions.jsonl)")

    s = sub.add_parser("plan-shots", help="Solve shooting problems for the policy dataset")
    add_common(s)
    s.add_argument("--n", type=int, default=5000)

    s = sub.add_parser(
        "train-ebm",
        help="Train the energy-based shot policy",
        description="--out takes the artifact directory or the model file itself (a .json path).",
    )
    add_common(s)
    s.add_argument("--data", default=None, help="Shots file (default <out>/shots.jsonl)")
    s.add_argument("--model", default=None, help="Model file to write (default <out>/ebm.json)")

    s = sub.add_parser("eval-ebm", help="Policy angle error against planner labels")
    add_common(s)
    s.add_argument("--data", default=None, help="Held-out shots file (default <out>/shots.jsonl)")
    s.add_argument("--model", default=None, help="Model file to evaluate (default <out>/ebm.json)")

    for name, text in (
        ("play", "Run one match and write its logs"),
        ("eval", "Summarize logs, the policy and shooting trials"),
        ("bench", "Per-stage cycle latency"),
    ):
        s = sub.add_parser(name, help=text)
        add_common(s)
        s.add_argument(
            "--planner", action="store_true",
            help="Shoot with the online angle search instead of the energy policy",
        )
        if name == "eval":
            s.add_argument("--trials", type=int, default=0, help="Stationary-puck shooting trials")
        if name == "bench":
            s.add_argument("--duration", type=float, default=None)
    return p


def run(args: argparse.Namespace) -> dict:
    out = args.out or os.getenv("PUCKPILOT_ARTIFACT_DIR")
    model_file = getattr(args, "model", None)
    if args.cmd == "train-ebm" and out and Path(out).suffix == ".json":
        # --out names the model file; artifacts live next to it
        model_file = model_file or out
        out = str(Path(out).parent)
    config = load_config(args.config, seed=args.seed, artifact_dir=out)
    out_dir = config.artifact_dir
    use_policy = not getattr(args, "planner", False)

    if args.cmd == "gen-data":
        return pipeline.gen_data(config, out_dir, args.episodes)
    if args.cmd == "fit-dynamics":
        return pipeline.fit_dynamics(config, out_dir, args.data)
    if args.cmd == "plan-shots":
        return pipeline.plan_shots(config, out_dir, args.n)
    if args.cmd == "train-ebm":
        return pipeline.train_ebm(config, out_dir, args.data, model_file)
    if args.cmd == "eval-ebm":
        return pipeline.eval_ebm(config, out_dir, args.data, model_file)
    if args.cmd == "play":
        return pipeline.play(config, out_dir, use_policy)
    if args.cmd == "eval":
        return pipeline.evaluate(config, out_dir, args.trials, use_policy)
    if args.cmd == "bench":
        return pipeline.bench(config, out_dir, args.duration, use_policy)
    raise ValueError(f"unknown command {args.cmd}")


def main(argv: Optional[list[str]] = None) -> int:
    """Main entry point."""
    # Load environment variables
    load_dotenv()

    args = build_parser().parse_args(argv)
    configure_logging(args.log_level or os.getenv("PUCKPILOT_LOG_LEVEL", "INFO"))
    try:
        result = run(args)
    except HockeyError as e:
        sys.stderr.write(json.dumps({"error": type(e).__name__, "message": str(e)}) + "\n")
        return 1
    print(json.dumps(result, indent=2, sort_keys=True, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
