"""Command-line entry point.

Exit codes: 0 success, 1 data error, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import default_config, dump_config, load_config
from .errors import ConfigError, TrafficWarnError
from .pipeline import STAGES, PipelineError, parse_stages, run_pipeline

# subcommand -> stages it runs
COMMANDS = {
    "simulate": ["simulate"],
    "track": ["track"],
    "params": ["params"],
    "preprocess": ["clean", "window"],
    "train": ["train"],
    "predict": ["predict"],
    "warn": ["warn"],
    "evaluate": ["evaluate"],
    "report": ["report"],
    "run": list(STAGES),
}

EXIT_OK, EXIT_DATA, EXIT_CONFIG = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="site config (YAML); built-in four-point site if omitted")
    common.add_argument("--seed", type=int, help="override the config's top-level seed")
    common.add_argument("--out", default="out", help="output directory (default: out)")
    common.add_argument("--force", action="store_true", help="rerun stages even if their outputs are current")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="trafficwarn", description="Video-based congestion early warning.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common], help=f"run the {name} stage" if name != "run" else "run stages")
        if name == "run":
            p.add_argument("--stages", help=f"comma list or a-b range of: {','.join(STAGES)} (default: all)")
    p = sub.add_parser("init-config", help="write the built-in config to a file")
    p.add_argument("path")
    p.add_argument("--seed", type=int, default=0)
    return parser


def _error_code(exc: BaseException) -> int:
    cause = exc.cause if isinstance(exc, PipelineError) else exc
    return EXIT_CONFIG if isinstance(cause, ConfigError) else EXIT_DATA


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "init-config":
            dump_config(default_config(args.seed), args.path)
            return EXIT_OK
        cfg = load_config(args.config, args.seed) if args.config else default_config(args.seed or 0)
        stages = parse_stages(args.stages) if getattr(args, "stages", None) else COMMANDS[args.command]
        report = run_pipeline(cfg, args.out, stages, force=args.force)
    except (TrafficWarnError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _error_code(exc)
    summary = {"stages_run": report.stages_run, "stages_reused": report.stages_reused,
               "timings_seconds": {k: round(v, 3) for k, v in report.timings.items()}}
    print(json.dumps(summary, indent=2))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
