"""Command line entry point: ``seepp run | plot | validate-config``."""

from __future__ import annotations

import argparse
import sys

from .config import ConfigError, load_config


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="seepp", description="Run next-best-view planning experiments.")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run all trials and write CSVs and plots")
    run.add_argument("--config", required=True)
    run.add_argument("--out", help="results directory (default: output_dir from the config)")
    run.add_argument("--trials-override", type=int)
    run.add_argument("--mode-override", choices=["see", "see_plus_plus"])
    run.add_argument("--no-plots", action="store_true")

    plot = sub.add_parser("plot", help="draw figures for an existing results directory")
    plot.add_argument("--out", required=True)

    val = sub.add_parser("validate-config", help="check a config file and exit")
    val.add_argument("--config", required=True)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate-config":
            cfg = load_config(args.config)
            print(f"ok: {cfg.scene_name} ({', '.join(cfg.modes)}), {cfg.trials} trial(s)")
            return 0
        if args.command == "plot":
            from .plots import emit_plots

            for f in emit_plots(args.out):
                print(f)
            return 0
        from .harness import run_experiment

        cfg = load_config(args.config).with_overrides(args.trials_override, args.mode_override).validate()
        out = run_experiment(cfg, args.out)
        if not args.no_plots:
            from .plots import emit_plots

            emit_plots(out)
        print(out)
        return 0
    except (ConfigError, ValueError, OSError) as exc:
        print(f"seepp: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
