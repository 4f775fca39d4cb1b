"""Command-line entry point: ``effcap run <config.json>`` and ``effcap selftest``.

Exit codes: 0 success, 1 invariant failure, 2 configuration or I/O error.
"""

from __future__ import annotations

import argparse
import sys

from .experiments import ConfigError, load_config, run_experiment, write_outputs

EXIT_OK, EXIT_INVARIANT, EXIT_CONFIG = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="effcap", description="Effective-capacity experiment runner.")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the experiment described by a JSON config")
    run.add_argument("config")
    st = sub.add_parser("selftest", help="run the invariant suite")
    for s in (run, st):
        s.add_argument("--seed", type=int)
        s.add_argument("--samples", type=int)
        s.add_argument("--out", help="CSV output path (stdout when omitted)")
        s.add_argument("--workers", type=int)
    return p


def _failed_checks(cfg, rows) -> list[str]:
    if cfg.experiment != "selftest":
        return []
    return [r[0] for r in rows if not r[1]]


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    overrides = {"seed": args.seed, "samples": args.samples, "output_path": args.out, "workers": args.workers}
    try:
        if args.command == "selftest":
            cfg = load_config({"experiment": "selftest"}, overrides)
        else:
            cfg = load_config(args.config, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    rows = run_experiment(cfg)
    try:
        text = write_outputs(cfg, rows)
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if not cfg.output_path:
        sys.stdout.write(text)

    failed = _failed_checks(cfg, rows)
    if failed:
        print(f"invariant failures: {', '.join(failed)}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
