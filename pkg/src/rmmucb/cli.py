"""Command line entry point: ``rmmucb run`` and ``rmmucb gnuplot``.

Settings are layered: preset, then ``--config`` file, then explicit flags.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

from .exceptions import ConfigurationError, InvalidParameterError, MomentDoesNotExistError
from .harness import (
    PRESETS,
    config_from_mapping,
    gnuplot_script,
    preset_values,
    read_config_file,
    read_policies_from_csv,
    run_experiment,
    write_outputs,
)

# flag destination -> configuration key
_FLAG_KEYS = {
    "env": "env",
    "means": "means",
    "pareto_eps": "pareto-eps",
    "gauss_std": "gauss-std",
    "policies": "policies",
    "horizon": "horizon",
    "reps": "reps",
    "seed": "seed",
    "workers": "workers",
    "m_max": "m-max",
    "out": "out",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rmmucb",
        description="Simulate heavy-tailed bandit policies and write regret curves.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment and write regret.csv + manifest.txt")
    run.add_argument("--preset", choices=sorted(PRESETS), help="start from a named setting")
    run.add_argument("--config", type=Path, help="key=value file (a manifest.txt works)")
    run.add_argument("--env", choices=["symmetrized-pareto", "pareto", "gaussian"])
    run.add_argument("--means", help="comma-separated arm means, e.g. 1.0,0.9")
    run.add_argument("--pareto-eps", help="shape offset: Pareto shape is 1.05 + eps")
    run.add_argument("--gauss-std", help="standard deviation of Gaussian arms")
    run.add_argument("--policies", help="comma-separated policy names")
    run.add_argument("--horizon", help="rounds per trajectory")
    run.add_argument("--reps", help="trajectories per policy")
    run.add_argument("--seed", help="master seed (64-bit unsigned)")
    run.add_argument("--workers", help="worker processes (default: CPU count)")
    run.add_argument("--m-max", help="cap on the RMM resample count; voids exactness")
    run.add_argument("--out", help="output directory (default: results)")
    run.add_argument("-q", "--quiet", action="store_true", help="no progress output")

    plot = sub.add_parser("gnuplot", help="emit a gnuplot script for a regret.csv")
    plot.add_argument("csv", type=Path, help="path to regret.csv")
    plot.add_argument("-o", "--output", type=Path, help="script path (default: stdout)")
    plot.add_argument("--image", default="regret.png", help="image file the script renders")
    plot.add_argument("--no-band", action="store_true", help="omit the +-1 std band")
    return parser


def _run(args) -> int:
    values: dict[str, object] = {"workers": os.cpu_count() or 1}
    if args.preset:
        values.update(preset_values(args.preset))
    if args.config:
        values.update(read_config_file(args.config))
    for dest, key in _FLAG_KEYS.items():
        given = getattr(args, dest)
        if given is not None:
            values[key] = given
    config = config_from_mapping(values)
    if not args.quiet:
        print(f"running {len(config.policies)} policies x {config.reps} reps, "
              f"horizon {config.horizon}, {config.workers} worker(s)", file=sys.stderr)
    start = time.perf_counter()
    results = run_experiment(config)
    csv_path, manifest_path = write_outputs(results, config)
    if not args.quiet:
        for policy, curve in results.items():
            print(f"{policy:>12s}  final mean regret {curve.mean[-1]:10.3f}  "
                  f"(std {curve.std[-1]:.3f})", file=sys.stderr)
        print(f"wrote {csv_path} and {manifest_path} in {time.perf_counter() - start:.1f} s",
              file=sys.stderr)
    return 0


def _gnuplot(args) -> int:
    policies = read_policies_from_csv(args.csv)
    script = gnuplot_script(args.csv, policies, output=args.image, band=not args.no_band)
    if args.output is None:
        sys.stdout.write(script)
        return 0
    try:
        args.output.write_text(script, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {args.output}: {exc.strerror or exc}") from exc
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _run(args)
        return _gnuplot(args)
    except (ConfigurationError, InvalidParameterError, MomentDoesNotExistError) as exc:
        print(f"rmmucb: configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"rmmucb: I/O error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
