"""Command-line interface.

    safeshield train --config FILE [--seed N] [--out DIR]
    safeshield suite --config FILE
    safeshield validate-safe-set --config FILE [--samples N]
    safeshield report --runs DIR

Exit codes: 0 ok, 2 config error, 3 safety fault, 4 solver fault.
Set SAFESHIELD_THREADS to cap suite parallelism.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..errors import ConfigError, SafetyFault, SimulationFault, SolverFault
from .config import build_env, build_spec, load_config
from .suite import report_from_runs, run_single, run_suite
from .validate import validate_safe_set

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SAFETY = 3
EXIT_SOLVER = 4


def _cmd_train(args) -> int:
    cfg = load_config(args.config)
    variant = cfg.variants[0] if args.variant is None else next(
        (v for v in cfg.variants if v.name == args.variant), None)
    if variant is None:
        raise ConfigError(f"variant {args.variant!r} not in config")
    seed = args.seed if args.seed is not None else cfg.seeds[0]
    out = Path(args.out) if args.out else cfg.out_dir / "runs" / variant.name
    rec = run_single(cfg, variant, seed, out)
    print(f"run complete: variant={variant.name} seed={seed} "
          f"final_reward={rec.final_reward:.4f} violations={rec.violations}")
    return EXIT_OK


def _cmd_suite(args) -> int:
    table = run_suite(args.config)
    sys.stdout.write(table.to_csv())
    return EXIT_OK


def _cmd_validate(args) -> int:
    cfg = load_config(args.config)
    env = build_env(cfg)
    spec = build_spec(cfg, env)
    if spec is None or spec.mode != "induced":
        raise ConfigError("validate-safe-set needs an induced safe set config")
    report = validate_safe_set(env, spec, n_samples=args.samples,
                               seed=args.seed or 0)
    print(report.summary())
    for fail in report.feasibility_failures + report.invariance_failures:
        print(f"counterexample: {fail}")
    return EXIT_OK if report.passed else EXIT_SAFETY


def _cmd_report(args) -> int:
    table = report_from_runs(args.runs)
    sys.stdout.write(table.to_csv())
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="safeshield",
        description="Provably safe analytic-gradient policy optimisation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run one training job")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--variant")
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("suite", help="run the full seed x variant sweep")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=_cmd_suite)

    p = sub.add_parser("validate-safe-set",
                       help="check feasibility and invariance of the safe set")
    p.add_argument("--config", required=True)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int)
    p.set_defaults(fn=_cmd_validate)

    p = sub.add_parser("report", help="aggregate existing run directories")
    p.add_argument("--runs", required=True)
    p.set_defaults(fn=_cmd_report)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (SafetyFault, SimulationFault) as err:
        print(f"safety fault: {err}", file=sys.stderr)
        return EXIT_SAFETY
    except SolverFault as err:
        print(f"solver fault: {err}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
