"""Command-line entry point: run, batch, sweep, report and validate experiments."""

import argparse
import logging
import sys

import yaml
from pydantic import ValidationError

from agent import NumericalAbortError
from cyberenv import summarize_spec
from harness.config import ExperimentConfig, apply_overrides, load_experiment_config
from harness.logging_config import configure_logging
from harness.report import ReportError, compare_report, load_runs, write_report
from harness.runner import output_root, run_batch, run_experiment, run_lr_sweep
from harness.settings import get_settings
from harness.validators import ConfigValidationError, validate_experiment_config

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_REPORT_ERROR = 1
EXIT_CONFIG_ERROR = 2
EXIT_NUMERICAL_ABORT = 3

CONFIG_ERRORS = (ConfigValidationError, ValidationError, yaml.YAMLError, FileNotFoundError)


def _seed_list(value: str) -> list[int]:
    try:
        return [int(part) for part in value.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {value!r}")


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="Experiment config YAML")
    parser.add_argument("--seed", type=_seed_list, default=None, help="Comma-separated seeds, e.g. 0,1,2")
    parser.add_argument("--out", default=None, help="Output root directory")
    parser.add_argument("--backend", choices=["exact", "gibbs", "anneal"], default=None,
                        help="Sampler backend for every DBM head")
    parser.add_argument("--episodes", type=int, default=None, help="Training episodes per run")
    parser.add_argument("--trace", action="store_true", help="Write per-step environment and policy traces")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="boltzmanndefence",
        description="PPO with Boltzmann-machine free-energy heads on a cyber-defence network",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=(
            "Examples:\n"
            "  python main.py run --config configs/smoke.yaml\n"
            "  python main.py batch --config configs/default.yaml --seed 0,1,2 --workers 4\n"
            "  python main.py report runs/default --out runs/default/report\n"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Train the configured variant for every seed")
    _add_config_flags(run)
    run.add_argument("--resume", action="store_true", help="Continue from existing checkpoints")

    batch = sub.add_parser("batch", help="Train every configured variant x seed")
    _add_config_flags(batch)
    batch.add_argument("--workers", type=int, default=1, help="Parallel worker processes")

    sweep = sub.add_parser("sweep", help="Train the configured variant at each learning rate in the sweep list")
    _add_config_flags(sweep)

    validate = sub.add_parser("validate", help="Check a config without training")
    _add_config_flags(validate)

    report = sub.add_parser("report", help="Compare finished runs against the MLP/MLP baseline")
    report.add_argument("paths", nargs="+", help="Run directories or directories containing them")
    report.add_argument("--out", default=None, help="Report directory (default: first path / report)")
    report.add_argument("--config", default=None, help="Config whose plateau settings to use")
    report.add_argument("--no-plots", action="store_true")
    return parser


def _load_config(args) -> ExperimentConfig:
    cfg = load_experiment_config(args.config)
    return apply_overrides(
        cfg,
        seeds=args.seed,
        out=args.out,
        backend=args.backend,
        episodes=args.episodes,
        trace=args.trace,
    )


def _cmd_validate(args) -> int:
    cfg = _load_config(args)
    spec = validate_experiment_config(cfg, batch=True)
    print(f"Config {args.config} is valid")
    print(f"  variant: {cfg.variant}; batch variants: {', '.join(cfg.variants)}")
    print(f"  seeds: {cfg.seeds}; episodes: {cfg.episodes}")
    print(summarize_spec(spec))
    return EXIT_OK


def _cmd_run(args) -> int:
    cfg = _load_config(args)
    results = run_experiment(cfg, resume=args.resume)
    for seed, metrics in results.items():
        print(f"{cfg.variant} seed {seed}: {metrics.n_episodes} episodes, "
              f"final average reward {metrics.final_level(cfg.plateau.window, cfg.plateau.hold):.2f}")
    return EXIT_OK


def _cmd_batch(args) -> int:
    cfg = _load_config(args)
    results = run_batch(cfg, workers=args.workers)
    print(f"Finished {len(results)} runs under {output_root(cfg) / cfg.name}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = _load_config(args)
    df = run_lr_sweep(cfg)
    print(df.to_string(index=False))
    return EXIT_OK


def _cmd_report(args) -> int:
    plateau = load_experiment_config(args.config).plateau if args.config else None
    runs = load_runs(args.paths)
    report = compare_report(runs, plateau)
    out = args.out or f"{args.paths[0]}/report"
    write_report(report, out, plots=not args.no_plots)
    print(report.variants.to_string(index=False))
    print(f"Report written to {out}")
    return EXIT_OK


COMMANDS = {
    "run": _cmd_run,
    "batch": _cmd_batch,
    "sweep": _cmd_sweep,
    "validate": _cmd_validate,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(get_settings().log_level)
    try:
        return COMMANDS[args.command](args)
    except CONFIG_ERRORS as e:
        logger.error("Config error: %s", e)
        return EXIT_CONFIG_ERROR
    except NumericalAbortError as e:
        logger.error("Numerical abort: %s %s", e, e.diagnostics)
        return EXIT_NUMERICAL_ABORT
    except ReportError as e:
        logger.error("Report error: %s", e)
        return EXIT_REPORT_ERROR


if __name__ == "__main__":
    sys.exit(main())
