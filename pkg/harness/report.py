"""Cross-variant comparison: plateau episodes relative to the MLP/MLP baseline."""

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from harness.config import BASELINE_VARIANT, VARIANTS, PlateauConfig
from harness.metrics import RunMetrics, load_run_metrics

logger = logging.getLogger(__name__)


class ReportError(ValueError):
    """Raised when runs cannot be compared."""
    pass


def plateau_percentage(baseline: int | None, variant: int | None) -> float | None:
    """Variant plateau episode as a percentage of the baseline's; None if either never plateaus."""
    if baseline is None or variant is None:
        return None
    if baseline <= 0:
        raise ReportError(f"baseline plateau episode must be positive, got {baseline}")
    return 100.0 * variant / baseline


@dataclass
class ComparisonReport:
    runs: pd.DataFrame
    variants: pd.DataFrame
    curves: pd.DataFrame
    baseline: str
    plateau: PlateauConfig


def _variant_order(name: str) -> tuple[int, str]:
    return (VARIANTS.index(name) if name in VARIANTS else len(VARIANTS), name)


def _reward_curve(run: RunMetrics, window: int) -> pd.DataFrame:
    ma = np.full(run.n_episodes, np.nan)
    if run.n_episodes >= window:
        ma[window - 1:] = run.smoothed(window)
    return pd.DataFrame({
        "variant": run.variant,
        "seed": run.seed,
        "episode": np.arange(1, run.n_episodes + 1),
        "total_reward": run.rewards,
        "ma_reward": ma,
    })


def compare_report(
    runs: list[RunMetrics],
    plateau: PlateauConfig | None = None,
    baseline: str = BASELINE_VARIANT,
) -> ComparisonReport:
    """
    Plateau episode and plateau percentage for every (variant, seed), plus
    per-variant means and the reward curves.

    Raises:
        ReportError: If runs differ in length, variants differ in seed sets,
            or the baseline variant is missing
    """
    plateau = plateau or PlateauConfig()
    if not runs:
        raise ReportError("no runs to compare")

    lengths = {run.n_episodes for run in runs}
    if len(lengths) != 1:
        raise ReportError(f"runs have mismatched episode counts {sorted(lengths)}")

    by_variant: dict[str, dict[int, RunMetrics]] = {}
    for run in runs:
        seeds = by_variant.setdefault(run.variant, {})
        if run.seed in seeds:
            raise ReportError(f"duplicate run for {run.variant} seed {run.seed}")
        seeds[run.seed] = run
    if baseline not in by_variant:
        raise ReportError(f"baseline variant {baseline} is missing; found {sorted(by_variant)}")

    seed_sets = {variant: sorted(seeds) for variant, seeds in by_variant.items()}
    if len({tuple(s) for s in seed_sets.values()}) != 1:
        raise ReportError(f"variants have mismatched seed lists {seed_sets}")

    episodes = lengths.pop()
    baseline_plateaus = {
        seed: run.plateau(plateau.window, plateau.tolerance_frac, plateau.hold)
        for seed, run in by_variant[baseline].items()
    }

    rows = []
    curves = []
    for variant in sorted(by_variant, key=_variant_order):
        for seed in seed_sets[variant]:
            run = by_variant[variant][seed]
            run_plateau = run.plateau(plateau.window, plateau.tolerance_frac, plateau.hold)
            rows.append({
                "variant": variant,
                "seed": seed,
                "episodes": episodes,
                "plateau_episode": run_plateau,
                "plateau_pct": plateau_percentage(baseline_plateaus[seed], run_plateau),
                "final_ma_reward": run.final_level(plateau.window, plateau.hold),
            })
            curves.append(_reward_curve(run, plateau.window))

    per_run = pd.DataFrame(rows)
    numeric = per_run.astype({"plateau_episode": "float64", "plateau_pct": "float64"})
    per_variant = (
        numeric.groupby("variant", sort=False)
        .agg(
            seeds=("seed", "count"),
            plateaued=("plateau_episode", "count"),
            plateau_episode=("plateau_episode", "mean"),
            plateau_pct=("plateau_pct", "mean"),
            final_ma_reward=("final_ma_reward", "mean"),
        )
        .reset_index()
    )
    logger.info("Compared %d runs over %d variants", len(per_run), len(per_variant))
    return ComparisonReport(
        runs=per_run,
        variants=per_variant,
        curves=pd.concat(curves, ignore_index=True),
        baseline=baseline,
        plateau=plateau,
    )


def find_run_dirs(paths: list[str | Path]) -> list[Path]:
    """Run directories (those holding metadata.json) at or below each path."""
    found = []
    for path in map(Path, paths):
        if (path / "metadata.json").exists():
            found.append(path)
        else:
            found.extend(sorted(p.parent for p in path.rglob("metadata.json")))
    if not found:
        raise ReportError(f"no run directories found under {[str(p) for p in paths]}")
    return found


def load_runs(paths: list[str | Path], finished_only: bool = True) -> list[RunMetrics]:
    runs = []
    for run_dir in find_run_dirs(paths):
        run = load_run_metrics(run_dir)
        if finished_only and run.status != "finished":
            logger.warning("Skipping %s (status %s)", run_dir, run.status)
            continue
        runs.append(run)
    return runs


def _json_value(value):
    if value is None or (isinstance(value, float) and np.isnan(value)):
        return None
    if isinstance(value, np.generic):
        return value.item()
    return value


def write_report(report: ComparisonReport, out_dir: str | Path, plots: bool = True) -> Path:
    """Write summary.csv, summary.json, reward_curves.csv and the two figures."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    report.runs.to_csv(out / "summary.csv", index=False)
    report.curves.to_csv(out / "reward_curves.csv", index=False)
    summary = {
        "baseline": report.baseline,
        "plateau": report.plateau.model_dump(),
        "variants": [
            {k: _json_value(v) for k, v in row.items()}
            for row in report.variants.to_dict(orient="records")
        ],
        "runs": [
            {k: _json_value(v) for k, v in row.items()}
            for row in report.runs.to_dict(orient="records")
        ],
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2))

    if plots:
        from harness.visualize import plot_plateau_percentages, plot_reward_curves, save_figure

        save_figure(plot_reward_curves(report.curves, report.plateau.window), out / "reward_curves.png")
        save_figure(plot_plateau_percentages(report.variants, report.baseline), out / "plateau_percentages.png")

    logger.info("Report written to %s", out)
    return out
