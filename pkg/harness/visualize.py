"""Reward-curve and plateau-percentage figures for a comparison report."""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import pandas as pd

from harness.config import VARIANTS

VARIANT_STYLES = {
    "policy-mlp_value-mlp": {"color": "#42A5F5", "linestyle": "-"},
    "policy-dbm_value-mlp": {"color": "#FF8E53", "linestyle": "--"},
    "policy-mlp_value-dbm": {"color": "#7E57C2", "linestyle": "-."},
    "policy-dbm_value-dbm": {"color": "#FF6B6B", "linestyle": ":"},
}


def plot_reward_curves(curves: pd.DataFrame, window: int = 5):
    """Seed-averaged moving-average reward per variant, with the seed range shaded."""
    fig, ax = plt.subplots(figsize=(12, 6))

    for variant, group in curves.groupby("variant", sort=False):
        per_episode = group.groupby("episode")["ma_reward"]
        mean = per_episode.mean()
        style = VARIANT_STYLES.get(variant, {})
        ax.plot(mean.index, mean.values, label=variant, linewidth=2, **style)
        if group["seed"].nunique() > 1:
            ax.fill_between(
                mean.index,
                per_episode.min().values,
                per_episode.max().values,
                alpha=0.15,
                color=style.get("color"),
            )

    ax.set_xlabel("Episode")
    ax.set_ylabel(f"Reward ({window}-episode average)")
    ax.set_title("Training reward by head combination")
    ax.legend(loc="lower right")
    ax.grid(True, alpha=0.3)

    plt.tight_layout()
    return fig


def plot_plateau_percentages(variants: pd.DataFrame, baseline: str):
    """Bar per variant: mean plateau episode as a percentage of the baseline's."""
    order = [v for v in VARIANTS if v in set(variants["variant"])]
    order += [v for v in variants["variant"] if v not in order]
    table = variants.set_index("variant").loc[order]

    fig, ax = plt.subplots(figsize=(10, 5))
    colors = [VARIANT_STYLES.get(v, {}).get("color", "gray") for v in order]
    values = table["plateau_pct"].fillna(0.0)
    bars = ax.bar(range(len(order)), values.values, color=colors)

    for bar, pct in zip(bars, table["plateau_pct"]):
        label = "no plateau" if pd.isna(pct) else f"{pct:.0f}%"
        ax.annotate(label, (bar.get_x() + bar.get_width() / 2, bar.get_height()),
                    ha="center", va="bottom", fontsize=9)

    ax.axhline(100, color="gray", linestyle=":", alpha=0.7)
    ax.set_xticks(range(len(order)))
    ax.set_xticklabels(order, rotation=15)
    ax.set_ylabel(f"Episodes to plateau (% of {baseline})")
    ax.set_title("Data efficiency relative to the all-MLP agent")
    ax.grid(True, axis="y", alpha=0.3)

    plt.tight_layout()
    return fig


def save_figure(fig, path: str | Path, dpi: int = 150) -> Path:
    path = Path(path)
    fig.savefig(path, dpi=dpi)
    plt.close(fig)
    return path
