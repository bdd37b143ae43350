"""Reward smoothing and plateau detection over per-episode metrics."""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from harness.store import RunStore


def moving_average(rewards, window: int = 5) -> np.ndarray:
    """Trailing mean; the first window-1 (undefined) entries are omitted."""
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    values = np.asarray(rewards, dtype=np.float64)
    if values.size == 0:
        raise ValueError("moving_average needs at least one reward")
    return pd.Series(values).rolling(window).mean().to_numpy()[window - 1:]


def plateau_episode(ma_series, tolerance_frac: float = 0.05, hold: int = 5) -> int | None:
    """Index into the moving-average series where its final plateau begins.

    The plateau level is the mean of the last `hold` points. The plateau
    starts at the first index from which every later point stays within
    tolerance_frac * |level| of that level. None when the series ends outside
    the band or the band holds for fewer than `hold` points.
    """
    ma = np.asarray(ma_series, dtype=np.float64)
    if ma.size == 0:
        raise ValueError("plateau_episode needs a non-empty series")
    hold = min(hold, ma.size)
    level = ma[-hold:].mean()
    within = np.abs(ma - level) <= tolerance_frac * abs(level) + 1e-12
    if not within[-1]:
        return None
    outside = np.flatnonzero(~within)
    start = int(outside[-1]) + 1 if outside.size else 0
    if start > ma.size - hold:
        return None
    return start


@dataclass
class RunMetrics:
    """Per-episode and per-update tables for one (variant, seed) run."""
    variant: str
    seed: int
    episodes: pd.DataFrame
    updates: pd.DataFrame
    status: str = "finished"

    @property
    def rewards(self) -> np.ndarray:
        return self.episodes["total_reward"].to_numpy(dtype=np.float64)

    @property
    def n_episodes(self) -> int:
        return len(self.episodes)

    def smoothed(self, window: int = 5) -> np.ndarray:
        return moving_average(self.rewards, window)

    def plateau(self, window: int = 5, tolerance_frac: float = 0.05, hold: int = 5) -> int | None:
        """Plateau as a 1-based episode number (the episode whose average first reaches it)."""
        ma = self.smoothed(window)
        if ma.size == 0:
            return None
        index = plateau_episode(ma, tolerance_frac, hold)
        return None if index is None else index + window

    def final_level(self, window: int = 5, hold: int = 5) -> float:
        ma = self.smoothed(window)
        return float(ma[-hold:].mean()) if ma.size else float("nan")


def load_run_metrics(run_dir: str | Path) -> RunMetrics:
    store = RunStore(run_dir)
    if not store.exists():
        raise FileNotFoundError(f"No run metadata in {run_dir}")
    metadata = store.read_metadata()
    return RunMetrics(
        variant=metadata["variant"],
        seed=int(metadata["seed"]),
        episodes=store.read_episodes(),
        updates=store.read_updates(),
        status=metadata.get("status", "unknown"),
    )
