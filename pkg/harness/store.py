"""Run directory: config snapshot, metrics CSVs, checkpoint and metadata for one (variant, seed)."""

import json
import logging
from datetime import datetime, timezone
from pathlib import Path

import pandas as pd

from harness.config import ExperimentConfig, dump_experiment_config

logger = logging.getLogger(__name__)

METADATA_FORMAT_VERSION = 1
PACKAGE_VERSION = "0.1.0"

EPISODE_COLUMNS = ["episode", "total_reward", "steps", "ma5_reward", "wall_ms"]
UPDATE_COLUMNS = [
    "update",
    "episodes_done",
    "total_steps",
    "policy_loss",
    "value_loss",
    "entropy",
    "approx_kl",
    "clip_fraction",
    "mean_ratio",
    "grad_norm",
    "minibatches",
    "policy_evaluations",
    "policy_sampler_calls",
    "value_evaluations",
    "value_sampler_calls",
]


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class RunStore:
    """All file IO for one run directory."""

    def __init__(self, run_dir: str | Path):
        self.run_dir = Path(run_dir)

    @property
    def config_path(self) -> Path:
        return self.run_dir / "config.yaml"

    @property
    def episodes_path(self) -> Path:
        return self.run_dir / "episodes.csv"

    @property
    def updates_path(self) -> Path:
        return self.run_dir / "updates.csv"

    @property
    def checkpoint_path(self) -> Path:
        return self.run_dir / "checkpoint.npz"

    @property
    def metadata_path(self) -> Path:
        return self.run_dir / "metadata.json"

    @property
    def trace_path(self) -> Path:
        return self.run_dir / "trace.csv"

    @property
    def policy_trace_path(self) -> Path:
        return self.run_dir / "policy_trace.csv"

    def exists(self) -> bool:
        return self.metadata_path.exists()

    # -- setup -------------------------------------------------------------

    def start(self, cfg: ExperimentConfig, seed: int) -> None:
        """Fresh run: clear metric files, snapshot the config, write initial metadata."""
        self.run_dir.mkdir(parents=True, exist_ok=True)
        for path in (self.episodes_path, self.updates_path, self.checkpoint_path, self.trace_path,
                     self.policy_trace_path):
            path.unlink(missing_ok=True)
        dump_experiment_config(cfg, self.config_path)
        self.write_metadata({
            "format_version": METADATA_FORMAT_VERSION,
            "package_version": PACKAGE_VERSION,
            "name": cfg.name,
            "variant": cfg.variant,
            "seed": seed,
            "env": cfg.env,
            "episodes_planned": cfg.episodes,
            "started_at": _now(),
            "finished_at": None,
            "status": "running",
        })

    def read_metadata(self) -> dict:
        return json.loads(self.metadata_path.read_text())

    def write_metadata(self, metadata: dict) -> None:
        self.run_dir.mkdir(parents=True, exist_ok=True)
        self.metadata_path.write_text(json.dumps(metadata, indent=2))

    def update_metadata(self, **fields) -> dict:
        metadata = self.read_metadata() if self.metadata_path.exists() else {}
        metadata.update(fields)
        self.write_metadata(metadata)
        return metadata

    def finish(self, status: str = "finished", **fields) -> dict:
        return self.update_metadata(status=status, finished_at=_now(), **fields)

    # -- metrics -----------------------------------------------------------

    @staticmethod
    def _append(path: Path, rows: list[dict], columns: list[str]) -> None:
        if not rows:
            return
        df = pd.DataFrame(rows, columns=columns)
        df.to_csv(path, mode="a", header=not path.exists(), index=False)

    def append_episodes(self, rows: list[dict]) -> None:
        self._append(self.episodes_path, rows, EPISODE_COLUMNS)

    def append_update(self, row: dict) -> None:
        self._append(self.updates_path, [row], UPDATE_COLUMNS)

    def read_episodes(self) -> pd.DataFrame:
        if not self.episodes_path.exists():
            return pd.DataFrame(columns=EPISODE_COLUMNS)
        # round_trip parsing gives back exactly the floats that were written
        return pd.read_csv(self.episodes_path, float_precision="round_trip")

    def read_updates(self) -> pd.DataFrame:
        if not self.updates_path.exists():
            return pd.DataFrame(columns=UPDATE_COLUMNS)
        return pd.read_csv(self.updates_path, float_precision="round_trip")

    @staticmethod
    def _truncate(path: Path, n_rows: int) -> None:
        """Keep the header and the first n_rows data lines, byte for byte."""
        if not path.exists():
            return
        lines = path.read_text().splitlines(keepends=True)
        path.write_text("".join(lines[: 1 + n_rows]))

    def truncate_to(self, episodes: int, updates: int) -> None:
        """Drop rows written after the checkpoint being resumed from."""
        self._truncate(self.episodes_path, episodes)
        self._truncate(self.updates_path, updates)
        logger.info("Run %s rewound to %d episodes / %d updates", self.run_dir, episodes, updates)
