"""Deduplicated hidden-state sample sets and their truncated Boltzmann distribution."""

from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np
import pandas as pd
from scipy.special import softmax

from dbm.energy_model import ClampedHamiltonian, hidden_energy

SampleSource = Literal["exact", "gibbs", "anneal"]


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Unique hidden configurations (rows) with occurrence counts."""
    configs: np.ndarray
    counts: np.ndarray
    source: SampleSource

    @classmethod
    def from_reads(cls, reads: np.ndarray, source: SampleSource) -> "SampleSet":
        configs, counts = np.unique(np.asarray(reads, dtype=np.int8), axis=0, return_counts=True)
        return cls(configs=configs, counts=counts.astype(np.int64), source=source)

    @property
    def size(self) -> int:
        return int(self.configs.shape[0])

    @property
    def total_reads(self) -> int:
        return int(self.counts.sum())

    def __len__(self) -> int:
        return self.size


def support_log_weights(ch: ClampedHamiltonian, s: SampleSet) -> tuple[np.ndarray, np.ndarray]:
    """Energies of the support and their unnormalised log weights -beta*E."""
    if s.size == 0:
        raise ValueError("sample set is empty")
    energies = np.atleast_1d(hidden_energy(ch, s.configs))
    return energies, -ch.beta * energies


def truncated_probs(ch: ClampedHamiltonian, s: SampleSet) -> np.ndarray:
    """Boltzmann probabilities renormalised over the sampled support only.

    Probabilities come from the energies, not from the read counts; every
    configuration outside the support has probability zero.
    """
    _, log_weights = support_log_weights(ch, s)
    return softmax(log_weights)


def dump_sample_set(path: str | Path, ch: ClampedHamiltonian, s: SampleSet) -> Path:
    """Debug CSV: one row per unique config with its count, energy and truncated probability."""
    energies, _ = support_log_weights(ch, s)
    df = pd.DataFrame({
        "config": ["".join(str(int(bit)) for bit in row) for row in s.configs],
        "count": s.counts,
        "energy": energies,
        "probability": truncated_probs(ch, s),
    })
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False)
    return path
