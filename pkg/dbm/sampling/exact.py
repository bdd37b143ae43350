"""Exact enumeration backend: the full hidden space as a sample set."""

from functools import lru_cache

import numpy as np

from dbm.energy_model import ClampedHamiltonian
from dbm.sampling.config import DEFAULT_EXACT_CAP, SamplerError
from dbm.sampling.sample_set import SampleSet


@lru_cache(maxsize=8)
def _unit_counts(n_configs: int) -> np.ndarray:
    counts = np.ones(n_configs, dtype=np.int64)
    counts.setflags(write=False)
    return counts


@lru_cache(maxsize=8)
def all_configs(n_hidden: int) -> np.ndarray:
    """Every 0/1 vector of length n_hidden in lexicographic order (read-only, cached)."""
    codes = np.arange(2 ** n_hidden, dtype=np.int64)
    shifts = np.arange(n_hidden - 1, -1, -1, dtype=np.int64)
    configs = ((codes[:, None] >> shifts) & 1).astype(np.int8)
    configs.setflags(write=False)
    return configs


def exact_enumerate(ch: ClampedHamiltonian, cap: int = DEFAULT_EXACT_CAP) -> SampleSet:
    if ch.n_hidden > cap:
        raise SamplerError(f"exact enumeration of {ch.n_hidden} hidden units exceeds the cap of {cap}")
    configs = all_configs(ch.n_hidden)
    return SampleSet(configs=configs, counts=_unit_counts(configs.shape[0]), source="exact")
