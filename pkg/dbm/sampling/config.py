"""Sampler configuration."""

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

DEFAULT_NUM_READS = 100
DEFAULT_EXACT_CAP = 20
DEFAULT_ANNEAL_SWEEPS = 1000
DEFAULT_ANNEAL_BETA_START = 0.1


class SamplerError(ValueError):
    """Raised for sampler misuse: cap exceeded, empty schedule, bad config."""
    pass


class SamplerConfig(BaseModel):
    """Reads, chain layout and annealing schedule shared by all backends."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    num_reads: int = Field(default=DEFAULT_NUM_READS, ge=1)
    burn_in: int = Field(default=100, ge=0, description="Gibbs sweeps discarded before the first read.")
    thin: int = Field(default=1, ge=1, description="Gibbs sweeps between retained reads.")
    num_chains: int = Field(default=1, ge=1, description="Independent Gibbs chains advanced in parallel.")
    anneal_schedule: list[tuple[float, int]] | None = Field(
        default=None,
        description="(inverse temperature, sweeps) pairs; null means geometric 0.1 -> beta over 1000 sweeps.",
    )
    exact_cap: int = Field(default=DEFAULT_EXACT_CAP, ge=1, description="Largest hidden size exact_enumerate accepts.")
    rng_seed: int = 0

    @field_validator("anneal_schedule")
    @classmethod
    def _schedule_is_monotone(cls, schedule):
        if schedule is None:
            return schedule
        betas = [beta for beta, _ in schedule]
        if any(beta <= 0 for beta in betas):
            raise ValueError("anneal_schedule inverse temperatures must be positive")
        if any(sweeps < 1 for _, sweeps in schedule):
            raise ValueError("anneal_schedule sweep counts must be >= 1")
        if any(b2 < b1 for b1, b2 in zip(betas, betas[1:])):
            raise ValueError("anneal_schedule inverse temperatures must be non-decreasing")
        return schedule


def default_anneal_schedule(beta: float, sweeps: int = DEFAULT_ANNEAL_SWEEPS) -> list[tuple[float, int]]:
    """Geometric inverse-temperature ramp ending at the target beta, one sweep per step."""
    start = min(DEFAULT_ANNEAL_BETA_START, beta)
    return [(float(b), 1) for b in np.geomspace(start, beta, sweeps)]
