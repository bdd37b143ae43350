"""Simulated annealing, standing in for a quantum annealer.

Each read is an independent run that starts from a random configuration,
sweeps through the inverse-temperature schedule and returns its final state.
Reads concentrate on low-energy configurations, which is the property the
free-energy estimator relies on.
"""

import numpy as np

from dbm.energy_model import ClampedHamiltonian
from dbm.sampling.config import SamplerConfig, SamplerError, default_anneal_schedule
from dbm.sampling.gibbs import heat_bath_sweep, random_states, update_blocks
from dbm.sampling.sample_set import SampleSet


def anneal_sample(ch: ClampedHamiltonian, cfg: SamplerConfig, rng: np.random.Generator | None = None) -> SampleSet:
    schedule = cfg.anneal_schedule if cfg.anneal_schedule is not None else default_anneal_schedule(ch.beta)
    if not schedule:
        raise SamplerError("anneal schedule is empty")
    rng = rng if rng is not None else np.random.default_rng(cfg.rng_seed)
    blocks = update_blocks(ch)

    # all reads advance together; rows never interact
    states = random_states(rng, cfg.num_reads, ch.n_hidden)
    for beta, sweeps in schedule:
        for _ in range(sweeps):
            heat_bath_sweep(states, ch, beta, rng, blocks)
    return SampleSet.from_reads(states, "anneal")
