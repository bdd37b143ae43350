"""Heat-bath Gibbs sampling of a clamped Hamiltonian."""

import math

import numpy as np
from scipy.special import expit

from dbm.energy_model import ClampedHamiltonian
from dbm.sampling.config import SamplerConfig
from dbm.sampling.sample_set import SampleSet


def update_blocks(ch: ClampedHamiltonian) -> list[slice]:
    """Groups of hidden units that can be resampled together.

    Units inside one hidden layer share no couplings, so updating a layer at
    once draws from the same conditionals as visiting its units one by one.
    Without layer information every unit is its own block.
    """
    if not ch.layers:
        return [slice(k, k + 1) for k in range(ch.n_hidden)]
    blocks, start = [], 0
    for size in ch.layers:
        blocks.append(slice(start, start + size))
        start += size
    return blocks


def heat_bath_sweep(
    states: np.ndarray,
    ch: ClampedHamiltonian,
    beta: float,
    rng: np.random.Generator,
    blocks: list[slice],
) -> None:
    """One in-place sweep over all hidden units for every row of `states`.

    The energy change of switching unit k on is its local field
    eff_bias_k + sum_m w_km h_m, so P(h_k = 1 | rest) = sigmoid(-beta * field).
    """
    couplings = ch.symmetric_couplings
    for block in blocks:
        field = ch.eff_bias[block] + states @ couplings[:, block]
        p_on = expit(-beta * field)
        states[:, block] = rng.random(p_on.shape) < p_on


def random_states(rng: np.random.Generator, n_rows: int, n_hidden: int) -> np.ndarray:
    return rng.integers(0, 2, size=(n_rows, n_hidden)).astype(np.float64)


def gibbs_sample(ch: ClampedHamiltonian, cfg: SamplerConfig, rng: np.random.Generator | None = None) -> SampleSet:
    """Retain one read every `thin` sweeps after `burn_in`, across `num_chains` chains."""
    rng = rng if rng is not None else np.random.default_rng(cfg.rng_seed)
    n_chains = min(cfg.num_chains, cfg.num_reads)
    reads_per_chain = math.ceil(cfg.num_reads / n_chains)
    blocks = update_blocks(ch)

    states = random_states(rng, n_chains, ch.n_hidden)
    for _ in range(cfg.burn_in):
        heat_bath_sweep(states, ch, ch.beta, rng, blocks)

    reads = np.empty((reads_per_chain, n_chains, ch.n_hidden), dtype=np.int8)
    for r in range(reads_per_chain):
        for _ in range(cfg.thin):
            heat_bath_sweep(states, ch, ch.beta, rng, blocks)
        reads[r] = states
    return SampleSet.from_reads(reads.reshape(-1, ch.n_hidden)[: cfg.num_reads], "gibbs")
