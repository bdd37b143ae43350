"""One sampler interface over the exact, Gibbs and annealing backends."""

import logging
from typing import Callable, Literal

import numpy as np

from dbm.energy_model import ClampedHamiltonian
from dbm.sampling.anneal import anneal_sample
from dbm.sampling.config import SamplerConfig, SamplerError
from dbm.sampling.exact import exact_enumerate
from dbm.sampling.gibbs import gibbs_sample
from dbm.sampling.sample_set import SampleSet

logger = logging.getLogger(__name__)

Backend = Literal["exact", "gibbs", "anneal"]
BACKENDS: tuple[str, ...] = ("exact", "gibbs", "anneal")


class Sampler:
    """Backend selector plus config.

    Every call draws from a private random stream derived from
    (seed, invocation counter), so results depend only on the seed and on how
    many calls came before. A hardware annealer client would slot in here.
    """

    def __init__(self, backend: Backend = "exact", config: SamplerConfig | None = None, seed=None):
        if backend not in BACKENDS:
            raise SamplerError(f"Unknown sampler backend: {backend!r} (expected one of {BACKENDS})")
        self.backend = backend
        self.config = config or SamplerConfig()
        self.seed = self.config.rng_seed if seed is None else seed
        self.calls = 0
        self._dispatch: dict[str, Callable[[ClampedHamiltonian, np.random.Generator], SampleSet]] = {
            "exact": lambda ch, rng: exact_enumerate(ch, cap=self.config.exact_cap),
            "gibbs": lambda ch, rng: gibbs_sample(ch, self.config, rng),
            "anneal": lambda ch, rng: anneal_sample(ch, self.config, rng),
        }

    def _stream(self, counter: int) -> np.random.Generator:
        entropy = list(self.seed) if isinstance(self.seed, (list, tuple)) else self.seed
        return np.random.default_rng(np.random.SeedSequence(entropy, spawn_key=(counter,)))

    def sample(self, ch: ClampedHamiltonian) -> SampleSet:
        rng = self._stream(self.calls)
        self.calls += 1
        result = self._dispatch[self.backend](ch, rng)
        logger.debug("%s call %d: %d unique of %d reads", self.backend, self.calls, result.size, result.total_reads)
        return result

    def state_dict(self) -> dict:
        return {"backend": self.backend, "calls": self.calls}

    def load_state_dict(self, state: dict) -> None:
        if state["backend"] != self.backend:
            raise SamplerError(f"checkpoint sampler backend {state['backend']!r} != {self.backend!r}")
        self.calls = int(state["calls"])
