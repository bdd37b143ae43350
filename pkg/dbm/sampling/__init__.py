from .config import SamplerConfig, SamplerError, default_anneal_schedule
from .sample_set import SampleSet, truncated_probs, dump_sample_set
from .exact import exact_enumerate
from .gibbs import gibbs_sample
from .anneal import anneal_sample
from .backends import Sampler, BACKENDS

__all__ = [
    "SamplerConfig",
    "SamplerError",
    "default_anneal_schedule",
    "SampleSet",
    "truncated_probs",
    "dump_sample_set",
    "exact_enumerate",
    "gibbs_sample",
    "anneal_sample",
    "Sampler",
    "BACKENDS",
]
