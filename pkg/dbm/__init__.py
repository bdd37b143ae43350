from .energy_model import (
    DbmTopology,
    DbmWeights,
    ClampedHamiltonian,
    ClampMap,
    DimensionError,
    HamiltonianMismatchError,
    energy,
    clamp,
    clamp_batch,
    clamp_map,
    hidden_energy,
    mean_hamiltonian,
    init_weights,
)
from .snapshot import save_weights, load_weights
from .sampling import Sampler, SamplerConfig, SamplerError, SampleSet, truncated_probs
from .free_energy import (
    FreeEnergyHead,
    ParamGradient,
    truncated_free_energy,
    free_energy_gradient,
    expected_energy_gradient,
    value,
    policy_logits,
    action_distribution,
    dump_policy_trace,
)

__all__ = [
    "DbmTopology",
    "DbmWeights",
    "ClampedHamiltonian",
    "ClampMap",
    "DimensionError",
    "HamiltonianMismatchError",
    "energy",
    "clamp",
    "clamp_batch",
    "clamp_map",
    "hidden_energy",
    "mean_hamiltonian",
    "init_weights",
    "save_weights",
    "load_weights",
    "Sampler",
    "SamplerConfig",
    "SamplerError",
    "SampleSet",
    "truncated_probs",
    "FreeEnergyHead",
    "ParamGradient",
    "truncated_free_energy",
    "free_energy_gradient",
    "expected_energy_gradient",
    "value",
    "policy_logits",
    "action_distribution",
    "dump_policy_trace",
]
