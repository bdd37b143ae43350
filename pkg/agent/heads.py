"""The four PPO heads behind one protocol.

Every head exposes
    forward(obs, supports=None) -> (outputs, cache)   outputs: (B, n_outputs)
    backward(cache, d_outputs) -> grads               keyed like parameters()
    parameters() -> dict[str, ndarray]                 arrays Adam updates in place
so PPO never needs to know whether it is training an MLP or a DBM.
"""

import logging
from typing import Literal, Protocol

import numpy as np

from agent.mlp import DEFAULT_HIDDEN, MlpHead, init_mlp, mlp_backward, mlp_forward
from dbm.energy_model import DbmTopology, DbmWeights, DimensionError, init_weights
from dbm.free_energy import FreeEnergyHead, HeadTerms, expected_energy_gradient, policy_terms, value_terms
from dbm.sampling import Sampler, SampleSet

logger = logging.getLogger(__name__)

HeadKind = Literal["mlp", "dbm"]


class Head(Protocol):
    role: Literal["policy", "value"]
    n_inputs: int
    n_outputs: int

    def forward(self, obs: np.ndarray, supports: list[SampleSet | None] | None = None): ...

    def backward(self, cache, d_outputs: np.ndarray) -> dict[str, np.ndarray]: ...

    def parameters(self) -> dict[str, np.ndarray]: ...


def _as_batch(obs: np.ndarray, n_inputs: int) -> np.ndarray:
    obs = np.atleast_2d(np.asarray(obs))
    if obs.shape[1] != n_inputs:
        raise DimensionError(f"observation batch has shape {obs.shape}, head expects {n_inputs} inputs")
    return obs


class _MlpHeadBase:
    uses_sampler = False

    def __init__(self, mlp: MlpHead):
        self.mlp = mlp
        self.evaluations = 0

    @property
    def n_inputs(self) -> int:
        return self.mlp.sizes[0]

    @property
    def n_outputs(self) -> int:
        return self.mlp.sizes[-1]

    @property
    def sampler_calls(self) -> int:
        return 0

    def forward(self, obs, supports=None):
        obs = _as_batch(obs, self.n_inputs)
        self.evaluations += obs.shape[0]
        return mlp_forward(self.mlp, obs)

    def backward(self, cache, d_outputs):
        return mlp_backward(self.mlp, cache, d_outputs)

    def parameters(self) -> dict[str, np.ndarray]:
        return self.mlp.parameters()


class MlpPolicyHead(_MlpHeadBase):
    role = "policy"


class MlpValueHead(_MlpHeadBase):
    role = "value"


class _DbmHeadBase:
    """Trainable DBM parameters held as mutable arrays, wrapped into DbmWeights on demand."""
    uses_sampler = True
    role: Literal["policy", "value"]

    def __init__(self, topo: DbmTopology, weights: DbmWeights, sampler: Sampler):
        weights.validate(topo)
        self.topo = topo
        self.beta = float(weights.beta)
        self.sampler = sampler
        self.params = {
            "offset": np.array([weights.offset], dtype=np.float64),
            "biases": np.array(weights.biases, dtype=np.float64),
            "couplings": np.array(weights.couplings, dtype=np.float64),
        }
        self.evaluations = 0

    @property
    def weights(self) -> DbmWeights:
        return DbmWeights(
            offset=float(self.params["offset"][0]),
            biases=self.params["biases"],
            couplings=self.params["couplings"],
            beta=self.beta,
        )

    @property
    def free_energy_head(self) -> FreeEnergyHead:
        return FreeEnergyHead(topo=self.topo, weights=self.weights, sampler=self.sampler, kind=self.role)

    @property
    def n_inputs(self) -> int:
        return self.topo.n_state

    @property
    def sampler_calls(self) -> int:
        return self.sampler.calls

    def parameters(self) -> dict[str, np.ndarray]:
        return self.params

    def _terms(self, head: FreeEnergyHead, state, support) -> HeadTerms:
        raise NotImplementedError

    def forward(self, obs, supports=None):
        obs = _as_batch(obs, self.n_inputs)
        if supports is not None and len(supports) != obs.shape[0]:
            raise DimensionError(f"{len(supports)} supports for {obs.shape[0]} observations")
        head = self.free_energy_head
        cache = []
        for b, state in enumerate(obs):
            cache.append(self._terms(head, state, None if supports is None else supports[b]))
        self.evaluations += obs.shape[0]
        return np.vstack([terms.outputs for terms in cache]), cache

    def backward(self, cache: list[HeadTerms], d_outputs) -> dict[str, np.ndarray]:
        """Outputs are -F, so each row contributes -d_out_j * <dE/dtheta>_j."""
        d_outputs = np.atleast_2d(d_outputs)
        if d_outputs.shape != (len(cache), self.n_outputs):
            raise DimensionError(f"output gradient has shape {d_outputs.shape}, expected {(len(cache), self.n_outputs)}")
        g = expected_energy_gradient(
            self.topo,
            np.concatenate([terms.visible for terms in cache]),
            np.concatenate([terms.mean_h for terms in cache]),
            np.concatenate([terms.second_h for terms in cache]),
            -d_outputs.ravel(),
        )
        return {"offset": np.array([g.d_offset]), "biases": g.d_bias, "couplings": g.d_coupling}


class DbmPolicyHead(_DbmHeadBase):
    """logit_i = -F(s, a_i); one sampler call per observation."""
    role = "policy"

    @property
    def n_outputs(self) -> int:
        return self.topo.n_action

    def _terms(self, head, state, support):
        return policy_terms(head, state, support)


class DbmValueHead(_DbmHeadBase):
    """V(s) = -F(s)."""
    role = "value"

    @property
    def n_outputs(self) -> int:
        return 1

    def _terms(self, head, state, support):
        return value_terms(head, state, support)


def build_head(
    role: Literal["policy", "value"],
    kind: HeadKind,
    n_obs: int,
    n_actions: int,
    rng_seed,
    hidden: tuple[int, ...] | None = None,
    activation: str = "tanh",
    sampler: Sampler | None = None,
    init_scale: float = 0.1,
    beta: float = 1.0,
):
    """Construct one head; `hidden` means MLP layer widths or DBM hidden-layer sizes."""
    n_out = n_actions if role == "policy" else 1
    if kind == "mlp":
        sizes = (n_obs, *(hidden or DEFAULT_HIDDEN), n_out)
        # small policy output layer keeps the initial policy near uniform
        gain = 0.01 if role == "policy" else 1.0
        mlp = init_mlp(sizes, rng_seed, activation=activation, output_gain=gain)
        return MlpPolicyHead(mlp) if role == "policy" else MlpValueHead(mlp)
    if kind == "dbm":
        if sampler is None:
            raise ValueError("a DBM head needs a sampler")
        topo = DbmTopology(
            n_state=n_obs,
            n_action=n_actions if role == "policy" else 0,
            hidden_layers=tuple(hidden or (8, 8)),
        )
        weights = init_weights(topo, rng_seed, scale=init_scale, beta=beta)
        logger.debug("%s DBM head: %d units, %d edges", role, topo.n_units, len(topo.edges()))
        return DbmPolicyHead(topo, weights, sampler) if role == "policy" else DbmValueHead(topo, weights, sampler)
    raise ValueError(f"Unknown head kind: {kind!r} (expected 'mlp' or 'dbm')")
