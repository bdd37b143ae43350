"""Truncated clamped free energy, its parameter gradient, and the two DBM heads.

The value head clamps the state units and reports V(s) = -F(s). The policy
head clamps the state plus each one-hot action in turn, samples once from the
mean of those Hamiltonians, and scores every action on that shared support:
logit_i = -F_i.

On a full exact support of a layered machine the heads sum one parity of
layers out in closed form instead of listing all 2^H configurations.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np
import pandas as pd
from scipy.special import expit, logsumexp, softmax

from dbm.energy_model import (
    ClampedHamiltonian,
    ClampMap,
    DbmTopology,
    DbmWeights,
    DimensionError,
    as_assignment,
    clamp,
    clamp_batch,
    mean_hamiltonian,
)
from dbm.sampling import SampleSet, Sampler
from dbm.sampling.exact import all_configs
from dbm.sampling.sample_set import support_log_weights

# p log p is taken as 0 below this probability
PROB_FLOOR = 1e-300


@dataclass(frozen=True, eq=False)
class ParamGradient:
    """Gradient with the same layout as DbmWeights (couplings upper-triangular)."""
    d_offset: float
    d_bias: np.ndarray
    d_coupling: np.ndarray

    def __add__(self, other: "ParamGradient") -> "ParamGradient":
        return ParamGradient(
            d_offset=self.d_offset + other.d_offset,
            d_bias=self.d_bias + other.d_bias,
            d_coupling=self.d_coupling + other.d_coupling,
        )

    def scaled(self, factor: float) -> "ParamGradient":
        return ParamGradient(self.d_offset * factor, self.d_bias * factor, self.d_coupling * factor)


def _free_energy(energies: np.ndarray, log_weights: np.ndarray, beta: float) -> float:
    log_z = logsumexp(log_weights)
    log_p = log_weights - log_z
    p = np.exp(log_p)
    entropy_term = np.where(p > PROB_FLOOR, p * log_p, 0.0).sum()
    return float(p @ energies + entropy_term / beta)


def truncated_free_energy(ch: ClampedHamiltonian, s: SampleSet) -> float:
    """F = sum p_k E_k + (1/beta) sum p_k log p_k over the sampled support.

    Probabilities are conditional on the clamped visible units (normalised over
    hidden configurations only). On any support this equals
    -(1/beta) log sum_k exp(-beta E_k).
    """
    energies, log_weights = support_log_weights(ch, s)
    return _free_energy(energies, log_weights, ch.beta)


def action_distribution(logits: np.ndarray) -> np.ndarray:
    logits = np.asarray(logits, dtype=np.float64)
    if logits.size == 0:
        raise ValueError("logits are empty")
    return softmax(logits, axis=-1)


def support_moments(configs: np.ndarray, probs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """<h> (J, H) and <h h^T> (J, H, H) of each row of probs over one support."""
    probs = np.atleast_2d(probs)
    h = configs.astype(np.float64)
    mean_h = probs @ h
    second_h = np.stack([(h * p[:, None]).T @ h for p in probs])
    return mean_h, second_h


def expected_energy_gradient(
    topo: DbmTopology,
    visible: np.ndarray,
    mean_h: np.ndarray,
    second_h: np.ndarray,
    weights: np.ndarray,
) -> ParamGradient:
    """Sum_j weights_j * <dE/dtheta>_j from each Hamiltonian's hidden moments.

    visible: (J, n_visible) clamped values; mean_h: (J, H) hidden means;
    second_h: (J, H, H) hidden second moments. With J = 1 and weight 1 this is
    the gradient of a single free energy.
    """
    visible = np.atleast_2d(visible).astype(np.float64)
    mean_h = np.atleast_2d(mean_h)
    second_h = second_h.reshape(-1, topo.n_hidden, topo.n_hidden)
    weights = np.asarray(weights, dtype=np.float64)
    vis, hid = topo.visible_indices, topo.hidden_indices
    weighted_visible = visible * weights[:, None]

    d_bias = np.zeros(topo.n_units)
    d_bias[vis] = weights @ visible
    d_bias[hid] = weights @ mean_h

    second = np.zeros((topo.n_units, topo.n_units))
    second[np.ix_(hid, hid)] = np.tensordot(weights, second_h, axes=1)
    vh = weighted_visible.T @ mean_h
    second[np.ix_(vis, hid)] = vh
    second[np.ix_(hid, vis)] = vh.T
    second[np.ix_(vis, vis)] = weighted_visible.T @ visible

    return ParamGradient(
        d_offset=float(weights.sum()),
        d_bias=d_bias,
        d_coupling=np.where(topo.edge_mask(), second, 0.0),
    )


def free_energy_gradient(ch: ClampedHamiltonian, s: SampleSet, cmap: ClampMap) -> ParamGradient:
    """dF/dtheta with the support held fixed: the truncated expectation of dE/dtheta."""
    _, log_weights = support_log_weights(ch, s)
    mean_h, second_h = support_moments(s.configs, softmax(log_weights))
    return expected_energy_gradient(cmap.topo, cmap.values[None, :], mean_h, second_h, np.ones(1))


@dataclass
class FreeEnergyHead:
    """A DBM used as a value head (no action units) or a policy head (one-hot actions)."""
    topo: DbmTopology
    weights: DbmWeights
    sampler: Sampler
    kind: Literal["value", "policy"]

    def __post_init__(self):
        if self.kind == "value" and self.topo.n_action != 0:
            raise ValueError("a value head has no action units")
        if self.kind == "policy" and self.topo.n_action < 1:
            raise ValueError("a policy head needs at least one action unit")
        if self.kind not in ("value", "policy"):
            raise ValueError(f"Unknown head kind: {self.kind!r}")

    @property
    def n_actions(self) -> int:
        return self.topo.n_action


@dataclass(frozen=True, eq=False)
class HeadTerms:
    """What a forward pass keeps for the backward pass: hidden moments, not distributions."""
    outputs: np.ndarray       # -F per Hamiltonian
    free_energies: np.ndarray
    visible: np.ndarray       # (J, n_visible)
    support: SampleSet
    mean_h: np.ndarray        # (J, H)
    second_h: np.ndarray      # (J, H, H)


def _check_state(head: FreeEnergyHead, state) -> np.ndarray:
    state = as_assignment(state, head.topo.n_state, "state")
    if state.ndim != 1:
        raise DimensionError("state must be a single observation vector")
    return state


def layer_groups(ch: ClampedHamiltonian) -> tuple[np.ndarray, np.ndarray] | None:
    """Hidden indices of the even and odd layers, smaller group first.

    None unless the layers form a chain, i.e. no coupling joins two units of
    the same group.
    """
    if ch.layers is None or sum(ch.layers) != ch.n_hidden:
        return None
    starts = np.cumsum((0, *ch.layers))
    groups = []
    for parity in (0, 1):
        parts = [np.arange(starts[i], starts[i + 1]) for i in range(parity, len(ch.layers), 2)]
        groups.append(np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64))
    sym = ch.symmetric_couplings
    if any(np.any(sym[np.ix_(g, g)]) for g in groups):
        return None
    enumerated, summed = sorted(groups, key=len)
    return enumerated, summed


def _summed_out_terms(
    constants: np.ndarray,
    eff_bias: np.ndarray,
    ch: ClampedHamiltonian,
    enumerated: np.ndarray,
    summed: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Full-support free energies and hidden moments of a layered chain.

    Every configuration of the `enumerated` group is listed; given one, the
    units of the `summed` group are independent and are summed out in closed
    form. Equal to enumerating all 2^H configurations.
    """
    beta = ch.beta
    n_rows, n_hidden = eff_bias.shape
    h_e = all_configs(enumerated.size).astype(np.float64)               # (K, E)
    coupling = ch.symmetric_couplings[np.ix_(enumerated, summed)]        # (E, M)
    field = eff_bias[:, summed][:, None, :] + (h_e @ coupling)[None]    # (J, K, M)

    log_w = -beta * (constants[:, None] + eff_bias[:, enumerated] @ h_e.T)
    log_w = log_w + np.logaddexp(0.0, -beta * field).sum(axis=2)
    log_z = logsumexp(log_w, axis=1)
    p = np.exp(log_w - log_z[:, None])                                   # (J, K)
    q = expit(-beta * field)                                             # P(h_m = 1 | h_e)

    mean_h = np.empty((n_rows, n_hidden))
    mean_h[:, enumerated] = p @ h_e
    mean_h[:, summed] = np.einsum("jk,jkm->jm", p, q)

    pq = p[:, :, None] * q
    second_h = np.empty((n_rows, n_hidden, n_hidden))
    second_h[:, enumerated[:, None], enumerated] = np.einsum("jk,ka,kb->jab", p, h_e, h_e)
    cross = np.einsum("ka,jkm->jam", h_e, pq)
    second_h[:, enumerated[:, None], summed] = cross
    second_h[:, summed[:, None], enumerated] = cross.transpose(0, 2, 1)
    inner = np.einsum("jka,jkb->jab", pq, q)
    diag = np.arange(summed.size)
    inner[:, diag, diag] = mean_h[:, summed]
    second_h[:, summed[:, None], summed] = inner
    return -log_z / beta, mean_h, second_h


def _shared_support_terms(
    hams: list[ClampedHamiltonian], support: SampleSet
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Free energies and hidden moments of several Hamiltonians on one support.

    Clamping never touches hidden-hidden couplings, so Hamiltonians from one
    head differ only in constant and eff_bias and share the quadratic term.
    """
    if support.size == 0:
        raise ValueError("sample set is empty")
    first = hams[0]
    constants = np.array([ch.constant for ch in hams])
    eff_bias = np.stack([ch.eff_bias for ch in hams])

    if support.source == "exact" and support.size == 2 ** first.n_hidden:
        groups = layer_groups(first)
        if groups is not None:
            return _summed_out_terms(constants, eff_bias, first, *groups)

    h = support.configs.astype(np.float64)
    quadratic = np.einsum("ki,ki->k", h @ first.hidden_couplings, h)
    free_energies = np.empty(len(hams))
    probs = np.empty((len(hams), support.size))
    for i in range(len(hams)):
        energies = constants[i] + h @ eff_bias[i] + quadratic
        log_weights = -first.beta * energies
        free_energies[i] = _free_energy(energies, log_weights, first.beta)
        probs[i] = softmax(log_weights)
    mean_h, second_h = support_moments(support.configs, probs)
    return free_energies, mean_h, second_h


def value_terms(head: FreeEnergyHead, state, support: SampleSet | None = None) -> HeadTerms:
    if head.kind != "value":
        raise ValueError("value() needs a value head")
    state = _check_state(head, state)
    ch = clamp(head.weights, head.topo, state)
    if support is None:
        support = head.sampler.sample(ch)
    free_energies, mean_h, second_h = _shared_support_terms([ch], support)
    return HeadTerms(-free_energies, free_energies, state[None, :], support, mean_h, second_h)


def policy_hamiltonians(head: FreeEnergyHead, state) -> tuple[np.ndarray, list[ClampedHamiltonian]]:
    """Visible vectors (state ++ one-hot action i) and their clamped Hamiltonians H_i."""
    state = _check_state(head, state)
    actions = np.eye(head.n_actions, dtype=np.int8)
    visible = np.hstack([np.repeat(state[None, :], head.n_actions, axis=0), actions])
    return visible, clamp_batch(head.weights, head.topo, visible)


def policy_terms(head: FreeEnergyHead, state, support: SampleSet | None = None) -> HeadTerms:
    if head.kind != "policy":
        raise ValueError("policy_logits() needs a policy head")
    visible, hams = policy_hamiltonians(head, state)
    if support is None:
        support = head.sampler.sample(mean_hamiltonian(hams))
    free_energies, mean_h, second_h = _shared_support_terms(hams, support)
    return HeadTerms(-free_energies, free_energies, visible, support, mean_h, second_h)


def value(head: FreeEnergyHead, state) -> float:
    """V(s) = -F(s) from one sampler call on the state-clamped machine."""
    return float(value_terms(head, state).outputs[0])


def policy_logits(head: FreeEnergyHead, state) -> np.ndarray:
    """logit_i = -F_i, all actions scored on one sample of the mean Hamiltonian."""
    return policy_terms(head, state).outputs


def dump_policy_trace(path: str | Path, rows: list[dict]) -> Path:
    """Append (step, action, free_energy, logit, probability) rows to a CSV."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df = pd.DataFrame(rows, columns=["step", "action", "free_energy", "logit", "probability"])
    df.to_csv(path, mode="a", header=not path.exists(), index=False)
    return path
