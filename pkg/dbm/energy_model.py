"""Deep Boltzmann Machine topology, parameters and Boltzmann energy.

Units are binary (0/1) and ordered as (state, h_1, ..., h_l, action). Couplings
are stored once per unordered pair in the strictly upper triangle of an N x N
matrix; entries outside the allowed layered edges are always zero.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np


class DimensionError(ValueError):
    """Raised when an assignment or parameter array does not match its topology."""
    pass


class HamiltonianMismatchError(ValueError):
    """Raised when clamped Hamiltonians cannot be combined."""
    pass


# A UnitAssignment is a 0/1 vector (or a stack of them, one per row).
UnitAssignment = np.ndarray


@dataclass(frozen=True)
class DbmTopology:
    """Layered unit structure: state <-> h_1 <-> ... <-> h_l <-> action."""
    n_state: int
    n_action: int
    hidden_layers: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "hidden_layers", tuple(int(s) for s in self.hidden_layers))
        if self.n_state < 1:
            raise ValueError(f"n_state must be >= 1, got {self.n_state}")
        if self.n_action < 0:
            raise ValueError(f"n_action must be >= 0, got {self.n_action}")
        if not self.hidden_layers or any(s < 1 for s in self.hidden_layers):
            raise ValueError(f"hidden layers must be non-empty with sizes >= 1, got {self.hidden_layers}")

    @property
    def n_hidden(self) -> int:
        return sum(self.hidden_layers)

    @property
    def n_visible(self) -> int:
        return self.n_state + self.n_action

    @property
    def n_units(self) -> int:
        return self.n_visible + self.n_hidden

    @property
    def state_slice(self) -> slice:
        return slice(0, self.n_state)

    @property
    def hidden_slice(self) -> slice:
        return slice(self.n_state, self.n_state + self.n_hidden)

    @property
    def action_slice(self) -> slice:
        start = self.n_state + self.n_hidden
        return slice(start, start + self.n_action)

    @property
    def layer_slices(self) -> list[slice]:
        slices = []
        start = self.n_state
        for size in self.hidden_layers:
            slices.append(slice(start, start + size))
            start += size
        return slices

    @cached_property
    def visible_indices(self) -> np.ndarray:
        idx = np.concatenate([
            np.arange(self.n_state),
            np.arange(self.action_slice.start, self.action_slice.stop),
        ])
        idx.setflags(write=False)
        return idx

    @cached_property
    def hidden_indices(self) -> np.ndarray:
        idx = np.arange(self.hidden_slice.start, self.hidden_slice.stop)
        idx.setflags(write=False)
        return idx

    @cached_property
    def _mask(self) -> np.ndarray:
        mask = np.zeros((self.n_units, self.n_units), dtype=bool)
        blocks = [self.state_slice, *self.layer_slices]
        if self.n_action:
            blocks.append(self.action_slice)
        for lower, upper in zip(blocks, blocks[1:]):
            mask[lower, upper] = True
        mask.setflags(write=False)
        return mask

    def edge_mask(self) -> np.ndarray:
        """Boolean N x N mask of allowed couplings (upper triangle only)."""
        return self._mask

    def edges(self) -> list[tuple[int, int]]:
        return [(int(i), int(j)) for i, j in np.argwhere(self._mask)]


@dataclass(frozen=True, eq=False)
class DbmWeights:
    """Offset a, biases b_i, couplings w_ij and the inverse temperature beta."""
    offset: float
    biases: np.ndarray
    couplings: np.ndarray
    beta: float = 1.0

    def validate(self, topo: DbmTopology) -> "DbmWeights":
        n = topo.n_units
        if self.biases.shape != (n,):
            raise DimensionError(f"biases have shape {self.biases.shape}, expected ({n},)")
        if self.couplings.shape != (n, n):
            raise DimensionError(f"couplings have shape {self.couplings.shape}, expected ({n}, {n})")
        if np.any(self.couplings[~topo.edge_mask()] != 0.0):
            raise ValueError("couplings present on edges the topology does not allow")
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        return self


@dataclass(frozen=True, eq=False)
class ClampedHamiltonian:
    """Hidden-units-only energy left after fixing the visible units.

    `layers` records the hidden layer sizes when the couplings are known to be
    a layered chain (no couplings inside a layer); samplers use it to update a
    whole layer at once.
    """
    constant: float
    eff_bias: np.ndarray
    hidden_couplings: np.ndarray
    beta: float = 1.0
    layers: tuple[int, ...] | None = None

    @property
    def n_hidden(self) -> int:
        return int(self.eff_bias.shape[0])

    @cached_property
    def symmetric_couplings(self) -> np.ndarray:
        return self.hidden_couplings + self.hidden_couplings.T


@dataclass(frozen=True, eq=False)
class ClampMap:
    """Which units were clamped, to which values, and which stayed free."""
    topo: DbmTopology
    visible_indices: np.ndarray
    values: np.ndarray
    hidden_indices: np.ndarray


def as_assignment(values: Sequence[int] | np.ndarray, length: int, what: str = "assignment") -> UnitAssignment:
    """Check a 0/1 vector (or stack of vectors) against the expected length."""
    arr = np.asarray(values)
    if arr.ndim not in (1, 2) or arr.shape[-1] != length:
        raise DimensionError(f"{what} has shape {arr.shape}, expected last dimension {length}")
    if not np.all((arr == 0) | (arr == 1)):
        raise ValueError(f"{what} entries must be exactly 0 or 1")
    return arr.astype(np.int8)


def energy(weights: DbmWeights, topo: DbmTopology, u: UnitAssignment) -> float | np.ndarray:
    """Boltzmann energy a + sum b_i u_i + sum_{i<j} w_ij u_i u_j.

    Accepts a single assignment or a (K, N) stack, returning a float or a
    length-K array respectively.
    """
    u = as_assignment(u, topo.n_units, "unit assignment").astype(np.float64)
    couplings = np.where(topo.edge_mask(), weights.couplings, 0.0)
    if u.ndim == 1:
        return float(weights.offset + weights.biases @ u + u @ couplings @ u)
    return weights.offset + u @ weights.biases + np.einsum("ki,ij,kj->k", u, couplings, u)


def clamp_map(topo: DbmTopology, visible: UnitAssignment) -> ClampMap:
    values = as_assignment(visible, topo.n_visible, "visible assignment")
    if values.ndim != 1:
        raise DimensionError("visible assignment must be a single vector")
    return ClampMap(
        topo=topo,
        visible_indices=topo.visible_indices,
        values=values,
        hidden_indices=topo.hidden_indices,
    )


def clamp(weights: DbmWeights, topo: DbmTopology, visible: UnitAssignment) -> ClampedHamiltonian:
    """Fix the visible units (state then action) and fold them into the hidden energy."""
    cmap = clamp_map(topo, visible)
    v = cmap.values.astype(np.float64)
    vis, hid = cmap.visible_indices, cmap.hidden_indices

    couplings = np.where(topo.edge_mask(), weights.couplings, 0.0)
    sym = couplings + couplings.T

    constant = weights.offset + weights.biases[vis] @ v + v @ couplings[np.ix_(vis, vis)] @ v
    eff_bias = weights.biases[hid] + sym[np.ix_(hid, vis)] @ v
    return ClampedHamiltonian(
        constant=float(constant),
        eff_bias=eff_bias,
        hidden_couplings=couplings[np.ix_(hid, hid)].copy(),
        beta=float(weights.beta),
        layers=topo.hidden_layers,
    )


def clamp_batch(weights: DbmWeights, topo: DbmTopology, visibles: UnitAssignment) -> list[ClampedHamiltonian]:
    """clamp() for each row of a (J, n_visible) stack; all rows share one hidden-coupling array."""
    values = np.atleast_2d(as_assignment(visibles, topo.n_visible, "visible assignment")).astype(np.float64)
    vis, hid = topo.visible_indices, topo.hidden_indices

    couplings = np.where(topo.edge_mask(), weights.couplings, 0.0)
    sym = couplings + couplings.T
    vv = couplings[np.ix_(vis, vis)]

    constants = weights.offset + values @ weights.biases[vis] + np.einsum("ji,ik,jk->j", values, vv, values)
    eff_bias = weights.biases[hid] + values @ sym[np.ix_(hid, vis)].T
    hidden_couplings = couplings[np.ix_(hid, hid)]
    return [
        ClampedHamiltonian(
            constant=float(c),
            eff_bias=b,
            hidden_couplings=hidden_couplings,
            beta=float(weights.beta),
            layers=topo.hidden_layers,
        )
        for c, b in zip(constants, eff_bias)
    ]


def hidden_energy(ch: ClampedHamiltonian, h: UnitAssignment) -> float | np.ndarray:
    """Energy of hidden configuration(s) under a clamped Hamiltonian."""
    h = as_assignment(h, ch.n_hidden, "hidden assignment").astype(np.float64)
    if h.ndim == 1:
        return float(ch.constant + ch.eff_bias @ h + h @ ch.hidden_couplings @ h)
    quadratic = np.einsum("ki,ki->k", h @ ch.hidden_couplings, h)
    return ch.constant + h @ ch.eff_bias + quadratic


def mean_hamiltonian(hams: Sequence[ClampedHamiltonian]) -> ClampedHamiltonian:
    """Field-wise mean (1/n) sum H_i, the shared sampling Hamiltonian."""
    if not hams:
        raise ValueError("mean_hamiltonian needs at least one Hamiltonian")
    first = hams[0]
    for ch in hams[1:]:
        if ch.n_hidden != first.n_hidden or ch.hidden_couplings.shape != first.hidden_couplings.shape:
            raise HamiltonianMismatchError("Hamiltonians are defined over different hidden units")
        if ch.beta != first.beta:
            raise HamiltonianMismatchError(f"beta mismatch: {ch.beta} != {first.beta}")
        if ch.layers != first.layers:
            raise HamiltonianMismatchError("Hamiltonians have different hidden layer structure")
    return ClampedHamiltonian(
        constant=float(np.mean([ch.constant for ch in hams])),
        eff_bias=np.mean([ch.eff_bias for ch in hams], axis=0),
        hidden_couplings=np.mean([ch.hidden_couplings for ch in hams], axis=0),
        beta=first.beta,
        layers=first.layers,
    )


def init_weights(topo: DbmTopology, rng_seed, scale: float = 0.1, beta: float = 1.0) -> DbmWeights:
    """Uniform [-scale, scale] biases and couplings, zero offset; deterministic per seed."""
    if not scale > 0:
        raise ValueError(f"scale must be positive, got {scale}")
    rng = np.random.default_rng(rng_seed)
    n = topo.n_units
    biases = rng.uniform(-scale, scale, size=n)
    couplings = np.where(topo.edge_mask(), rng.uniform(-scale, scale, size=(n, n)), 0.0)
    return DbmWeights(offset=0.0, biases=biases, couplings=couplings, beta=float(beta)).validate(topo)
