import itertools

import numpy as np
import pytest
import yaml

from cyberenv import GreenPattern, LinkSpec, NetworkSpec, NodeSpec, RedEvent
from dbm import DbmTopology, DbmWeights, energy, init_weights


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def make_dbm():
    """Factory for random (topology, weights) pairs."""

    def _make(n_state=3, n_action=2, hidden=(2, 2), seed=0, scale=0.5, beta=1.0):
        topo = DbmTopology(n_state=n_state, n_action=n_action, hidden_layers=tuple(hidden))
        return topo, init_weights(topo, seed, scale=scale, beta=beta)

    return _make


@pytest.fixture
def brute_free_energy():
    """Free energy straight from the full-unit energy over every hidden configuration."""

    def _free_energy(topo: DbmTopology, weights: DbmWeights, state, action=None) -> float:
        rows = [
            np.concatenate([state, h, [] if action is None else action])
            for h in itertools.product((0, 1), repeat=topo.n_hidden)
        ]
        energies = np.atleast_1d(energy(weights, topo, np.array(rows, dtype=np.int8)))
        log_w = -weights.beta * energies
        log_w -= log_w.max()
        p = np.exp(log_w) / np.exp(log_w).sum()
        nz = p > 0
        return float(p @ energies + (p[nz] * np.log(p[nz])).sum() / weights.beta)

    return _free_energy


@pytest.fixture
def tiny_spec() -> NetworkSpec:
    """Three nodes, two links, a five-step episode with one compromise and one ddos."""
    return NetworkSpec(
        name="tiny",
        nodes=[
            NodeSpec(id="pc", kind="pc"),
            NodeSpec(id="sw", kind="switch"),
            NodeSpec(id="srv", kind="server"),
        ],
        links=[
            LinkSpec(id="pc-sw", endpoints=("pc", "sw")),
            LinkSpec(id="sw-srv", endpoints=("sw", "srv")),
        ],
        green_traffic={
            "pc-sw": GreenPattern(loads=[0.5]),
            "sw-srv": GreenPattern(loads=[0.4, 0.6]),
        },
        red_schedule=[
            RedEvent(timestep=1, target="pc", kind="compromise"),
            RedEvent(timestep=2, target="sw-srv", kind="ddos"),
        ],
        episode_length=5,
    )


@pytest.fixture
def tiny_spec_path(tmp_path, tiny_spec):
    path = tmp_path / "tiny.yaml"
    path.write_text(yaml.safe_dump(tiny_spec.model_dump(mode="json"), sort_keys=False))
    return path
