"""Resumable training checkpoints.

One .npz file: every head parameter and both Adam moments as arrays, plus a
JSON header (format version, Adam step, RNG states, env state, sampler
counters, training progress) stored under the "header" key.
"""

import json
import logging
from pathlib import Path

import numpy as np

from agent.ppo import PpoAgent

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT_VERSION = 1


class CheckpointError(RuntimeError):
    """Raised when a checkpoint is missing, from another format, or does not fit the agent."""
    pass


def _sampler_states(agent: PpoAgent) -> dict:
    states = {}
    for role, head in (("policy", agent.policy), ("value", agent.value)):
        if head.uses_sampler:
            states[role] = head.sampler.state_dict()
    return states


def save_checkpoint(path: str | Path, agent: PpoAgent, rng: np.random.Generator, env, progress: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arrays = {}
    for name, p in agent.parameters().items():
        arrays[f"param/{name}"] = p
        arrays[f"adam_m/{name}"] = agent.optimizer.state.m[name]
        arrays[f"adam_v/{name}"] = agent.optimizer.state.v[name]
    header = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "adam_t": agent.optimizer.state.t,
        "rng_state": rng.bit_generator.state,
        "env_state": env.state_dict(),
        "samplers": _sampler_states(agent),
        "head_evaluations": {"policy": agent.policy.evaluations, "value": agent.value.evaluations},
        "progress": progress,
    }
    arrays["header"] = np.array(json.dumps(header))

    # atomic replace
    tmp = path.with_name(path.name + ".tmp.npz")
    np.savez(tmp, **arrays)
    tmp.replace(path)
    logger.debug("Checkpoint written to %s (%s)", path, progress)
    return path


def load_checkpoint(path: str | Path, agent: PpoAgent, rng: np.random.Generator, env) -> dict:
    """Restore agent, rng and env in place; returns the saved progress record."""
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"No checkpoint at {path}")
    with np.load(path, allow_pickle=False) as data:
        header = json.loads(str(data["header"]))
        if header.get("format_version") != CHECKPOINT_FORMAT_VERSION:
            raise CheckpointError(f"Unsupported checkpoint format version: {header.get('format_version')}")

        params = agent.parameters()
        saved = {key.split("/", 1)[1] for key in data.files if key.startswith("param/")}
        if saved != set(params):
            raise CheckpointError(
                f"checkpoint parameters {sorted(saved)} do not match agent parameters {sorted(params)}"
            )
        for name, p in params.items():
            stored = data[f"param/{name}"]
            if stored.shape != p.shape:
                raise CheckpointError(f"{name}: checkpoint shape {stored.shape}, agent shape {p.shape}")
            p[...] = stored
            agent.optimizer.state.m[name][...] = data[f"adam_m/{name}"]
            agent.optimizer.state.v[name][...] = data[f"adam_v/{name}"]

    agent.optimizer.state.t = int(header["adam_t"])
    rng.bit_generator.state = header["rng_state"]
    env.load_state_dict(header["env_state"])
    for role, state in header["samplers"].items():
        getattr(agent, role).sampler.load_state_dict(state)
    agent.policy.evaluations = int(header["head_evaluations"]["policy"])
    agent.value.evaluations = int(header["head_evaluations"]["value"])
    return header["progress"]
