"""Clipped-surrogate PPO over pluggable policy and value heads."""

import logging
from dataclasses import asdict, dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.special import log_softmax

from agent.adam import Adam
from agent.buffer import RolloutBuffer
from dbm.energy_model import DimensionError
from dbm.free_energy import action_distribution

logger = logging.getLogger(__name__)

ADV_EPS = 1e-8


class NumericalAbortError(RuntimeError):
    """Raised when a loss or gradient stops being finite; carries what was known at the time."""

    def __init__(self, message: str, diagnostics: dict):
        super().__init__(message)
        self.diagnostics = diagnostics


class PpoConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    learning_rate: float = Field(default=3e-4, gt=0)
    clip_epsilon: float = Field(default=0.2, gt=0, lt=1)
    gamma: float = Field(default=0.95, ge=0, le=1)
    gae_lambda: float = Field(default=0.95, ge=0, le=1)
    n_steps: int = Field(default=60, ge=1, description="Environment steps per rollout.")
    n_epochs: int = Field(default=10, ge=1)
    minibatch_size: int = Field(default=30, ge=1)
    reward_scale: float = Field(default=0.1, gt=0, description="Rewards are multiplied by this before GAE; logged rewards stay unscaled.")
    entropy_coef: float = Field(default=0.0, ge=0)
    value_coef: float = Field(default=0.5, ge=0)
    max_grad_norm: float = Field(default=0.5, gt=0)
    normalize_advantage: bool = True
    reuse_rollout_supports: bool = Field(
        default=False,
        description="Score DBM heads on the supports sampled during the rollout instead of resampling.",
    )


@dataclass
class UpdateStats:
    policy_loss: float
    value_loss: float
    entropy: float
    approx_kl: float
    clip_fraction: float
    mean_ratio: float
    grad_norm: float
    minibatches: int

    def as_row(self) -> dict:
        return asdict(self)


class PpoAgent:
    """Policy head, value head, and one Adam over the union of their parameters."""

    def __init__(self, policy_head, value_head, cfg: PpoConfig):
        if policy_head.role != "policy" or value_head.role != "value":
            raise ValueError("PpoAgent needs a policy head and a value head")
        if policy_head.n_inputs != value_head.n_inputs:
            raise DimensionError(f"policy takes {policy_head.n_inputs} inputs, value takes {value_head.n_inputs}")
        self.policy = policy_head
        self.value = value_head
        self.cfg = cfg
        self.optimizer = Adam(self.parameters(), cfg.learning_rate)

    def parameters(self) -> dict[str, np.ndarray]:
        params = {f"policy.{k}": p for k, p in self.policy.parameters().items()}
        params.update({f"value.{k}": p for k, p in self.value.parameters().items()})
        return params


def _check_dimensions(env, policy_head, value_head) -> None:
    if policy_head.n_inputs != env.observation_size or value_head.n_inputs != env.observation_size:
        raise DimensionError(
            f"env observations have {env.observation_size} bits; "
            f"heads take {policy_head.n_inputs} (policy) and {value_head.n_inputs} (value)"
        )
    if policy_head.n_outputs != env.action_space_size:
        raise DimensionError(f"env has {env.action_space_size} actions, policy head outputs {policy_head.n_outputs}")


def collect_rollout(
    env,
    policy_head,
    value_head,
    n_steps: int,
    rng: np.random.Generator,
    max_episodes: int | None = None,
    keep_supports: bool = False,
    policy_trace: list[dict] | None = None,
) -> RolloutBuffer:
    """Run the current policy for up to n_steps, resetting the env whenever an episode ends.

    Stops early once `max_episodes` episodes have completed. When
    `policy_trace` is a list, one row per (step, action) is appended to it.
    """
    _check_dimensions(env, policy_head, value_head)
    buffer = RolloutBuffer()
    obs = None
    for _ in range(n_steps):
        obs = env.reset() if env.done else env.observation
        logits, p_cache = policy_head.forward(obs[None, :])
        values, v_cache = value_head.forward(obs[None, :])
        logits = logits[0]
        log_probs = log_softmax(logits)
        probs = action_distribution(logits)
        action = int(rng.choice(len(probs), p=probs))

        if policy_trace is not None:
            step = env.total_steps
            policy_trace.extend(
                {"step": step, "action": i, "free_energy": -logits[i], "logit": logits[i], "probability": probs[i]}
                for i in range(len(probs))
            )

        _, reward, done = env.step(action)
        buffer.add(
            obs,
            action,
            log_probs[action],
            reward,
            values[0, 0],
            done,
            policy_support=p_cache[0].support if keep_supports and policy_head.uses_sampler else None,
            value_support=v_cache[0].support if keep_supports and value_head.uses_sampler else None,
        )
        if done:
            buffer.episode_rewards.append(env.episode_reward)
            buffer.episode_lengths.append(env.timestep)
            if max_episodes is not None and len(buffer.episode_rewards) >= max_episodes:
                break

    if len(buffer) and not buffer.dones[-1]:
        bootstrap, _ = value_head.forward(env.observation[None, :])
        buffer.bootstrap_value = float(bootstrap[0, 0])
    return buffer


def compute_gae(
    buffer: RolloutBuffer,
    gamma: float,
    gae_lambda: float,
    bootstrap_value: float | None = None,
    reward_scale: float = 1.0,
) -> None:
    """Fill buffer.advantages and buffer.returns (in units of reward_scale * reward).

    delta_t = r_t + gamma * V_{t+1} * (1 - done_t) - V_t
    A_t = delta_t + gamma * lambda * (1 - done_t) * A_{t+1};  R_t = A_t + V_t
    """
    arrays = buffer.as_arrays()
    rewards, values, dones = arrays["rewards"] * reward_scale, arrays["values"], arrays["dones"]
    next_value = buffer.bootstrap_value if bootstrap_value is None else bootstrap_value
    advantages = np.zeros(len(buffer))
    last = 0.0
    for t in reversed(range(len(buffer))):
        not_done = 1.0 - float(dones[t])
        delta = rewards[t] + gamma * next_value * not_done - values[t]
        last = delta + gamma * gae_lambda * not_done * last
        advantages[t] = last
        next_value = values[t]
    buffer.advantages = advantages
    buffer.returns = advantages + values


def normalize_advantages(advantages: np.ndarray) -> np.ndarray:
    if advantages.size < 2:
        return advantages
    return (advantages - advantages.mean()) / (advantages.std() + ADV_EPS)


def policy_loss_and_grad(
    logits: np.ndarray,
    actions: np.ndarray,
    old_log_probs: np.ndarray,
    advantages: np.ndarray,
    clip_epsilon: float,
    entropy_coef: float = 0.0,
) -> tuple[float, np.ndarray, dict]:
    """Clipped surrogate loss minus the entropy bonus, and its gradient w.r.t. the logits."""
    m = len(actions)
    log_pi = log_softmax(logits, axis=1)
    pi = np.exp(log_pi)
    new_log_probs = log_pi[np.arange(m), actions]
    ratio = np.exp(new_log_probs - old_log_probs)
    unclipped = ratio * advantages
    clipped = np.clip(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon) * advantages
    entropy = -(pi * log_pi).sum(axis=1)
    loss = -np.minimum(unclipped, clipped).mean() - entropy_coef * entropy.mean()

    # the gradient flows only where the unclipped term is the active minimum
    active = unclipped <= clipped
    d_log_prob = -(advantages * ratio * active) / m
    one_hot = np.zeros_like(logits)
    one_hot[np.arange(m), actions] = 1.0
    d_logits = d_log_prob[:, None] * (one_hot - pi)
    d_logits += (entropy_coef / m) * pi * (log_pi + entropy[:, None])

    info = {
        "entropy": float(entropy.mean()),
        "approx_kl": float(np.mean(old_log_probs - new_log_probs)),
        "clip_fraction": float(np.mean(np.abs(ratio - 1.0) > clip_epsilon)),
        "mean_ratio": float(ratio.mean()),
    }
    return float(loss), d_logits, info


def value_loss_and_grad(values: np.ndarray, returns: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error and its gradient w.r.t. the (M, 1) value outputs."""
    diff = values[:, 0] - returns
    return float(np.mean(diff ** 2)), (2.0 * diff / len(diff))[:, None]


def global_norm(grads: dict[str, np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))


def ppo_update(agent: PpoAgent, buffer: RolloutBuffer, rng: np.random.Generator) -> UpdateStats:
    """n_epochs passes of shuffled minibatches, one Adam step per minibatch.

    Minibatches are evaluated and applied in a fixed order, so the update is
    deterministic given the rng state.
    """
    cfg = agent.cfg
    if buffer.advantages is None or buffer.returns is None:
        raise ValueError("compute_gae must run before ppo_update")
    data = buffer.as_arrays()
    n = len(buffer)
    totals = {"policy_loss": 0.0, "value_loss": 0.0, "entropy": 0.0, "approx_kl": 0.0,
              "clip_fraction": 0.0, "mean_ratio": 0.0, "grad_norm": 0.0}
    count = 0

    for epoch in range(cfg.n_epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.minibatch_size):
            idx = order[start:start + cfg.minibatch_size]
            obs = data["observations"][idx]
            advantages = buffer.advantages[idx]
            if cfg.normalize_advantage:
                advantages = normalize_advantages(advantages)

            policy_supports = [buffer.policy_supports[i] for i in idx] if cfg.reuse_rollout_supports else None
            value_supports = [buffer.value_supports[i] for i in idx] if cfg.reuse_rollout_supports else None
            if policy_supports is not None and any(s is None for s in policy_supports):
                policy_supports = None
            if value_supports is not None and any(s is None for s in value_supports):
                value_supports = None

            logits, p_cache = agent.policy.forward(obs, policy_supports)
            values, v_cache = agent.value.forward(obs, value_supports)
            p_loss, d_logits, info = policy_loss_and_grad(
                logits, data["actions"][idx], data["log_probs"][idx], advantages,
                cfg.clip_epsilon, cfg.entropy_coef,
            )
            v_loss, d_values = value_loss_and_grad(values, buffer.returns[idx])
            total = p_loss + cfg.value_coef * v_loss

            grads = {f"policy.{k}": g for k, g in agent.policy.backward(p_cache, d_logits).items()}
            grads.update({f"value.{k}": g for k, g in agent.value.backward(v_cache, cfg.value_coef * d_values).items()})
            norm = global_norm(grads)

            if not (np.isfinite(total) and np.isfinite(norm)):
                diagnostics = {
                    "epoch": epoch,
                    "minibatch_start": start,
                    "policy_loss": p_loss,
                    "value_loss": v_loss,
                    "grad_norm": norm,
                    "max_abs_logit": float(np.nanmax(np.abs(logits))) if np.isfinite(logits).any() else float("nan"),
                    "max_abs_value": float(np.nanmax(np.abs(values))) if np.isfinite(values).any() else float("nan"),
                }
                logger.error("Non-finite PPO loss: %s", diagnostics)
                raise NumericalAbortError("PPO loss or gradient is not finite", diagnostics)

            if norm > cfg.max_grad_norm:
                scale = cfg.max_grad_norm / (norm + 1e-6)
                grads = {k: g * scale for k, g in grads.items()}
            agent.optimizer.step(grads)

            totals["policy_loss"] += p_loss
            totals["value_loss"] += v_loss
            totals["grad_norm"] += norm
            for key in ("entropy", "approx_kl", "clip_fraction", "mean_ratio"):
                totals[key] += info[key]
            count += 1

    stats = UpdateStats(**{k: v / count for k, v in totals.items()}, minibatches=count)
    logger.debug("PPO update: %s", stats)
    return stats
