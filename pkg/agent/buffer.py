"""Per-timestep rollout storage for PPO."""

from dataclasses import dataclass, field

import numpy as np

from dbm.sampling import SampleSet


@dataclass
class RolloutBuffer:
    """Observations, actions, log-probs, rewards, values and done flags, one entry per step.

    Advantages and returns stay None until compute_gae fills them. When the
    DBM heads run with reuse_rollout_supports the sample supports drawn at
    rollout time are kept alongside (None for MLP heads).
    """
    observations: list[np.ndarray] = field(default_factory=list)
    actions: list[int] = field(default_factory=list)
    log_probs: list[float] = field(default_factory=list)
    rewards: list[float] = field(default_factory=list)
    values: list[float] = field(default_factory=list)
    dones: list[bool] = field(default_factory=list)
    policy_supports: list[SampleSet | None] = field(default_factory=list)
    value_supports: list[SampleSet | None] = field(default_factory=list)

    advantages: np.ndarray | None = None
    returns: np.ndarray | None = None
    bootstrap_value: float = 0.0

    # completed-episode bookkeeping
    episode_rewards: list[float] = field(default_factory=list)
    episode_lengths: list[int] = field(default_factory=list)

    def add(
        self,
        obs: np.ndarray,
        action: int,
        log_prob: float,
        reward: float,
        value: float,
        done: bool,
        policy_support: SampleSet | None = None,
        value_support: SampleSet | None = None,
    ) -> None:
        if not np.isfinite(log_prob):
            raise ValueError(f"non-finite log-probability {log_prob} for action {action}")
        self.observations.append(np.asarray(obs, dtype=np.int8))
        self.actions.append(int(action))
        self.log_probs.append(float(log_prob))
        self.rewards.append(float(reward))
        self.values.append(float(value))
        self.dones.append(bool(done))
        self.policy_supports.append(policy_support)
        self.value_supports.append(value_support)

    def __len__(self) -> int:
        return len(self.actions)

    def as_arrays(self) -> dict[str, np.ndarray]:
        return {
            "observations": np.array(self.observations, dtype=np.int8).reshape(len(self), -1),
            "actions": np.array(self.actions, dtype=np.int64),
            "log_probs": np.array(self.log_probs, dtype=np.float64),
            "rewards": np.array(self.rewards, dtype=np.float64),
            "values": np.array(self.values, dtype=np.float64),
            "dones": np.array(self.dones, dtype=bool),
        }
