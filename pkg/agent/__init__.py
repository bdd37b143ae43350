from .mlp import MlpHead, init_mlp, mlp_forward, mlp_backward
from .adam import Adam, AdamState, adam_step
from .buffer import RolloutBuffer
from .heads import MlpPolicyHead, MlpValueHead, DbmPolicyHead, DbmValueHead, build_head
from .ppo import (
    PpoConfig,
    PpoAgent,
    UpdateStats,
    NumericalAbortError,
    collect_rollout,
    compute_gae,
    ppo_update,
)
from .checkpoint import CheckpointError, save_checkpoint, load_checkpoint

__all__ = [
    "MlpHead",
    "init_mlp",
    "mlp_forward",
    "mlp_backward",
    "Adam",
    "AdamState",
    "adam_step",
    "RolloutBuffer",
    "MlpPolicyHead",
    "MlpValueHead",
    "DbmPolicyHead",
    "DbmValueHead",
    "build_head",
    "PpoConfig",
    "PpoAgent",
    "UpdateStats",
    "NumericalAbortError",
    "collect_rollout",
    "compute_gae",
    "ppo_update",
    "CheckpointError",
    "save_checkpoint",
    "load_checkpoint",
]
