from .spec import (
    EnvError,
    NetworkSpec,
    NodeSpec,
    LinkSpec,
    GreenPattern,
    RedEvent,
    RandomRedAgent,
    RewardWeights,
    action_space_size,
    observation_size,
    load_network_spec,
)
from .network import NAMED_SPECS, build_default_network, get_network_spec, summarize_spec
from .env import CyberDefenseEnv
from .policies import NoOpPolicy, PerfectDefensePolicy, run_episode

__all__ = [
    "EnvError",
    "NetworkSpec",
    "NodeSpec",
    "LinkSpec",
    "GreenPattern",
    "RedEvent",
    "RandomRedAgent",
    "RewardWeights",
    "action_space_size",
    "observation_size",
    "load_network_spec",
    "NAMED_SPECS",
    "build_default_network",
    "get_network_spec",
    "summarize_spec",
    "CyberDefenseEnv",
    "NoOpPolicy",
    "PerfectDefensePolicy",
    "run_episode",
]
