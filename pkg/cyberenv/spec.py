"""Network scenario description: nodes, links, traffic, attacks and reward weights."""

from pathlib import Path
from typing import Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

NodeKind = Literal["pc", "server", "switch"]
NodeStatus = Literal["healthy", "compromised", "patching"]
AttackKind = Literal["compromise", "ddos"]

NODE_STATUSES: tuple[str, ...] = ("healthy", "compromised", "patching")
LOAD_BANDS: tuple[str, ...] = ("low", "medium", "high")


class EnvError(ValueError):
    """Raised for an invalid network spec, an out-of-range action, or stepping a finished episode."""
    pass


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class NodeSpec(_Strict):
    id: str
    kind: NodeKind
    initial_status: Literal["healthy", "compromised"] = "healthy"


class LinkSpec(_Strict):
    id: str
    endpoints: tuple[str, str]
    capacity: float = Field(default=1.0, gt=0)


class GreenPattern(_Strict):
    """Benign demand on one link: a sine over the episode, or explicit per-step loads (cycled)."""
    base: float = Field(default=0.4, ge=0)
    amplitude: float = Field(default=0.2, ge=0)
    peak_at: float = Field(default=0.5, ge=0, le=1, description="Peak position as a fraction of the episode.")
    loads: list[float] | None = None

    @model_validator(mode="after")
    def _loads_non_negative(self):
        if self.loads is not None and (not self.loads or any(x < 0 for x in self.loads)):
            raise ValueError("explicit green loads must be a non-empty list of non-negative values")
        return self


class RedEvent(_Strict):
    timestep: int = Field(ge=0)
    target: str
    kind: AttackKind = "compromise"
    success_probability: float = Field(default=1.0, ge=0, le=1)


class RandomRedAgent(_Strict):
    """Picks an onset step and a target node at reset, then attacks it every `repeat_every` steps."""
    candidates: list[str] = Field(min_length=1)
    onset_min: int = Field(default=5, ge=0)
    onset_max: int = Field(default=20, ge=0)
    repeat_every: int | None = Field(default=6, ge=1)
    success_probability: float = Field(default=0.5, ge=0, le=1)

    @model_validator(mode="after")
    def _onset_range(self):
        if self.onset_max < self.onset_min:
            raise ValueError(f"onset_max {self.onset_max} < onset_min {self.onset_min}")
        return self


class RewardWeights(_Strict):
    healthy: float = 1.0
    compromised: float = 2.0
    green: float = 1.0
    action: float = 0.1


class NetworkSpec(_Strict):
    name: str = "custom"
    nodes: list[NodeSpec] = Field(min_length=1)
    links: list[LinkSpec] = Field(default_factory=list)
    green_traffic: dict[str, GreenPattern] = Field(default_factory=dict)
    red_schedule: list[RedEvent] = Field(default_factory=list)
    random_red_agents: list[RandomRedAgent] = Field(default_factory=list)
    episode_length: int = Field(default=30, ge=1)
    patch_duration: int = Field(default=2, ge=1)
    flood_duration: int = Field(default=3, ge=1)
    scan_load: float = Field(
        default=0.0,
        ge=0,
        le=1,
        description="Reconnaissance traffic (fraction of capacity) red puts on its target links the step before each attack.",
    )
    reward: RewardWeights = Field(default_factory=RewardWeights)

    @model_validator(mode="after")
    def _references_resolve(self):
        node_ids = [n.id for n in self.nodes]
        link_ids = [link.id for link in self.links]
        if len(set(node_ids)) != len(node_ids):
            raise ValueError(f"duplicate node ids in {node_ids}")
        if len(set(link_ids)) != len(link_ids):
            raise ValueError(f"duplicate link ids in {link_ids}")
        for link in self.links:
            a, b = link.endpoints
            if a not in node_ids or b not in node_ids:
                raise ValueError(f"link {link.id} references unknown node(s) {link.endpoints}")
            if a == b:
                raise ValueError(f"link {link.id} connects {a} to itself")
        for link_id in self.green_traffic:
            if link_id not in link_ids:
                raise ValueError(f"green traffic defined for unknown link {link_id}")
        for event in self.red_schedule:
            targets = node_ids if event.kind == "compromise" else link_ids
            if event.target not in targets:
                raise ValueError(f"{event.kind} event at t={event.timestep} targets unknown {event.target!r}")
        for agent in self.random_red_agents:
            unknown = [c for c in agent.candidates if c not in node_ids]
            if unknown:
                raise ValueError(f"random red agent candidates {unknown} are not nodes")
        return self

    @property
    def node_ids(self) -> list[str]:
        return [n.id for n in self.nodes]

    @property
    def link_ids(self) -> list[str]:
        return [link.id for link in self.links]


def action_space_size(spec: NetworkSpec) -> int:
    """no-op + patch per node + block and unblock per link."""
    return 1 + len(spec.nodes) + 2 * len(spec.links)


def observation_size(spec: NetworkSpec) -> int:
    """3-bit status one-hot per node, blocked bit + 3-bit load band per link."""
    return len(NODE_STATUSES) * len(spec.nodes) + (1 + len(LOAD_BANDS)) * len(spec.links)


def load_network_spec(path: str | Path) -> NetworkSpec:
    path = Path(path)
    if not path.exists():
        raise EnvError(f"Network spec file not found: {path}")
    try:
        return NetworkSpec.model_validate(yaml.safe_load(path.read_text()) or {})
    except (ValidationError, yaml.YAMLError) as e:
        raise EnvError(f"Invalid network spec {path}: {e}") from e
