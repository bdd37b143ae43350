"""Built-in network scenarios."""

import logging
from pathlib import Path

from cyberenv.spec import (
    EnvError,
    LinkSpec,
    NetworkSpec,
    NodeSpec,
    RandomRedAgent,
    RedEvent,
    action_space_size,
    load_network_spec,
    observation_size,
)
from cyberenv.traffic import GREEN_PROFILES

logger = logging.getLogger(__name__)


def create_nodes() -> list[NodeSpec]:
    """Two PCs, three switches and one server."""
    nodes = [
        # Endpoints on the access switch
        {"id": "pc_1", "kind": "pc"},
        {"id": "pc_2", "kind": "pc"},
        # Access switch plus two redundant distribution switches
        {"id": "switch_1", "kind": "switch"},
        {"id": "switch_2", "kind": "switch"},
        {"id": "switch_3", "kind": "switch"},
        # The service everyone is trying to reach
        {"id": "server", "kind": "server"},
    ]
    return [NodeSpec(**n) for n in nodes]


def create_links() -> list[LinkSpec]:
    """Seven links; the server is reachable over two switch paths."""
    links = [
        {"id": "pc_1-switch_1", "endpoints": ("pc_1", "switch_1")},
        {"id": "pc_2-switch_1", "endpoints": ("pc_2", "switch_1")},
        {"id": "switch_1-switch_2", "endpoints": ("switch_1", "switch_2")},
        {"id": "switch_1-switch_3", "endpoints": ("switch_1", "switch_3")},
        {"id": "switch_2-switch_3", "endpoints": ("switch_2", "switch_3")},
        {"id": "switch_2-server", "endpoints": ("switch_2", "server")},
        {"id": "switch_3-server", "endpoints": ("switch_3", "server")},
    ]
    return [LinkSpec(capacity=1.0, **link) for link in links]


def create_green_traffic() -> dict:
    """PC uplinks follow the office profile, core links the backbone, server links the server profile."""
    profiles = {
        "pc_1-switch_1": "office",
        "pc_2-switch_1": "office",
        "switch_1-switch_2": "backbone",
        "switch_1-switch_3": "backbone",
        "switch_2-switch_3": "backbone",
        "switch_2-server": "server",
        "switch_3-server": "server",
    }
    return {link_id: GREEN_PROFILES[name] for link_id, name in profiles.items()}


def create_red_schedule(success_probability: float = 1.0) -> list[RedEvent]:
    """A PC intrusion, a DDoS burst on both server links, a second intrusion, then a repeat burst."""
    events = [
        (3, "pc_1", "compromise"),
        (8, "switch_2-server", "ddos"),
        (9, "switch_3-server", "ddos"),
        (15, "pc_2", "compromise"),
        (20, "switch_2-server", "ddos"),
        (21, "switch_3-server", "ddos"),
    ]
    return [
        RedEvent(timestep=t, target=target, kind=kind, success_probability=success_probability)
        for t, target, kind in events
    ]


def build_default_network(random_red_agent: bool = True, episode_length: int = 30, scan_load: float = 0.7) -> NetworkSpec:
    """The six-node scenario; without the random agent every event is scheduled and certain.

    Red scans each target the step before attacking it, at 0.7 of link capacity
    by default, which lifts the target links into the high load band.
    """
    agents = []
    if random_red_agent:
        agents.append(RandomRedAgent(candidates=["pc_1", "pc_2", "server"], onset_min=5, onset_max=20,
                                     repeat_every=6, success_probability=0.5))
    return NetworkSpec(
        name="default" if random_red_agent else "default_deterministic",
        nodes=create_nodes(),
        links=create_links(),
        green_traffic=create_green_traffic(),
        red_schedule=create_red_schedule(),
        random_red_agents=agents,
        episode_length=episode_length,
        scan_load=scan_load,
    )


NAMED_SPECS = {
    "default": lambda: build_default_network(random_red_agent=True),
    "default_deterministic": lambda: build_default_network(random_red_agent=False),
}


def get_network_spec(ref: str) -> NetworkSpec:
    """Resolve a named spec or a path to a YAML spec file."""
    if ref in NAMED_SPECS:
        return NAMED_SPECS[ref]()
    if Path(ref).suffix in (".yaml", ".yml"):
        return load_network_spec(ref)
    raise EnvError(f"Unknown network spec {ref!r}: expected one of {sorted(NAMED_SPECS)} or a .yaml path")


def summarize_spec(spec: NetworkSpec) -> str:
    """Human-readable summary of a network spec."""
    lines = [f"--- Network {spec.name} ---"]
    kinds = {}
    for node in spec.nodes:
        kinds.setdefault(node.kind, []).append(node.id)
    for kind, ids in sorted(kinds.items()):
        lines.append(f"{kind}: {', '.join(ids)}")
    lines.append(f"Links: {len(spec.links)}")
    for link in spec.links:
        lines.append(f"  {link.id}: {link.endpoints[0]} <-> {link.endpoints[1]} (capacity {link.capacity:g})")
    lines.append(f"Scheduled red events: {len(spec.red_schedule)}")
    for event in spec.red_schedule:
        lines.append(f"  t={event.timestep}: {event.kind} {event.target} (p={event.success_probability:g})")
    lines.append(f"Random red agents: {len(spec.random_red_agents)}")
    lines.append(f"Episode length: {spec.episode_length}")
    if spec.scan_load:
        lines.append(f"Pre-attack scan load: {spec.scan_load:g} of capacity")
    lines.append(f"Action space: {action_space_size(spec)}, observation bits: {observation_size(spec)}")
    return "\n".join(lines)
