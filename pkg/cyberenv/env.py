"""Episodic cyber-defense environment.

Within a timestep effects apply in a fixed order: blue action, red events,
green traffic routing, reward, then patch/flood timers count down. With a
non-zero `scan_load`, red scans its targets one step before each attack and
the scan shows up in the load band of the target links.
"""

import logging
from pathlib import Path

import numpy as np
import pandas as pd

from cyberenv.spec import (
    LOAD_BANDS,
    NODE_STATUSES,
    EnvError,
    NetworkSpec,
    action_space_size,
    observation_size,
)
from cyberenv.traffic import demand_table

logger = logging.getLogger(__name__)

HEALTHY, COMPROMISED, PATCHING = range(3)


class CyberDefenseEnv:
    """Blue defends a node/link network against scripted red attacks while green traffic flows.

    Actions: 0 no-op, 1..n patch(node), then block(link) for each link, then
    unblock(link) for each link.
    """

    def __init__(self, spec: NetworkSpec, seed=None, trace: bool = False):
        self.spec = spec
        self.n_nodes = len(spec.nodes)
        self.n_links = len(spec.links)
        self.action_space_size = action_space_size(spec)
        self.observation_size = observation_size(spec)
        self.node_index = {node.id: i for i, node in enumerate(spec.nodes)}
        self.link_index = {link.id: j for j, link in enumerate(spec.links)}
        # second endpoint of each link is the node a ddos lands on
        self._ddos_victim = np.array([self.node_index[link.endpoints[1]] for link in spec.links], dtype=np.int64)
        self._capacity = np.array([link.capacity for link in spec.links], dtype=np.float64)
        self._demand = demand_table(spec)
        self._events_at: dict[int, list] = {}
        for event in spec.red_schedule:
            self._events_at.setdefault(event.timestep, []).append(event)
        self._node_links = [
            np.array([node.id in link.endpoints for link in spec.links], dtype=bool) for node in spec.nodes
        ]
        self._scheduled_scans = np.zeros((spec.episode_length, self.n_links), dtype=bool)
        for event in spec.red_schedule:
            if event.kind == "compromise":
                self._mark_scan(self._scheduled_scans, event.timestep, self._node_links[self.node_index[event.target]])
            else:
                self._mark_scan(self._scheduled_scans, event.timestep, self.link_index[event.target])

        self.rng = np.random.default_rng(seed)
        self.trace_enabled = trace
        self.trace_rows: list[dict] = []
        self.total_steps = 0
        self._started = False
        self._clear_episode()

    def _clear_episode(self) -> None:
        self.status = np.array(
            [COMPROMISED if n.initial_status == "compromised" else HEALTHY for n in self.spec.nodes], dtype=np.int64
        )
        self.patch_timer = np.zeros(self.n_nodes, dtype=np.int64)
        self.blocked = np.zeros(self.n_links, dtype=bool)
        self.flood_timer = np.zeros(self.n_links, dtype=np.int64)
        self.load = np.zeros(self.n_links)
        self.timestep = 0
        self.episode_reward = 0.0
        self.done = False
        self.random_agent_plans: list[tuple[int, int]] = []
        self.scans = self._scheduled_scans.copy()

    # -- episode control -------------------------------------------------

    def reset(self, seed=None) -> np.ndarray:
        if seed is not None:
            self.rng = np.random.default_rng(seed)
        self._clear_episode()
        for agent in self.spec.random_red_agents:
            onset = int(self.rng.integers(agent.onset_min, agent.onset_max + 1))
            target = self.node_index[agent.candidates[int(self.rng.integers(len(agent.candidates)))]]
            self.random_agent_plans.append((onset, target))
        self._add_random_agent_scans()
        if self.n_links:
            self.load = np.minimum(self._demand[0], self._capacity)
        self._started = True
        return self.observation

    @property
    def observation(self) -> np.ndarray:
        if not self._started:
            raise EnvError("reset() must be called before reading an observation")
        obs = np.zeros(self.observation_size, dtype=np.int8)
        width = len(NODE_STATUSES)
        node_bits = obs[: width * self.n_nodes].reshape(self.n_nodes, width)
        node_bits[np.arange(self.n_nodes), self.status] = 1
        link_bits = obs[width * self.n_nodes:].reshape(self.n_links, 1 + len(LOAD_BANDS))
        link_bits[:, 0] = self.blocked
        link_bits[np.arange(self.n_links), 1 + self.load_bands()] = 1
        return obs

    @staticmethod
    def _mark_scan(table: np.ndarray, attack_step: int, links) -> None:
        if 1 <= attack_step < table.shape[0]:
            table[attack_step - 1, links] = True

    def _add_random_agent_scans(self) -> None:
        for step, node_id in self.random_agent_attack_steps():
            self._mark_scan(self.scans, step, self._node_links[self.node_index[node_id]])

    def load_bands(self) -> np.ndarray:
        """0/1/2 for load below one third, below two thirds, or above two thirds of capacity."""
        if not self.n_links:
            return np.zeros(0, dtype=np.int64)
        return np.minimum((self.load / self._capacity * 3).astype(np.int64), 2)

    # -- actions -----------------------------------------------------------

    def action_label(self, action: int) -> str:
        n, m = self.n_nodes, self.n_links
        if not 0 <= action < self.action_space_size:
            raise EnvError(f"action {action} out of range [0, {self.action_space_size})")
        if action == 0:
            return "no-op"
        if action <= n:
            return f"patch:{self.spec.nodes[action - 1].id}"
        if action <= n + m:
            return f"block:{self.spec.links[action - 1 - n].id}"
        return f"unblock:{self.spec.links[action - 1 - n - m].id}"

    def patch_action(self, node_id: str) -> int:
        return 1 + self.node_index[node_id]

    def block_action(self, link_id: str) -> int:
        return 1 + self.n_nodes + self.link_index[link_id]

    def unblock_action(self, link_id: str) -> int:
        return 1 + self.n_nodes + self.n_links + self.link_index[link_id]

    def _apply_blue(self, action: int) -> None:
        n, m = self.n_nodes, self.n_links
        if action == 0:
            return
        if action <= n:
            i = action - 1
            if self.status[i] != PATCHING:
                self.status[i] = PATCHING
                self.patch_timer[i] = self.spec.patch_duration
        elif action <= n + m:
            j = action - 1 - n
            self.blocked[j] = True
            self.flood_timer[j] = 0
        else:
            self.blocked[action - 1 - n - m] = False

    # -- red ---------------------------------------------------------------

    def _compromise(self, node: int) -> bool:
        if self.status[node] == PATCHING:
            return False
        self.status[node] = COMPROMISED
        return True

    def _apply_red(self) -> list[str]:
        fired = []
        for event in self._events_at.get(self.timestep, []):
            # one draw per event whatever its outcome
            if self.rng.random() >= event.success_probability:
                continue
            if event.kind == "compromise":
                if self._compromise(self.node_index[event.target]):
                    fired.append(f"compromise:{event.target}")
            else:
                j = self.link_index[event.target]
                if self.blocked[j]:
                    continue
                self.flood_timer[j] = self.spec.flood_duration
                self._compromise(int(self._ddos_victim[j]))
                fired.append(f"ddos:{event.target}")

        for agent, (onset, target) in zip(self.spec.random_red_agents, self.random_agent_plans):
            due = self.timestep == onset or (
                agent.repeat_every is not None
                and self.timestep > onset
                and (self.timestep - onset) % agent.repeat_every == 0
            )
            if not due:
                continue
            if self.rng.random() < agent.success_probability and self._compromise(target):
                fired.append(f"compromise:{self.spec.nodes[target].id}")
        return fired

    def random_agent_attack_steps(self) -> list[tuple[int, str]]:
        """(timestep, node) pairs the random agents will attempt this episode."""
        steps = []
        for agent, (onset, target) in zip(self.spec.random_red_agents, self.random_agent_plans):
            t = onset
            while t < self.spec.episode_length:
                steps.append((t, self.spec.nodes[target].id))
                if agent.repeat_every is None:
                    break
                t += agent.repeat_every
        return steps

    # -- green and reward ----------------------------------------------------

    def _route_green(self) -> float:
        """Route this step's demand; returns the delivered fraction (1 when nothing is demanded)."""
        if not self.n_links:
            return 1.0
        demand = self._demand[self.timestep]
        attack_load = np.where(self.flood_timer > 0, self._capacity, 0.0)
        delivered = np.where(self.blocked, 0.0, np.minimum(demand, np.maximum(0.0, self._capacity - attack_load)))
        scan = np.where(self.scans[self.timestep], self.spec.scan_load * self._capacity, 0.0)
        self.load = np.where(self.blocked, 0.0, np.minimum(delivered + attack_load + scan, self._capacity))
        total = demand.sum()
        return float(delivered.sum() / total) if total > 0 else 1.0

    def _reward(self, action: int, delivered_fraction: float) -> float:
        w = self.spec.reward
        healthy = int(np.sum(self.status == HEALTHY))
        compromised = int(np.sum(self.status == COMPROMISED))
        return (
            w.healthy * healthy
            - w.compromised * compromised
            + w.green * delivered_fraction
            - w.action * (action != 0)
        )

    def _tick_timers(self) -> None:
        patching = self.status == PATCHING
        self.patch_timer[patching] -= 1
        recovered = patching & (self.patch_timer <= 0)
        self.status[recovered] = HEALTHY
        self.patch_timer[recovered] = 0
        self.flood_timer = np.maximum(self.flood_timer - 1, 0)

    def step(self, action: int) -> tuple[np.ndarray, float, bool]:
        if not self._started:
            raise EnvError("reset() must be called before step()")
        if self.done:
            raise EnvError("episode is done; call reset()")
        action = int(action)
        if not 0 <= action < self.action_space_size:
            raise EnvError(f"action {action} out of range [0, {self.action_space_size})")

        self._apply_blue(action)
        fired = self._apply_red()
        delivered_fraction = self._route_green()
        reward = self._reward(action, delivered_fraction)

        if self.trace_enabled:
            self.trace_rows.append({
                "episode_step": self.timestep,
                "total_step": self.total_steps,
                "action": self.action_label(action),
                "red_events": ";".join(fired),
                "node_statuses": ";".join(
                    f"{node.id}={NODE_STATUSES[s]}" for node, s in zip(self.spec.nodes, self.status)
                ),
                "green_delivered": delivered_fraction,
                "reward": reward,
            })

        self._tick_timers()
        self.timestep += 1
        self.total_steps += 1
        self.episode_reward += reward
        self.done = self.timestep >= self.spec.episode_length
        return self.observation, reward, self.done

    # -- inspection and persistence -----------------------------------------

    def node_status(self, node_id: str) -> str:
        return NODE_STATUSES[self.status[self.node_index[node_id]]]

    def compromised_nodes(self) -> set[str]:
        return {node.id for node, s in zip(self.spec.nodes, self.status) if s == COMPROMISED}

    def write_trace(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        columns = ["episode_step", "total_step", "action", "red_events", "node_statuses", "green_delivered", "reward"]
        pd.DataFrame(self.trace_rows, columns=columns).to_csv(path, index=False)
        return path

    def state_dict(self) -> dict:
        return {
            "status": self.status.tolist(),
            "patch_timer": self.patch_timer.tolist(),
            "blocked": self.blocked.tolist(),
            "flood_timer": self.flood_timer.tolist(),
            "load": self.load.tolist(),
            "timestep": self.timestep,
            "total_steps": self.total_steps,
            "episode_reward": self.episode_reward,
            "done": self.done,
            "started": self._started,
            "random_agent_plans": [list(plan) for plan in self.random_agent_plans],
            "rng_state": self.rng.bit_generator.state,
        }

    def load_state_dict(self, state: dict) -> None:
        self.status = np.array(state["status"], dtype=np.int64)
        self.patch_timer = np.array(state["patch_timer"], dtype=np.int64)
        self.blocked = np.array(state["blocked"], dtype=bool)
        self.flood_timer = np.array(state["flood_timer"], dtype=np.int64)
        self.load = np.array(state["load"], dtype=np.float64)
        self.timestep = int(state["timestep"])
        self.total_steps = int(state["total_steps"])
        self.episode_reward = float(state["episode_reward"])
        self.done = bool(state["done"])
        self._started = bool(state["started"])
        self.random_agent_plans = [(int(a), int(b)) for a, b in state["random_agent_plans"]]
        self.scans = self._scheduled_scans.copy()
        self._add_random_agent_scans()
        self.rng.bit_generator.state = state["rng_state"]
