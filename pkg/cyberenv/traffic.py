"""Benign (green) traffic demand per link and timestep."""

import math
from typing import Generator

import numpy as np

from cyberenv.spec import GreenPattern, NetworkSpec


def generate_green_demand(
    link_id: str,
    pattern: GreenPattern,
    episode_length: int,
) -> Generator[dict, None, None]:
    """
    Generate one demand reading per timestep for a link.

    Uses a sine wave over the episode, like a working day compressed into it:
    - Peak at `peak_at` (fraction of the episode)
    - Trough half an episode away
    - Clipped at zero

    Explicit `loads` replace the sine and repeat if shorter than the episode.
    """
    for t in range(episode_length):
        if pattern.loads is not None:
            demand = pattern.loads[t % len(pattern.loads)]
        else:
            # shift so the cosine peaks at peak_at
            phase = (t / episode_length - pattern.peak_at) * 2 * math.pi
            demand = max(0.0, pattern.base + pattern.amplitude * math.cos(phase))
        yield {
            "link_id": link_id,
            "timestep": t,
            "demand": float(demand),
        }


# Named demand shapes for the built-in networks
GREEN_PROFILES = {
    # user traffic from the PCs peaks mid-episode
    "office": GreenPattern(base=0.4, amplitude=0.2, peak_at=0.5),
    # core switch traffic stays busy with a late peak
    "backbone": GreenPattern(base=0.5, amplitude=0.1, peak_at=0.7),
    # server uplinks peak early (start-of-day syncs)
    "server": GreenPattern(base=0.3, amplitude=0.2, peak_at=0.25),
}


def demand_table(spec: NetworkSpec) -> np.ndarray:
    """(episode_length, n_links) demand array; links without a pattern carry none."""
    table = np.zeros((spec.episode_length, len(spec.links)))
    for j, link in enumerate(spec.links):
        pattern = spec.green_traffic.get(link.id)
        if pattern is None:
            continue
        for reading in generate_green_demand(link.id, pattern, spec.episode_length):
            table[reading["timestep"], j] = reading["demand"]
    return table
