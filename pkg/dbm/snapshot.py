"""Save and load DBM weight snapshots as JSON.

Floats are written with Python's shortest round-trip repr, so a save/load
cycle reproduces every parameter bit for bit.
"""

import json
from pathlib import Path

import numpy as np

from dbm.energy_model import DbmTopology, DbmWeights

SNAPSHOT_FORMAT_VERSION = 1


def weights_to_record(topo: DbmTopology, weights: DbmWeights) -> dict:
    """Flat record: topology sizes, offset, biases in unit order, couplings keyed by "i,j"."""
    couplings = {f"{i},{j}": float(weights.couplings[i, j]) for i, j in topo.edges()}
    return {
        "format_version": SNAPSHOT_FORMAT_VERSION,
        "topology": {
            "n_state": topo.n_state,
            "n_action": topo.n_action,
            "hidden_layers": list(topo.hidden_layers),
        },
        "unit_order": "state,hidden_layers,action",
        "offset": float(weights.offset),
        "beta": float(weights.beta),
        "biases": [float(b) for b in weights.biases],
        "couplings": couplings,
    }


def weights_from_record(record: dict) -> tuple[DbmTopology, DbmWeights]:
    version = record.get("format_version")
    if version != SNAPSHOT_FORMAT_VERSION:
        raise ValueError(f"Unsupported snapshot format version: {version}")
    t = record["topology"]
    topo = DbmTopology(n_state=t["n_state"], n_action=t["n_action"], hidden_layers=tuple(t["hidden_layers"]))

    couplings = np.zeros((topo.n_units, topo.n_units))
    for key, value in record["couplings"].items():
        i, j = (int(part) for part in key.split(","))
        couplings[i, j] = value
    weights = DbmWeights(
        offset=float(record["offset"]),
        biases=np.asarray(record["biases"], dtype=np.float64),
        couplings=couplings,
        beta=float(record["beta"]),
    )
    return topo, weights.validate(topo)


def save_weights(path: str | Path, topo: DbmTopology, weights: DbmWeights) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(weights_to_record(topo, weights), indent=2))
    return path


def load_weights(path: str | Path) -> tuple[DbmTopology, DbmWeights]:
    return weights_from_record(json.loads(Path(path).read_text()))
