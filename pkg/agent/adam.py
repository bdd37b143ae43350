"""Adam over a dict of named parameter arrays, updated in place."""

from dataclasses import dataclass, field

import numpy as np

from dbm.energy_model import DimensionError

BETA1 = 0.9
BETA2 = 0.999
EPSILON = 1e-8


@dataclass
class AdamState:
    """First/second moments per parameter name and the step count t."""
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0

    @classmethod
    def zeros_like(cls, params: dict[str, np.ndarray]) -> "AdamState":
        return cls(
            m={k: np.zeros_like(p, dtype=np.float64) for k, p in params.items()},
            v={k: np.zeros_like(p, dtype=np.float64) for k, p in params.items()},
        )


def adam_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray], state: AdamState, lr: float) -> None:
    """One bias-corrected Adam step (beta1 0.9, beta2 0.999, eps 1e-8)."""
    if set(grads) != set(params):
        raise DimensionError(f"gradient keys {sorted(grads)} do not match parameters {sorted(params)}")
    for k, p in params.items():
        if grads[k].shape != p.shape or state.m[k].shape != p.shape or state.v[k].shape != p.shape:
            raise DimensionError(
                f"{k}: param {p.shape}, grad {grads[k].shape}, moments {state.m[k].shape}/{state.v[k].shape}"
            )

    state.t += 1
    bc1 = 1.0 - BETA1 ** state.t
    bc2 = 1.0 - BETA2 ** state.t
    for k, p in params.items():
        g = grads[k]
        state.m[k] *= BETA1
        state.m[k] += (1.0 - BETA1) * g
        state.v[k] *= BETA2
        state.v[k] += (1.0 - BETA2) * (g * g)
        m_hat = state.m[k] / bc1
        v_hat = state.v[k] / bc2
        p -= lr * m_hat / (np.sqrt(v_hat) + EPSILON)


class Adam:
    """Holds the parameter dict and its AdamState together."""

    def __init__(self, params: dict[str, np.ndarray], lr: float):
        if not lr > 0:
            raise ValueError(f"learning rate must be positive, got {lr}")
        self.params = params
        self.lr = lr
        self.state = AdamState.zeros_like(params)

    def step(self, grads: dict[str, np.ndarray]) -> None:
        adam_step(self.params, grads, self.state, self.lr)
