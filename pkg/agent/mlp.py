"""Feed-forward network with exact backprop, used for the baseline PPO heads."""

from dataclasses import dataclass, field

import numpy as np

from dbm.energy_model import DimensionError

DEFAULT_HIDDEN = (64, 64)

ACTIVATIONS = {
    "tanh": (np.tanh, lambda y: 1.0 - y * y),
    "relu": (lambda x: np.maximum(x, 0.0), lambda y: (y > 0).astype(np.float64)),
    "linear": (lambda x: x, lambda y: np.ones_like(y)),
}


@dataclass
class MlpHead:
    """Affine-activation chain; the last layer is affine only.

    `sizes` runs from input to output, e.g. (n_obs, 64, 64, n_actions).
    Derivatives of the activations are expressed through their outputs.
    """
    sizes: tuple[int, ...]
    weights: list[np.ndarray] = field(default_factory=list)
    biases: list[np.ndarray] = field(default_factory=list)
    activation: str = "tanh"

    def __post_init__(self):
        self.sizes = tuple(int(s) for s in self.sizes)
        if len(self.sizes) < 2 or any(s < 1 for s in self.sizes):
            raise ValueError(f"MLP needs an input and an output size, got {self.sizes}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"Unknown activation: {self.activation!r} (expected one of {list(ACTIVATIONS)})")
        if len(self.weights) != len(self.sizes) - 1 or len(self.biases) != len(self.sizes) - 1:
            raise DimensionError(f"{len(self.weights)} weight matrices for {len(self.sizes) - 1} layers")
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (self.sizes[k], self.sizes[k + 1]) or b.shape != (self.sizes[k + 1],):
                raise DimensionError(
                    f"layer {k}: W{w.shape} b{b.shape}, expected W{(self.sizes[k], self.sizes[k + 1])}"
                )

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def parameters(self) -> dict[str, np.ndarray]:
        params = {}
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            params[f"W{k}"] = w
            params[f"b{k}"] = b
        return params


def init_mlp(
    sizes,
    rng_seed,
    activation: str = "tanh",
    output_gain: float = 1.0,
) -> MlpHead:
    """Orthogonal weights (gain sqrt(2) on hidden layers, `output_gain` on the last), zero biases."""
    rng = np.random.default_rng(rng_seed)
    sizes = tuple(int(s) for s in sizes)
    weights, biases = [], []
    for k, (fan_in, fan_out) in enumerate(zip(sizes, sizes[1:])):
        gain = output_gain if k == len(sizes) - 2 else np.sqrt(2.0)
        a = rng.standard_normal((max(fan_in, fan_out), min(fan_in, fan_out)))
        q, r = np.linalg.qr(a)
        q *= np.sign(np.diag(r))
        w = q if fan_in >= fan_out else q.T
        weights.append(gain * w[:fan_in, :fan_out])
        biases.append(np.zeros(fan_out))
    return MlpHead(sizes=sizes, weights=weights, biases=biases, activation=activation)


def mlp_forward(head: MlpHead, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Returns the output and the per-layer activations needed by mlp_backward."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != head.sizes[0]:
        raise DimensionError(f"input has shape {x.shape}, expected last dimension {head.sizes[0]}")
    act, _ = ACTIVATIONS[head.activation]
    activations = [np.atleast_2d(x)]
    y = activations[0]
    for k, (w, b) in enumerate(zip(head.weights, head.biases)):
        y = y @ w + b
        if k < head.n_layers - 1:
            y = act(y)
        activations.append(y)
    out = y if x.ndim == 2 else y[0]
    return out, activations


def mlp_backward(head: MlpHead, cache: list[np.ndarray], d_out: np.ndarray) -> dict[str, np.ndarray]:
    """Gradient of a scalar loss given dLoss/dOutput, keyed like MlpHead.parameters()."""
    _, d_act = ACTIVATIONS[head.activation]
    delta = np.atleast_2d(np.asarray(d_out, dtype=np.float64))
    if delta.shape != cache[-1].shape:
        raise DimensionError(f"output gradient has shape {delta.shape}, expected {cache[-1].shape}")
    grads = {}
    for k in reversed(range(head.n_layers)):
        grads[f"W{k}"] = cache[k].T @ delta
        grads[f"b{k}"] = delta.sum(axis=0)
        if k > 0:
            delta = (delta @ head.weights[k].T) * d_act(cache[k])
    return grads
