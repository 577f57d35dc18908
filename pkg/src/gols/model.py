"""Feed-forward network with backpropagation and the hidden-unit sizing rule.

The network is a fully-connected multilayer perceptron over a flat weight
vector: every layer contributes an (in x out) weight block followed by an
out-sized bias block, packed layer by layer. Two output heads are
supported, sigmoid outputs scored by mean squared error and softmax
outputs scored by cross-entropy. Non-finite activations are propagated
(not raised) so that divergent fixed-step training runs remain observable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ACTIVATIONS = ("sigmoid", "tanh", "relu")
HEADS = ("mse", "ce")


@dataclass(frozen=True)
class MlpSpec:
    """Architecture description: [inputs, hidden..., outputs] plus head choice."""

    layer_sizes: tuple
    hidden_activation: str = "sigmoid"
    output_head: str = "mse"

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        if len(sizes) < 2:
            raise ValueError("need at least input and output layers")
        if any(s < 1 for s in sizes):
            raise ValueError("all layer sizes must be >= 1")
        if self.hidden_activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.hidden_activation!r}")
        if self.output_head not in HEADS:
            raise ValueError(f"unknown output head {self.output_head!r}")

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_outputs(self) -> int:
        return self.layer_sizes[-1]


@dataclass
class BatchEval:
    """Loss and gradient of the batch-averaged loss at one weight vector."""

    loss: float
    gradient: np.ndarray
    batch_id: object = None


def param_count(spec: MlpSpec) -> int:
    """Weights plus biases over all layers."""
    sizes = spec.layer_sizes
    return sum((sizes[i] + 1) * sizes[i + 1] for i in range(len(sizes) - 1))


def unpack_layers(spec: MlpSpec, x: np.ndarray):
    """Views of the flat vector as per-layer (W, b) pairs. No copies."""
    if x.shape != (param_count(spec),):
        raise ValueError(
            f"weight vector has length {x.shape}, spec needs ({param_count(spec)},)"
        )
    layers = []
    offset = 0
    sizes = spec.layer_sizes
    for i in range(len(sizes) - 1):
        n_in, n_out = sizes[i], sizes[i + 1]
        w = x[offset : offset + n_in * n_out].reshape(n_in, n_out)
        offset += n_in * n_out
        b = x[offset : offset + n_out]
        offset += n_out
        layers.append((w, b))
    return layers


def _sigmoid(z):
    # split form avoids overflow in exp for large |z|
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _activate(z, kind):
    if kind == "sigmoid":
        return _sigmoid(z)
    if kind == "tanh":
        return np.tanh(z)
    return np.maximum(z, 0.0)


def _activate_grad(z, a, kind):
    # derivative w.r.t. pre-activation, expressed through whichever of
    # (z, a) is cheapest for the given kind
    if kind == "sigmoid":
        return a * (1.0 - a)
    if kind == "tanh":
        return 1.0 - a * a
    return (z > 0).astype(np.float64)


def _forward(spec: MlpSpec, x: np.ndarray, features: np.ndarray):
    layers = unpack_layers(spec, x)
    activations = [features]
    pre = []
    a = features
    for w, b in layers[:-1]:
        z = a @ w + b
        a = _activate(z, spec.hidden_activation)
        pre.append(z)
        activations.append(a)
    w, b = layers[-1]
    z_out = a @ w + b
    return layers, activations, pre, z_out


def _log_softmax(z):
    zmax = np.max(z, axis=1, keepdims=True)
    shifted = z - zmax
    return shifted - np.log(np.sum(np.exp(shifted), axis=1, keepdims=True))


def _head_loss(spec: MlpSpec, z_out, targets):
    """Batch-mean loss and d(loss)/d(z_out) for the configured head."""
    n = z_out.shape[0]
    k = z_out.shape[1]
    with np.errstate(over="ignore", invalid="ignore"):
        if spec.output_head == "mse":
            y = _sigmoid(z_out)
            diff = y - targets
            loss = float(np.sum(diff * diff) / (n * k))
            dz = (2.0 / (n * k)) * diff * y * (1.0 - y)
        else:
            logp = _log_softmax(z_out)
            loss = float(-np.sum(targets * logp) / n)
            dz = (np.exp(logp) - targets) / n
    return loss, dz


def forward_outputs(spec: MlpSpec, x: np.ndarray, features: np.ndarray) -> np.ndarray:
    """Network outputs (post-head nonlinearity) for a batch of inputs."""
    _, _, _, z_out = _forward(spec, x, features)
    if spec.output_head == "mse":
        return _sigmoid(z_out)
    return np.exp(_log_softmax(z_out))


def forward_loss(spec: MlpSpec, x: np.ndarray, features: np.ndarray,
                 targets: np.ndarray) -> float:
    """Batch-averaged loss at weights x.

    ``features`` is (B, D) and ``targets`` is (B, K); the result is the
    mean per-sample loss. MSE is additionally averaged over the K output
    components so magnitudes are comparable across output widths.
    """
    if features.ndim != 2 or features.shape[0] == 0:
        raise ValueError("batch must be a non-empty (B, D) array")
    _, _, _, z_out = _forward(spec, x, features)
    loss, _ = _head_loss(spec, z_out, targets)
    return loss


def backprop_gradient(spec: MlpSpec, x: np.ndarray, features: np.ndarray,
                      targets: np.ndarray, batch_id: object = None) -> BatchEval:
    """Loss and its exact gradient w.r.t. the flat weight vector.

    The gradient of the batch average equals the average of per-sample
    gradients; a batch of duplicated samples therefore reproduces the
    single-sample gradient.
    """
    if features.ndim != 2 or features.shape[0] == 0:
        raise ValueError("batch must be a non-empty (B, D) array")
    layers, activations, pre, z_out = _forward(spec, x, features)
    loss, dz = _head_loss(spec, z_out, targets)

    grad = np.empty_like(x)
    grad_layers = unpack_layers(spec, grad)
    with np.errstate(over="ignore", invalid="ignore"):
        for li in range(len(layers) - 1, -1, -1):
            gw, gb = grad_layers[li]
            a_prev = activations[li]
            np.matmul(a_prev.T, dz, out=gw)
            gb[:] = dz.sum(axis=0)
            if li > 0:
                da = dz @ layers[li][0].T
                dz = da * _activate_grad(pre[li - 1], activations[li],
                                         spec.hidden_activation)
    return BatchEval(loss=loss, gradient=grad, batch_id=batch_id)


def hidden_units_heuristic(m: int, d: int, k: int, cr: float = 1.5) -> int:
    """Single-hidden-layer width from dataset size and dimensions.

    Takes the smaller of a regression-capacity bound floor((M/Cr - K) /
    (D + K + 1)) and the input-derived bound D - 1, clamped below at 1.
    """
    if min(m, d, k) < 1:
        raise ValueError("m, d, k must all be >= 1")
    if not cr > 0:
        raise ValueError("cr must be positive")
    h1 = int(np.floor((m / cr - k) / (d + k + 1)))
    h = min(h1, d - 1)
    return max(h, 1)
