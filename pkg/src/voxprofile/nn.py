"""Dense layers with analytically coded gradients over float64 matrices.

The substrate for every trainable model in the package. Forward passes cache
their pre-activations; backward passes consume the cache and return gradients
that the finite-difference suite in tests verifies. All public operations
validate shapes and reject non-finite results.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from voxprofile import backend
from voxprofile.errors import ContractError, NumericError, ShapeError

ACTIVATIONS = {
    "identity": backend.IDENTITY,
    "tanh": backend.TANH,
    "relu": backend.RELU,
    "softplus": backend.SOFTPLUS,
}


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a C-contiguous float64 2-D array or raise ShapeError."""
    arr = np.ascontiguousarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {arr.shape}")
    return arr


def as_vector(a, name: str = "vector") -> np.ndarray:
    arr = np.ascontiguousarray(a, dtype=np.float64)
    if arr.ndim != 1:
        raise ShapeError(f"{name} must be 1-D, got shape {arr.shape}")
    return arr


def check_finite(arr: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"{what} contains non-finite values")
    return arr


def matmul(a, b) -> np.ndarray:
    """Matrix product with shape validation and a finiteness guard."""
    a = as_matrix(a, "left operand")
    b = as_matrix(b, "right operand")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}: inner dims differ")
    return check_finite(backend.matmul(a, b), "matmul result")


def glorot_uniform(fan_out: int, fan_in: int, rng: np.random.Generator) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))


@dataclass
class DenseLayer:
    """Affine map plus activation: y = act(W x + b), W is (out, in)."""

    weights: np.ndarray
    bias: np.ndarray
    activation: str = "identity"

    def __post_init__(self):
        self.weights = as_matrix(self.weights, "weights")
        self.bias = as_vector(self.bias, "bias")
        if self.bias.shape[0] != self.weights.shape[0]:
            raise ShapeError(
                f"bias length {self.bias.shape[0]} != weight rows {self.weights.shape[0]}"
            )
        if self.activation not in ACTIVATIONS:
            raise ShapeError(f"unknown activation {self.activation!r}")

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


def init_dense(
    in_dim: int, out_dim: int, activation: str, rng: np.random.Generator
) -> DenseLayer:
    """Glorot-uniform weights, zero bias."""
    return DenseLayer(
        weights=glorot_uniform(out_dim, in_dim, rng),
        bias=np.zeros(out_dim),
        activation=activation,
    )


@dataclass
class LayerCache:
    """Forward-pass record consumed exactly once by layer_backward."""

    layer_ref: int
    x: np.ndarray
    pre: np.ndarray
    y: np.ndarray
    was_vector: bool


def layer_forward(layer: DenseLayer, x) -> tuple[np.ndarray, LayerCache]:
    """Apply the layer to a vector or a batch of row vectors.

    Returns (y, cache); y has the same ndim as x. The cache feeds
    layer_backward and must come from this exact layer.
    """
    arr = np.ascontiguousarray(x, dtype=np.float64)
    was_vector = arr.ndim == 1
    if was_vector:
        arr = arr[None, :]
    elif arr.ndim != 2:
        raise ShapeError(f"layer input must be 1-D or 2-D, got shape {arr.shape}")
    if arr.shape[1] != layer.in_dim:
        raise ShapeError(
            f"layer expects input dim {layer.in_dim}, got {arr.shape[1]}"
        )
    y, pre = backend.dense_forward(
        arr, layer.weights, layer.bias, ACTIVATIONS[layer.activation]
    )
    check_finite(y, "layer output")
    cache = LayerCache(layer_ref=id(layer), x=arr, pre=pre, y=y, was_vector=was_vector)
    return (y[0] if was_vector else y), cache


def layer_backward(
    layer: DenseLayer, cache: LayerCache, upstream
) -> tuple[np.ndarray, tuple[np.ndarray, np.ndarray]]:
    """Chain rule through the layer; returns (input_grad, (dW, db))."""
    if cache.layer_ref != id(layer):
        raise ContractError("cache does not belong to this layer")
    dy = np.ascontiguousarray(upstream, dtype=np.float64)
    if cache.was_vector:
        if dy.ndim != 1:
            raise ContractError("forward saw a vector; upstream grad must be 1-D")
        dy = dy[None, :]
    if dy.shape != cache.pre.shape:
        raise ContractError(
            f"upstream grad shape {dy.shape} does not match cached shape {cache.pre.shape}"
        )
    dx, dw, db = backend.dense_backward(
        cache.x, layer.weights, cache.pre, cache.y, ACTIVATIONS[layer.activation], dy
    )
    return (dx[0] if cache.was_vector else dx), (dw, db)


class GradientTape:
    """Gradient buffers whose shapes mirror a named parameter set."""

    def __init__(self, params: dict[str, np.ndarray]):
        self._bufs = {name: np.zeros_like(arr) for name, arr in params.items()}

    def zero(self) -> None:
        for buf in self._bufs.values():
            buf[...] = 0.0

    def add(self, name: str, value: np.ndarray) -> None:
        buf = self._bufs[name]
        if buf.shape != np.shape(value):
            raise ShapeError(
                f"gradient for {name!r} has shape {np.shape(value)}, expected {buf.shape}"
            )
        buf += value

    def scale(self, factor: float) -> None:
        for buf in self._bufs.values():
            buf *= factor

    def __getitem__(self, name: str) -> np.ndarray:
        return self._bufs[name]

    def __contains__(self, name: str) -> bool:
        return name in self._bufs

    def items(self):
        return self._bufs.items()


def mlp_forward(
    layers: list[DenseLayer], x: np.ndarray
) -> tuple[np.ndarray, list[LayerCache]]:
    """Run a batch through a stack of layers, caching every step."""
    caches = []
    h = x
    for layer in layers:
        h, cache = layer_forward(layer, h)
        caches.append(cache)
    return h, caches


def mlp_backward(
    layers: list[DenseLayer],
    caches: list[LayerCache],
    dy: np.ndarray,
    tape: GradientTape,
    prefix: str,
) -> np.ndarray:
    """Backprop a stack, accumulating dW/db into tape under prefix.{i}.W/b."""
    grad = dy
    for i in range(len(layers) - 1, -1, -1):
        grad, (dw, db) = layer_backward(layers[i], caches[i], grad)
        tape.add(f"{prefix}.{i}.W", dw)
        tape.add(f"{prefix}.{i}.b", db)
    return grad


def mlp_param_items(layers: list[DenseLayer], prefix: str):
    for i, layer in enumerate(layers):
        yield f"{prefix}.{i}.W", layer.weights
        yield f"{prefix}.{i}.b", layer.bias
