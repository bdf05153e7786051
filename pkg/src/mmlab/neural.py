"""Fully connected ReLU network for the action-value function, written with numpy only.

Checkpoint layout (little-endian)::

    offset  size  field
    0       8     magic b"MMQNET\\x00\\x00"
    8       4     uint32 format version (currently 1)
    12      32    SHA-256 of the ModelParams canonical listing (zeros if unknown)
    44      4     uint32 L, number of layer sizes
    48      4*L   uint32 layer sizes
    ...     8*P   float64 parameters: for each layer, W (out x in, row-major) then b
"""
from __future__ import annotations

import math
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .agents import ActionGrid, GridPolicy
from .env import ModelParams, Observation, observe
from .errors import ConfigError, FormatError, NumericError, VersionError

DEFAULT_LAYERS = (3, 10, 10, 21)
NET_MAGIC = b"MMQNET\x00\x00"
NET_VERSION = 1
_HEADER = struct.Struct("<8sI32sI")


@dataclass
class MLPParams:
    """Weights ``W[i]`` of shape ``(n_out, n_in)`` and biases ``b[i]`` per layer."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.weights[0].shape[1],) + tuple(w.shape[0] for w in self.weights)

    def copy(self) -> "MLPParams":
        return MLPParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def flatten(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b)
        return np.concatenate(parts)

    @classmethod
    def from_flat(cls, layer_sizes, flat: np.ndarray) -> "MLPParams":
        flat = np.asarray(flat, dtype=np.float64)
        if flat.size != param_count(layer_sizes):
            raise ConfigError(f"expected {param_count(layer_sizes)} parameters, got {flat.size}")
        weights, biases, i = [], [], 0
        for n_in, n_out in zip(layer_sizes[:-1], layer_sizes[1:]):
            weights.append(flat[i:i + n_in * n_out].reshape(n_out, n_in).copy())
            i += n_in * n_out
            biases.append(flat[i:i + n_out].copy())
            i += n_out
        return cls(weights, biases)

    @classmethod
    def zeros(cls, layer_sizes=DEFAULT_LAYERS) -> "MLPParams":
        return cls.from_flat(layer_sizes, np.zeros(param_count(layer_sizes)))

    def all_finite(self) -> bool:
        return all(np.isfinite(w).all() for w in self.weights) and all(
            np.isfinite(b).all() for b in self.biases
        )


def param_count(layer_sizes) -> int:
    if isinstance(layer_sizes, MLPParams):
        layer_sizes = layer_sizes.layer_sizes
    return sum(n_in * n_out + n_out for n_in, n_out in zip(layer_sizes[:-1], layer_sizes[1:]))


def init_network(seed: int, layer_sizes=DEFAULT_LAYERS) -> MLPParams:
    """Glorot-uniform weights, zero biases."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for n_in, n_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        bound = math.sqrt(6.0 / (n_in + n_out))
        weights.append(rng.uniform(-bound, bound, size=(n_out, n_in)))
        biases.append(np.zeros(n_out))
    return MLPParams(weights, biases)


def _forward_cache(net: MLPParams, x: np.ndarray):
    pre, post = [], [x]
    h = x
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = w @ h + b
        pre.append(z)
        h = z if i == last else np.maximum(z, 0.0)
        post.append(h)
    return pre, post


def forward(net: MLPParams, x) -> np.ndarray:
    """Action values for one feature vector (ReLU hidden layers, linear head)."""
    h = np.asarray(x, dtype=np.float64)
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        h = w @ h + b
        if i != last:
            h = np.maximum(h, 0.0)
    if not np.isfinite(h).all():
        raise NumericError("non-finite network output")
    return h


def loss_and_grad(net: MLPParams, x, action_index: int, target: float):
    """Squared error on one output and its exact gradient.

    Returns ``(loss, grads)`` where ``grads`` is an :class:`MLPParams` with the
    same shapes as ``net``. Outputs other than ``action_index`` receive no
    gradient.
    """
    if not math.isfinite(target):
        raise NumericError(f"non-finite target {target!r}")
    x = np.asarray(x, dtype=np.float64)
    pre, post = _forward_cache(net, x)
    out = post[-1]
    err = out[action_index] - target
    if not math.isfinite(err):
        raise NumericError("non-finite network output")
    loss = err * err

    n_layers = len(net.weights)
    gw = [None] * n_layers
    gb = [None] * n_layers
    delta = np.zeros_like(out)
    delta[action_index] = 2.0 * err
    for i in range(n_layers - 1, -1, -1):
        gw[i] = np.outer(delta, post[i])
        gb[i] = delta
        if i:
            delta = (net.weights[i].T @ delta) * (pre[i - 1] > 0.0)
    return loss, MLPParams(gw, gb)


def sgd_step(net: MLPParams, grads: MLPParams, lr: float) -> MLPParams:
    """In-place ``p -= lr * grad`` on every parameter; returns ``net``."""
    for w, gw in zip(net.weights, grads.weights):
        w -= lr * gw
    for b, gb in zip(net.biases, grads.biases):
        b -= lr * gb
    if not net.all_finite():
        raise NumericError("non-finite parameter after SGD step")
    return net


def _relative_error(a: float, b: float, floor: float) -> float:
    scale = max(abs(a), abs(b))
    if scale == 0.0:
        return 0.0
    return abs(a - b) / max(scale, floor)


def gradient_check(net: MLPParams, sample, h: float = 1e-5, floor: float = 1e-6) -> float:
    """Largest relative error between analytic and central-difference gradients.

    ``sample`` is ``(x, action_index, target)``. Relative errors use
    ``max(|analytic|, |numeric|, floor)`` as denominator so that vanishing
    gradients are compared on an absolute scale.
    """
    x, action_index, target = sample
    _, grads = loss_and_grad(net, x, action_index, target)
    analytic = grads.flatten()
    flat = net.flatten()
    sizes = net.layer_sizes
    worst = 0.0
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        up = loss_and_grad(MLPParams.from_flat(sizes, flat), x, action_index, target)[0]
        flat[i] = orig - h
        down = loss_and_grad(MLPParams.from_flat(sizes, flat), x, action_index, target)[0]
        flat[i] = orig
        numeric = (up - down) / (2.0 * h)
        worst = max(worst, _relative_error(analytic[i], numeric, floor))
    return worst


def random_check_pair(rng: np.random.Generator, layer_sizes=DEFAULT_LAYERS):
    """A random network and sample for gradient verification."""
    net = init_network(int(rng.integers(2**63)), layer_sizes)
    for b in net.biases:
        b[:] = rng.normal(0.0, 0.1, size=b.shape)
    x = rng.normal(0.0, 1.0, size=layer_sizes[0])
    action = int(rng.integers(layer_sizes[-1]))
    target = float(rng.normal(0.0, 2.0))
    return net, (x, action, target)


def normalize_features(obs: Observation, params: ModelParams) -> np.ndarray:
    scale = params.sigma * math.sqrt(params.T)
    price = (obs.mid_price - params.s0) / scale if scale > 0 else 0.0
    return np.array([price, obs.inventory / 10.0, obs.time_left / params.T])


def save_network(net: MLPParams, path, params_hash: bytes | None = None) -> None:
    sizes = net.layer_sizes
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(NET_MAGIC, NET_VERSION, params_hash or bytes(32), len(sizes)))
        fh.write(struct.pack(f"<{len(sizes)}I", *sizes))
        fh.write(net.flatten().astype("<f8").tobytes())


def read_network(path) -> tuple[MLPParams, bytes | None]:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise FormatError(f"{path}: too short for a network header ({len(data)} bytes)")
    magic, version, phash, n_sizes = _HEADER.unpack_from(data)
    if magic != NET_MAGIC:
        raise FormatError(f"{path}: not a network checkpoint")
    if version != NET_VERSION:
        raise VersionError(f"{path}: network format version {version}, expected {NET_VERSION}")
    off = _HEADER.size
    if n_sizes < 2 or len(data) < off + 4 * n_sizes:
        raise FormatError(f"{path}: truncated layer table")
    sizes = struct.unpack_from(f"<{n_sizes}I", data, off)
    off += 4 * n_sizes
    n_params = param_count(sizes)
    if len(data) - off != 8 * n_params:
        raise FormatError(f"{path}: expected {n_params} parameters, file is truncated or padded")
    flat = np.frombuffer(data, dtype="<f8", offset=off, count=n_params)
    return MLPParams.from_flat(sizes, flat), (None if phash == bytes(32) else phash)


def load_network(path, params: ModelParams | None = None) -> MLPParams:
    """Read a checkpoint; warns if it was trained under different ModelParams."""
    net, phash = read_network(path)
    if params is not None and phash is not None and phash != params.params_hash():
        warnings.warn(
            f"{path}: network was trained with different model parameters", RuntimeWarning, stacklevel=2
        )
    return net


class DeepAgent(GridPolicy):
    """Greedy policy over the outputs of an :class:`MLPParams` network."""

    name = "deep"

    def __init__(self, net: MLPParams, grid: ActionGrid):
        super().__init__(grid)
        self.net = net

    def check_compatible(self, params):
        sizes = self.net.layer_sizes
        if sizes[-1] != self.grid.n_a:
            raise ConfigError(f"network head has {sizes[-1]} outputs but the grid has {self.grid.n_a}")
        if sizes[0] != 3:
            raise ConfigError(f"network expects {sizes[0]} inputs, features have 3")

    def action(self, state, params):
        values = forward(self.net, normalize_features(observe(state, params), params))
        return int(np.argmax(values))
