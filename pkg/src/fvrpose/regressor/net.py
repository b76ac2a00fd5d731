"""A small dense network with hand-written backprop and Adam."""

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidInputError, TrainingDivergedError

LEAKY_SLOPE = 0.01


@dataclass
class Layer:
    w: np.ndarray  # (fan_in, fan_out)
    b: np.ndarray  # (fan_out,)
    activation: str = "linear"  # "linear" | "leaky_relu"


@dataclass
class DenseNet:
    layers: list
    seed: int | None = None

    def __post_init__(self):
        for a, b in zip(self.layers[:-1], self.layers[1:]):
            if a.w.shape[1] != b.w.shape[0]:
                raise InvalidInputError("consecutive layer dimensions do not match")

    @property
    def in_dim(self):
        return self.layers[0].w.shape[0]

    @property
    def out_dim(self):
        return self.layers[-1].w.shape[1]

    @property
    def n_params(self):
        return sum(l.w.size + l.b.size for l in self.layers)

    def params(self):
        out = []
        for l in self.layers:
            out += [l.w, l.b]
        return out

    def with_params(self, params):
        layers = [Layer(params[2 * i], params[2 * i + 1], l.activation) for i, l in enumerate(self.layers)]
        return DenseNet(layers, self.seed)


def init_net(sizes, seed, hidden_activation="leaky_relu"):
    """Glorot-uniform weights, zero biases; the last layer is linear."""
    rng = np.random.default_rng(seed)
    layers = []
    for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        lim = np.sqrt(6.0 / (fan_in + fan_out))
        act = "linear" if i == len(sizes) - 2 else hidden_activation
        layers.append(Layer(rng.uniform(-lim, lim, (fan_in, fan_out)), np.zeros(fan_out), act))
    return DenseNet(layers, seed)


def _act(z, kind):
    if kind == "leaky_relu":
        return np.where(z > 0, z, LEAKY_SLOPE * z)
    return z


def _act_grad(z, kind):
    if kind == "leaky_relu":
        return np.where(z > 0, 1.0, LEAKY_SLOPE)
    return np.ones_like(z)


def forward(net, x, return_cache=False):
    """Forward pass for one input vector or a ``(batch, in_dim)`` array."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != net.in_dim:
        raise InvalidInputError(f"input has {x.shape[-1]} features, net expects {net.in_dim}")
    single = x.ndim == 1
    h = np.atleast_2d(x)
    cache = []
    for layer in net.layers:
        z = h @ layer.w + layer.b
        cache.append((h, z))
        h = _act(z, layer.activation)
    out = h[0] if single else h
    return (out, cache) if return_cache else out


def backward(net, x, upstream, cache=None):
    """Parameter gradients ``[dW0, db0, dW1, db1, ...]`` given dLoss/dOutput."""
    if cache is None:
        _, cache = forward(net, x, return_cache=True)
    g = np.atleast_2d(np.asarray(upstream, dtype=float))
    if g.shape != (cache[-1][1].shape[0], net.out_dim):
        raise InvalidInputError("upstream gradient shape does not match the output")
    grads = [None] * (2 * len(net.layers))
    for i in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[i]
        h, z = cache[i]
        g = g * _act_grad(z, layer.activation)
        grads[2 * i] = h.T @ g
        grads[2 * i + 1] = g.sum(axis=0)
        if i:
            g = g @ layer.w.T
    return grads


@dataclass
class AdamState:
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params):
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params])


def adam_step(params, grads, state, lr):
    """One bias-corrected Adam update. Returns ``(new_params, new_state)``."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise InvalidInputError("params, grads and state lengths differ")
    if not all(np.all(np.isfinite(g)) for g in grads):
        raise TrainingDivergedError("non-finite gradient")
    b1, b2 = state.beta1, state.beta2
    t = state.t + 1
    m = [b1 * mi + (1 - b1) * g for mi, g in zip(state.m, grads)]
    v = [b2 * vi + (1 - b2) * g * g for vi, g in zip(state.v, grads)]
    c1 = 1 - b1**t
    c2 = 1 - b2**t
    new = [p - lr * (mi / c1) / (np.sqrt(vi / c2) + state.eps) for p, mi, vi in zip(params, m, v)]
    return new, AdamState(m, v, t, b1, b2, state.eps)
