"""Numpy deep-sets regressor ``rho(sum(phi(x)))`` with manual backprop and Adam."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeMismatch


@dataclass
class DenseLayer:
    W: np.ndarray  # (fan_in, fan_out)
    b: np.ndarray  # (fan_out,)

    @classmethod
    def init(cls, fan_in: int, fan_out: int, rng: np.random.Generator) -> "DenseLayer":
        # uniform in +-1/sqrt(fan_in)
        bound = 1.0 / math.sqrt(fan_in)
        return cls(rng.uniform(-bound, bound, (fan_in, fan_out)), rng.uniform(-bound, bound, fan_out))

    @property
    def shape(self) -> tuple[int, int]:
        return self.W.shape


@dataclass
class DeepSetsModel:
    """``phi`` MLP applied per element, summed, then the ``rho`` MLP.

    Every hidden layer (including the latent layer that closes ``phi``) is
    followed by a ReLU; the last ``rho`` layer is linear.
    """

    phi_layers: list[DenseLayer]
    rho_layers: list[DenseLayer]

    def __post_init__(self):
        layers = self.layers
        if self.phi_layers[0].W.shape[0] != 1 or self.rho_layers[-1].W.shape[1] != 1:
            raise ShapeMismatch("phi must take scalars and rho must return scalars")
        for a, b in zip(layers[:-1], layers[1:]):
            if a.W.shape[1] != b.W.shape[0] or a.b.shape != (a.W.shape[1],):
                raise ShapeMismatch(f"layer shapes do not chain: {a.W.shape} -> {b.W.shape}")

    @classmethod
    def init(
        cls,
        latent_dim: int,
        hidden_units: int,
        rng: np.random.Generator,
        phi_depth: int = 3,
        rho_depth: int = 2,
    ) -> "DeepSetsModel":
        phi_sizes = [1] + [hidden_units] * (phi_depth - 1) + [latent_dim]
        rho_sizes = [latent_dim] + [hidden_units] * (rho_depth - 1) + [1]
        phi = [DenseLayer.init(a, b, rng) for a, b in zip(phi_sizes[:-1], phi_sizes[1:])]
        rho = [DenseLayer.init(a, b, rng) for a, b in zip(rho_sizes[:-1], rho_sizes[1:])]
        return cls(phi, rho)

    @property
    def layers(self) -> list[DenseLayer]:
        return self.phi_layers + self.rho_layers

    @property
    def latent_dim(self) -> int:
        return self.phi_layers[-1].W.shape[1]

    def params(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            out += [layer.W, layer.b]
        return out

    def with_params(self, params: list[np.ndarray]) -> "DeepSetsModel":
        if len(params) != 2 * len(self.layers):
            raise ShapeMismatch("wrong number of parameter arrays")
        new = [DenseLayer(params[2 * i], params[2 * i + 1]) for i in range(len(self.layers))]
        n_phi = len(self.phi_layers)
        return DeepSetsModel(new[:n_phi], new[n_phi:])

    def copy(self) -> "DeepSetsModel":
        return self.with_params([p.copy() for p in self.params()])


def _relu(x):
    return np.maximum(x, 0.0)


def forward_batch(model: DeepSetsModel, X: np.ndarray, cache: bool = False):
    """Predictions for a batch ``X`` of shape ``(B, M)``; rows are sets.

    Rows are sorted first so the sum runs in a canonical order and the output
    is bit-identical under any permutation of a row.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ShapeMismatch(f"expected (batch, set_size) input, got shape {X.shape}")
    B, M = X.shape
    X = np.sort(X, axis=1)
    acts = [X.reshape(B * M, 1)]
    pre = []
    h = acts[0]
    for layer in model.phi_layers:
        z = h @ layer.W + layer.b
        pre.append(z)
        h = _relu(z)
        acts.append(h)
    latent = h.reshape(B, M, -1).sum(axis=1)
    h = latent
    acts.append(latent)
    n_rho = len(model.rho_layers)
    for j, layer in enumerate(model.rho_layers):
        z = h @ layer.W + layer.b
        pre.append(z)
        h = _relu(z) if j < n_rho - 1 else z
        acts.append(h)
    out = h[:, 0]
    if cache:
        return out, (B, M, acts, pre)
    return out


def forward(model: DeepSetsModel, X) -> float:
    """Model output for one set."""
    row = np.asarray(list(X), dtype=float).reshape(1, -1)
    return float(forward_batch(model, row)[0])


def mse_and_grads(model: DeepSetsModel, X: np.ndarray, y: np.ndarray):
    """Mean squared error over the batch and its gradient for every parameter."""
    y = np.asarray(y, dtype=float)
    out, (B, M, acts, pre) = forward_batch(model, X, cache=True)
    if y.shape != out.shape:
        raise ShapeMismatch(f"labels have shape {y.shape}, predictions {out.shape}")
    err = out - y
    loss = float(np.mean(err**2))
    n_phi = len(model.phi_layers)
    layers = model.layers
    grads: list = [None] * (2 * len(layers))
    # acts: [x, phi_1..phi_n, latent, rho_1..rho_k]; rho inputs start at acts[n_phi + 1]
    delta = (2.0 / B) * err[:, None]
    for j in range(len(model.rho_layers) - 1, -1, -1):
        li = n_phi + j
        inp = acts[n_phi + 1 + j]
        grads[2 * li] = inp.T @ delta
        grads[2 * li + 1] = delta.sum(axis=0)
        delta = delta @ layers[li].W.T
        if j > 0:
            delta = delta * (pre[li - 1] > 0)
    # through the sum: every element of a set receives its set's gradient
    delta = np.repeat(delta, M, axis=0)
    for li in range(n_phi - 1, -1, -1):
        delta = delta * (pre[li] > 0)
        inp = acts[li]
        grads[2 * li] = inp.T @ delta
        grads[2 * li + 1] = delta.sum(axis=0)
        if li > 0:
            delta = delta @ layers[li].W.T
    return loss, grads


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, params: list[np.ndarray]) -> "AdamState":
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params])


def adam_step(params: list[np.ndarray], grads: list[np.ndarray], state: AdamState, lr: float):
    """One bias-corrected Adam update; returns new parameters and state."""
    if len(params) != len(grads) or any(p.shape != g.shape for p, g in zip(params, grads)):
        raise ShapeMismatch("parameter and gradient shapes differ")
    t = state.t + 1
    b1, b2 = state.beta1, state.beta2
    new_p, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        m_hat = m / (1 - b1**t)
        v_hat = v / (1 - b2**t)
        new_p.append(p - lr * m_hat / (np.sqrt(v_hat) + state.eps))
        new_m.append(m)
        new_v.append(v)
    return new_p, AdamState(new_m, new_v, t, b1, b2, state.eps)


def gradient_check(model: DeepSetsModel, X: np.ndarray, y: np.ndarray, h: float = 1e-5) -> float:
    """Worst relative error between analytic and central-difference gradients.

    The error of each parameter array is ``|g - g_fd| / max(|g|, |g_fd|)`` in
    the Euclidean norm; arrays whose gradients both vanish count as exact.
    """
    _, grads = mse_and_grads(model, X, y)
    params = [p.copy() for p in model.params()]
    worst = 0.0
    for i, p in enumerate(params):
        fd = np.empty_like(p)
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + h
            up, _ = mse_and_grads(model.with_params(params), X, y)
            p[idx] = old - h
            down, _ = mse_and_grads(model.with_params(params), X, y)
            p[idx] = old
            fd[idx] = (up - down) / (2 * h)
        scale = max(np.linalg.norm(grads[i]), np.linalg.norm(fd))
        if scale > 0:
            worst = max(worst, float(np.linalg.norm(grads[i] - fd) / scale))
    return worst
