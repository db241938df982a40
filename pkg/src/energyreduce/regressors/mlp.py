"""Fully connected ReLU network with a linear output, trained with Adam."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DivergedLoss
from ..seeding import derive_rng

Params = list[tuple[np.ndarray, np.ndarray]]  # (weights (fan_in, fan_out), bias) per layer


def init_params(n_inputs: int, layers, seed: int) -> Params:
    rng = derive_rng(seed, 0)
    sizes = [n_inputs, *layers, 1]
    params = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in) if fan_in else 1.0
        W = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        b = rng.uniform(-bound, bound, size=fan_out)
        params.append((W, b))
    return params


def forward(params: Params, X) -> np.ndarray:
    h = np.asarray(X, dtype=np.float64)
    for W, b in params[:-1]:
        h = np.maximum(h @ W + b, 0.0)
    W, b = params[-1]
    return (h @ W + b)[:, 0]


def loss_and_grads(params: Params, X, y) -> tuple[float, Params]:
    """Mean squared error and its gradient with respect to every parameter."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    acts = [X]
    pre = []
    h = X
    for W, b in params[:-1]:
        z = h @ W + b
        pre.append(z)
        h = np.maximum(z, 0.0)
        acts.append(h)
    W, b = params[-1]
    out = (h @ W + b)[:, 0]
    err = out - y
    n = len(y)
    loss = float(err @ err) / n

    grads: Params = [None] * len(params)  # type: ignore[list-item]
    delta = (2.0 / n) * err[:, None]
    for layer in range(len(params) - 1, -1, -1):
        W, _ = params[layer]
        grads[layer] = (acts[layer].T @ delta, delta.sum(axis=0))
        if layer:
            delta = (delta @ W.T) * (pre[layer - 1] > 0.0)
    return loss, grads


@dataclass(frozen=True)
class Network:
    params: Params
    y_mean: float
    y_scale: float

    def predict(self, X) -> np.ndarray:
        return self.y_mean + self.y_scale * forward(self.params, X)

    def to_dict(self) -> dict:
        return {
            "layers": [{"W": W.tolist(), "b": b.tolist()} for W, b in self.params],
            "y_mean": self.y_mean,
            "y_scale": self.y_scale,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Network":
        params = [(np.array(l["W"], dtype=np.float64).reshape(len(l["W"]), -1),
                   np.array(l["b"], dtype=np.float64)) for l in d["layers"]]
        return cls(params, d["y_mean"], d["y_scale"])


def fit_mlp(X, y, layers=(64, 64), epochs: int = 50, step: float = 1e-3, batch: int = 32,
            seed: int = 0) -> Network:
    """Mini-batch Adam on squared loss. Targets are standardized internally
    and mapped back on prediction."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    layers = tuple(int(s) for s in layers)
    if not layers or min(layers) < 1:
        raise ValueError("layers must be a nonempty list of positive sizes")
    if len(y) == 0:
        raise ValueError("cannot fit on zero rows")
    y_mean = float(y.mean())
    y_scale = float(y.std()) or 1.0
    ys = (y - y_mean) / y_scale
    params = init_params(X.shape[1], layers, seed)

    beta1, beta2, eps = 0.9, 0.999, 1e-8
    m = [(np.zeros_like(W), np.zeros_like(b)) for W, b in params]
    v = [(np.zeros_like(W), np.zeros_like(b)) for W, b in params]
    t = 0
    rng = derive_rng(seed, 1)
    n = len(ys)
    for epoch in range(epochs):
        perm = rng.permutation(n)
        for lo in range(0, n, batch):
            idx = perm[lo : lo + batch]
            loss, grads = loss_and_grads(params, X[idx], ys[idx])
            if not np.isfinite(loss):
                raise DivergedLoss(f"loss became {loss} at epoch {epoch}, batch starting {lo}")
            t += 1
            c1 = 1.0 - beta1**t
            c2 = 1.0 - beta2**t
            new_params = []
            for i, ((W, b), (gW, gb)) in enumerate(zip(params, grads)):
                mW, mb = m[i]
                vW, vb = v[i]
                mW = beta1 * mW + (1 - beta1) * gW
                mb = beta1 * mb + (1 - beta1) * gb
                vW = beta2 * vW + (1 - beta2) * gW * gW
                vb = beta2 * vb + (1 - beta2) * gb * gb
                m[i] = (mW, mb)
                v[i] = (vW, vb)
                W = W - step * (mW / c1) / (np.sqrt(vW / c2) + eps)
                b = b - step * (mb / c1) / (np.sqrt(vb / c2) + eps)
                new_params.append((W, b))
            params = new_params
    net = Network(params, y_mean, y_scale)
    final = net.predict(X)
    if not np.all(np.isfinite(final)):
        raise DivergedLoss("network produced non-finite predictions")
    return net
