"""Fully connected ReLU network with a single logistic output unit."""

from __future__ import annotations

import numpy as np

from .linear import log_sigmoid, sigmoid, standardizer


def init_params(sizes: list[int], rng: np.random.Generator) -> list[tuple[np.ndarray, np.ndarray]]:
    """Weights uniform in +-1/sqrt(fan_in); zero biases."""
    layers = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        layers.append((rng.uniform(-bound, bound, (fan_in, fan_out)), np.zeros(fan_out)))
    return layers


def forward(layers, X: np.ndarray):
    """Returns output logits and the per-layer activations (input first)."""
    acts = [X]
    h = X
    for W, b in layers[:-1]:
        h = np.maximum(0.0, h @ W + b)
        acts.append(h)
    W, b = layers[-1]
    return (h @ W + b)[:, 0], acts


def loss_grad(layers, X: np.ndarray, y: np.ndarray, l2: float = 0.0):
    """Mean cross-entropy (+ l2/2 on weights) and its gradient, layer by layer."""
    z, acts = forward(layers, X)
    n = len(y)
    loss = -np.mean(y * log_sigmoid(z) + (1 - y) * log_sigmoid(-z))
    loss += 0.5 * l2 * sum(float(np.sum(W * W)) for W, _ in layers)
    delta = ((sigmoid(z) - y) / n)[:, None]
    grads = [None] * len(layers)
    for i in range(len(layers) - 1, -1, -1):
        W, _ = layers[i]
        grads[i] = (acts[i].T @ delta + l2 * W, delta.sum(axis=0))
        if i:
            delta = (delta @ W.T) * (acts[i] > 0)
    return float(loss), grads


def fit_mlp(
    X, y, hidden: tuple[int, ...], learning_rate: float, epochs: int, batch_size: int, l2: float, seed: int
) -> dict:
    rng = np.random.default_rng(seed)
    mu, sd = standardizer(X)
    Z = (X - mu) / sd
    layers = init_params([Z.shape[1], *hidden, 1], rng)
    n = len(y)
    for _ in range(epochs):
        perm = rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = perm[start : start + batch_size]
            _, grads = loss_grad(layers, Z[idx], y[idx], l2)
            layers = [(W - learning_rate * gW, b - learning_rate * gb) for (W, b), (gW, gb) in zip(layers, grads)]
    params = {"mu": mu, "sd": sd, "n_layers": np.array(len(layers))}
    for i, (W, b) in enumerate(layers):
        params[f"W{i}"] = W
        params[f"b{i}"] = b
    return params


def unpack(params: dict):
    return [(params[f"W{i}"], params[f"b{i}"]) for i in range(int(params["n_layers"]))]


def mlp_scores(params: dict, X: np.ndarray) -> np.ndarray:
    z, _ = forward(unpack(params), (X - params["mu"]) / params["sd"])
    return z
