"""Logistic regression and linear SVM, both trained by plain (sub)gradient descent."""

from __future__ import annotations

import numpy as np


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def log_sigmoid(z: np.ndarray) -> np.ndarray:
    return -np.logaddexp(0.0, -z)


def standardizer(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd[sd == 0] = 1.0
    return mu, sd


def lr_loss_grad(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, l2: float = 0.0):
    """Mean binary cross-entropy plus ``l2/2 * |w|^2``; returns (loss, dw, db)."""
    z = X @ w + b
    loss = -np.mean(y * log_sigmoid(z) + (1 - y) * log_sigmoid(-z)) + 0.5 * l2 * (w @ w)
    r = sigmoid(z) - y
    return float(loss), X.T @ r / len(y) + l2 * w, float(np.mean(r))


def fit_logistic(X, y, learning_rate: float, epochs: int, l2: float, tol: float) -> dict:
    mu, sd = standardizer(X)
    Z = (X - mu) / sd
    w = np.zeros(Z.shape[1])
    b = 0.0
    for _ in range(epochs):
        _, gw, gb = lr_loss_grad(w, b, Z, y, l2)
        if np.sqrt(gw @ gw + gb * gb) < tol:
            break
        w -= learning_rate * gw
        b -= learning_rate * gb
    return {"w": w, "b": np.array(b), "mu": mu, "sd": sd}


def linear_scores(params: dict, X: np.ndarray) -> np.ndarray:
    return ((X - params["mu"]) / params["sd"]) @ params["w"] + float(params["b"])


def svm_objective(w, b, X, s, l2) -> float:
    return float(0.5 * l2 * (w @ w) + np.mean(np.maximum(0.0, 1.0 - s * (X @ w + b))))


def fit_svm(X, y, learning_rate: float, epochs: int, l2: float) -> dict:
    """Hinge loss with L2 penalty; step ``learning_rate / sqrt(t)``, best iterate kept."""
    mu, sd = standardizer(X)
    Z = (X - mu) / sd
    s = np.where(y == 1, 1.0, -1.0)
    w = np.zeros(Z.shape[1])
    b = 0.0
    best = (svm_objective(w, b, Z, s, l2), w.copy(), b)
    for t in range(1, epochs + 1):
        active = s * (Z @ w + b) < 1.0
        gw = l2 * w - (s[active] @ Z[active]) / len(s)
        gb = -np.sum(s[active]) / len(s)
        eta = learning_rate / np.sqrt(t)
        w = w - eta * gw
        b = b - eta * gb
        obj = svm_objective(w, b, Z, s, l2)
        if obj < best[0]:
            best = (obj, w.copy(), b)
    _, w, b = best
    return {"w": w, "b": np.array(b), "mu": mu, "sd": sd}
