"""
Softmax-linear and one-hidden-layer tanh classifiers with exact analytic gradients.

Batch functions take a feature matrix X of shape (b, d) and labels y of shape (b,).
Per-example gradients are returned as a (b, P) matrix laid out like ModelParams.weights.
"""
from typing import Optional

import numpy as np
from scipy.special import logsumexp, softmax

from AdvShift.DataModels.ModelParams import Example, ModelParams
from Exceptions.DomainExceptions import ShapeError


def _check_batch(params: ModelParams, X: np.ndarray, y: Optional[np.ndarray] = None) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != params.input_dim:
        raise ShapeError(f"model expects {params.input_dim} features, got {X.shape[1]}")
    if y is not None:
        y = np.asarray(y)
        if y.shape != (X.shape[0],):
            raise ShapeError(f"{X.shape[0]} feature rows but labels of shape {y.shape}")
        if y.size and (y.min() < 0 or y.max() >= params.num_classes):
            raise ShapeError(f"labels must lie in [0, {params.num_classes})")
    return X


def _forward(params: ModelParams, X: np.ndarray):
    parts = params.unpack()
    if params.arch == "linear":
        return X @ parts["W"].T + parts["b"], None
    hidden = np.tanh(X @ parts["W1"].T + parts["b1"])
    return hidden @ parts["W2"].T + parts["b2"], hidden


def batch_logits(params: ModelParams, X: np.ndarray) -> np.ndarray:
    X = _check_batch(params, X)
    return _forward(params, X)[0]


def batch_losses(params: ModelParams, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """
    Softmax cross-entropy per example: logsumexp(logits) - logits[y].
    """
    X = _check_batch(params, X, y)
    logits, _ = _forward(params, X)
    losses = logsumexp(logits, axis=1) - logits[np.arange(X.shape[0]), y]
    # logsumexp >= max logit, so only rounding can push a loss below zero
    return np.maximum(losses, 0.0)


def batch_loss_gradients(params: ModelParams, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """
    Per-example gradient of the cross-entropy with respect to the flat weights.

    :return: Matrix of shape (b, params.size)
    """
    X = _check_batch(params, X, y)
    b = X.shape[0]
    logits, hidden = _forward(params, X)
    delta = softmax(logits, axis=1)
    delta[np.arange(b), y] -= 1.0
    if params.arch == "linear":
        grad_W = delta[:, :, None] * X[:, None, :]
        return np.hstack([grad_W.reshape(b, -1), delta])
    parts = params.unpack()
    grad_W2 = delta[:, :, None] * hidden[:, None, :]
    back = (delta @ parts["W2"]) * (1.0 - hidden**2)
    grad_W1 = back[:, :, None] * X[:, None, :]
    return np.hstack([grad_W1.reshape(b, -1), back, grad_W2.reshape(b, -1), delta])


def predict_batch(params: ModelParams, X: np.ndarray) -> np.ndarray:
    """Argmax of the logits; np.argmax breaks ties towards the lowest index."""
    return np.argmax(batch_logits(params, X), axis=1)


def per_example_loss(params: ModelParams, ex: Example) -> float:
    return float(batch_losses(params, ex.features[None, :], np.array([ex.label]))[0])


def loss_gradient(params: ModelParams, ex: Example) -> np.ndarray:
    return batch_loss_gradients(params, ex.features[None, :], np.array([ex.label]))[0]


def predict(params: ModelParams, features) -> int:
    return int(predict_batch(params, np.asarray(features, dtype=float)[None, :])[0])
