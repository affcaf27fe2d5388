"""
Probability-simplex algebra: divergence, normalisation, mixing, projection and tilting.

All functions are pure and take / return LabelDistribution values. Exponentials are
always evaluated through log-sum-exp.
"""
from typing import Sequence

import numpy as np
from scipy.special import logsumexp, rel_entr

from AdvShift.DataModels.LabelDistribution import LabelDistribution
from Exceptions.DomainExceptions import DomainError


def kl_divergence(p: LabelDistribution, q: LabelDistribution) -> float:
    """
    KL(p || q) = sum_i p(i) log(p(i) / q(i)), with 0 log(0 / q) = 0.

    :param p: First argument (the distribution being measured)
    :param q: Reference distribution, positive wherever p is
    :return: Non-negative divergence in nats
    """
    if p.num_classes != q.num_classes:
        raise DomainError(f"KL between {p.num_classes} and {q.num_classes} classes")
    terms = rel_entr(p.probs, q.probs)
    if not np.all(np.isfinite(terms)):
        raise DomainError("KL divergence is infinite: p has mass where q has none")
    # rel_entr terms can be slightly negative per entry; the sum cannot
    return max(float(terms.sum()), 0.0)


def normalize(weights: Sequence[float]) -> LabelDistribution:
    """
    :param weights: Positive finite weights
    :return: weights / sum(weights)
    """
    weights = np.asarray(weights, dtype=float)
    if weights.size == 0 or not np.all(np.isfinite(weights)) or np.any(weights <= 0):
        raise DomainError(f"normalize needs positive finite weights, got {weights}")
    return LabelDistribution(weights / weights.sum())


def normalize_log(log_weights: np.ndarray) -> LabelDistribution:
    """Normalises exp(log_weights) without overflow."""
    log_weights = np.asarray(log_weights, dtype=float)
    probs = np.exp(log_weights - logsumexp(log_weights))
    return LabelDistribution(probs / probs.sum())


def mix_with_uniform(p: LabelDistribution, epsilon: float) -> LabelDistribution:
    """
    (1 - epsilon) * p + epsilon * uniform. Every entry of the result is at least epsilon / L.
    """
    if not 0.0 <= epsilon < 1.0:
        raise DomainError(f"mixture weight must lie in [0, 1), got {epsilon}")
    if epsilon == 0.0:
        return p
    return LabelDistribution((1.0 - epsilon) * p.probs + epsilon / p.num_classes)


def euclidean_project_simplex(v: Sequence[float]) -> LabelDistribution:
    """
    Euclidean projection onto the probability simplex by sorting and thresholding.

    :param v: Finite vector
    :return: argmin over the simplex of ||v - pi||^2
    """
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size == 0 or not np.all(np.isfinite(v)):
        raise DomainError(f"cannot project {v} onto the simplex")
    u = np.sort(v)[::-1]
    cssv = np.cumsum(u) - 1.0
    ranks = np.arange(1, v.size + 1)
    # number of positive components of the projection
    rho = np.nonzero(u * ranks > cssv)[0][-1]
    theta = cssv[rho] / (rho + 1.0)
    w = np.clip(v - theta, 0.0, None)
    return LabelDistribution(w / w.sum())


def exponential_tilt(p: LabelDistribution, scores: Sequence[float], lam: float) -> LabelDistribution:
    """
    Distribution proportional to p(i) * exp(scores(i) / lam).

    :param p: Interior base distribution
    :param scores: One score per class
    :param lam: Positive temperature; lam -> inf returns p
    """
    scores = np.asarray(scores, dtype=float)
    if scores.shape != p.probs.shape:
        raise DomainError(f"{scores.size} scores for {p.num_classes} classes")
    if not lam > 0:
        raise DomainError(f"tilt temperature must be positive, got {lam}")
    p.require_interior("tilt base")
    return normalize_log(np.log(p.probs) + (scores - scores.max()) / lam)
