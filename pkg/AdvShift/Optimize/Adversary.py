"""
The label adversary: importance-weighted adversarial gradient, Lagrange multiplier
switching, the closed-form proximal mirror-ascent step and the moving-average
estimate of the empirical label marginal.

Proximal step. With h(pi) = alpha / (2 lambda) * KL(pi || p_emp), the update solves

    argmin_pi  h(pi) + (1 / (2 lambda)) * (KL(pi || pi_t) - 2 lambda <g, pi>)

whose minimiser is pi ∝ (pi_t * p_emp^alpha)^(1 / (1 + alpha)) * exp(eta * g) with
eta = 2 lambda / (1 + alpha), i.e. 1 / (gamma + 1 / (2 lambda)) for gamma = alpha / (2 lambda).
Two other constants circulate for this step: 1 / ((gamma + 1 / (2 lambda)) (1 + alpha)),
off by a factor 1 / (1 + alpha), and 1 / ((2 gamma + 1 / lambda) (1 + alpha)), off by
1 / (2 (1 + alpha)). The grid argmin of the objective above agrees with neither.
A configured eta_pi replaces eta verbatim.
"""
import logging
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from AdvShift.DataModels.AdversaryState import AdversaryConfig, AdversaryState
from AdvShift.DataModels.LabelDistribution import LabelDistribution
from AdvShift.Optimize.SimplexCore import kl_divergence, mix_with_uniform, normalize_log
from Exceptions.DomainExceptions import DomainError

logger = logging.getLogger(__name__)


def adversary_gradient(
    batch_labels: Sequence[int],
    batch_losses: Sequence[float],
    p_emp: LabelDistribution,
    clip: float,
) -> np.ndarray:
    """
    Importance-weighted adversarial gradient
    g(i) = (1 / b) * sum_{j : y_j = i} min(loss_j, clip) / p_emp(i).

    :param batch_labels: Class index of each minibatch example
    :param batch_losses: Non-negative loss of each minibatch example
    :param p_emp: Estimated label marginal, positive on every batch label
    :param clip: Loss clip level
    :return: Per-class gradient; classes absent from the batch get 0
    """
    labels = np.asarray(batch_labels, dtype=int)
    losses = np.asarray(batch_losses, dtype=float)
    if labels.size == 0 or labels.shape != losses.shape:
        raise DomainError(f"{labels.size} labels for {losses.size} losses")
    present = np.unique(labels)
    if np.any(p_emp.probs[present] <= 0):
        raise DomainError("a batch label has zero mass under p_emp")
    sums = np.bincount(labels, weights=np.minimum(losses, clip), minlength=p_emp.num_classes)
    gradient = np.zeros(p_emp.num_classes)
    gradient[present] = sums[present] / p_emp.probs[present] / labels.size
    return gradient


def lagrange_alpha(pi: LabelDistribution, p_emp: LabelDistribution, cfg: AdversaryConfig) -> float:
    """
    Sign-based multiplier switch: 0 inside the ball, 2 * gamma_c * lambda outside.
    A point exactly on the sphere counts as inside, except for a zero radius where the
    ball has no interior.
    """
    kl = kl_divergence(pi, p_emp)
    if kl > cfg.r or cfg.r == 0.0:
        return cfg.active_alpha
    return 0.0


def proximal_step_size(alpha: float, cfg: AdversaryConfig, eta_pi: Optional[float] = None) -> float:
    if eta_pi is not None:
        return eta_pi
    return 2.0 * cfg.lambda_ / (1.0 + alpha)


def _proximal_log_weights(
    pi_t: LabelDistribution, p_emp: LabelDistribution, g: np.ndarray, alpha: float, eta: float
) -> np.ndarray:
    return (np.log(pi_t.probs) + alpha * np.log(p_emp.probs)) / (1.0 + alpha) + eta * g


def _check_update_inputs(state: AdversaryState, g: np.ndarray, alpha: float) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    if g.shape != state.pi.probs.shape or not np.all(np.isfinite(g)):
        raise DomainError(f"adversarial gradient must be a finite vector of length {state.pi.num_classes}")
    if not alpha >= 0:
        raise DomainError(f"multiplier must be non-negative, got {alpha}")
    state.pi.require_interior("pi_t")
    state.p_emp.require_interior("p_emp")
    return g


def mirror_proximal_update(
    state: AdversaryState,
    g: Sequence[float],
    alpha: float,
    cfg: AdversaryConfig,
    eta_pi: Optional[float] = None,
) -> LabelDistribution:
    """
    Closed-form proximal mirror-ascent step: geometric interpolation of pi_t and p_emp,
    exponential tilt by eta * g, normalisation, then the epsilon mixture with uniform.

    :param state: Current adversary state (pi_t and p_emp must be interior)
    :param g: Adversarial gradient
    :param alpha: Multiplier from lagrange_alpha
    :param cfg: Adversary hyperparameters
    :param eta_pi: Optional fixed step replacing 2 * lambda / (1 + alpha)
    :return: pi_{t+1}
    """
    g = _check_update_inputs(state, g, alpha)
    eta = proximal_step_size(alpha, cfg, eta_pi)
    updated = normalize_log(_proximal_log_weights(state.pi, state.p_emp, g, alpha, eta))
    return mix_with_uniform(updated, cfg.epsilon)


def proximal_objective(
    pi: LabelDistribution,
    state: AdversaryState,
    g: Sequence[float],
    alpha: float,
    cfg: AdversaryConfig,
) -> float:
    """
    h(pi) + (1 / (2 lambda)) * (KL(pi || pi_t) - 2 lambda <g, pi>), h = alpha / (2 lambda) KL(pi || p_emp).
    """
    pi.require_interior("pi")
    g = np.asarray(g, dtype=float)
    scale = 1.0 / (2.0 * cfg.lambda_)
    penalty = alpha * scale * kl_divergence(pi, state.p_emp) if alpha > 0 else 0.0
    return penalty + scale * kl_divergence(pi, state.pi) - float(np.dot(g, pi.probs))


def exact_proximal_update(
    pi_t: LabelDistribution,
    p_ref: LabelDistribution,
    g: Sequence[float],
    r: float,
    gamma_c: float,
    lam: float,
) -> LabelDistribution:
    """
    Proximal step for the hinge penalty h(pi) = gamma_c * max(0, KL(pi || p_ref) - r):

        argmin_pi  h(pi) + KL(pi || pi_t) / (2 lam) - <g, pi>

    Unlike mirror_proximal_update, the multiplier is chosen at the output. Three cases:
    the unpenalised step lands inside the ball; the fully penalised step lands outside;
    otherwise the output sits on the sphere KL = r and the interpolation weight
    s = alpha / (1 + alpha) is found by a 1-D root search.
    """
    pi_t.require_interior("pi_t")
    p_ref.require_interior("p_ref")
    log_pi = exact_proximal_log_update(np.log(pi_t.probs), np.log(p_ref.probs), g, r, gamma_c, lam)
    return normalize_log(log_pi)


def log_kl(log_p: np.ndarray, log_q: np.ndarray) -> float:
    """KL(p || q) from normalised log-probabilities; entries of p that underflow contribute 0."""
    p = np.exp(log_p)
    return max(float(np.sum(p * (log_p - log_q))), 0.0)


def exact_proximal_log_update(
    log_pi_t: np.ndarray, log_ref: np.ndarray, g: Sequence[float], r: float, gamma_c: float, lam: float
) -> np.ndarray:
    """
    Log-domain form of exact_proximal_update, usable when iterates approach a vertex.

    :return: Normalised log-probabilities of the step's output
    """
    g = np.asarray(g, dtype=float)
    # (1 - s) * (log pi_t + 2 lam g) + s * log p_ref, s = alpha / (1 + alpha)
    free = log_pi_t + 2.0 * lam * g

    def candidate(s: float) -> np.ndarray:
        logits = (1.0 - s) * free + s * log_ref
        return logits - logsumexp(logits)

    def excess(s: float) -> float:
        return log_kl(candidate(s), log_ref) - r

    if excess(0.0) <= 0.0:
        return candidate(0.0)
    alpha_max = 2.0 * gamma_c * lam
    s_max = alpha_max / (1.0 + alpha_max)
    if s_max <= 0.0 or excess(s_max) >= 0.0:
        return candidate(s_max)
    s_star = brentq(excess, 0.0, s_max, xtol=1e-15, maxiter=200)
    return candidate(s_star)


def ema_update(p_emp: LabelDistribution, batch_labels: Sequence[int], beta: float) -> LabelDistribution:
    """
    beta * p_emp + (1 - beta) * (batch histogram / b).
    """
    labels = np.asarray(batch_labels, dtype=int)
    if labels.size == 0:
        raise DomainError("cannot update the label marginal from an empty batch")
    if beta == 1.0:
        return p_emp
    histogram = np.bincount(labels, minlength=p_emp.num_classes) / labels.size
    mixed = beta * p_emp.probs + (1.0 - beta) * histogram
    return LabelDistribution(mixed / mixed.sum())
