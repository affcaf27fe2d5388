"""
Worst-case label-shift evaluation: per-class payoff profiles, the worst payoff over a
KL ball around the reference marginal, threshold sweeps, and the penalized inner
maximization max_pi <pi, e> + min(0, gamma_c * (r - KL(pi || p_ref))).
"""
import logging
import math
from typing import Iterable, Optional, Tuple

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from AdvShift.DataModels.AdversaryState import AdversaryConfig
from AdvShift.DataModels.Dataset import Dataset
from AdvShift.DataModels.ErrorProfile import ErrorProfile, ShiftCurve
from AdvShift.DataModels.LabelDistribution import LabelDistribution
from AdvShift.DataModels.ModelParams import ModelParams
from AdvShift.Models.ClassifierModels import batch_losses, predict_batch
from AdvShift.Optimize.Adversary import exact_proximal_log_update, log_kl
from AdvShift.Optimize.SimplexCore import exponential_tilt, kl_divergence
from Constants import (
    BISECTION_MAX_ITER,
    INNER_MAX_ITER,
    INNER_MAX_STEP,
    INNER_MAX_TOLERANCE,
    TILT_LAMBDA_LOWER,
    TILT_LAMBDA_UPPER,
)
from Exceptions.DomainExceptions import DomainError

logger = logging.getLogger(__name__)


def _require_covered(data: Dataset) -> None:
    if len(data) == 0:
        raise DomainError("cannot evaluate on an empty dataset")
    if not data.covers_all_classes():
        missing = np.nonzero(data.class_counts == 0)[0].tolist()
        raise DomainError(f"no evaluation examples for classes {missing}")


def per_class_errors(params: ModelParams, data: Dataset) -> ErrorProfile:
    """
    Fraction of each class's examples the model misclassifies, with the empirical
    label marginal of data as the reference.

    :param params: Trained parameters
    :param data: Evaluation sample with at least one example per class
    :return: ErrorProfile of 0-1 error rates
    """
    _require_covered(data)
    wrong = (predict_batch(params, data.features) != data.labels).astype(float)
    errors = np.bincount(data.labels, weights=wrong, minlength=data.num_classes) / data.class_counts
    return ErrorProfile(errors, data.marginal, data.class_counts)


def per_class_losses(params: ModelParams, data: Dataset, clip: Optional[float] = None) -> ErrorProfile:
    """
    Mean (optionally clipped) cross-entropy per class; the diagnostics payoff.
    """
    _require_covered(data)
    losses = batch_losses(params, data.features, data.labels)
    if clip is not None:
        losses = np.minimum(losses, clip)
    sums = np.bincount(data.labels, weights=losses, minlength=data.num_classes)
    return ErrorProfile(sums / data.class_counts, data.marginal, data.class_counts)


def worst_case_value(profile: ErrorProfile, tau: float) -> Tuple[float, LabelDistribution]:
    """
    Solves max_pi <pi, e> subject to KL(pi || p_ref) <= tau exactly.

    Below saturation the maximiser is the exponential tilt of p_ref by e at the
    temperature lambda* where the tilt's KL equals tau; lambda* is found by a root
    search on log lambda over [1e-8, 1e8]. Saturation happens in two stages: once tau
    covers -log P_ref(argmax set) the witness is p_ref restricted to the argmax set,
    and once it covers -log p_ref(y*) for the heaviest argmax class y*, the point mass
    on y* (minimal divergence among maximisers).

    With a tied maximum the first stage is a plateau: for -log P_ref(argmax set) <= tau
    < -log p_ref(y*) the returned witness sits strictly inside the ball, with KL equal
    to -log P_ref(argmax set), and it is not a point mass. It is the limit of the tilt
    and the minimal-divergence maximiser; every other maximiser only moves mass within
    the argmax set, so the value stays max(e) across the plateau.

    :param profile: Per-class payoff with interior reference
    :param tau: KL threshold, >= 0
    :return: (worst payoff, witness distribution)
    """
    if not (tau >= 0 and math.isfinite(tau)):
        raise DomainError(f"threshold must be a finite non-negative number, got {tau}")
    p_ref = profile.reference
    p_ref.require_interior("reference")
    e = profile.values
    if tau == 0:
        return profile.mean_value, p_ref

    top = float(e.max())
    argmax_set = np.nonzero(e == top)[0]
    y_star = int(argmax_set[np.argmax(p_ref.probs[argmax_set])])
    if tau >= -math.log(p_ref.probs[y_star]):
        return top, LabelDistribution.point_mass(profile.num_classes, y_star)
    set_mass = float(p_ref.probs[argmax_set].sum())
    if tau >= -math.log(set_mass):
        restricted = np.zeros(profile.num_classes)
        restricted[argmax_set] = p_ref.probs[argmax_set] / set_mass
        return top, LabelDistribution(restricted)

    def excess(log_lam: float) -> float:
        return kl_divergence(exponential_tilt(p_ref, e, math.exp(log_lam)), p_ref) - tau

    lower, upper = math.log(TILT_LAMBDA_LOWER), math.log(TILT_LAMBDA_UPPER)
    if excess(upper) >= 0:
        log_lam = upper
    elif excess(lower) <= 0:
        log_lam = lower
    else:
        log_lam = brentq(excess, lower, upper, xtol=1e-14, maxiter=BISECTION_MAX_ITER, disp=False)
    witness = exponential_tilt(p_ref, e, math.exp(log_lam))
    logger.debug("tau %.4g: lambda* %.6g, KL gap %.3g", tau, math.exp(log_lam), excess(log_lam))
    return float(np.dot(witness.probs, e)), witness


def shift_sweep(profile: ErrorProfile, taus: Iterable[float]) -> ShiftCurve:
    curve = ShiftCurve()
    for tau in taus:
        value, witness = worst_case_value(profile, float(tau))
        curve.append(float(tau), value, witness)
    return curve


def penalized_value(profile: ErrorProfile, pi: LabelDistribution, cfg: AdversaryConfig) -> float:
    """<pi, e> + min(0, gamma_c * (r - KL(pi || p_ref)))."""
    kl = kl_divergence(pi, profile.reference)
    return float(np.dot(pi.probs, profile.values)) + min(0.0, cfg.gamma_c * (cfg.r - kl))


def inner_max_penalized(
    profile: ErrorProfile,
    cfg: AdversaryConfig,
    step: float = INNER_MAX_STEP,
    tolerance: float = INNER_MAX_TOLERANCE,
    max_iter: int = INNER_MAX_ITER,
) -> Tuple[float, LabelDistribution, bool]:
    """
    Maximises the penalized payoff by repeated exact proximal steps with the exact
    gradient g = e, starting from p_ref, until an iteration moves pi by at most
    tolerance in l1. Hitting max_iter is logged and reported through the flag.

    :param profile: Per-class payoff with interior reference
    :param cfg: Supplies r and gamma_c
    :return: (penalized value, maximiser, converged)
    """
    p_ref = profile.reference
    p_ref.require_interior("reference")
    log_ref = np.log(p_ref.probs)
    log_pi = log_ref.copy()
    converged = False
    iterations = 0
    residual = float("inf")
    while iterations < max_iter:
        updated = exact_proximal_log_update(log_pi, log_ref, profile.values, cfg.r, cfg.gamma_c, step)
        residual = float(np.abs(np.exp(updated) - np.exp(log_pi)).sum())
        log_pi = updated
        iterations += 1
        if residual <= tolerance:
            converged = True
            break
    if not converged:
        logger.warning(
            "inner maximization stopped after %d iterations with step residual %.3g", iterations, residual
        )
    pi = np.exp(log_pi)
    witness = LabelDistribution(pi / pi.sum())
    kl = log_kl(log_pi, log_ref)
    value = float(np.dot(witness.probs, profile.values)) + min(0.0, cfg.gamma_c * (cfg.r - kl))
    return value, witness, converged


def tilted_risk(profile: ErrorProfile, gamma: float) -> float:
    """
    gamma * log sum_i p_ref(i) exp(e(i) / gamma): the zero-radius penalized maximum,
    i.e. max_pi <pi, e> - gamma * KL(pi || p_ref).
    """
    if not gamma > 0:
        raise DomainError(f"tilt temperature must be positive, got {gamma}")
    profile.reference.require_interior("reference")
    return float(gamma * logsumexp(profile.values / gamma, b=profile.reference.probs))
