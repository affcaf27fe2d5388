"""
Euclidean projection onto the KL ball {q in simplex : KL(q || p_ref) <= r}, kept as a
correctness oracle and as the cost baseline the closed-form adversary step avoids.

With the constraint active (multiplier nu > 0, simplex multiplier b) stationarity of
0.5 * ||q - p||^2 gives q_i + nu * log q_i = p_i - b + nu * (log p_ref_i - 1), solved
per coordinate by the Wright omega function:

    q_i = nu * omega((p_i - b) / nu + log p_ref_i - 1 - log nu)

b is fixed by sum(q) = 1 for each nu, and nu by KL(q || p_ref) = r. Both are
monotone 1-D root searches.
"""
import logging
import math
import time
from typing import Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import wrightomega

from AdvShift import Seeding
from AdvShift.DataModels.AdversaryState import AdversaryConfig, AdversaryState
from AdvShift.DataModels.LabelDistribution import LabelDistribution
from AdvShift.DataModels.Reports import ProjectionBenchReport
from AdvShift.Optimize.Adversary import mirror_proximal_update
from AdvShift.Optimize.SimplexCore import euclidean_project_simplex, kl_divergence
from Constants import PROJECTION_MAX_ITER, PROJECTION_RELATIVE_TOLERANCE
from Exceptions.DomainExceptions import DomainError, NonConvergence

logger = logging.getLogger(__name__)


def _stationary_point(p: np.ndarray, log_ref: np.ndarray, nu: float, b: float) -> np.ndarray:
    z = (p - b) / nu + log_ref - 1.0 - math.log(nu)
    return nu * np.real(wrightomega(z))


def _expand_bracket(f, lo: float, hi: float, max_iter: int = PROJECTION_MAX_ITER):
    # f decreasing: need f(lo) > 0 > f(hi)
    for _ in range(max_iter):
        if f(lo) > 0:
            break
        lo -= 2.0 * (hi - lo)
    for _ in range(max_iter):
        if f(hi) < 0:
            break
        hi += 2.0 * (hi - lo)
    return lo, hi


def _simplex_point(p: np.ndarray, log_ref: np.ndarray, nu: float) -> np.ndarray:
    def mass_excess(b: float) -> float:
        return float(_stationary_point(p, log_ref, nu, b).sum()) - 1.0

    lo, hi = _expand_bracket(mass_excess, float(p.min()) - 1.0, float(p.max()) + 1.0)
    b = brentq(mass_excess, lo, hi, xtol=1e-14, rtol=1e-14, maxiter=PROJECTION_MAX_ITER)
    q = _stationary_point(p, log_ref, nu, b)
    return q / q.sum()


def kl_ball_project(p: Sequence[float], p_ref: LabelDistribution, r: float) -> LabelDistribution:
    """
    argmin_q ||q - p||^2 over the simplex subject to KL(q || p_ref) <= r.

    :param p: Point to project (any finite vector of length L)
    :param p_ref: Interior centre of the ball
    :param r: Positive radius
    :return: The projection, with KL(q || p_ref) <= r * (1 + 1e-2)
    """
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.size != p_ref.num_classes or not np.all(np.isfinite(p)):
        raise DomainError(f"cannot project a vector of length {p.size} onto a ball over {p_ref.num_classes} classes")
    if not r > 0:
        raise DomainError(f"ball radius must be positive, got {r}")
    p_ref.require_interior("ball centre")

    unconstrained = euclidean_project_simplex(p)
    if kl_divergence(unconstrained, p_ref) <= r:
        return unconstrained

    log_ref = np.log(p_ref.probs)

    def kl_excess(log_nu: float) -> float:
        q = _simplex_point(p, log_ref, math.exp(log_nu))
        return kl_divergence(LabelDistribution(q), p_ref) - r

    lo, hi = _expand_bracket(kl_excess, math.log(1e-6), 0.0)
    log_nu = brentq(kl_excess, lo, hi, xtol=1e-12, maxiter=PROJECTION_MAX_ITER)
    q = LabelDistribution(_simplex_point(p, log_ref, math.exp(log_nu)))
    violation = max(0.0, kl_divergence(q, p_ref) - r) / r
    if violation > PROJECTION_RELATIVE_TOLERANCE:
        raise NonConvergence("kl_ball_project", PROJECTION_MAX_ITER, violation)
    logger.debug("KL-ball projection: nu %.4g, relative violation %.2e", math.exp(log_nu), violation)
    return q


def projection_benchmark(num_classes: int, trials: int, seed: int, radius: float = 0.1) -> ProjectionBenchReport:
    """
    Median wall time of kl_ball_project against one mirror_proximal_update on the same
    random instances, single-threaded.

    :param num_classes: L
    :param trials: Number of random instances; 0 yields an empty report
    :param seed: Seed for the "bench" stream
    """
    if num_classes < 2:
        raise DomainError(f"benchmark needs at least 2 classes, got {num_classes}")
    if trials < 0:
        raise DomainError(f"trial count must be non-negative, got {trials}")
    if trials == 0:
        return ProjectionBenchReport(num_classes, 0)

    rng = Seeding.stream(seed, "bench")
    cfg = AdversaryConfig(r=radius)
    projection_ms, mirror_ms = [], []
    for _ in range(trials):
        p_ref = LabelDistribution(rng.dirichlet(np.full(num_classes, 5.0)))
        pi = LabelDistribution(rng.dirichlet(np.full(num_classes, 5.0)))
        g = rng.exponential(1.0, num_classes)
        target = pi.probs + rng.normal(0.0, 1.0 / num_classes, num_classes) + 0.5 * np.eye(num_classes)[0]

        start = time.perf_counter()
        kl_ball_project(target, p_ref, radius)
        projection_ms.append((time.perf_counter() - start) * 1e3)

        state = AdversaryState(pi=pi, p_emp=p_ref)
        start = time.perf_counter()
        mirror_proximal_update(state, g, cfg.active_alpha, cfg)
        mirror_ms.append((time.perf_counter() - start) * 1e3)

    report = ProjectionBenchReport(
        num_classes, trials, float(np.median(projection_ms)), float(np.median(mirror_ms))
    )
    logger.info(
        "L=%d: projection %.3f ms, mirror step %.3f ms (median of %d)",
        num_classes,
        report.median_projection_ms,
        report.median_mirror_ms,
        trials,
    )
    return report
