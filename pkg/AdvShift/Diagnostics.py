"""
Convergence-theory instrumentation measured on trained models and recorded histories:
the robust objective and its Moreau-envelope stationarity, empirical counterparts of
the assumed constants, and a numeric check of the three-point KL inequality that the
proximal step relies on.
"""
import logging
import math
from typing import Callable, List, Optional, Tuple

import numpy as np

from AdvShift import Seeding
from AdvShift.DataModels.AdversaryState import AdversaryConfig, AdversaryState
from AdvShift.DataModels.Dataset import Dataset
from AdvShift.DataModels.LabelDistribution import LabelDistribution
from AdvShift.DataModels.ModelParams import ModelParams
from AdvShift.DataModels.Reports import DiagnosticsReport, KLRecursionReport
from AdvShift.DataModels.TrainConfig import TrainConfig, TrainHistory
from AdvShift.Evaluator import inner_max_penalized, per_class_losses
from AdvShift.Models.ClassifierModels import batch_losses
from AdvShift.Optimize.Adversary import adversary_gradient, mirror_proximal_update
from AdvShift.Optimize.SimplexCore import kl_divergence
from AdvShift.Trainer import weighted_theta_gradient
from Constants import MOREAU_GRADIENT_TOLERANCE, MOREAU_MAX_ITER
from Exceptions.DomainExceptions import DomainError

logger = logging.getLogger(__name__)


def robust_objective(params: ModelParams, data: Dataset, adv_cfg: AdversaryConfig) -> Tuple[float, np.ndarray]:
    """
    F(theta) = max_pi sum_y pi(y) * (mean loss of class y) + min(0, gamma_c * (r - KL(pi || p))),
    p the label marginal of data, and its gradient at the maximiser (Danskin).

    :return: (F(theta), gradient with the layout of params.weights)
    """
    profile = per_class_losses(params, data)
    value, witness, _ = inner_max_penalized(profile, adv_cfg)
    gradient = weighted_theta_gradient(data, witness, data.marginal, params)
    return value, gradient


def moreau_stationarity(
    params: ModelParams,
    data: Dataset,
    adv_cfg: AdversaryConfig,
    L_hat: float,
    tolerance: float = MOREAU_GRADIENT_TOLERANCE,
    max_iter: int = MOREAU_MAX_ITER,
) -> float:
    """
    Gradient norm of the Moreau envelope F_{1/(2 L_hat)} at theta: 2 * L_hat * ||theta - theta_hat||
    with theta_hat = argmin_w F(w) + L_hat * ||w - theta||^2, found by gradient descent
    with step 1 / (3 * L_hat).

    :param params: Point theta at which stationarity is measured
    :param data: Full sample defining F
    :param adv_cfg: Supplies r and gamma_c of the inner maximization
    :param L_hat: Weak-convexity (smoothness) estimate, > 0
    :return: Non-negative stationarity measure; on hitting max_iter the last iterate is used
    """
    if not L_hat > 0:
        raise DomainError(f"smoothness estimate must be positive, got {L_hat}")
    theta = params.weights
    w = theta.copy()
    step = 1.0 / (3.0 * L_hat)
    norm = math.inf
    for _ in range(max_iter):
        _, grad_f = robust_objective(params.with_weights(w), data, adv_cfg)
        grad = grad_f + 2.0 * L_hat * (w - theta)
        norm = float(np.linalg.norm(grad))
        if norm <= tolerance:
            break
        w = w - step * grad
    else:
        logger.warning("Moreau prox did not reach gradient norm %.1e (last %.3e)", tolerance, norm)
    return float(2.0 * L_hat * np.linalg.norm(theta - w))


def _weighted_loss(params: ModelParams, data: Dataset, pi: LabelDistribution, p_emp: LabelDistribution) -> float:
    weights = pi.probs[data.labels] / p_emp.probs[data.labels]
    return float(np.mean(weights * batch_losses(params, data.features, data.labels)))


def estimate_assumption_constants(
    history: TrainHistory,
    data: Dataset,
    config: TrainConfig,
    samples: int = 20,
    seed: int = 0,
    secant_radius: float = 0.1,
) -> DiagnosticsReport:
    """
    Measures the gradient-noise, adversarial-gradient, Lipschitz, smoothness and
    KL-radius constants along a recorded run.

    Per sample: an epoch snapshot is drawn, a minibatch of the run's size is drawn
    without replacement, and a random direction of length secant_radius gives the
    secant pair for the weighted loss and its gradient.

    :param history: Non-empty training history
    :param data: Training sample of the run
    :param config: The run's configuration (architecture, batch size, clip, epsilon)
    :param samples: Number of sampled (snapshot, minibatch, direction) triples
    :param seed: Seed for the "diagnostics" stream
    """
    if not history.epochs:
        raise DomainError("cannot estimate constants from an empty history")
    rng = Seeding.stream(seed, "diagnostics")
    L = data.num_classes
    batch_size = min(config.batch_size, len(data))
    clip = config.adversary.clip

    sigma_hat = G_hat = lipschitz_hat = smoothness_hat = 0.0
    min_p_emp = math.inf
    for _ in range(samples):
        record = history.epochs[int(rng.integers(len(history.epochs)))]
        params = ModelParams(config.arch, data.dim, L, config.hidden, record.weights)
        pi, p_emp = record.pi, record.p_emp
        min_p_emp = min(min_p_emp, float(p_emp.probs.min()))

        full = weighted_theta_gradient(data, pi, p_emp, params)
        batch = data.subset(rng.choice(len(data), size=batch_size, replace=False))
        sigma_hat = max(sigma_hat, float(np.linalg.norm(weighted_theta_gradient(batch, pi, p_emp, params) - full)))
        losses = batch_losses(params, batch.features, batch.labels)
        g_pi = adversary_gradient(batch.labels, losses, p_emp, clip)
        G_hat = max(G_hat, float(np.abs(g_pi).max()))

        direction = rng.standard_normal(params.size)
        direction *= secant_radius / np.linalg.norm(direction)
        moved = params.with_weights(params.weights + direction)
        loss_gap = abs(_weighted_loss(moved, data, pi, p_emp) - _weighted_loss(params, data, pi, p_emp))
        grad_gap = np.linalg.norm(weighted_theta_gradient(data, pi, p_emp, moved) - full)
        lipschitz_hat = max(lipschitz_hat, loss_gap / secant_radius)
        smoothness_hat = max(smoothness_hat, float(grad_gap) / secant_radius)

    R_hat = max(record.kl_pi_pemp for record in history.epochs)
    if history.steps:
        R_hat = max(R_hat, max(step.kl_pi_pemp for step in history.steps))
    epsilon = config.adversary.epsilon
    R_bound = math.log(L / epsilon) + abs(math.log(epsilon)) if epsilon > 0 else math.inf
    return DiagnosticsReport(
        sigma_hat=sigma_hat,
        G_hat=G_hat,
        G_bound=clip / min_p_emp if samples > 0 else math.inf,
        lipschitz_hat=lipschitz_hat,
        smoothness_hat=smoothness_hat,
        R_hat=float(R_hat),
        R_bound=R_bound,
    )


def stationarity_trace(
    history: TrainHistory, data: Dataset, config: TrainConfig, L_hat: float
) -> List[Tuple[int, float]]:
    """(epoch, Moreau stationarity) for every epoch snapshot of a run."""
    trace = []
    for record in history.epochs:
        params = ModelParams(config.arch, data.dim, data.num_classes, config.hidden, record.weights)
        trace.append((record.epoch, moreau_stationarity(params, data, config.adversary, L_hat)))
    return trace


def _three_point_sides(
    point: np.ndarray, x_star: np.ndarray, x0: np.ndarray, c: np.ndarray
) -> Tuple[float, float]:
    def kl(p: np.ndarray, q: np.ndarray) -> float:
        return kl_divergence(LabelDistribution(p), LabelDistribution(q))

    lhs = float(np.dot(c, point)) + kl(point, x0)
    rhs = float(np.dot(c, x_star)) + kl(x_star, x0) + kl(point, x_star)
    return lhs, rhs


def kl_recursion_check(
    trials: int,
    seed: int,
    points: int = 100,
    tolerance: float = 1e-6,
    perturb: Optional[Callable[[np.ndarray, np.random.Generator], np.ndarray]] = None,
) -> KLRecursionReport:
    """
    Checks l(x') + KL(x', x0) >= l(x*) + KL(x*, x0) + KL(x', x*) - tolerance for linear
    l(x) = <c, x> on the simplex, where x* minimises l + KL(., x0) and is computed by
    the adversary's closed-form step (alpha = 0, epsilon = 0, g = -c / (2 lambda)).

    The first two test points of each trial are the checked point and the exact minimiser;
    the rest are Dirichlet draws. Trials alternate between 3 and 5 classes.

    :param trials: Number of random objectives
    :param seed: Seed for the "diagnostics" stream
    :param perturb: Optional map applied to x* before checking; a non-identity map is a
                    negative control and should produce violations
    :return: Report with the first violating instance as witness
    """
    rng = Seeding.stream(seed, "diagnostics")
    cfg = AdversaryConfig(r=1.0, lambda_=0.5, epsilon=0.0)
    violations = 0
    worst_gap = math.inf
    witness = None
    for trial in range(trials):
        L = 3 if trial % 2 == 0 else 5
        x0 = LabelDistribution(rng.dirichlet(np.ones(L)))
        c = rng.normal(0.0, 2.0, L)
        # with alpha = 0 the step minimises KL(x, x0) / (2 lambda) - <g, x>
        g = -c / (2.0 * cfg.lambda_)
        state = AdversaryState(pi=x0, p_emp=x0)
        x_true = mirror_proximal_update(state, g, 0.0, cfg).probs
        x_star = perturb(x_true, rng) if perturb is not None else x_true
        for k in range(points):
            if k < 2:
                point = (x_star, x_true)[k]
            else:
                point = rng.dirichlet(np.ones(L))
            lhs, rhs = _three_point_sides(point, x_star, x0.probs, c)
            gap = lhs - rhs
            worst_gap = min(worst_gap, gap)
            if gap < -tolerance:
                violations += 1
                if witness is None:
                    witness = {"x0": x0.probs.copy(), "c": c.copy(), "x_star": x_star.copy(), "point": point.copy()}
    report = KLRecursionReport(
        passed=violations == 0,
        trials=trials,
        points=points,
        violations=violations,
        worst_gap=worst_gap if trials > 0 else 0.0,
        witness=witness,
    )
    logger.info("three-point check: %d violations over %d x %d points", violations, trials, points)
    return report
