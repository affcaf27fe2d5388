import logging
import math
from dataclasses import replace
from typing import Tuple

import numpy as np

from AdvShift import Seeding
from AdvShift.DataModels.AdversaryState import AdversaryState
from AdvShift.DataModels.Dataset import Dataset
from AdvShift.DataModels.LabelDistribution import LabelDistribution
from AdvShift.DataModels.ModelParams import ModelParams
from AdvShift.DataModels.TrainConfig import EpochRecord, StepRecord, TrainConfig, TrainHistory
from AdvShift.Models.ClassifierModels import batch_loss_gradients, batch_losses, predict_batch
from AdvShift.Optimize.Adversary import adversary_gradient, ema_update, lagrange_alpha, mirror_proximal_update
from AdvShift.Optimize.SimplexCore import euclidean_project_simplex, kl_divergence
from Exceptions.ConfigExceptions import ConfigError
from Exceptions.DomainExceptions import DomainError, ShapeError

logger = logging.getLogger(__name__)


def weighted_theta_gradient(
    batch: Dataset, pi: LabelDistribution, p_emp: LabelDistribution, params: ModelParams
) -> np.ndarray:
    """
    Importance-weighted minibatch gradient (1 / b) * sum_i pi(y_i) / p_emp(y_i) * grad loss_i.

    :param batch: Minibatch
    :param pi: Weighting distribution
    :param p_emp: Estimated label marginal, positive on every batch label
    :param params: Current parameters
    :return: Flat gradient, same layout as params.weights
    """
    if len(batch) == 0:
        raise DomainError("empty minibatch")
    p_labels = p_emp.probs[batch.labels]
    if np.any(p_labels <= 0):
        raise DomainError("a batch label has zero mass under p_emp")
    weights = pi.probs[batch.labels] / p_labels
    gradients = batch_loss_gradients(params, batch.features, batch.labels)
    # np.sum reduces pairwise, so the result does not depend on evaluation order
    return np.sum(weights[:, None] * gradients, axis=0) / len(batch)


def sgd_momentum_step(
    params: np.ndarray, grad: np.ndarray, velocity: np.ndarray, lr: float, momentum: float
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Heavy-ball step: v' = momentum * v + grad, params' = params - lr * v'.
    """
    params = np.asarray(params, dtype=float)
    grad = np.asarray(grad, dtype=float)
    velocity = np.asarray(velocity, dtype=float)
    if not (params.shape == grad.shape == velocity.shape):
        raise ShapeError(f"shapes disagree: params {params.shape}, grad {grad.shape}, velocity {velocity.shape}")
    new_velocity = momentum * velocity + grad
    return params - lr * new_velocity, new_velocity


class AdvShiftTrainer:
    """
    Gradient descent on the model parameters with proximal mirror ascent on the label
    weights, plus the baselines that share its loop.

    Per step: draw a minibatch (per-epoch shuffle, no replacement), take an
    importance-weighted parameter step with the current pi and label marginal
    estimate, fold the batch labels into the estimate, then update the weighting
    distribution with losses evaluated at the new parameters:

        advshift  closed-form proximal step with sign-switched multiplier
        agnostic  Euclidean projection of pi + agnostic_lr * g
        erm       pi tracks p_emp (all weights 1)
        balanced  pi uniform
        fixed     pi held at the configured distribution

    Methods:
        train(config: TrainConfig, data: Dataset) -> Tuple[ModelParams, TrainHistory]
    """

    def train(self, config: TrainConfig, data: Dataset) -> Tuple[ModelParams, TrainHistory]:
        """
        Runs the configured method for config.epochs epochs.

        :param config: Run configuration
        :param data: Training sample covering every class
        :return: Final parameters and the per-epoch / per-step history
        """
        self._validate(config, data)
        L = data.num_classes
        n = len(data)
        params = ModelParams.initialize(config.arch, data.dim, L, config.hidden, Seeding.stream(config.seed, "init"))
        velocity = np.zeros(params.size)
        state = AdversaryState.initial(L)
        uniform = LabelDistribution.uniform(L)
        batch_rng = Seeding.stream(config.seed, "batches")
        history = TrainHistory(method=config.method)
        adv_cfg = config.adversary
        step = 0

        for epoch in range(1, config.epochs + 1):
            lr = config.lr_at(epoch - 1)
            order = batch_rng.permutation(n)
            loss_sum = 0.0
            class_loss_sum = np.zeros(L)
            class_seen = np.zeros(L)
            for start in range(0, n, config.batch_size):
                batch = data.subset(order[start : start + config.batch_size])
                # pi_t and p_emp_t come from the same step
                weighting = self._weighting(config, state, uniform)

                losses = batch_losses(params, batch.features, batch.labels)
                loss_sum += losses.sum()
                class_loss_sum += np.bincount(batch.labels, weights=losses, minlength=L)
                class_seen += np.bincount(batch.labels, minlength=L)

                kl_before = kl_divergence(weighting, state.p_emp)
                grad = weighted_theta_gradient(batch, weighting, state.p_emp, params)
                new_weights, velocity = sgd_momentum_step(params.weights, grad, velocity, lr, config.momentum)
                params = params.with_weights(new_weights)

                p_emp = ema_update(state.p_emp, batch.labels, adv_cfg.beta)
                state = replace(state, p_emp=p_emp)
                if config.method == "erm":
                    state = replace(state, pi=p_emp)

                alpha = 0.0
                if config.method in ("advshift", "agnostic"):
                    post_losses = batch_losses(params, batch.features, batch.labels)
                    g_pi = adversary_gradient(batch.labels, post_losses, p_emp, adv_cfg.clip)
                    if config.method == "advshift":
                        alpha = lagrange_alpha(state.pi, p_emp, adv_cfg)
                        pi = mirror_proximal_update(state, g_pi, alpha, adv_cfg, config.eta_pi_override)
                    else:
                        pi = euclidean_project_simplex(state.pi.probs + config.agnostic_lr * g_pi)
                    state = AdversaryState(pi=pi, p_emp=p_emp, step=state.step + 1)
                step += 1
                history.steps.append(
                    StepRecord(
                        step=step,
                        alpha=alpha,
                        kl_pi_pemp=kl_before,
                        weights=params.weights.copy() if config.record_params else None,
                    )
                )

            weighting = self._weighting(config, state, uniform)
            record = EpochRecord(
                epoch=epoch,
                mean_loss=loss_sum / n,
                class_losses=np.divide(
                    class_loss_sum, class_seen, out=np.full(L, np.nan), where=class_seen > 0
                ),
                pi=weighting,
                p_emp=state.p_emp,
                kl_pi_pemp=kl_divergence(weighting, state.p_emp),
                class_errors=self._class_errors(params, data),
                weights=params.weights.copy(),
            )
            history.epochs.append(record)
            logger.info(
                "%s epoch %d/%d: mean loss %.4f, KL(pi||p_emp) %.4f",
                config.method,
                epoch,
                config.epochs,
                record.mean_loss,
                record.kl_pi_pemp,
            )
        return params, history

    def _validate(self, config: TrainConfig, data: Dataset) -> None:
        if len(data) == 0 or data.num_classes == 0:
            raise ConfigError("data", "training data is empty")
        if not data.covers_all_classes():
            missing = np.nonzero(data.class_counts == 0)[0].tolist()
            raise ConfigError("data", f"training data has no examples of classes {missing}")
        if config.batch_size > len(data):
            raise ConfigError("batch", f"batch size {config.batch_size} exceeds dataset size {len(data)}")
        if config.method == "fixed" and config.fixed_pi.num_classes != data.num_classes:
            raise ConfigError("fixed_pi", f"expected {data.num_classes} entries")

    def _weighting(self, config: TrainConfig, state: AdversaryState, uniform: LabelDistribution) -> LabelDistribution:
        if config.method == "erm":
            return state.p_emp
        if config.method == "balanced":
            return uniform
        if config.method == "fixed":
            return config.fixed_pi
        return state.pi

    def _class_errors(self, params: ModelParams, data: Dataset) -> np.ndarray:
        wrong = predict_batch(params, data.features) != data.labels
        errors = np.bincount(data.labels, weights=wrong.astype(float), minlength=data.num_classes)
        return errors / np.maximum(data.class_counts, 1)


def steps_per_epoch(n: int, batch_size: int) -> int:
    return int(math.ceil(n / batch_size))


def theory_total_steps(n: int, epochs: int) -> int:
    """
    Step count T consistent with the theory schedule's batch size ceil(sqrt(T)):
    the fixed point of T = epochs * ceil(n / ceil(sqrt(T))).
    """
    total = epochs * n
    for _ in range(50):
        batch = min(n, int(math.ceil(math.sqrt(total))))
        updated = epochs * steps_per_epoch(n, batch)
        if updated == total:
            break
        total = updated
    return total
