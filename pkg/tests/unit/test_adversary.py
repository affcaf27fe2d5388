import itertools
import math

import numpy as np
import pytest

from AdvShift.DataModels.AdversaryState import AdversaryConfig, AdversaryState
from AdvShift.DataModels.LabelDistribution import LabelDistribution
from AdvShift.DataModels.ModelParams import ModelParams
from AdvShift.Models.ClassifierModels import batch_loss_gradients, batch_losses
from AdvShift.Optimize.Adversary import (
    adversary_gradient,
    ema_update,
    exact_proximal_update,
    lagrange_alpha,
    mirror_proximal_update,
    proximal_objective,
    proximal_step_size,
)
from AdvShift.Optimize.SimplexCore import kl_divergence, normalize
from AdvShift.Trainer import weighted_theta_gradient
from Exceptions.ConfigExceptions import ConfigError
from Exceptions.DomainExceptions import DomainError
from tests.conftest import grid_kl, simplex_grid


class TestAdversaryConfig:
    def test_gamma_defaults_to_unit_product(self):
        cfg = AdversaryConfig(lambda_=0.25)
        assert cfg.gamma_c == pytest.approx(2.0)
        assert cfg.active_alpha == pytest.approx(1.0)

    def test_default_step_scale(self):
        cfg = AdversaryConfig()
        assert cfg.lambda_ == pytest.approx(0.05)
        assert cfg.gamma_c == pytest.approx(10.0)
        assert proximal_step_size(0.0, cfg) == pytest.approx(0.1)
        assert proximal_step_size(cfg.active_alpha, cfg) == pytest.approx(0.05)

    @pytest.mark.parametrize(
        "kwargs, key",
        [({"r": -0.1}, "r"), ({"lambda_": 0.0}, "lambda"), ({"epsilon": 1.0}, "epsilon"),
         ({"clip": 0.0}, "clip"), ({"beta": 1.5}, "beta"), ({"gamma_c": -1.0}, "gamma_c")],
    )
    def test_invalid_values_name_the_key(self, kwargs, key):
        with pytest.raises(ConfigError) as exc:
            AdversaryConfig(**kwargs)
        assert exc.value.key == key


class TestAdversaryGradient:
    def test_symmetric_batch(self):
        g = adversary_gradient([0, 1], [1.0, 1.0], LabelDistribution.uniform(2), clip=2.0)
        np.testing.assert_allclose(g, [1.0, 1.0])

    def test_clip_then_weight(self):
        g = adversary_gradient([0], [5.0], LabelDistribution.uniform(2), clip=2.0)
        np.testing.assert_allclose(g, [4.0, 0.0])

    def test_zero_mass_label_is_rejected(self):
        with pytest.raises(DomainError):
            adversary_gradient([1], [1.0], LabelDistribution([1.0, 0.0]), clip=2.0)

    def test_empty_batch_is_rejected(self, uniform3):
        with pytest.raises(DomainError):
            adversary_gradient([], [], uniform3, clip=2.0)

    def test_bounded_by_clip_over_min_mass(self):
        rng = np.random.default_rng(0)
        p_emp = LabelDistribution([0.1, 0.3, 0.6])
        for _ in range(20):
            labels = rng.integers(0, 3, 8)
            losses = rng.exponential(3.0, 8)
            assert np.abs(adversary_gradient(labels, losses, p_emp, 2.0)).max() <= 2.0 / 0.1 + 1e-12


class TestLagrangeAlpha:
    def setup_method(self):
        self.cfg = AdversaryConfig(r=0.1, lambda_=0.5)

    def test_inside_ball(self, uniform3):
        assert lagrange_alpha(uniform3, uniform3, self.cfg) == 0.0

    def test_outside_ball(self):
        pi = LabelDistribution([1.0, 0.0])
        assert lagrange_alpha(pi, LabelDistribution.uniform(2), self.cfg) == pytest.approx(1.0)

    def test_switches_once_along_a_segment(self, uniform3):
        target = LabelDistribution([0.9, 0.05, 0.05])
        alphas = []
        for t in np.linspace(0.0, 1.0, 101):
            pi = LabelDistribution((1 - t) * uniform3.probs + t * target.probs)
            alpha = lagrange_alpha(pi, uniform3, self.cfg)
            assert alpha == (self.cfg.active_alpha if kl_divergence(pi, uniform3) > self.cfg.r else 0.0)
            alphas.append(alpha)
        switches = np.count_nonzero(np.diff(alphas))
        assert switches == 1

    def test_zero_radius_is_always_active(self, uniform3):
        cfg = AdversaryConfig(r=0.0, lambda_=0.5)
        assert lagrange_alpha(uniform3, uniform3, cfg) == cfg.active_alpha


def grid_objective(points, pi_t, p_emp, g, alpha, lam):
    return (alpha * grid_kl(points, p_emp) + grid_kl(points, pi_t)) / (2.0 * lam) - points @ g


class TestMirrorProximalUpdate:
    def test_fixed_point_without_gradient(self):
        state = AdversaryState(pi=LabelDistribution([0.5, 0.3, 0.2]), p_emp=LabelDistribution.uniform(3))
        cfg = AdversaryConfig(epsilon=0.0)
        assert mirror_proximal_update(state, np.zeros(3), 0.0, cfg).allclose(state.pi, atol=1e-12)

    def test_reduces_to_exponentiated_gradient(self):
        rng = np.random.default_rng(1)
        cfg = AdversaryConfig(lambda_=0.3, epsilon=0.0)
        state = AdversaryState(pi=LabelDistribution(rng.dirichlet(np.ones(4))), p_emp=LabelDistribution.uniform(4))
        g = rng.normal(0, 1, 4)
        expected = normalize(state.pi.probs * np.exp(proximal_step_size(0.0, cfg) * g))
        assert mirror_proximal_update(state, g, 0.0, cfg).allclose(expected, atol=1e-12)

    def test_step_size(self):
        cfg = AdversaryConfig(lambda_=0.5)
        assert proximal_step_size(0.0, cfg) == pytest.approx(1.0)
        assert proximal_step_size(1.0, cfg) == pytest.approx(0.5)
        assert proximal_step_size(1.0, cfg, eta_pi=0.01) == 0.01

    @pytest.mark.parametrize("alpha", [0.0, 1.0])
    @pytest.mark.parametrize("lam", [0.1, 1.0])
    def test_matches_grid_argmin_on_three_classes(self, alpha, lam):
        rng = np.random.default_rng(int(10 * alpha + 100 * lam))
        grid = simplex_grid(5e-4)
        cfg = AdversaryConfig(lambda_=lam, epsilon=0.0)
        for _ in range(12):
            pi_t = LabelDistribution(rng.dirichlet(np.full(3, 5.0)))
            p_emp = LabelDistribution(rng.dirichlet(np.full(3, 5.0)))
            g = rng.normal(0.0, 0.5, 3)
            state = AdversaryState(pi=pi_t, p_emp=p_emp)
            updated = mirror_proximal_update(state, g, alpha, cfg)
            values = grid_objective(grid, pi_t.probs, p_emp.probs, g, alpha, lam)
            best = grid[np.argmin(values)]
            assert np.abs(updated.probs - best).sum() <= 2e-3
            assert proximal_objective(updated, state, g, alpha, cfg) <= values.min() + 1e-6

    @pytest.mark.parametrize("alpha", [0.0, 1.0])
    @pytest.mark.parametrize("lam", [0.1, 1.0])
    def test_first_order_conditions_on_five_classes(self, alpha, lam):
        rng = np.random.default_rng(int(7 + 10 * alpha + 100 * lam))
        cfg = AdversaryConfig(lambda_=lam, epsilon=0.0)
        for _ in range(12):
            state = AdversaryState(
                pi=LabelDistribution(rng.dirichlet(np.full(5, 2.0))),
                p_emp=LabelDistribution(rng.dirichlet(np.full(5, 2.0))),
            )
            g = rng.normal(0.0, 1.0, 5)
            pi = mirror_proximal_update(state, g, alpha, cfg).probs
            # gradient of the objective is constant across coordinates at an interior minimiser
            grad = (alpha * np.log(pi / state.p_emp.probs) + np.log(pi / state.pi.probs)) / (2.0 * lam) - g
            assert np.ptp(grad) <= 1e-9

    @pytest.mark.parametrize("alpha", [0.0, 0.5, 2.0])
    def test_three_point_identity(self, alpha):
        """Test that the objective grows by exactly (1 + alpha) KL(x, pi_next) away from the update."""
        rng = np.random.default_rng(int(3 + 10 * alpha))
        cfg = AdversaryConfig(lambda_=0.25, epsilon=0.0)
        state = AdversaryState(
            pi=LabelDistribution(rng.dirichlet(np.full(4, 3.0))),
            p_emp=LabelDistribution(rng.dirichlet(np.full(4, 3.0))),
        )
        g = rng.normal(0.0, 1.0, 4)
        updated = mirror_proximal_update(state, g, alpha, cfg)
        at_update = proximal_objective(updated, state, g, alpha, cfg)
        scale = 1.0 / (2.0 * cfg.lambda_)
        for _ in range(20):
            other = LabelDistribution(rng.dirichlet(np.ones(4)))
            gap = proximal_objective(other, state, g, alpha, cfg) - at_update
            assert gap == pytest.approx(scale * (1.0 + alpha) * kl_divergence(other, updated), abs=1e-9)

    @pytest.mark.parametrize("alpha", [0.0, 1.0])
    def test_update_does_not_increase_the_objective(self, alpha):
        rng = np.random.default_rng(21)
        cfg = AdversaryConfig(lambda_=0.05, epsilon=0.0)
        for _ in range(10):
            state = AdversaryState(
                pi=LabelDistribution(rng.dirichlet(np.full(5, 2.0))),
                p_emp=LabelDistribution(rng.dirichlet(np.full(5, 2.0))),
            )
            g = rng.normal(0.0, 2.0, 5)
            updated = mirror_proximal_update(state, g, alpha, cfg)
            assert proximal_objective(updated, state, g, alpha, cfg) <= (
                proximal_objective(state.pi, state, g, alpha, cfg) + 1e-12
            )

    def test_repeated_steps_climb_a_fixed_payoff(self, uniform3):
        cfg = AdversaryConfig(lambda_=0.05, epsilon=0.0)
        g = np.array([0.3, 1.2, 0.7])
        pi = uniform3
        payoffs = [float(g @ pi.probs)]
        for _ in range(50):
            pi = mirror_proximal_update(AdversaryState(pi=pi, p_emp=uniform3), g, 0.0, cfg)
            payoffs.append(float(g @ pi.probs))
        assert all(b >= a - 1e-12 for a, b in zip(payoffs, payoffs[1:]))
        assert pi.probs[1] > 0.9

    def test_epsilon_floor(self):
        state = AdversaryState(pi=LabelDistribution.uniform(4), p_emp=LabelDistribution.uniform(4))
        cfg = AdversaryConfig(epsilon=0.01)
        updated = mirror_proximal_update(state, np.array([100.0, 0.0, 0.0, 0.0]), 0.0, cfg)
        assert updated.probs.min() >= 0.01 / 4 - 1e-15

    def test_boundary_state_is_rejected(self):
        state = AdversaryState(pi=LabelDistribution([1.0, 0.0]), p_emp=LabelDistribution.uniform(2))
        with pytest.raises(DomainError):
            mirror_proximal_update(state, np.zeros(2), 0.0, AdversaryConfig())

    def test_gradient_shape_is_checked(self, uniform3):
        state = AdversaryState(pi=uniform3, p_emp=uniform3)
        with pytest.raises(DomainError):
            mirror_proximal_update(state, np.zeros(2), 0.0, AdversaryConfig())


class TestProximalObjective:
    def test_zero_at_current_point(self):
        state = AdversaryState(pi=LabelDistribution([0.2, 0.8]), p_emp=LabelDistribution.uniform(2))
        assert proximal_objective(state.pi, state, np.zeros(2), 0.0, AdversaryConfig()) == pytest.approx(0.0)


class TestExactProximalUpdate:
    def test_inside_ball_is_unpenalised_step(self, uniform3):
        g = np.array([0.01, 0.0, -0.01])
        updated = exact_proximal_update(uniform3, uniform3, g, r=1.0, gamma_c=5.0, lam=0.5)
        expected = normalize(uniform3.probs * np.exp(2 * 0.5 * g))
        assert updated.allclose(expected, atol=1e-12)

    def test_kink_lands_on_the_sphere(self, uniform3):
        g = np.array([3.0, 0.0, 0.0])
        updated = exact_proximal_update(uniform3, uniform3, g, r=0.05, gamma_c=1e4, lam=0.5)
        assert kl_divergence(updated, uniform3) == pytest.approx(0.05, abs=1e-9)

    def test_matches_grid_argmin_of_hinge_objective(self):
        rng = np.random.default_rng(5)
        grid = simplex_grid(1e-3)
        for _ in range(6):
            pi_t = LabelDistribution(rng.dirichlet(np.full(3, 3.0)))
            p_ref = LabelDistribution(rng.dirichlet(np.full(3, 3.0)))
            g = rng.normal(0.0, 2.0, 3)
            r, gamma_c, lam = 0.05, 2.0, 0.5
            updated = exact_proximal_update(pi_t, p_ref, g, r, gamma_c, lam)

            def objective(points):
                return (
                    gamma_c * np.maximum(grid_kl(points, p_ref.probs) - r, 0.0)
                    + grid_kl(points, pi_t.probs) / (2 * lam)
                    - points @ g
                )

            values = objective(grid)
            assert objective(updated.probs[None, :])[0] <= values.min() + 1e-9
            assert np.abs(updated.probs - grid[np.argmin(values)]).sum() <= 1e-2


class TestEmaUpdate:
    def test_unit_decay_is_identity(self, uniform3):
        assert ema_update(uniform3, [0, 0, 1], 1.0) is uniform3

    def test_zero_decay_is_batch_histogram(self, uniform3):
        np.testing.assert_allclose(ema_update(uniform3, [0, 0, 0], 0.0).probs, [1.0, 0.0, 0.0])

    def test_tracks_generator_marginal(self):
        rng = np.random.default_rng(6)
        q = np.array([0.5, 0.3, 0.15, 0.05])
        p_emp = LabelDistribution.uniform(4)
        for _ in range(10_000):
            p_emp = ema_update(p_emp, rng.choice(4, size=32, p=q), 0.999)
        assert np.abs(p_emp.probs - q).max() <= 0.02

    def test_empty_batch_is_rejected(self, uniform3):
        with pytest.raises(DomainError):
            ema_update(uniform3, [], 0.5)


class TestImportanceWeightedUnbiasedness:
    def test_minibatch_averages_match_full_sample(self, small_dataset):
        data = small_dataset.subset(np.arange(30))
        rng = np.random.default_rng(8)
        params = ModelParams.initialize("linear", data.dim, 3, 0, rng)
        params = params.with_weights(rng.normal(0.0, 0.5, params.size))
        p_emp = data.marginal
        pi = LabelDistribution([0.5, 0.3, 0.2])
        clip = 2.0
        losses = batch_losses(params, data.features, data.labels)

        exact_theta = weighted_theta_gradient(data, pi, p_emp, params)
        clipped = np.minimum(losses, clip) / p_emp.probs[data.labels]
        exact_pi = np.bincount(data.labels, weights=clipped, minlength=3) / len(data)

        # every size-5 batch once: the average is the exact expectation under uniform sampling
        sum_theta = np.zeros(params.size)
        sum_pi = np.zeros(3)
        batches = 0
        for idx in itertools.combinations(range(len(data)), 5):
            idx = np.array(idx)
            batch = data.subset(idx)
            sum_theta += weighted_theta_gradient(batch, pi, p_emp, params)
            sum_pi += adversary_gradient(batch.labels, losses[idx], p_emp, clip)
            batches += 1

        np.testing.assert_allclose(sum_theta / batches, exact_theta, atol=1e-10)
        np.testing.assert_allclose(sum_pi / batches, exact_pi, atol=1e-10)

    def test_monte_carlo_batches_are_close(self, small_dataset):
        data = small_dataset.subset(np.arange(30))
        rng = np.random.default_rng(9)
        params = ModelParams.initialize("linear", data.dim, 3, 0, rng)
        p_emp = data.marginal
        pi = LabelDistribution([0.2, 0.3, 0.5])
        exact = weighted_theta_gradient(data, pi, p_emp, params)
        draws = 20_000
        total = np.zeros(params.size)
        for _ in range(draws):
            total += weighted_theta_gradient(data.subset(rng.choice(30, size=5, replace=False)), pi, p_emp, params)
        assert np.linalg.norm(total / draws - exact) <= 0.05 * np.linalg.norm(exact) + 0.01

    def test_uniform_weights_for_equal_distributions(self, small_dataset):
        p_emp = small_dataset.marginal
        params = ModelParams.initialize("linear", 2, 3, 0, np.random.default_rng(0))
        weighted = weighted_theta_gradient(small_dataset, p_emp, p_emp, params)
        plain = batch_loss_gradients(params, small_dataset.features, small_dataset.labels).mean(axis=0)
        np.testing.assert_allclose(weighted, plain, atol=1e-12)

    def test_log_two_divergence(self):
        assert kl_divergence(LabelDistribution([1.0, 0.0]), LabelDistribution.uniform(2)) == pytest.approx(math.log(2))
