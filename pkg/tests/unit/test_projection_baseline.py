import numpy as np
import pytest

from AdvShift.DataModels.LabelDistribution import LabelDistribution
from AdvShift.Optimize.ProjectionBaseline import kl_ball_project, projection_benchmark
from AdvShift.Optimize.SimplexCore import euclidean_project_simplex, kl_divergence
from Exceptions.DomainExceptions import DomainError
from tests.conftest import grid_kl, simplex_grid


class TestKLBallProject:
    def setup_method(self):
        self.p_ref = LabelDistribution([0.5, 0.3, 0.2])

    def test_feasible_point_is_returned(self):
        q = kl_ball_project([0.45, 0.35, 0.2], self.p_ref, 0.1)
        np.testing.assert_allclose(q.probs, [0.45, 0.35, 0.2], atol=1e-12)

    def test_slack_radius_reduces_to_simplex_projection(self):
        v = [0.9, 0.4, -0.1]
        q = kl_ball_project(v, self.p_ref, 50.0)
        assert q.allclose(euclidean_project_simplex(v), atol=1e-12)

    def test_active_constraint_lands_on_sphere(self):
        q = kl_ball_project([1.5, 0.0, 0.0], self.p_ref, 0.05)
        assert kl_divergence(q, self.p_ref) == pytest.approx(0.05, rel=1e-2)

    def test_matches_grid_search(self):
        rng = np.random.default_rng(0)
        grid = simplex_grid(1e-3)
        for _ in range(10):
            p_ref = LabelDistribution(rng.dirichlet(np.full(3, 4.0)))
            p = rng.dirichlet(np.ones(3)) + rng.normal(0.0, 0.3, 3)
            r = 0.1
            feasible = grid[grid_kl(grid, p_ref.probs) <= r]
            best = np.sqrt(((feasible - p) ** 2).sum(axis=1).min())
            q = kl_ball_project(p, p_ref, r)
            distance = np.linalg.norm(q.probs - p)
            assert best - 2e-3 <= distance <= best + 1e-9
            assert kl_divergence(q, p_ref) <= r * (1 + 1e-2)

    @pytest.mark.parametrize("r", [0.0, -1.0])
    def test_non_positive_radius(self, r):
        with pytest.raises(DomainError):
            kl_ball_project([0.2, 0.3, 0.5], self.p_ref, r)

    def test_length_mismatch(self):
        with pytest.raises(DomainError):
            kl_ball_project([0.5, 0.5], self.p_ref, 0.1)

    def test_boundary_centre(self):
        with pytest.raises(DomainError):
            kl_ball_project([0.5, 0.5], LabelDistribution([1.0, 0.0]), 0.1)


class TestProjectionBenchmark:
    def test_no_trials_gives_empty_report(self):
        report = projection_benchmark(5, 0, seed=0)
        assert report.trials == 0
        assert report.median_projection_ms is None
        assert report.ratio is None

    def test_reports_positive_timings(self):
        report = projection_benchmark(10, 3, seed=1)
        assert report.num_classes == 10
        assert report.median_projection_ms > 0
        assert report.median_mirror_ms > 0
        assert report.ratio > 0

    @pytest.mark.parametrize("num_classes, trials", [(1, 3), (4, -1)])
    def test_invalid_arguments(self, num_classes, trials):
        with pytest.raises(DomainError):
            projection_benchmark(num_classes, trials, seed=0)

    @pytest.mark.slow
    def test_projection_is_far_slower_than_the_closed_form_step(self):
        report = projection_benchmark(num_classes=1000, trials=3, seed=0)
        assert report.ratio >= 100
