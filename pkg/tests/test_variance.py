import warnings
from dataclasses import replace

import numpy as np
import pytest
from helpers import (
    FIXTURE_1D,
    HARD,
    mirror_data,
    random_instance,
    separable_instances,
    unequal_variance,
)

from varsvm import (
    ConvergenceError,
    Dataset,
    Hyperplane,
    MissingClassError,
    SolverConfig,
    solve_classical,
    solve_variance,
)
from varsvm.classical import primal_objective
from varsvm.model import class_sigma, class_sigmas, margin_report
from varsvm.oracle import oracle_1d
from varsvm.variance import (
    SigmaFloorWarning,
    finite_difference_gradient,
    gradient_check,
    gradient_descent_refine,
    lagrangian_gradient,
    sigma_gradients,
    solve_fixed_sigma,
    stationarity_residuals,
    variance_primal_objective,
    variance_slack,
)


def _rotate(beta, degrees):
    t = np.radians(degrees)
    rot = np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])
    return rot @ beta


class TestSlackAndObjective:
    def test_point_on_class_margin(self):
        # sigma_+ = 2 along beta = 1; the point x = 2 has y f = 2 = sigma_+
        assert variance_slack(FIXTURE_1D, Hyperplane([1.0], 0.0))[2] == 0.0

    def test_point_on_boundary(self):
        assert variance_slack(FIXTURE_1D, Hyperplane([1.0], -2.0))[2] == 1.0

    def test_scaled_hinge(self):
        data = Dataset([[1.0], [5.0], [-3.0], [-1.0]], [1, 1, -1, -1])
        assert class_sigma(data, 1, [1.0]) == 2.0
        assert variance_slack(data, Hyperplane([1.0], 0.0))[0] == 0.5

    def test_outside_margins_gives_half_norm(self):
        h = Hyperplane([1.0], 0.0)
        assert variance_primal_objective(FIXTURE_1D, h, 10.0) == 0.5

    def test_equal_sigmas_reduce_to_classical(self):
        # mirror classes share their spread along the mirror axis
        data = mirror_data(2, n=10, separation=3.0)
        h = Hyperplane([0.3, 0.0], 0.1)
        s = class_sigma(data, 1, h.beta)
        assert class_sigma(data, -1, h.beta) == pytest.approx(s, rel=1e-12)
        assert np.any(variance_slack(data, h) > 0)
        assert variance_primal_objective(data, h, 1.0) == pytest.approx(
            primal_objective(data, h.scaled(1.0 / s), 1.0) - 0.5 * (h.norm / s) ** 2
            + 0.5 * h.norm ** 2, rel=1e-12)

    def test_independent_recomputation(self):
        data = random_instance(1, n=12, p=2)
        h = Hyperplane([0.4, -0.8], 0.3)
        total = 0.5 * float(h.beta @ h.beta)
        for x, y in zip(data.points, data.labels):
            members = data.points[data.labels == y] @ h.beta / h.norm
            sigma = float(np.sqrt(np.mean((members - members.mean()) ** 2)))
            total += 2.5 * max(0.0, 1.0 - y * (x @ h.beta + h.beta0) / sigma)
        assert variance_primal_objective(data, h, 2.5) == pytest.approx(total, rel=1e-12)


class TestGradient:
    def test_zero_multipliers(self):
        data = random_instance(3, n=10, p=3)
        h = Hyperplane([0.2, 1.0, -0.4], 0.5)
        assert np.array_equal(lagrangian_gradient(data, h, np.zeros(data.n)), h.beta)

    @pytest.mark.parametrize("seed", range(4))
    def test_exact_matches_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        data = random_instance(seed, n=15, p=3)
        for _ in range(20):
            h = Hyperplane(rng.standard_normal(3), rng.uniform(-1, 1))
            assert gradient_check(data, h, rng.uniform(0, 1, data.n)) <= 1e-5

    def test_paper_form_is_off_in_two_dimensions(self):
        rng = np.random.default_rng(0)
        data = random_instance(0, n=20, p=2)
        h = Hyperplane([1.0, 0.7], 0.2)
        assert gradient_check(data, h, rng.uniform(0, 1, data.n), "paper") > 1e-3

    def test_forms_agree_in_one_dimension(self):
        # along a single axis sigma does not depend on beta; both forms give zero
        grads, _ = sigma_gradients(FIXTURE_1D, [1.3], form="exact")
        paper, _ = sigma_gradients(FIXTURE_1D, [1.3], form="paper")
        assert grads[1][0] == pytest.approx(0.0, abs=1e-15) and paper[1][0] == 0.0

    def test_sigma_gradient_finite_differences(self):
        data = random_instance(7, n=12, p=3)
        beta = np.array([0.5, -0.2, 0.9])
        grads, _ = sigma_gradients(data, beta)
        for label in (-1, 1):
            fd = [(class_sigma(data, label, beta + e) - class_sigma(data, label, beta - e)) / 2e-7
                  for e in 1e-7 * np.eye(3)]
            assert np.allclose(grads[label], fd, atol=1e-7)

    def test_floor_warning(self):
        data = Dataset([[0.0, 1.0], [0.0, 3.0], [4.0, 1.0], [5.0, 2.0]], [-1, -1, 1, 1])
        with pytest.warns(SigmaFloorWarning):
            lagrangian_gradient(data, Hyperplane([1.0, 0.0], 0.0), np.ones(4))

    def test_finite_difference_shape(self):
        data = random_instance(0, n=6, p=4)
        fd = finite_difference_gradient(data, Hyperplane(np.ones(4), 0.0), np.zeros(6))
        assert fd.shape == (4,)


class TestStationarity:
    def test_classical_model_with_unit_sigma(self):
        data = random_instance(4, n=16, p=2)
        m = solve_classical(data)
        res = stationarity_residuals(data, m, sigma_override=(1.0, 1.0))
        assert res.max <= 1e-6
        assert res.equality == pytest.approx(abs(float(m.alphas @ data.labels)), abs=1e-15)

    def test_perturbed_alpha(self):
        data = random_instance(4, n=16, p=2)
        m = solve_variance(data)
        base = stationarity_residuals(data, m)
        a = m.alphas.copy()
        a[3] += 0.05
        res = stationarity_residuals(data, replace(m, alphas=a))
        s = m.sigmas[1] if data.labels[3] > 0 else m.sigmas[0]
        assert res.equality == pytest.approx(0.05 / s, abs=base.equality + 1e-12)


class TestFixedSigma:
    def test_unit_sigma_is_classical(self):
        data = random_instance(6, n=20, p=2)
        cfg = SolverConfig(kkt_tol=1e-10)
        inner = solve_fixed_sigma(data, (1.0, 1.0), cfg)
        outer = solve_classical(data, cfg)
        assert np.allclose(inner.alphas, outer.alphas, atol=1e-8)

    def test_scale_of_direction_is_irrelevant(self):
        data = random_instance(6, n=20, p=2)
        beta = np.array([0.3, 0.9])
        assert np.allclose(class_sigmas(data, beta)[:2], class_sigmas(data, 7.0 * beta)[:2],
                           rtol=1e-14, atol=0.0)


class TestSolveVariance:
    def test_fixture(self):
        m = solve_variance(FIXTURE_1D, SolverConfig(cost=HARD))
        assert m.hyperplane.boundary_position() == pytest.approx(0.0, abs=1e-9)
        assert margin_report(FIXTURE_1D, m.hyperplane).ratio_gap <= 1e-9
        # the sweep reaches the same answer without the solver
        assert oracle_1d(FIXTURE_1D).hyperplane.boundary_position() == pytest.approx(0, abs=1e-4)

    def test_missing_class(self):
        with pytest.raises(MissingClassError):
            solve_variance(Dataset([[0.0], [1.0]], [-1, -1]))

    @pytest.mark.parametrize("seed", [0, 5])
    def test_mirror_coincidence(self, seed):
        data = mirror_data(seed, n=60)
        c = solve_classical(data)
        v = solve_variance(data, classical=c)
        assert float(c.hyperplane.unit().beta @ v.hyperplane.unit().beta) >= 0.9999
        assert abs(c.hyperplane.normalized_offset() - v.hyperplane.normalized_offset()) <= 1e-4

    def test_never_worse_than_classical_start(self):
        data = random_instance(9, n=30, p=3)
        v = solve_variance(data)
        assert v.objective <= v.info["classical_objective"] + 1e-12
        assert v.objective <= v.info["alternating_objective"] + 1e-12

    @pytest.mark.parametrize("seed_data", separable_instances(4, 12, ratio=3.0, gap=9.0))
    def test_hard_margin_ratio_equality_and_stationarity(self, seed_data):
        _, data = seed_data
        m = solve_variance(data, SolverConfig(cost=HARD))
        assert margin_report(data, m.hyperplane).ratio_gap <= 1e-4
        assert stationarity_residuals(data, m).max <= 1e-6 * max(1.0, m.hyperplane.norm)

    def test_soft_margin_stationarity(self):
        data = random_instance(12, n=30, p=4)
        m = solve_variance(data)
        assert stationarity_residuals(data, m).max <= 1e-6

    def test_restarts_record_fixed_points(self):
        data = random_instance(2, n=20, p=2)
        m = solve_variance(data, SolverConfig(restarts=3, seed=1))
        assert m.info["restarts"] == 3 and len(m.info["fixed_points"]) >= 1
        assert all(fp["objective"] >= m.objective - 1e-9 for fp in m.info["fixed_points"])

    def test_outer_budget_flagged(self):
        data = unequal_variance(1, n=40)
        m = solve_variance(data, SolverConfig(max_outer=1, polish=False))
        assert not m.converged and not m.info["outer_converged"]

    def test_hard_margin_boundary_moves_toward_narrow_class(self):
        data = unequal_variance(3, n=60, gap=16.0)
        cfg = SolverConfig(cost=HARD)
        c, v = solve_classical(data, cfg), solve_variance(data, cfg)
        narrow_mean = data.points[data.labels > 0].mean(axis=0)

        def distance(h):
            u = h.unit()
            return narrow_mean @ u.beta + u.beta0

        assert distance(v.hyperplane) < distance(c.hyperplane)

    def test_soft_margin_symmetry_can_break(self):
        # with overlapping mirror classes at C = 1 the mirror line is stationary but
        # not optimal: an off-centre solution has a strictly lower objective
        data = mirror_data(12, separation=6.0)
        c = solve_classical(data)
        v = solve_variance(data, classical=c)
        assert v.objective < variance_primal_objective(data, c.hyperplane, 1.0) - 1e-3
        assert abs(v.hyperplane.normalized_offset()) > 0.1
        assert stationarity_residuals(data, v).max <= 1e-6


class TestRefine:
    def test_converged_start_barely_moves(self):
        data = random_instance(5, n=20, p=2)
        m = solve_variance(data)
        r = gradient_descent_refine(data, m.hyperplane)
        assert r.objective <= r.start_objective
        assert r.start_objective - r.objective <= 1e-8 * max(1.0, r.start_objective) + 1e-6

    def test_rotated_start_improves(self):
        data = random_instance(5, n=20, p=2)
        m = solve_variance(data)
        start = Hyperplane(_rotate(m.hyperplane.beta, 5.0), m.hyperplane.beta0)
        r = gradient_descent_refine(data, start)
        assert r.objective < r.start_objective
        assert r.objective >= m.objective - 1e-6 * max(1.0, m.objective)

    def test_history_nonincreasing(self):
        data = random_instance(8, n=20, p=3)
        r = gradient_descent_refine(data, Hyperplane([1.0, 0.0, 0.0], 0.0))
        assert all(b <= a for a, b in zip(r.history, r.history[1:]))


def test_nonconvergence_error_carries_model():
    data = unequal_variance(0, n=100)
    with pytest.raises(ConvergenceError) as info:
        solve_fixed_sigma(data, (1.0, 2.0), SolverConfig(max_passes=1, kkt_tol=1e-12))
    assert info.value.model.variant == "variance"
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        solve_fixed_sigma(data, (1.0, 2.0))
