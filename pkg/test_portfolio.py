"""
Tests for moment estimation, the penalized portfolio problems and branch-and-bound
"""

import numpy as np
import pytest

from mtd_portfolio_tool.exceptions import InfeasiblePortfolioError, InputDataError
from mtd_portfolio_tool.portfolio import (
    BranchAndBound,
    MarketMoments,
    PenaltySpec,
    PortfolioInstance,
    PortfolioProblem,
    SolverOptions,
    brute_force_search,
    estimate_moments,
    load_instance,
    markowitz_benchmark,
    max_quadratic_utility,
    max_sharpe,
    portfolio_penalty,
    save_instance,
    solve_portfolio,
)


def _random_moments(rng, n, days=60):
    R = rng.normal(0.0005, 0.01, size=(days, n)) + rng.normal(0.0, 0.004, size=(days, 1))
    moments = estimate_moments(R)
    mu = moments.mu.copy()
    mu[0] = abs(mu[0]) + 1e-4
    return MarketMoments(mu=mu, sigma=moments.sigma)


def _assert_feasible(solution, gamma):
    x, y = solution.x, solution.y
    assert x.sum() == pytest.approx(1.0, abs=1e-9)
    assert np.all(x >= gamma * y - 1e-9)
    assert np.all(x <= y + 1e-9)
    assert set(np.unique(y)) <= {0, 1}
    assert y.sum() >= 1


class TestEstimateMoments:
    def test_matches_numpy(self):
        R = np.random.default_rng(0).normal(size=(40, 3))
        moments = estimate_moments(R)
        np.testing.assert_allclose(moments.mu, R.mean(axis=0))
        np.testing.assert_allclose(moments.sigma, np.cov(R, rowvar=False), atol=1e-12)

    def test_short_window_is_positive_definite(self):
        R = np.random.default_rng(1).normal(size=(5, 8))
        sigma = estimate_moments(R).sigma
        assert np.linalg.eigvalsh(sigma).min() > 0
        np.testing.assert_array_equal(sigma, sigma.T)

    def test_needs_two_rows(self):
        with pytest.raises(InputDataError):
            estimate_moments(np.ones((1, 3)))

    def test_moments_validation(self):
        with pytest.raises(InputDataError):
            MarketMoments(mu=np.zeros(2), sigma=np.eye(3))
        with pytest.raises(InputDataError):
            MarketMoments(mu=np.zeros(2), sigma=np.array([[1.0, 0.5], [0.0, 1.0]]))


class TestPenalty:
    def test_forms(self):
        rho = np.array([0.2, -0.1, 0.4])
        x = np.array([0.5, 0.5, 0.0])
        y = np.array([1, 1, 0])
        assert portfolio_penalty(PenaltySpec(rho, "weighted", 2.0), x, y) == pytest.approx(2.0 * 0.05)
        assert portfolio_penalty(PenaltySpec(rho, "simple", 2.0), x, y) == pytest.approx(2.0 * 0.1)
        assert portfolio_penalty(PenaltySpec(rho, "none", 2.0), x, y) == 0.0

    def test_zero_scale_or_zero_rho_is_no_penalty(self):
        assert PenaltySpec(np.array([0.3, 0.1]), "weighted", 0.0).effective_form == "none"
        assert PenaltySpec(np.zeros(2), "simple", 1.0).effective_form == "none"

    def test_validation(self):
        with pytest.raises(InputDataError):
            PenaltySpec(np.zeros(2), "quadratic")
        with pytest.raises(InputDataError):
            PenaltySpec(np.zeros(2), "weighted", -1.0)
        with pytest.raises(InputDataError):
            portfolio_penalty(PenaltySpec(np.zeros(2), "weighted"), np.zeros(3), np.zeros(3))


class TestConstraints:
    def test_gamma_above_one_is_infeasible(self):
        moments = _random_moments(np.random.default_rng(2), 3)
        with pytest.raises(InfeasiblePortfolioError):
            max_quadratic_utility(moments, PenaltySpec.none(3), gamma=1.5)

    def test_gamma_must_be_positive(self):
        moments = _random_moments(np.random.default_rng(3), 3)
        with pytest.raises(InputDataError):
            max_sharpe(moments, PenaltySpec.none(3), gamma=0.0)

    def test_single_asset(self):
        moments = MarketMoments(mu=np.array([0.001]), sigma=np.array([[1e-4]]))
        for solve in (max_quadratic_utility, max_sharpe):
            solution = solve(moments, PenaltySpec(np.array([0.5]), "weighted"))
            np.testing.assert_array_equal(solution.x, [1.0])
            assert solution.R == pytest.approx(0.5)

    def test_gamma_one_picks_a_single_asset(self):
        moments = _random_moments(np.random.default_rng(4), 4)
        solution = max_quadratic_utility(moments, PenaltySpec.none(4), gamma=1.0)
        assert solution.y.sum() == 1
        _assert_feasible(solution, 1.0)

    @pytest.mark.parametrize("objective", ["utility", "sharpe"])
    @pytest.mark.parametrize("form", ["weighted", "simple"])
    def test_solutions_are_feasible(self, objective, form):
        rng = np.random.default_rng(5)
        moments = _random_moments(rng, 6)
        spec = PenaltySpec(rng.uniform(-0.3, 0.3, size=6), form, 1e-3)
        solution = solve_portfolio(moments, spec, objective, gamma=0.1)
        _assert_feasible(solution, 0.1)
        assert solution.status == "optimal"
        assert solution.R == pytest.approx(portfolio_penalty(spec, solution.x, solution.y))


class TestKnownOptima:
    def test_identical_uncorrelated_assets_are_equal_weighted(self):
        moments = MarketMoments(mu=np.full(4, 0.001), sigma=np.eye(4) * 1e-4)
        solution = max_sharpe(moments, PenaltySpec.none(4))
        np.testing.assert_allclose(solution.x, 0.25, atol=1e-6)
        assert solution.y.tolist() == [1, 1, 1, 1]

    def test_zero_scale_equals_markowitz(self):
        rng = np.random.default_rng(6)
        moments = _random_moments(rng, 5)
        rho = rng.uniform(-0.5, 0.5, size=5)
        for objective in ("utility", "sharpe"):
            bench = markowitz_benchmark(moments, objective)
            scaled = solve_portfolio(moments, PenaltySpec(rho, "weighted", 0.0), objective, gamma=0.01)
            np.testing.assert_array_equal(scaled.x, bench.x)
            assert scaled.objective == bench.objective
            assert scaled.R == 0.0

    @pytest.mark.parametrize("objective", ["utility", "sharpe"])
    @pytest.mark.parametrize("form", ["weighted", "simple"])
    def test_heavier_penalty_never_helps(self, objective, form):
        rng = np.random.default_rng([23, len(objective), len(form)])
        moments = _random_moments(rng, 5)
        rho = rng.uniform(0.0, 0.5, size=5)
        previous = None
        for scale in (0.0, 1e-4, 1e-3, 1e-2, 0.1, 1.0):
            solution = solve_portfolio(moments, PenaltySpec(rho, form, scale), objective, gamma=0.05)
            exposure = rho @ (solution.x if form == "weighted" else solution.y)
            if previous is not None:
                assert exposure <= previous[0] + 1e-7, scale
                assert solution.objective <= previous[1] + 1e-9 * max(1.0, abs(previous[1])), scale
            previous = (exposure, solution.objective)

    def test_large_penalty_excludes_asset(self):
        moments = MarketMoments(mu=np.full(3, 0.001), sigma=np.eye(3) * 1e-4)
        spec = PenaltySpec(np.array([0.5, 0.0, 0.0]), "weighted", 1.0)
        solution = max_quadratic_utility(moments, spec, delta=1.0)
        assert solution.y[0] == 0
        assert solution.x[1] == pytest.approx(0.5, abs=1e-6)

    def test_simple_penalty_counts_selected_assets(self):
        moments = MarketMoments(mu=np.full(3, 0.001), sigma=np.eye(3) * 1e-4)
        spec = PenaltySpec(np.array([0.01, 0.01, 0.01]), "simple", 1.0)
        solution = max_quadratic_utility(moments, spec, delta=1.0)
        # each extra asset costs 0.01 while diversification gains far less
        assert solution.y.sum() == 1

    def test_negative_expected_returns_still_feasible(self):
        moments = MarketMoments(mu=np.array([-0.001, -0.002, -0.0005]), sigma=np.eye(3) * 1e-4)
        solution = max_sharpe(moments, PenaltySpec.none(3))
        _assert_feasible(solution, 0.01)


class TestBranchAndBound:
    def test_agrees_with_brute_force(self):
        rng = np.random.default_rng(20)
        cases = [(g, o, f) for g in (0.01, 0.1, 0.3) for o in ("utility", "sharpe") for f in ("weighted", "simple")]
        for trial in range(50):
            gamma, objective, form = cases[trial % len(cases)]
            n = int(rng.integers(2, 9))
            moments = _random_moments(rng, n)
            spec = PenaltySpec(rng.uniform(-0.4, 0.4, size=n), form, 1e-3)
            exact = solve_portfolio(moments, spec, objective, gamma=gamma)
            oracle = brute_force_search(moments, spec, objective, gamma=gamma)
            assert exact.status == "optimal"
            assert exact.objective == pytest.approx(oracle.objective, abs=1e-6), trial
            if oracle.objective - oracle.diagnostics["runner_up"] > 1e-4:
                assert exact.y.tolist() == oracle.y.tolist(), trial
            _assert_feasible(exact, gamma)
            _assert_feasible(oracle, gamma)

    def test_search_closes_on_eight_assets(self):
        rng = np.random.default_rng(7)
        moments = _random_moments(rng, 8)
        spec = PenaltySpec(rng.uniform(-0.2, 0.2, 8), "weighted", 1e-3)
        result = BranchAndBound(PortfolioProblem(moments, spec, "utility", gamma=0.01)).solve()
        assert result.closed
        oracle = brute_force_search(moments, spec, "utility", gamma=0.01)
        assert result.value == pytest.approx(oracle.objective, abs=1e-6)

    def test_heuristic_above_exact_limit(self):
        rng = np.random.default_rng(8)
        moments = _random_moments(rng, 6)
        solution = max_quadratic_utility(moments, PenaltySpec.none(6), options=SolverOptions(exact_max_assets=3))
        assert solution.status == "heuristic"
        _assert_feasible(solution, 0.01)

    @pytest.mark.parametrize("form", ["none", "weighted"])
    def test_conventional_sharpe_agrees_with_brute_force(self, form):
        rng = np.random.default_rng([11, len(form)])
        moments = _random_moments(rng, 5)
        spec = PenaltySpec(rng.uniform(-0.4, 0.4, size=5), form, 1e-3)
        exact = max_sharpe(moments, spec, gamma=0.1, options=SolverOptions(stdev_denominator=True))
        oracle = brute_force_search(moments, spec, "sharpe", gamma=0.1, stdev=True)
        assert exact.objective == pytest.approx(oracle.objective, abs=1e-6)
        if oracle.objective - oracle.diagnostics["runner_up"] > 1e-4:
            assert exact.y.tolist() == oracle.y.tolist()
        x = exact.x
        expected = moments.mu @ x / np.sqrt(x @ moments.sigma @ x) - exact.R
        assert exact.objective == pytest.approx(expected, rel=1e-9, abs=1e-12)
        _assert_feasible(exact, 0.1)

    def test_oracle_two_assets_closed_form(self):
        mu = np.array([0.002, 0.001])
        sigma = np.array([[0.04, 0.01], [0.01, 0.02]])
        oracle = brute_force_search(MarketMoments(mu=mu, sigma=sigma), PenaltySpec.none(2), "utility", gamma=0.01)
        # interior optimum of mu.x - x'Sx/2 on the line x1 + x2 = 1
        w = ((mu[0] - mu[1]) - (sigma[0, 1] - sigma[1, 1])) / (sigma[0, 0] - 2 * sigma[0, 1] + sigma[1, 1])
        np.testing.assert_allclose(oracle.x, [w, 1 - w], atol=1e-6)
        assert oracle.y.tolist() == [1, 1]

    def test_oracle_support_cap(self):
        moments = _random_moments(np.random.default_rng(21), 3)
        oracle = brute_force_search(moments, PenaltySpec.none(3), "utility", gamma=0.5)
        assert oracle.nodes == 3 + 3
        assert oracle.y.sum() <= 2
        with pytest.raises(InfeasiblePortfolioError):
            brute_force_search(moments, PenaltySpec.none(3), "utility", gamma=1.5)

    @pytest.mark.parametrize("objective", ["utility", "sharpe"])
    def test_oracle_grid_stability(self, objective):
        rng = np.random.default_rng(22)
        moments = _random_moments(rng, 5)
        spec = PenaltySpec(rng.uniform(-0.3, 0.3, size=5), "weighted", 1e-3)
        coarse = brute_force_search(moments, spec, objective, gamma=0.1, resolution=50)
        fine = brute_force_search(moments, spec, objective, gamma=0.1, resolution=200)
        assert coarse.objective == pytest.approx(fine.objective, abs=1e-4)

    def test_oracle_limits(self):
        moments = _random_moments(np.random.default_rng(9), 13)
        with pytest.raises(InputDataError):
            brute_force_search(moments, PenaltySpec.none(13), "utility", gamma=0.1)
        small = _random_moments(np.random.default_rng(9), 3)
        with pytest.raises(InputDataError):
            brute_force_search(small, PenaltySpec.none(3), "utility", gamma=0.1, resolution=10)


class TestInstances:
    def test_save_load_solve(self, tmp_path):
        rng = np.random.default_rng(10)
        moments = _random_moments(rng, 4)
        instance = PortfolioInstance(moments, PenaltySpec(rng.uniform(-0.2, 0.2, 4), "simple", 1e-3),
                                     "sharpe", 1.0, 0.05)
        again = load_instance(save_instance(instance, tmp_path / "instance.json"))
        np.testing.assert_array_equal(again.moments.sigma, moments.sigma)
        assert again.penalty.form == "simple"
        first, second = instance.solve(), again.solve()
        np.testing.assert_array_equal(first.x, second.x)

    def test_malformed_instance(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"mu": [0.1, 0.2], "sigma": [[1, 0], [0, 1]], "objective": "sortino", "gamma": 0.1}')
        with pytest.raises(InputDataError):
            load_instance(path)
        path.write_text("not json")
        with pytest.raises(InputDataError):
            load_instance(path)
