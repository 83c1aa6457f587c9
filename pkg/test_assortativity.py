"""
Tests for random walks with restart and the global and local assortativity measures
"""

import math

import numpy as np
import pandas as pd
import pytest

from mtd_portfolio_tool.exceptions import ConvergenceError, DegenerateAssortativityError, InputDataError
from mtd_portfolio_tool.networks import from_weights
from mtd_portfolio_tool.networks.assortativity import (
    ALL_MODALITIES,
    Modality,
    assortativity_frame,
    compute_assortativity,
    edge_assortativity_sabek,
    edge_assortativity_table,
    global_assortativity,
    local_peel,
    local_peel_alpha,
    local_peel_with_weights,
    local_piraveenan,
    local_sabek,
    write_assortativity_csv,
)
from mtd_portfolio_tool.networks.graph import excess_strength
from mtd_portfolio_tool.networks.pagerank import (
    multiscale_matrix,
    multiscale_weights,
    personalized_pagerank,
    quadrature_rule,
)


def _random_network(rng, n, density=0.6):
    W = rng.uniform(0.05, 1.0, size=(n, n)) * (rng.random((n, n)) < density)
    np.fill_diagonal(W, 0.0)
    return from_weights(W)


def _reciprocated_star(leaves=3, weight=0.2):
    W = np.zeros((leaves + 1, leaves + 1))
    W[0, 1:] = weight
    W[1:, 0] = weight
    return from_weights(W)


def _circulant(n=5, a=0.3, b=0.1):
    W = np.zeros((n, n))
    for i in range(n):
        W[i, (i + 1) % n] = a
        W[i, (i + 2) % n] = b
    return from_weights(W)


def _dense_pagerank(net, l, alpha):
    Q = np.zeros((net.n, net.n))
    for i in range(net.n):
        if net.s_out[i] > 0:
            Q[i] = net.W[i] / net.s_out[i]
        else:
            Q[i, l] = 1.0
    e = np.zeros(net.n)
    e[l] = 1.0
    return (1.0 - alpha) * np.linalg.solve((np.eye(net.n) - alpha * Q).T, e)


class TestModality:
    def test_parse(self):
        assert Modality.parse("out-in") == Modality("out", "in")
        assert Modality.parse(("in", "out")).label == "in-out"
        assert len(ALL_MODALITIES) == 4

    @pytest.mark.parametrize("value", ["sideways", "out", "up-down"])
    def test_rejects_bad_labels(self, value):
        with pytest.raises(InputDataError):
            Modality.parse(value)


class TestPageRank:
    @pytest.mark.parametrize("alpha", [0.1, 0.5, 0.9])
    def test_matches_dense_solve(self, alpha):
        rng = np.random.default_rng(0)
        for _ in range(20):
            net = _random_network(rng, int(rng.integers(3, 11)))
            for l in range(net.n):
                dist = personalized_pagerank(net, l, alpha)
                assert np.abs(dist.probs - _dense_pagerank(net, l, alpha)).sum() <= 1e-10
                assert dist.probs.sum() == pytest.approx(1.0)

    def test_dangling_node_restarts_at_anchor(self):
        W = np.array([[0.0, 0.5, 0.0], [0.0, 0.0, 0.4], [0.0, 0.0, 0.0]])
        net = from_weights(W)
        dist = personalized_pagerank(net, 0, 0.5)
        np.testing.assert_allclose(dist.probs, _dense_pagerank(net, 0, 0.5), atol=1e-9)

    def test_alpha_zero_is_anchor(self):
        net = _random_network(np.random.default_rng(1), 5)
        np.testing.assert_array_equal(personalized_pagerank(net, 2, 0.0).probs, [0, 0, 1, 0, 0])

    def test_alpha_one_on_two_cycle(self):
        net = from_weights(np.array([[0.0, 1.0], [1.0, 0.0]]))
        np.testing.assert_allclose(personalized_pagerank(net, 0, 1.0).probs, [0.5, 0.5])

    def test_bad_arguments(self):
        net = _random_network(np.random.default_rng(2), 4)
        with pytest.raises(InputDataError):
            personalized_pagerank(net, 4, 0.5)
        with pytest.raises(InputDataError):
            personalized_pagerank(net, 0, 1.5)

    def test_iteration_cap(self):
        net = _random_network(np.random.default_rng(3), 6)
        with pytest.raises(ConvergenceError):
            personalized_pagerank(net, 0, 0.9, max_iters=2)


class TestMultiscale:
    def test_quadrature_integrates_to_one(self):
        nodes, weights = quadrature_rule(21)
        assert weights.sum() == pytest.approx(1.0)
        assert np.all((nodes > 0) & (nodes < 1))
        with pytest.raises(InputDataError):
            quadrature_rule(1)

    def test_single_node(self):
        net = from_weights(np.zeros((1, 1)))
        np.testing.assert_allclose(multiscale_weights(net, 0).probs, [1.0])

    def test_two_cycle_anchor_mass(self):
        # pi_0(alpha) = 1 / (1 + alpha), integrated over [0, 1]
        net = from_weights(np.array([[0.0, 1.0], [1.0, 0.0]]))
        probs = multiscale_weights(net, 0).probs
        assert probs[0] > probs[1]
        assert probs[0] == pytest.approx(math.log(2.0), abs=1e-10)

    def test_quadrature_resolution(self):
        net = _random_network(np.random.default_rng(4), 6)
        np.testing.assert_allclose(multiscale_matrix(net, 21), multiscale_matrix(net, 41), atol=1e-6)

    def test_rows_are_distributions(self):
        M = multiscale_matrix(_random_network(np.random.default_rng(5), 8))
        np.testing.assert_allclose(M.sum(axis=1), 1.0)
        assert np.all(M >= 0)


class TestGlobalAssortativity:
    def test_matches_weighted_pearson(self):
        rng = np.random.default_rng(10)
        for _ in range(5):
            net = _random_network(rng, int(rng.integers(5, 12)), density=0.8)
            for mode in ALL_MODALITIES:
                table = edge_assortativity_table(net, mode)
                cov = np.cov(table.es_source, table.es_target, aweights=table.weight, bias=True)
                expected = cov[0, 1] / np.sqrt(cov[0, 0] * cov[1, 1])
                rho = global_assortativity(net, mode).rho_g
                assert rho == pytest.approx(expected, abs=1e-12)
                assert -1.0 - 1e-12 <= rho <= 1.0 + 1e-12

    def test_reciprocated_star(self):
        assert global_assortativity(_reciprocated_star(), "out-in").rho_g == pytest.approx(-1.0, abs=1e-12)

    def test_uniform_complete_network_is_degenerate(self):
        W = np.full((4, 4), 0.25)
        np.fill_diagonal(W, 0.0)
        with pytest.raises(DegenerateAssortativityError):
            global_assortativity(from_weights(W), "out-in")

    def test_single_edge_is_degenerate(self):
        net = from_weights(np.array([[0.0, 0.5], [0.0, 0.0]]))
        for mode in ALL_MODALITIES:
            with pytest.raises(DegenerateAssortativityError):
                compute_assortativity(net, "global", mode)

    def test_empty_network_is_degenerate(self):
        with pytest.raises(DegenerateAssortativityError):
            global_assortativity(from_weights(np.zeros((3, 3))), "out-out")

    def test_symmetric_network_modalities_coincide(self):
        rng = np.random.default_rng(11)
        W = rng.uniform(0.05, 1.0, size=(6, 6))
        W = W + W.T
        np.fill_diagonal(W, 0.0)
        net = from_weights(W)
        values = [global_assortativity(net, mode).rho_g for mode in ALL_MODALITIES]
        np.testing.assert_allclose(values, values[0], atol=1e-12)
        locals_ = [local_sabek(net, mode).rho_local for mode in ALL_MODALITIES]
        for local in locals_[1:]:
            np.testing.assert_allclose(local, locals_[0], atol=1e-12)


class TestLocalDecomposition:
    def test_local_sums_equal_global(self):
        rng = np.random.default_rng(100)
        for trial in range(100):
            net = _random_network(rng, int(rng.integers(3, 21)), density=1.0)
            for mode in ALL_MODALITIES:
                rho_g = global_assortativity(net, mode).rho_g
                assert local_piraveenan(net, mode).rho_local.sum() == pytest.approx(rho_g, abs=1e-9), trial
                assert local_sabek(net, mode).rho_local.sum() == pytest.approx(rho_g, abs=1e-9), trial

    def test_edge_values_sum_to_global(self):
        net = _random_network(np.random.default_rng(12), 8)
        table = edge_assortativity_table(net, "in-out")
        assert table["edge_assortativity"].sum() == pytest.approx(global_assortativity(net, "in-out").rho_g, abs=1e-12)

    def test_edge_value_formula(self):
        net = _random_network(np.random.default_rng(13), 6, density=0.8)
        res = global_assortativity(net, "out-in")
        src, tgt, w = net.edges()
        omega = w.sum()
        for i, j, wij in zip(src, tgt, w):
            es_a = excess_strength(net, (i, j), "source", "out")
            es_b = excess_strength(net, (i, j), "target", "in")
            expected = wij * (es_a - res.aux["mu_source"]) * (es_b - res.aux["mu_target"]) / (
                omega * res.aux["sigma_source"] * res.aux["sigma_target"]
            )
            assert edge_assortativity_sabek(net, (i, j), "out-in") == pytest.approx(expected, abs=1e-12)

    def test_edge_at_the_mean_is_zero(self):
        # unit weights, out-degrees 1, 1, 1, 3, 2: source excess strengths average to exactly 1,
        # which is the excess strength of both edges leaving node 4
        W = np.zeros((5, 5))
        W[3, [0, 1, 2]] = 1.0
        W[0, 3] = W[1, 3] = 1.0
        W[2, 4] = 1.0
        W[4, [0, 3]] = 1.0
        net = from_weights(W)
        table = edge_assortativity_table(net, "out-out")
        assert np.average(table.es_source, weights=table.weight) == 1.0
        leaving = (table.source == net.tickers[4]).to_numpy()
        assert leaving.sum() == 2
        assert np.all(table.loc[leaving, "edge_assortativity"] == 0.0)
        assert local_sabek(net, "out-out").rho_local[4] == 0.0

    def test_node_without_out_edges_has_zero_local(self):
        W = np.array([
            [0.0, 0.4, 0.1, 0.0],
            [0.2, 0.0, 0.3, 0.1],
            [0.5, 0.1, 0.0, 0.2],
            [0.0, 0.0, 0.0, 0.0],
        ])
        net = from_weights(W)
        for measure in ("piraveenan", "sabek", "peel"):
            res = compute_assortativity(net, measure, "out-in")
            assert res.rho_local[3] == pytest.approx(0.0, abs=1e-15)

    def test_missing_edge(self):
        net = _random_network(np.random.default_rng(14), 4, density=1.0)
        with pytest.raises(InputDataError):
            edge_assortativity_sabek(net, (0, 0), "out-in")
        with pytest.raises(InputDataError):
            edge_assortativity_sabek(net, (0, 7), "out-in")

    def test_unknown_measure(self):
        with pytest.raises(InputDataError):
            compute_assortativity(_reciprocated_star(), "newman", "out-in")


class TestPeel:
    def test_circulant_locals_equal_global(self):
        # only out-in varies on a forward-only circulant; the other modalities have constant ends
        res = local_peel(_circulant(), "out-in")
        assert res.rho_g == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(res.rho_local, 1.0, atol=1e-9)
        with pytest.raises(DegenerateAssortativityError):
            local_peel(_circulant(), "in-in")

    def test_alpha_one_walk_forgets_the_anchor(self):
        rng = np.random.default_rng(20)
        for _ in range(10):
            n = int(rng.integers(3, 9))
            W = _random_network(rng, n, density=0.5).W.copy()
            # a directed ring keeps every graph strongly connected
            W[np.arange(n), (np.arange(n) + 1) % n] += rng.uniform(0.05, 1.0, size=n)
            net = from_weights(W)
            Q = net.W / net.s_out[:, None]
            A = np.vstack([(Q - np.eye(n)).T, np.ones(n)])
            pi = np.linalg.lstsq(A, np.append(np.zeros(n), 1.0), rcond=None)[0]
            rows = np.array([personalized_pagerank(net, l, 1.0).probs for l in range(n)])
            np.testing.assert_allclose(rows, np.tile(pi, (n, 1)), atol=1e-8)
            res = local_peel_alpha(net, "out-in", 1.0)
            np.testing.assert_allclose(res.rho_local, res.rho_local[0], atol=1e-8)

    def test_term_by_term(self):
        net = _random_network(np.random.default_rng(21), 6)
        mode = "in-out"
        res = local_peel(net, mode)
        weights = multiscale_weights(net, 0).probs
        mu_a, mu_b = res.aux["mu_source"], res.aux["mu_target"]
        sigma = res.aux["sigma_source"] * res.aux["sigma_target"]
        expected = 0.0
        src, tgt, w = net.edges()
        for i, j, wij in zip(src, tgt, w):
            es_a = excess_strength(net, (i, j), "source", "in")
            es_b = excess_strength(net, (i, j), "target", "out")
            expected += weights[i] * wij * (es_a - mu_a) * (es_b - mu_b) / (net.s_out[i] * sigma)
        assert res.rho_local[0] == pytest.approx(expected, abs=1e-12)

    def test_single_alpha_zero_is_node_sum(self):
        # alpha = 0 puts all the walk mass on the anchor
        net = _random_network(np.random.default_rng(22), 5)
        res = local_peel_alpha(net, "out-in", 0.0)
        sabek = local_sabek(net, "out-in")
        has_out = net.s_out > 0
        np.testing.assert_allclose(
            res.rho_local[has_out] * net.s_out[has_out],
            sabek.rho_local[has_out] * net.omega,
            atol=1e-12,
        )

    def test_weight_shape_checked(self):
        net = _random_network(np.random.default_rng(23), 4)
        with pytest.raises(InputDataError):
            local_peel_with_weights(net, "out-in", np.ones((3, 4)))


class TestAssortativityFiles:
    def test_frame_has_global_rows(self):
        net = _random_network(np.random.default_rng(30), 5)
        results = [compute_assortativity(net, m, "out-in") for m in ("piraveenan", "sabek")]
        frame = assortativity_frame(results, net.tickers)
        assert len(frame) == 2 * (net.n + 1)
        globals_ = frame[frame.ticker == "GLOBAL"]
        assert globals_.rho_local.tolist() == pytest.approx([r.rho_g for r in results])

    def test_csv_roundtrip(self, tmp_path):
        net = _random_network(np.random.default_rng(31), 5)
        res = local_sabek(net, "out-out")
        path = write_assortativity_csv([res], net.tickers, tmp_path / "a.csv")
        frame = pd.read_csv(path)
        assert list(frame.columns) == ["ticker", "measure", "modality", "rho_local"]
        np.testing.assert_array_equal(frame.rho_local.to_numpy()[:-1], res.rho_local)
        assert frame.iloc[-1].ticker == "GLOBAL"
