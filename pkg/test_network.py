"""
Tests for network construction, strengths, excess strengths and network files
"""

import numpy as np
import pytest

from mtd_portfolio_tool.data import ReturnPanel
from mtd_portfolio_tool.exceptions import DegenerateDataError, InputDataError
from mtd_portfolio_tool.models import LambdaMatrix
from mtd_portfolio_tool.networks import (
    edge_table,
    excess_strength,
    from_correlation,
    from_lambda,
    from_weights,
    load_network,
    read_edge_list,
    save_network,
    write_edge_list,
)


def _panel(returns):
    returns = np.asarray(returns, dtype=float)
    return ReturnPanel(
        dates=[str(t) for t in range(returns.shape[0])],
        tickers=[f"A{k}" for k in range(returns.shape[1])],
        returns=returns,
    )


def _random_network(rng, n, density=0.6):
    W = rng.uniform(0.05, 1.0, size=(n, n)) * (rng.random((n, n)) < density)
    np.fill_diagonal(W, 0.0)
    return from_weights(W)


class TestFromLambda:
    def test_identity_has_no_edges(self):
        net = from_lambda(LambdaMatrix.from_weights(np.eye(3)))
        assert net.num_edges == 0
        assert net.omega == 0.0

    def test_two_nodes(self):
        lam = np.array([[0.3, 0.6], [0.7, 0.4]])
        net = from_lambda(LambdaMatrix.from_weights(lam), ["X", "Y"])
        np.testing.assert_array_equal(net.W, [[0.0, 0.6], [0.7, 0.0]])
        np.testing.assert_array_equal(net.A, [[0, 1], [1, 0]])
        assert net.tickers == ["X", "Y"]

    def test_strengths_match_hand_sums(self):
        lam = np.array([[0.5, 0.2, 0.1], [0.3, 0.5, 0.4], [0.2, 0.3, 0.5]])
        net = from_lambda(lam)
        np.testing.assert_allclose(net.s_out, [0.3, 0.7, 0.5])
        np.testing.assert_allclose(net.s_in, [0.5, 0.5, 0.5])
        np.testing.assert_array_equal(net.d_out, [2, 2, 2])
        # column sums plus the removed self-weight give back the simplex
        np.testing.assert_allclose(net.s_in + np.diag(lam), 1.0, atol=1e-9)

    def test_strength_totals(self):
        net = _random_network(np.random.default_rng(0), 8)
        assert net.s_in.sum() == pytest.approx(net.omega)
        assert net.s_out.sum() == pytest.approx(net.omega)
        np.testing.assert_array_equal(net.A, (net.W > 0).astype(float))

    def test_rejects_negative_weights(self):
        with pytest.raises(InputDataError):
            from_weights(np.array([[0.0, -0.1], [0.2, 0.0]]))

    def test_arrays_are_read_only(self):
        net = from_weights(np.array([[0.0, 0.5], [0.2, 0.0]]))
        with pytest.raises(ValueError):
            net.W[0, 1] = 1.0


class TestFromCorrelation:
    def test_perfect_correlation(self):
        x = np.random.default_rng(1).normal(size=50)
        net = from_correlation(_panel(np.column_stack([x, 2 * x])))
        np.testing.assert_allclose(net.W, [[0.0, 1.0], [1.0, 0.0]], atol=1e-12)

    def test_anti_correlation_uses_absolute_value(self):
        x = np.random.default_rng(2).normal(size=50)
        net = from_correlation(_panel(np.column_stack([x, -x])))
        assert net.W[0, 1] == pytest.approx(1.0, abs=1e-12)

    def test_independent_assets(self):
        rng = np.random.default_rng(3)
        net = from_correlation(_panel(rng.normal(size=(1000, 2))))
        assert net.W[0, 1] < 0.1

    def test_symmetric(self):
        rng = np.random.default_rng(4)
        net = from_correlation(_panel(rng.normal(size=(200, 6))))
        np.testing.assert_array_equal(net.W, net.W.T)
        np.testing.assert_allclose(net.s_in, net.s_out)

    def test_constant_asset_is_degenerate(self):
        rng = np.random.default_rng(5)
        returns = np.column_stack([rng.normal(size=30), np.zeros(30)])
        with pytest.raises(DegenerateDataError):
            from_correlation(_panel(returns))

    def test_needs_three_rows(self):
        with pytest.raises(InputDataError):
            from_correlation(_panel([[0.1, 0.2], [0.0, -0.1]]))


class TestExcessStrength:
    def test_single_edge(self):
        net = from_weights(np.array([[0.0, 0.5], [0.0, 0.0]]))
        assert excess_strength(net, (0, 1), "source", "out") == 0.0
        assert excess_strength(net, (0, 1), "target", "in") == 0.0
        assert excess_strength(net, (0, 1), "source", "in") == 0.0
        assert excess_strength(net, (0, 1), "target", "out") == 0.0

    def test_reciprocal_pair(self):
        W = np.array([
            [0.0, 0.4, 0.2],
            [0.3, 0.0, 0.0],
            [0.1, 0.6, 0.0],
        ])
        net = from_weights(W)
        # s_out = [0.6, 0.3, 0.7], s_in = [0.4, 1.0, 0.2]
        assert excess_strength(net, (0, 1), "source", "out") == pytest.approx(0.6 - 0.4)
        assert excess_strength(net, (0, 1), "source", "in") == pytest.approx(0.4 - 0.3)
        assert excess_strength(net, (0, 1), "target", "in") == pytest.approx(1.0 - 0.4)
        assert excess_strength(net, (0, 1), "target", "out") == pytest.approx(0.3 - 0.3)
        assert excess_strength(net, (2, 1), "target", "out") == pytest.approx(0.3 - 0.0)

    def test_source_out_plus_weight_is_strength(self):
        net = _random_network(np.random.default_rng(6), 7)
        src, tgt, w = net.edges()
        for i, j, wij in zip(src, tgt, w):
            assert excess_strength(net, (i, j), "source", "out") + wij == pytest.approx(net.s_out[i], abs=1e-15)

    def test_missing_edge(self):
        net = from_weights(np.array([[0.0, 0.5], [0.0, 0.0]]))
        with pytest.raises(InputDataError):
            excess_strength(net, (1, 0), "source", "out")

    def test_bad_mode(self):
        net = from_weights(np.array([[0.0, 0.5], [0.0, 0.0]]))
        with pytest.raises(InputDataError):
            excess_strength(net, (0, 1), "middle", "out")

    def test_edge_table_agrees_with_scalar_rule(self):
        net = _random_network(np.random.default_rng(7), 6)
        for m1 in ("in", "out"):
            for m2 in ("in", "out"):
                table = edge_table(net, m1, m2)
                for k in range(len(table)):
                    row = table.row(k)
                    edge = (row.source, row.target)
                    assert row.es_source == pytest.approx(excess_strength(net, edge, "source", m1), abs=1e-15)
                    assert row.es_target == pytest.approx(excess_strength(net, edge, "target", m2), abs=1e-15)


class TestNetworkFiles:
    def test_edge_list_roundtrip(self, tmp_path):
        rng = np.random.default_rng(8)
        net = _random_network(rng, 5)
        path = write_edge_list(net, tmp_path / "edges.csv")
        again = read_edge_list(path, net.tickers)
        np.testing.assert_array_equal(again.W, net.W)

    def test_json_roundtrip(self, tmp_path):
        net = _random_network(np.random.default_rng(9), 4)
        again = load_network(save_network(net, tmp_path / "net.json"))
        assert again.tickers == net.tickers
        np.testing.assert_array_equal(again.W, net.W)

    def test_model_document_is_a_network(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text('{"tickers": ["A", "B"], "lambda": [[0.3, 0.6], [0.7, 0.4]]}')
        net = load_network(path)
        np.testing.assert_array_equal(net.W, [[0.0, 0.6], [0.7, 0.0]])

    def test_unknown_document(self, tmp_path):
        path = tmp_path / "other.json"
        path.write_text('{"tickers": ["A"]}')
        with pytest.raises(InputDataError):
            load_network(path)
