import math

import numpy as np
import pytest
import scipy.sparse as sp

from gnnlab.distance import (build_cost, delta, delta_full, delta_full_mini, expected_delta_full_mini,
                             generalization_bound, kl_bound, marginals, wasserstein)
from gnnlab.errors import InputError
from gnnlab.graph import AdjRows, Graph, normalized_rows_full
from gnnlab.sampling import virtual_rows_all_train


def rows(ids, dense):
    return AdjRows(np.asarray(ids), sp.csr_matrix(np.asarray(dense, dtype=float)), ("full",))


def dense_full(graph):
    A = np.zeros((graph.n, graph.n))
    for u, v in graph.edge_list():
        A[u, v] = A[v, u] = 1.0
    d = A.sum(axis=1) + 1.0
    return (A + np.eye(graph.n)) / np.sqrt(np.outer(d, d))


def test_delta_full_identical_rows():
    r = [[0.5, 0.5, 0.0]]
    assert delta_full(rows([0], r), rows([1], r))[0, 0] == pytest.approx(2 * 0.5)


def test_delta_full_zero_test_row():
    a = [[0.5, 0.25, 0.0]]
    assert delta_full(rows([0], a), rows([1], [[0.0, 0.0, 0.0]]))[0, 0] == pytest.approx(0.3125)


def test_delta_full_mini_zero_at_dmax(sbm200):
    assert np.all(expected_delta_full_mini(sbm200, sbm200.d_max, seed=2) == 0)


def test_delta_full_mini_star_hand_value():
    g = Graph.from_edges(np.zeros((3, 1)), np.zeros(3, dtype=int), 1, [(0, 1), (0, 2)])
    full = normalized_rows_full(g, g.train_ids)
    mini = virtual_rows_all_train(g, 1, seed=0)
    hub = mini.row(0)
    kept = [j for j in hub if j != 0]
    assert len(kept) == 1
    # hub keeps one leaf; both leaves sample the hub, so its out-degree is 2
    assert hub[0] == pytest.approx(1 / math.sqrt(2 * 3))
    assert hub[kept[0]] == pytest.approx(1 / 2)
    expected = (1 / 3 - 1 / math.sqrt(6)) ** 2 + (1 / math.sqrt(6) - 1 / 2) ** 2 + (1 / math.sqrt(6)) ** 2
    assert delta_full_mini(full, mini)[0] == pytest.approx(expected, rel=1e-14)
    other = 3 - kept[0]
    # the leaf the hub skipped is sampled by no target, so its self weight becomes 1/sqrt(2)
    assert delta_full_mini(full, mini)[kept[0]] == 0
    assert delta_full_mini(full, mini)[other] == pytest.approx((1 / math.sqrt(2) - 1 / 2) ** 2)


def test_delta_full_mini_missing_row(path4):
    full = normalized_rows_full(path4, path4.train_ids)
    partial = normalized_rows_full(path4, path4.train_ids[:1])
    with pytest.raises(InputError):
        delta_full_mini(full, partial)


def test_zero_c_delta_zero_cost(path4):
    assert np.all(build_cost(path4, 1, 1, 2, C_delta=0.0).entries == 0)


def test_cost_matches_dense_oracle():
    feats = np.zeros((4, 1))
    train = np.array([True, False, True, False])
    g = Graph.from_edges(feats, np.array([0, 1, 0, 1]), 2, [(0, 1), (1, 2), (2, 3), (0, 3)], train, ~train)
    D = dense_full(g)
    A, T = D[[0, 2]], D[[1, 3]]
    oracle = np.array([[np.sum((t - a) ** 2) + 2 * np.sum(t**2) for t in T] for a in A])
    cost = build_cost(g, g.d_max, 2, h=3, C_delta=0.5)
    assert np.allclose(cost.entries, 0.5 * 9 / 2 * oracle, rtol=1e-14, atol=0)


def test_marginals():
    g = Graph.from_edges(np.zeros((6, 1)), np.array([0, 1, 1, 1, 0, 1]), 2, [(0, 1)],
                         np.array([1, 1, 1, 1, 0, 0], bool), np.array([0, 0, 0, 0, 1, 1], bool))
    tr, te = marginals(g)
    assert np.allclose(tr, 0.25) and np.allclose(te, 0.5)
    labels = g.labels[g.test_ids]
    assert te[labels == 0].sum() == pytest.approx(0.5)


def test_wasserstein_on_plain_matrix():
    plan = wasserstein(np.array([[0.0, 1.0], [1.0, 0.0]]), (np.array([0.5, 0.5]), np.array([0.5, 0.5])))
    assert plan.cost == 0.0


def test_delta_is_nonnegative_and_deterministic(er30):
    v1, plan, _ = delta(er30, 2, 5, h=2, seed=1)
    v2, _, _ = delta(er30, 2, 5, h=2, seed=1)
    assert v1 == v2 and v1 >= 0
    assert plan.residuals() <= 1e-9


def test_draws_average(er30):
    one = expected_delta_full_mini(er30, 1, seed=0, draws=1)
    two = expected_delta_full_mini(er30, 1, seed=0, draws=2)
    second = delta_full_mini(normalized_rows_full(er30, er30.train_ids),
                             virtual_rows_all_train(er30, 1, seed=0, draw=1))
    assert np.allclose(two, (one + second) / 2)


def test_generalization_bound_example():
    value = generalization_bound(0.0, np.zeros((2, 2)), 0.1, 2, 100, 0.0, C_u=2.0, C_G=0.05)
    assert value == pytest.approx(0.5 * (math.log(20) + 4 / 400), rel=1e-12)
    assert value == pytest.approx(1.502866, abs=5e-7)
    limit = generalization_bound(0.0, np.zeros((2, 2)), 0.1, 2, math.inf, 0.0, C_u=2.0)
    assert limit == pytest.approx(0.5 * math.log(20))


def test_kl_bound():
    assert kl_bound(np.ones((2, 3)), 0.5, 2) == pytest.approx(6 / (2 * 2 * 0.25))


@pytest.mark.parametrize("kwargs", [{"C_u": 0}, {"C_G": 1.0}, {"kappa": 0}])
def test_bound_validation(kwargs):
    args = dict(train_loss=0.0, W_final=np.zeros((1, 1)), kappa=0.1, h=1, n_train=10, Delta=0.0)
    args.update(kwargs)
    with pytest.raises(InputError):
        generalization_bound(**args)
