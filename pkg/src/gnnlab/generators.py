"""Synthetic graph generators and train/test splitting."""

import math

import networkx as nx
import numpy as np

from gnnlab.errors import InputError
from gnnlab.graph import Graph


def _upper_pairs(n):
    return np.triu_indices(n, k=1)


def generate_sbm(blocks, intra_p, inter_p, r, seed):
    """Stochastic block model; labels are block ids, features i.i.d. N(0, 1)."""
    blocks = [int(s) for s in blocks]
    if not blocks or min(blocks) < 1:
        raise InputError("SBM needs at least one block of size >= 1")
    for p in (intra_p, inter_p):
        if not 0.0 <= p <= 1.0:
            raise InputError("probabilities must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(len(blocks)), blocks)
    n = labels.size
    u, v = _upper_pairs(n)
    prob = np.where(labels[u] == labels[v], intra_p, inter_p)
    keep = rng.random(u.size) < prob
    features = rng.standard_normal((n, r))
    return Graph.from_edges(features, labels, len(blocks), np.column_stack([u[keep], v[keep]]))


def generate_er(n, p, r, seed):
    if n < 1:
        raise InputError("n must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise InputError("p must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    u, v = _upper_pairs(n)
    keep = rng.random(u.size) < p
    features = rng.standard_normal((n, r))
    return Graph.from_edges(features, np.zeros(n, dtype=np.int64), 1, np.column_stack([u[keep], v[keep]]))


def generate_random_regular(n, d, r, seed):
    if d < 0 or d >= n:
        raise InputError(f"regular degree {d} infeasible for n={n}")
    if (n * d) % 2:
        raise InputError("n * d must be even")
    rng = np.random.default_rng(seed)
    g = nx.random_regular_graph(d, n, seed=int(rng.integers(2**31)))
    features = rng.standard_normal((n, r))
    edges = np.array(sorted(tuple(sorted(e)) for e in g.edges()), dtype=np.int64).reshape(-1, 2)
    return Graph.from_edges(features, np.zeros(n, dtype=np.int64), 1, edges)


def split_train_test(graph, train_fraction, seed):
    """Random disjoint split with round(train_fraction * n) training nodes (halves round up)."""
    if not 0.0 < train_fraction < 1.0:
        raise InputError("train_fraction must lie in (0, 1)")
    n_train = int(math.floor(train_fraction * graph.n + 0.5))
    if n_train < 1 or n_train >= graph.n:
        raise InputError(f"train_fraction={train_fraction} leaves an empty split for n={graph.n}")
    perm = np.random.default_rng(seed).permutation(graph.n)
    train = np.zeros(graph.n, dtype=bool)
    train[perm[:n_train]] = True
    return graph.with_split(train, ~train)
