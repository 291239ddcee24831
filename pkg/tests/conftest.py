import numpy as np
import pytest

from gnnlab.generators import generate_er, generate_sbm, split_train_test
from gnnlab.graph import Graph


@pytest.fixture
def path4():
    """0-1-2-3 path with two-dimensional features; nodes 0..2 train, 3 test."""
    feats = np.arange(8, dtype=float).reshape(4, 2)
    train = np.array([True, True, True, False])
    return Graph.from_edges(feats, np.array([0, 1, 0, 1]), 2, [(0, 1), (1, 2), (2, 3)], train, ~train)


@pytest.fixture
def sbm200():
    g = generate_sbm([100, 100], 0.3, 0.02, 16, seed=1)
    return split_train_test(g, 0.8, seed=2)


@pytest.fixture
def er30():
    return split_train_test(generate_er(30, 0.15, 4, seed=3), 0.6, seed=4)
