"""Structural train/test distance Delta(beta, b) and the PAC-Bayes bound built on it.

The per-pair cost is

    (C_delta * h^2 / n_min) * (delta_full[i, j] + delta_full_mini[i])

with ``delta_full[i, j] = ||t_j - a_i||^2 + 2 ||t_j||^2`` over full normalized
rows (a_i for a training node, t_j for a test node) and
``delta_full_mini[i] = ||a_i - a_i^mini||^2``. Delta is the optimal transport
cost between the train and test node distributions under that cost.
"""

import math
from dataclasses import dataclass

import numpy as np

from gnnlab.errors import InputError
from gnnlab.graph import normalized_rows_full
from gnnlab.sampling import virtual_rows_all_train
from gnnlab.transport import solve_transport


@dataclass(frozen=True, eq=False)
class CostMatrix:
    entries: np.ndarray
    delta_full: np.ndarray
    delta_full_mini: np.ndarray
    C_delta: float
    h: int
    n_min: int

    @property
    def scale(self):
        return self.C_delta * self.h**2 / self.n_min


def _sq_row_norms(matrix):
    return np.asarray(matrix.multiply(matrix).sum(axis=1)).ravel()


def delta_full(full_train_rows, full_test_rows):
    """(n_train x n_test) matrix of ||t_j - a_i||^2 + 2 ||t_j||^2."""
    A, T = full_train_rows.matrix, full_test_rows.matrix
    if A.shape[1] != T.shape[1]:
        raise InputError("train and test rows have different widths")
    na = _sq_row_norms(A)
    nt = _sq_row_norms(T)
    cross = np.asarray((A @ T.T).todense())
    return np.maximum(na[:, None] - 2.0 * cross + 3.0 * nt[None, :], 0.0)


def delta_full_mini(full_train_rows, mini_rows):
    """Per training node, the squared distance between its full and sampled row."""
    if full_train_rows.width != mini_rows.width:
        raise InputError("full and mini rows have different widths")
    full_ids = full_train_rows.row_ids
    pos = {int(i): k for k, i in enumerate(mini_rows.row_ids)}
    missing = [int(i) for i in full_ids if int(i) not in pos]
    if missing:
        raise InputError(f"no sampled row for training node {missing[0]}")
    M = mini_rows.matrix[[pos[int(i)] for i in full_ids]]
    diff = full_train_rows.matrix - M
    return _sq_row_norms(diff)


def expected_delta_full_mini(graph, beta, seed, b=None, draws=1):
    """delta_full_mini averaged over ``draws`` independent virtual samples."""
    if draws < 1:
        raise InputError("draws must be >= 1")
    full = normalized_rows_full(graph, graph.train_ids)
    total = np.zeros(graph.n_train)
    for d in range(draws):
        total += delta_full_mini(full, virtual_rows_all_train(graph, beta, seed, b=b, draw=d))
    return total / draws


def build_cost(graph, beta, b, h, C_delta=1.0, seed=0, draws=1):
    if h < 1:
        raise InputError("h must be >= 1")
    if C_delta < 0:
        raise InputError("C_delta must be non-negative")
    if graph.n_test == 0:
        raise InputError("the distance needs a nonempty test split")
    train_rows = normalized_rows_full(graph, graph.train_ids)
    test_rows = normalized_rows_full(graph, graph.test_ids)
    d_full = delta_full(train_rows, test_rows)
    d_fm = expected_delta_full_mini(graph, beta, seed, b=b, draws=draws)
    n_min = min(graph.n_train, graph.n_test)
    entries = (C_delta * h**2 / n_min) * (d_full + d_fm[:, None])
    return CostMatrix(entries, d_full, d_fm, C_delta, h, n_min)


def marginals(graph):
    """Per-node masses: label frequency in the split divided by that label's node count.

    The quotient cancels to 1 / n_split, so each side sums to one.
    """
    out = []
    for mask in (graph.train_mask, graph.test_mask):
        labels = graph.labels[mask]
        if labels.size == 0:
            raise InputError("both splits must be nonempty")
        counts = np.bincount(labels, minlength=graph.num_classes)
        freq = counts / labels.size
        out.append(freq[labels] / counts[labels])
    return tuple(out)


def wasserstein(cost, marginals):
    """Exact optimal coupling for a CostMatrix (or plain matrix) and (rho_train, rho_test)."""
    entries = cost.entries if isinstance(cost, CostMatrix) else cost
    rho_train, rho_test = marginals
    return solve_transport(entries, rho_train, rho_test)


def delta(graph, beta, b, h, C_delta=1.0, seed=0, draws=1):
    """Delta(beta, b) with its transport plan and cost matrix."""
    cost = build_cost(graph, beta, b, h, C_delta, seed, draws)
    plan = wasserstein(cost, marginals(graph))
    return plan.cost, plan, cost


def kl_bound(W, kappa, h):
    """||W||_F^2 / (2 h kappa^2), the Gaussian prior/posterior KL bound."""
    return float(np.sum(np.asarray(W) ** 2)) / (2.0 * h * kappa**2)


def generalization_bound(train_loss, W_final, kappa, h, n_train, Delta, C_u=1.0, C_G=0.05):
    """L_train + (KL + ln(1/C_G) + C_u^2 / (4 n) + C_u * Delta) / C_u.

    ``n_train=math.inf`` drops the C_u^2 / (4 n) term.
    """
    if not C_u > 0:
        raise InputError("C_u must be positive")
    if not 0 < C_G < 1:
        raise InputError("C_G must lie in (0, 1)")
    if not kappa > 0:
        raise InputError("kappa must be positive")
    complexity = (kl_bound(W_final, kappa, h) + math.log(1.0 / C_G)
                  + C_u**2 / (4.0 * n_train) + C_u * Delta)
    return train_loss + complexity / C_u
