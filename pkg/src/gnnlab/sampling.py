"""Batch selection and uniform neighbor sampling.

All draws come from :mod:`gnnlab.rng` keyed by (seed, iteration, node), so a
node's sampled neighborhood does not depend on which other nodes share its
batch. Neighbors are chosen without replacement by giving every (target,
neighbor) pair a hashed priority and keeping the ``beta`` smallest.

Mini-batch rows are renormalized with the degrees of the sampled subgraph:

* in-degree of a target = number of neighbors it sampled;
* out-degree of a source ``j`` = number of targets that sampled ``j`` plus the
  number of neighbors of ``j`` outside the training set.

The second term is the fixed transductive context (non-training nodes are
never targets), and it makes ``b = n_train, beta = d_max`` reproduce the
full-graph rows exactly.
"""

from dataclasses import dataclass

import numpy as np

from gnnlab import rng
from gnnlab.errors import InputError
from gnnlab.graph import assemble_rows, gather_neighbors

NORMALIZATIONS = ("sampled", "full")

# iteration slot used for the per-node virtual samples behind the distance cost
VIRTUAL_ITERATION = (1 << 64) - 1


@dataclass(frozen=True)
class SamplerConfig:
    b: int
    beta: int
    seed: int = 0
    nested: bool = True
    normalization: str = "sampled"

    def validate(self, graph):
        if self.b < 1 or self.b > graph.n_train:
            raise InputError(f"batch size b={self.b} must lie in [1, n_train={graph.n_train}]")
        if self.beta < 1:
            raise InputError(f"fan-out beta={self.beta} must be >= 1")
        if self.normalization not in NORMALIZATIONS:
            raise InputError(f"unknown normalization {self.normalization!r}")


@dataclass(frozen=True, eq=False)
class MiniBatch:
    target_nodes: np.ndarray
    adj: object
    _pos: np.ndarray
    _nbr: np.ndarray

    @property
    def sampled_neighbors(self):
        """Per-target arrays of sampled neighbor ids, aligned with target_nodes."""
        return _split(self._pos, self._nbr, self.target_nodes.size)


def sample_batch(graph, config, iteration):
    """b distinct training nodes, uniform without replacement.

    Nodes are ranked by a hashed priority; the batch is the first ``b`` of that
    ranking, so in nested mode a smaller batch is a prefix of a larger one.
    Non-nested mode mixes ``b`` into the key, giving independent draws per size.
    """
    config.validate(graph)
    train = graph.train_ids
    tag = 0 if config.nested else config.b
    keys = rng.hash_keys(config.seed, rng.STREAM_BATCH, iteration, tag, train)
    return train[np.argsort(keys, kind="stable")[: config.b]]


def _sample_sets(graph, targets, beta, seed, iteration):
    """Per-target sampled neighbors as flat (row position, neighbor) arrays sorted by (pos, nbr)."""
    pos, nbr = gather_neighbors(graph, targets)
    deg = graph.degree[targets]
    if not np.any(deg > beta):
        return pos, nbr
    keys = rng.hash_keys(seed, rng.STREAM_NEIGHBOR, iteration, targets[pos], nbr)
    # rows with deg <= beta keep everything: give them all rank 0
    order = np.lexsort((keys, pos))
    starts = np.cumsum(deg) - deg
    rank = np.empty(pos.size, dtype=np.int64)
    rank[order] = np.arange(pos.size) - starts[pos[order]]
    keep = rank < beta
    return pos[keep], nbr[keep]


def _split(pos, nbr, m):
    bounds = np.cumsum(np.bincount(pos, minlength=m))[:-1]
    return np.split(nbr, bounds)


def sample_neighbors(graph, targets, beta, seed, iteration, normalization="sampled", batch_size=None):
    """Sample up to ``beta`` neighbors per target and build the mini-batch rows."""
    targets = np.unique(np.asarray(targets, dtype=np.int64))
    if targets.size == 0:
        raise InputError("targets must be nonempty")
    if targets[0] < 0 or targets[-1] >= graph.n:
        raise InputError("target index out of range")
    if beta < 1:
        raise InputError("beta must be >= 1")
    if normalization not in NORMALIZATIONS:
        raise InputError(f"unknown normalization {normalization!r}")
    pos, nbr = _sample_sets(graph, targets, beta, seed, iteration)
    m = targets.size
    din = np.bincount(pos, minlength=m)
    if normalization == "sampled":
        dout = np.bincount(nbr, minlength=graph.n) + graph.nontrain_neighbors
    else:
        din = graph.degree[targets]
        dout = graph.degree
    b = m if batch_size is None else batch_size
    adj = assemble_rows(targets, pos, nbr, din, dout[nbr], dout[targets], graph.n,
                        ("mini", b, beta, seed))
    return MiniBatch(targets, adj, pos, nbr)


def sample_minibatch(graph, config, iteration):
    """Batch draw followed by neighbor sampling, as one SGD step consumes it."""
    targets = sample_batch(graph, config, iteration)
    return sample_neighbors(graph, targets, config.beta, config.seed, iteration,
                            config.normalization, batch_size=config.b)


def _virtual_context(train, k, b, seed):
    """Positions (into ``train``) of node k's virtual batch: itself plus b-1 others, nested in b."""
    others = np.delete(np.arange(train.size), k)
    keys = rng.hash_keys(seed, rng.STREAM_VIRTUAL_BATCH, train[k], train[others])
    return np.concatenate([[k], others[np.argsort(keys, kind="stable")[: b - 1]]])


def virtual_rows_all_train(graph, beta, seed, b=None, draw=0):
    """One sampled row per training node (sorted by node id).

    Each training node keeps its own fan-out-``beta`` sample. Out-degrees are
    counted over a virtual batch of size ``b`` containing the node; the batches
    are nested in ``b`` and ``b=None`` means the whole training set. ``draw``
    selects an independent realization.
    """
    if beta < 1:
        raise InputError("beta must be >= 1")
    train = graph.train_ids
    n_train = train.size
    if b is None:
        b = n_train
    if not 1 <= b <= n_train:
        raise InputError(f"b={b} must lie in [1, n_train={n_train}]")
    draw_seed = seed if draw == 0 else rng.derive_seed(seed, rng.STREAM_DRAW, draw)
    pos, nbr = _sample_sets(graph, train, beta, draw_seed, VIRTUAL_ITERATION)
    din = np.bincount(pos, minlength=n_train)
    context = graph.nontrain_neighbors
    if b == n_train:
        counts = np.bincount(nbr, minlength=graph.n)
        dout_nbr = counts[nbr] + context[nbr]
        dout_self = counts[train] + context[train]
    else:
        sampled = np.zeros((n_train, graph.n), dtype=bool)
        sampled[pos, nbr] = True
        dout_nbr = np.empty(nbr.size, dtype=np.int64)
        dout_self = np.empty(n_train, dtype=np.int64)
        bounds = np.concatenate([[0], np.cumsum(din)])
        for k in range(n_train):
            ctx = _virtual_context(train, k, b, draw_seed)
            cols = nbr[bounds[k]:bounds[k + 1]]
            sub = sampled[ctx]
            dout_nbr[bounds[k]:bounds[k + 1]] = sub[:, cols].sum(axis=0) + context[cols]
            dout_self[k] = sub[:, train[k]].sum() + context[train[k]]
    return assemble_rows(train, pos, nbr, din, dout_nbr, dout_self, graph.n,
                         ("mini", b, beta, seed))
