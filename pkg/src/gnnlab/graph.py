"""Graph container, degree bookkeeping and normalized adjacency rows."""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from gnnlab.errors import InputError


@dataclass(frozen=True)
class DegreeInfo:
    in_deg: np.ndarray
    out_deg: np.ndarray

    @property
    def d_max(self):
        return int(self.in_deg.max()) if self.in_deg.size else 0


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected simple graph with node features, labels and a train/test split.

    Adjacency is CSR (``indptr``, ``indices``) storing both directions of every
    edge, neighbor lists sorted, and no self-loops: the self-loop is only
    injected by the normalization.
    """

    features: np.ndarray
    labels: np.ndarray
    num_classes: int
    indptr: np.ndarray
    indices: np.ndarray
    train_mask: np.ndarray
    test_mask: np.ndarray
    _deg: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        features = np.ascontiguousarray(self.features, dtype=np.float64)
        if features.ndim != 2:
            raise InputError("features must be an n x r matrix")
        n = features.shape[0]
        labels = np.asarray(self.labels, dtype=np.int64)
        indptr = np.asarray(self.indptr, dtype=np.int64)
        indices = np.asarray(self.indices, dtype=np.int64)
        train = np.asarray(self.train_mask, dtype=bool)
        test = np.asarray(self.test_mask, dtype=bool)
        if labels.shape != (n,) or train.shape != (n,) or test.shape != (n,):
            raise InputError("labels and masks must have length n")
        if indptr.shape != (n + 1,) or indptr[0] != 0 or indptr[-1] != indices.size:
            raise InputError("malformed CSR index pointer")
        if self.num_classes < 1 or (n and (labels.min() < 0 or labels.max() >= self.num_classes)):
            raise InputError("labels must lie in [0, num_classes)")
        if np.any(train & test):
            raise InputError("train and test masks overlap")
        if not train.any():
            raise InputError("training set is empty")
        _check_adjacency(n, indptr, indices)
        for name, value in [("features", features), ("labels", labels), ("indptr", indptr),
                            ("indices", indices), ("train_mask", train), ("test_mask", test)]:
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        deg = np.diff(indptr)
        deg.setflags(write=False)
        object.__setattr__(self, "_deg", deg)

    @classmethod
    def from_edges(cls, features, labels, num_classes, edges, train_mask=None, test_mask=None):
        """Build a graph from an iterable of undirected (u, v) pairs."""
        features = np.asarray(features, dtype=np.float64)
        n = features.shape[0]
        edges = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges,
                           dtype=np.int64).reshape(-1, 2)
        if edges.size and (edges.min() < 0 or edges.max() >= n):
            raise InputError("edge endpoint out of range")
        if np.any(edges[:, 0] == edges[:, 1]):
            raise InputError("self-loops are not stored explicitly")
        lo = np.minimum(edges[:, 0], edges[:, 1])
        hi = np.maximum(edges[:, 0], edges[:, 1])
        if np.unique(lo * n + hi).size != lo.size:
            raise InputError("duplicate edge")
        rows = np.concatenate([lo, hi])
        cols = np.concatenate([hi, lo])
        adj = sp.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(n, n))
        adj.sort_indices()
        if train_mask is None:
            train_mask = np.ones(n, dtype=bool)
        if test_mask is None:
            test_mask = ~np.asarray(train_mask, dtype=bool)
        return cls(features, labels, num_classes, adj.indptr, adj.indices, train_mask, test_mask)

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def r(self):
        return self.features.shape[1]

    @property
    def degree(self):
        return self._deg

    @property
    def d_max(self):
        return int(self._deg.max()) if self.n else 0

    def degrees(self):
        return DegreeInfo(self._deg.copy(), self._deg.copy())

    def neighbors(self, i):
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    @property
    def train_ids(self):
        return np.flatnonzero(self.train_mask)

    @property
    def test_ids(self):
        return np.flatnonzero(self.test_mask)

    @property
    def n_train(self):
        return int(self.train_mask.sum())

    @property
    def n_test(self):
        return int(self.test_mask.sum())

    @property
    def num_edges(self):
        return self.indices.size // 2

    def edge_list(self):
        """Undirected edges as an (m, 2) array with u < v, lexicographically sorted."""
        src = np.repeat(np.arange(self.n), self._deg)
        keep = src < self.indices
        return np.column_stack([src[keep], self.indices[keep]])

    @cached_property
    def nontrain_neighbors(self):
        """Per node, the number of neighbors outside the training set."""
        src = np.repeat(np.arange(self.n), self._deg)
        outside = ~self.train_mask[self.indices]
        counts = np.bincount(src[outside], minlength=self.n).astype(np.int64)
        counts.setflags(write=False)
        return counts

    def with_split(self, train_mask, test_mask):
        return Graph(self.features, self.labels, self.num_classes, self.indptr, self.indices,
                     train_mask, test_mask)

    def equals(self, other):
        return (self.num_classes == other.num_classes
                and np.array_equal(self.features, other.features)
                and np.array_equal(self.labels, other.labels)
                and np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices)
                and np.array_equal(self.train_mask, other.train_mask)
                and np.array_equal(self.test_mask, other.test_mask))


def _check_adjacency(n, indptr, indices):
    if indices.size == 0:
        return
    if indices.min() < 0 or indices.max() >= n:
        raise InputError("neighbor index out of range")
    src = np.repeat(np.arange(n), np.diff(indptr))
    if np.any(src == indices):
        raise InputError("self-loops are not stored explicitly")
    key = src * n + indices
    if np.any(np.diff(key) <= 0):
        raise InputError("neighbor lists must be sorted and free of duplicates")
    if not np.array_equal(np.sort(indices * n + src), key):
        raise InputError("adjacency is not symmetric")


@dataclass(frozen=True, eq=False)
class AdjRows:
    """Normalized adjacency rows for a set of nodes.

    ``matrix`` is a CSR matrix of shape (len(row_ids), n) whose k-th row is the
    row of node ``row_ids[k]``. ``provenance`` is ``("full",)`` or
    ``("mini", b, beta, seed)``.
    """

    row_ids: np.ndarray
    matrix: sp.csr_matrix
    provenance: tuple

    def __len__(self):
        return self.row_ids.size

    @property
    def width(self):
        return self.matrix.shape[1]

    def row(self, k):
        """The k-th row as a {column: value} dict."""
        lo, hi = self.matrix.indptr[k], self.matrix.indptr[k + 1]
        return dict(zip(self.matrix.indices[lo:hi].tolist(), self.matrix.data[lo:hi].tolist()))

    def aggregate(self, features):
        """Dense product of the rows with the feature matrix."""
        return np.asarray(self.matrix @ features)

    def sq_norms(self, exclude_self=False):
        m = self.matrix
        pos = np.repeat(np.arange(len(self)), np.diff(m.indptr))
        keep = np.ones(pos.size, dtype=bool)
        if exclude_self:
            keep = m.indices != self.row_ids[pos]
        return np.bincount(pos[keep], weights=m.data[keep] ** 2, minlength=len(self))


def pair_weight(din_plus_one, dout_plus_one):
    """1 / sqrt((d_in + 1)(d_out + 1)); every normalized entry goes through here."""
    return 1.0 / np.sqrt(np.asarray(din_plus_one, dtype=np.float64) * dout_plus_one)


def assemble_rows(row_ids, pos, cols, din, dout_nbr, dout_self, n, provenance):
    """Build AdjRows from neighbor entries plus the implicit self-loop.

    ``pos``/``cols`` list the neighbor entries (row position, column node);
    ``din`` and ``dout_self`` are per row, ``dout_nbr`` per neighbor entry.
    """
    row_ids = np.asarray(row_ids, dtype=np.int64)
    m = row_ids.size
    pos = np.concatenate([np.asarray(pos, dtype=np.int64), np.arange(m)])
    cols = np.concatenate([np.asarray(cols, dtype=np.int64), row_ids])
    dout = np.concatenate([np.asarray(dout_nbr, dtype=np.int64), np.asarray(dout_self, dtype=np.int64)])
    order = np.lexsort((cols, pos))
    pos, cols, dout = pos[order], cols[order], dout[order]
    data = pair_weight(np.asarray(din, dtype=np.int64)[pos] + 1, dout + 1)
    indptr = np.concatenate([[0], np.cumsum(np.bincount(pos, minlength=m))])
    matrix = sp.csr_matrix((data, cols, indptr), shape=(m, n))
    return AdjRows(row_ids, matrix, provenance)


def gather_neighbors(graph, nodes):
    """Flattened neighbor lists of ``nodes``: (row position, neighbor id) arrays."""
    nodes = np.asarray(nodes, dtype=np.int64)
    deg = graph.degree[nodes]
    pos = np.repeat(np.arange(nodes.size), deg)
    offsets = np.arange(pos.size) - np.repeat(np.cumsum(deg) - deg, deg)
    cols = graph.indices[graph.indptr[nodes][pos] + offsets]
    return pos, cols


def normalized_rows_full(graph, node_set):
    """Rows of (D_in + I)^-1/2 (A + I) (D_out + I)^-1/2 for the given nodes."""
    nodes = np.asarray(node_set, dtype=np.int64).reshape(-1)
    if nodes.size and (nodes.min() < 0 or nodes.max() >= graph.n):
        raise InputError("node index out of range")
    deg = graph.degree
    pos, cols = gather_neighbors(graph, nodes)
    return assemble_rows(nodes, pos, cols, deg[nodes], deg[cols], deg[nodes], graph.n, ("full",))
