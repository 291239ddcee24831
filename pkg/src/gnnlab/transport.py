"""Network simplex for the transportation problem.

The basis is a spanning tree on the bipartite graph (rows + columns) with
m + n - 1 basic cells, started from the northwest-corner rule. Each pivot
computes node potentials over the tree, enters a cell with negative reduced
cost and pushes flow around the unique tree cycle it closes.

The same code runs on floats or on ``fractions.Fraction`` inputs; with
Fractions every step is exact and pivoting follows Bland's rule (first
improving cell, lowest-index leaving cell), which cannot cycle.
"""

from collections import deque
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from gnnlab.errors import InputError

MASS_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class TransportPlan:
    flows: dict  # (i, j) -> mass for basic cells with positive flow
    cost: object
    row_marginal: tuple
    col_marginal: tuple
    pivots: int = 0

    @property
    def shape(self):
        return len(self.row_marginal), len(self.col_marginal)

    def dense(self):
        out = np.zeros(self.shape)
        for (i, j), x in self.flows.items():
            out[i, j] = float(x)
        return out

    def residuals(self):
        """Max-norm violation of the row and column marginals."""
        plan = self.dense()
        rows = np.abs(plan.sum(axis=1) - np.asarray(self.row_marginal, dtype=float))
        cols = np.abs(plan.sum(axis=0) - np.asarray(self.col_marginal, dtype=float))
        return max(rows.max(initial=0.0), cols.max(initial=0.0))


def _tree_adjacency(basis, m):
    adj = {}
    for (i, j) in basis:
        adj.setdefault(i, []).append(m + j)
        adj.setdefault(m + j, []).append(i)
    return adj


def _potentials(basis, cost, m, n, zero):
    adj = _tree_adjacency(basis, m)
    pot = [None] * (m + n)
    pot[0] = zero
    queue = deque([0])
    while queue:
        node = queue.popleft()
        for nxt in adj.get(node, ()):
            if pot[nxt] is not None:
                continue
            if node < m:
                pot[nxt] = cost[node][nxt - m] - pot[node]
            else:
                pot[nxt] = cost[nxt][node - m] - pot[node]
            queue.append(nxt)
    return pot[:m], pot[m:]


def _tree_path(basis, m, start, goal):
    """Node path from ``start`` to ``goal`` in the basis tree."""
    adj = _tree_adjacency(basis, m)
    parent = {start: None}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        if node == goal:
            break
        for nxt in adj.get(node, ()):
            if nxt not in parent:
                parent[nxt] = node
                queue.append(nxt)
    path = [goal]
    while path[-1] != start:
        path.append(parent[path[-1]])
    return path[::-1]


def solve_transport(cost, supply, demand, max_pivots=None):
    """Minimum-cost coupling of ``supply`` (rows) and ``demand`` (columns).

    ``cost`` is an m x n array-like. Float inputs use Dantzig pricing with a
    small tolerance; Fraction/int inputs are solved exactly with Bland's rule.
    """
    exact = all(isinstance(x, (int, Fraction)) for x in list(supply) + list(demand))
    if exact:
        cost_rows = [[Fraction(c) for c in row] for row in cost]
        a = [Fraction(x) for x in supply]
        b = [Fraction(x) for x in demand]
        zero = Fraction(0)
    else:
        cost_arr = np.asarray(cost, dtype=np.float64)
        cost_rows = cost_arr.tolist()
        a = [float(x) for x in supply]
        b = [float(x) for x in demand]
        zero = 0.0
    m, n = len(a), len(b)
    if m == 0 or n == 0:
        raise InputError("transport needs nonempty marginals")
    if len(cost_rows) != m or any(len(row) != n for row in cost_rows):
        raise InputError("cost shape does not match the marginals")
    if min(a) < 0 or min(b) < 0:
        raise InputError("marginals must be non-negative")
    total_a, total_b = sum(a), sum(b)
    if exact and total_a != total_b:
        raise InputError("marginals carry unequal total mass")
    if not exact and abs(total_a - total_b) > MASS_TOL * max(1.0, abs(total_a)):
        raise InputError(f"marginals carry unequal total mass ({total_a!r} vs {total_b!r})")

    basis = _northwest_basis(a, b, zero, exact)
    if max_pivots is None:
        max_pivots = 50 * (m + n) * (m + n) + 1000
    if not exact:
        scale = float(np.abs(cost_arr).max()) if cost_arr.size else 0.0
        tol = 1e-12 * max(scale, 1.0)
    pivots = 0
    degenerate_run = 0
    while True:
        u, v = _potentials(basis, cost_rows, m, n, zero)
        entering = None
        if exact or degenerate_run > m + n:
            for i in range(m):
                for j in range(n):
                    if (i, j) not in basis and cost_rows[i][j] - u[i] - v[j] < (zero if exact else -tol):
                        entering = (i, j)
                        break
                if entering:
                    break
        else:
            reduced = cost_arr - np.asarray(u)[:, None] - np.asarray(v)[None, :]
            for (i, j) in basis:
                reduced[i, j] = 0.0
            k = int(np.argmin(reduced))
            if reduced.flat[k] < -tol:
                entering = divmod(k, n)
        if entering is None:
            break
        if pivots >= max_pivots:
            raise RuntimeError("network simplex exceeded its pivot budget")
        pivots += 1
        i0, j0 = entering
        path = _tree_path(basis, m, m + j0, i0)
        # cells along the path alternate -, +, -, ... starting from column j0
        cells = []
        for a_node, b_node in zip(path, path[1:]):
            cells.append((b_node, a_node - m) if a_node >= m else (a_node, b_node - m))
        minus = cells[0::2]
        plus = cells[1::2]
        theta = min(basis[c] for c in minus)
        leaving = min(c for c in minus if basis[c] == theta)
        for c in minus:
            basis[c] -= theta
        for c in plus:
            basis[c] += theta
        del basis[leaving]
        basis[entering] = theta
        degenerate_run = degenerate_run + 1 if theta == zero else 0

    flows = {c: x for c, x in basis.items() if x != zero}
    if exact:
        total = sum((x * cost_rows[i][j] for (i, j), x in flows.items()), zero)
    else:
        flows = {c: max(x, 0.0) for c, x in flows.items()}
        total = float(sum(x * cost_rows[i][j] for (i, j), x in flows.items()))
    return TransportPlan(flows, total, tuple(a), tuple(b), pivots)


def _northwest_basis(a, b, zero, exact):
    """Northwest-corner start: exactly m + n - 1 cells forming a spanning tree."""
    m, n = len(a), len(b)
    a, b = list(a), list(b)
    basis = {}
    i = j = 0
    while i < m and j < n:
        if i == m - 1 and j == n - 1:
            basis[(i, j)] = a[i] if exact else max(min(a[i], b[j]), zero)
            break
        x = min(a[i], b[j])
        basis[(i, j)] = x
        a[i] -= x
        b[j] -= x
        # advance along exactly one axis so the basis stays a tree
        if j == n - 1:
            i += 1
        elif i == m - 1:
            j += 1
        elif a[i] <= b[j]:
            i += 1
        else:
            j += 1
    return basis
