"""Exact combinatorial solvers: assignment, balanced transport, capacitated assignment.

The assignment solver runs the Hungarian method in exact integer arithmetic
for small problems. Every float is a dyadic rational, so scaling the cost
matrix by a common power of two turns it into integers without rounding, and
the returned permutation is optimal for the float entries as given. Larger
problems go to scipy's Jonker-Volgenant implementation.

Balanced transport uses the transportation simplex (network simplex on the
dense bipartite graph): north-west corner start, Dantzig pricing, and Bland's
rule after a run of degenerate pivots to rule out cycling.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DimensionError, MassError

EXACT_ASSIGNMENT_LIMIT = 32
MARGINAL_TOL = 1e-10
WEIGHT_SUM_TOL = 1e-12


def _cost_matrix(C) -> np.ndarray:
    C = np.asarray(C, dtype=float)
    if C.ndim != 2:
        raise DimensionError("cost matrix must be two-dimensional")
    if not np.all(np.isfinite(C)):
        raise ValueError("cost matrix entries must be finite")
    return C


def _integer_costs(C: np.ndarray) -> list[list[int]]:
    """Scale the float matrix to exact integers by a common power of two."""
    fracs = [[Fraction(float(c)) for c in row] for row in C]
    den = max((f.denominator for row in fracs for f in row), default=1)
    return [[f.numerator * (den // f.denominator) for f in row] for row in fracs]


def _hungarian(a: list[list[int]]) -> list[int]:
    """Shortest augmenting path Hungarian method; returns row -> column."""
    n = len(a)
    inf = math.inf
    u = [0] * (n + 1)
    v = [0] * (n + 1)
    p = [0] * (n + 1)  # p[j]: row matched to column j (1-based, 0 = free)
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [inf] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            row = a[i0 - 1]
            ui0 = u[i0]
            delta = inf
            j1 = 0
            for j in range(1, n + 1):
                if not used[j]:
                    cur = row[j - 1] - ui0 - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    perm = [0] * n
    for j in range(1, n + 1):
        perm[p[j] - 1] = j - 1
    return perm


def solve_assignment(C) -> tuple[np.ndarray, float]:
    """Minimum-cost perfect matching of a square cost matrix.

    Returns ``(perm, cost)`` with ``perm[i]`` the column assigned to row ``i``
    and ``cost = sum_i C[i, perm[i]]`` (correctly rounded).
    """
    C = _cost_matrix(C)
    n, k = C.shape
    if n != k:
        raise DimensionError(f"assignment needs a square matrix, got {C.shape}")
    if n == 0:
        return np.zeros(0, dtype=int), 0.0
    if n <= EXACT_ASSIGNMENT_LIMIT:
        perm = np.asarray(_hungarian(_integer_costs(C)), dtype=int)
    else:
        rows, cols = linear_sum_assignment(C)
        perm = np.empty(n, dtype=int)
        perm[rows] = cols
    return perm, math.fsum(C[np.arange(n), perm])


@dataclass(frozen=True)
class TransportPlan:
    """Coupling between two weight vectors."""

    coupling: np.ndarray
    source_weights: np.ndarray
    target_weights: np.ndarray

    def marginal_error(self) -> float:
        return float(max(
            np.max(np.abs(self.coupling.sum(axis=1) - self.source_weights), initial=0.0),
            np.max(np.abs(self.coupling.sum(axis=0) - self.target_weights), initial=0.0),
        ))


def _check_weights(w, name):
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise DimensionError(f"{name} must be a non-empty vector")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise MassError(f"{name} must be finite and non-negative")
    if abs(math.fsum(w) - 1.0) > WEIGHT_SUM_TOL:
        raise MassError(f"{name} must sum to 1 (got {math.fsum(w)!r})")
    return w


def _tree_path(adj, start, goal):
    """Node path from ``start`` to ``goal`` in the basis spanning tree."""
    parent = {start: None}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        if node == goal:
            break
        for nb in adj[node]:
            if nb not in parent:
                parent[nb] = node
                queue.append(nb)
    path = [goal]
    while path[-1] != start:
        path.append(parent[path[-1]])
    return path


def _transport_simplex(a, b, C, max_pivots=None):
    m, k = C.shape
    x = np.zeros((m, k))
    basic = np.zeros((m, k), dtype=bool)
    s, d = a.copy(), b.copy()
    i = j = 0
    for _ in range(m + k - 1):
        basic[i, j] = True
        f = min(s[i], d[j])
        x[i, j] = f
        s[i] -= f
        d[j] -= f
        if i == m - 1:
            j += 1
        elif j == k - 1:
            i += 1
        elif s[i] <= d[j]:
            i += 1
        else:
            j += 1

    tol = 1e-12 * max(1.0, float(np.max(np.abs(C))))
    max_pivots = max_pivots or 50 * m * k + 1000
    degenerate_run = 0
    for _ in range(max_pivots):
        cells = np.argwhere(basic)
        adj = [[] for _ in range(m + k)]
        for r, c in cells:
            adj[r].append(m + c)
            adj[m + c].append(r)
        u = np.zeros(m)
        v = np.zeros(k)
        seen = np.zeros(m + k, dtype=bool)
        seen[0] = True
        stack = [0]
        while stack:
            node = stack.pop()
            for nb in adj[node]:
                if not seen[nb]:
                    seen[nb] = True
                    if nb >= m:
                        v[nb - m] = C[node, nb - m] - u[node]
                    else:
                        u[nb] = C[nb, node - m] - v[node - m]
                    stack.append(nb)
        reduced = C - u[:, None] - v[None, :]
        reduced[basic] = 0.0
        bland = degenerate_run > m + k
        if bland:
            candidates = np.flatnonzero(reduced.ravel() < -tol)
            if candidates.size == 0:
                break
            flat = int(candidates[0])
        else:
            flat = int(np.argmin(reduced))
            if reduced.flat[flat] >= -tol:
                break
        ie, je = divmod(flat, k)
        path = _tree_path(adj, ie, m + je)  # goal-first: col je ... row ie
        minus, plus = [], []
        for step in range(len(path) - 1):
            n1, n2 = path[step], path[step + 1]
            cell = (n2, n1 - m) if n1 >= m else (n1, n2 - m)
            (minus if step % 2 == 0 else plus).append(cell)
        theta = min(x[c] for c in minus)
        ties = [c for c in minus if x[c] == theta]
        leave = min(ties) if bland else ties[0]
        for c in plus:
            x[c] += theta
        for c in minus:
            x[c] = max(x[c] - theta, 0.0)
        x[leave] = 0.0
        x[ie, je] += theta
        basic[leave] = False
        basic[ie, je] = True
        degenerate_run = degenerate_run + 1 if theta == 0.0 else 0
    else:
        raise RuntimeError("transport simplex did not terminate")
    return x


def solve_transport(w_src, w_tgt, C) -> tuple[TransportPlan, float]:
    """Optimal coupling minimizing ``sum_ij plan_ij C_ij`` under the given marginals."""
    C = _cost_matrix(C)
    a = _check_weights(w_src, "source weights")
    b = _check_weights(w_tgt, "target weights")
    if C.shape != (a.size, b.size):
        raise DimensionError(f"cost matrix shape {C.shape} does not match weights ({a.size}, {b.size})")
    rows = np.flatnonzero(a > 0)
    cols = np.flatnonzero(b > 0)
    sub = _transport_simplex(a[rows], b[cols], C[np.ix_(rows, cols)])
    plan = np.zeros(C.shape)
    plan[np.ix_(rows, cols)] = sub
    cost = math.fsum((plan * C).ravel())
    return TransportPlan(plan, a, b), cost


def solve_capacitated_assignment(C, capacities) -> tuple[np.ndarray, float]:
    """Assign each of ``n`` sources to one of ``q`` clusters with fixed sizes.

    ``capacities[j]`` sources go to cluster ``j``. Solved as an assignment on
    the matrix whose column ``j`` is repeated ``capacities[j]`` times.
    """
    C = _cost_matrix(C)
    caps = [int(c) for c in getattr(capacities, "parts", capacities)]
    n, q = C.shape
    if len(caps) != q:
        raise DimensionError(f"{q} clusters but {len(caps)} capacities")
    if any(c < 0 for c in caps) or sum(caps) != n:
        raise MassError(f"capacities {caps} must be non-negative and sum to {n}")
    cols = np.repeat(np.arange(q), caps)
    perm, _ = solve_assignment(C[:, cols])
    assign = cols[perm]
    return assign, math.fsum(C[np.arange(n), assign])
