"""Independent oracles used only by tests.

These deliberately avoid the library's own code paths: the operator norm
comes from the closed-form 2x2 singular value (or power iteration), tiny
transport problems are solved by enumerating the basic feasible solutions of
the transportation polytope, and the 1-D distance is a Riemann sum over a
fine grid.
"""

import itertools

import numpy as np


def operator_norm_2x2(matrix):
    """Largest singular value of a 2x2 matrix in closed form."""
    a = np.asarray(matrix, dtype=float)
    frob2 = float((a * a).sum())
    det = float(a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0])
    gap = max(frob2 * frob2 - 4.0 * det * det, 0.0)
    return float(np.sqrt((frob2 + np.sqrt(gap)) / 2.0))


def operator_norm_power(matrix, iters=2000, seed=0):
    """Operator norm via power iteration on A^T A."""
    a = np.asarray(matrix, dtype=float)
    rng = np.random.default_rng(seed)
    v = rng.normal(size=a.shape[1])
    v /= np.linalg.norm(v)
    ata = a.T @ a
    for _ in range(iters):
        v = ata @ v
        n = np.linalg.norm(v)
        if n == 0:
            return 0.0
        v /= n
    return float(np.sqrt(v @ ata @ v))


def _tree_flows(n, m, edges, supply, demand):
    """Solve the flows forced on a spanning tree of the bipartite graph.

    Nodes 0..n-1 are sources, n..n+m-1 are sinks; edges are (i, j) index
    pairs into the cost matrix.  Returns the flow per edge or None if the
    edges do not form a spanning tree.
    """
    n_nodes = n + m
    if len(edges) != n_nodes - 1:
        return None
    adj = {v: [] for v in range(n_nodes)}
    for idx, (i, j) in enumerate(edges):
        adj[i].append((n + j, idx))
        adj[n + j].append((i, idx))
    # connectivity check
    seen = {0}
    stack = [0]
    order = []
    parent_edge = {0: None}
    while stack:
        v = stack.pop()
        order.append(v)
        for w, idx in adj[v]:
            if w not in seen:
                seen.add(w)
                parent_edge[w] = idx
                stack.append(w)
    if len(seen) != n_nodes:
        return None
    balance = np.concatenate([supply, -demand])
    flows = np.zeros(len(edges))
    # peel leaves upward
    for v in reversed(order[1:]):
        idx = parent_edge[v]
        i, j = edges[idx]
        sign = 1.0 if v == i else -1.0  # flow orientation source -> sink
        flows[idx] += sign * balance[v]
        other = n + j if v == i else i
        balance[other] += balance[v]
        balance[v] = 0.0
    return flows


def transport_bruteforce(cost, supply, demand):
    """Exact optimum of a tiny transportation LP by vertex enumeration.

    Enumerates every spanning-tree basis of the complete bipartite graph,
    keeps the feasible ones (nonnegative flows), and minimizes the cost.
    Intended for n, m <= 4.
    """
    cost = np.asarray(cost, dtype=float)
    n, m = cost.shape
    cells = list(itertools.product(range(n), range(m)))
    best = np.inf
    for edges in itertools.combinations(cells, n + m - 1):
        flows = _tree_flows(n, m, list(edges), np.asarray(supply, float),
                            np.asarray(demand, float))
        if flows is None or np.any(flows < -1e-12):
            continue
        value = float(sum(f * cost[i, j]
                          for f, (i, j) in zip(flows, edges)))
        best = min(best, value)
    return best


def w1_grid_quadrature(xa, wa, xb, wb, resolution=200001):
    """1-D transport distance as a Riemann sum of |F_a - F_b| on a grid."""
    lo = min(xa.min(), xb.min()) - 1e-9
    hi = max(xa.max(), xb.max()) + 1e-9
    grid = np.linspace(lo, hi, resolution)
    fa = np.array([wa[xa <= g].sum() for g in grid])
    fb = np.array([wb[xb <= g].sum() for g in grid])
    return float(np.trapezoid(np.abs(fa - fb), grid))
