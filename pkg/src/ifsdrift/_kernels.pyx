# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: chaos-game stepping, cell accumulation, and a
dense-transportation network simplex.

Stepping accumulates coordinates in the same order as the numpy backend
(k ascending, offset added last) and the build disables FMA contraction, so
trajectories agree bit for bit across backends.  The simplex result is never
trusted blindly; ifsdrift.transport re-certifies every solve against the
recovered dual potentials.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor, sqrt
from libc.stdlib cimport free, malloc

cnp.import_array()

ctypedef cnp.int64_t i64
ctypedef cnp.float64_t f64


cdef inline Py_ssize_t _bisect_right(const f64* cw, Py_ssize_t m, f64 u) nogil:
    cdef Py_ssize_t lo = 0, hi = m, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if u < cw[mid]:
            hi = mid
        else:
            lo = mid + 1
    return lo


def steps_path(cnp.ndarray[f64, ndim=3] matrices,
               cnp.ndarray[f64, ndim=2] offsets,
               cnp.ndarray[f64, ndim=1] cum_weights,
               cnp.ndarray[f64, ndim=1] x0,
               cnp.ndarray[f64, ndim=1] uniforms):
    """Single-particle chaos game; returns the (steps, d) visited points."""
    cdef Py_ssize_t steps = uniforms.shape[0]
    cdef Py_ssize_t d = x0.shape[0]
    cdef Py_ssize_t m = cum_weights.shape[0]
    out_arr = np.empty((steps, d))
    cdef cnp.ndarray[f64, ndim=2] out = out_arr
    cdef f64* x = <f64*>malloc(d * sizeof(f64))
    cdef f64* xn = <f64*>malloc(d * sizeof(f64))
    if x == NULL or xn == NULL:
        free(x); free(xn)
        raise MemoryError()
    cdef Py_ssize_t t, r, k, j
    cdef f64 acc
    try:
        with nogil:
            for r in range(d):
                x[r] = x0[r]
            for t in range(steps):
                j = _bisect_right(&cum_weights[0], m, uniforms[t])
                for r in range(d):
                    acc = matrices[j, r, 0] * x[0]
                    for k in range(1, d):
                        acc = acc + matrices[j, r, k] * x[k]
                    xn[r] = acc + offsets[j, r]
                for r in range(d):
                    x[r] = xn[r]
                    out[t, r] = x[r]
    finally:
        free(x)
        free(xn)
    return out_arr


def steps_cloud(cnp.ndarray[f64, ndim=3] matrices,
                cnp.ndarray[f64, ndim=2] offsets,
                cnp.ndarray[f64, ndim=1] cum_weights,
                cnp.ndarray[f64, ndim=2] points,
                cnp.ndarray[f64, ndim=2] uniforms):
    """Advance an (N, d) cloud in place; uniforms has shape (steps, N)."""
    cdef Py_ssize_t steps = uniforms.shape[0]
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t d = points.shape[1]
    cdef Py_ssize_t m = cum_weights.shape[0]
    cdef f64* xn = <f64*>malloc(d * sizeof(f64))
    if xn == NULL:
        raise MemoryError()
    cdef Py_ssize_t t, p, r, k, j
    cdef f64 acc
    try:
        with nogil:
            for t in range(steps):
                for p in range(n):
                    j = _bisect_right(&cum_weights[0], m, uniforms[t, p])
                    for r in range(d):
                        acc = matrices[j, r, 0] * points[p, 0]
                        for k in range(1, d):
                            acc = acc + matrices[j, r, k] * points[p, k]
                        xn[r] = acc + offsets[j, r]
                    for r in range(d):
                        points[p, r] = xn[r]
    finally:
        free(xn)
    return points


def accumulate_cells(cnp.ndarray[i64, ndim=1] keys,
                     cnp.ndarray[f64, ndim=1] weights,
                     cnp.ndarray[f64, ndim=2] points):
    """Group atoms by cell key via open addressing.

    Output matches the numpy backend: unique keys ascending, per-group weight
    and first-moment sums, and the input-row group index.
    """
    cdef Py_ssize_t n = keys.shape[0]
    cdef Py_ssize_t d = points.shape[1]
    cdef Py_ssize_t cap = 1
    while cap < 2 * n:
        cap <<= 1
    cdef i64 EMPTY = <i64>0x8000000000000000
    cdef i64* slot_key = <i64*>malloc(cap * sizeof(i64))
    cdef i64* slot_uid = <i64*>malloc(cap * sizeof(i64))
    if slot_key == NULL or slot_uid == NULL:
        free(slot_key); free(slot_uid)
        raise MemoryError()
    uniq_arr = np.empty(n, dtype=np.int64)
    wsum_arr = np.zeros(n)
    mom_arr = np.zeros((n, d))
    inv_arr = np.empty(n, dtype=np.int64)
    cdef cnp.ndarray[i64, ndim=1] uniq = uniq_arr
    cdef cnp.ndarray[f64, ndim=1] wsum = wsum_arr
    cdef cnp.ndarray[f64, ndim=2] mom = mom_arr
    cdef cnp.ndarray[i64, ndim=1] inv = inv_arr
    cdef Py_ssize_t i, r
    cdef i64 key, uid, nuniq = 0
    cdef unsigned long long hsh
    cdef Py_ssize_t mask = cap - 1, s
    with nogil:
        for s in range(cap):
            slot_key[s] = EMPTY
        for i in range(n):
            key = keys[i]
            hsh = (<unsigned long long>key) * 0x9E3779B97F4A7C15ULL
            s = <Py_ssize_t>(hsh >> 32) & mask
            while True:
                if slot_key[s] == EMPTY:
                    slot_key[s] = key
                    slot_uid[s] = nuniq
                    uniq[nuniq] = key
                    uid = nuniq
                    nuniq += 1
                    break
                if slot_key[s] == key:
                    uid = slot_uid[s]
                    break
                s = (s + 1) & mask
            inv[i] = uid
            wsum[uid] += weights[i]
            for r in range(d):
                mom[uid, r] += weights[i] * points[i, r]
    free(slot_key)
    free(slot_uid)
    uniq_arr = uniq_arr[:nuniq]
    order = np.argsort(uniq_arr, kind="stable")
    rank = np.empty(nuniq, dtype=np.int64)
    rank[order] = np.arange(nuniq, dtype=np.int64)
    return (uniq_arr[order], wsum_arr[:nuniq][order],
            mom_arr[:nuniq][order], rank[inv_arr])


# ---------------------------------------------------------------------------
# dense transportation network simplex
# ---------------------------------------------------------------------------

cdef struct Tree:
    Py_ssize_t n_nodes
    Py_ssize_t* parent
    Py_ssize_t* pred_entry
    Py_ssize_t* depth
    f64* pi
    # tree edges: eu -> ev carrying flow
    Py_ssize_t* eu
    Py_ssize_t* ev
    f64* eflow
    f64* ecost
    # adjacency scratch
    Py_ssize_t* head
    Py_ssize_t* nxt
    Py_ssize_t* adj_entry
    Py_ssize_t* stack


cdef int _rebuild(Tree* T) nogil:
    """BFS from the root over current tree edges: parent, depth, potentials.

    Potential convention: reduced cost of arc (s -> t) is c + pi[t] - pi[s];
    tree arcs have reduced cost zero.
    """
    cdef Py_ssize_t N = T.n_nodes
    cdef Py_ssize_t root = N - 1
    cdef Py_ssize_t i, a, b, idx, top, v, w, entry
    for i in range(N):
        T.head[i] = -1
    for i in range(N - 1):
        a = T.eu[i]
        b = T.ev[i]
        idx = 2 * i
        T.nxt[idx] = T.head[a]
        T.head[a] = idx
        T.adj_entry[idx] = i
        idx = 2 * i + 1
        T.nxt[idx] = T.head[b]
        T.head[b] = idx
        T.adj_entry[idx] = i
    for i in range(N):
        T.parent[i] = -2
    T.parent[root] = -1
    T.depth[root] = 0
    T.pi[root] = 0.0
    T.stack[0] = root
    top = 1
    cdef Py_ssize_t seen = 1
    while top > 0:
        top -= 1
        v = T.stack[top]
        idx = T.head[v]
        while idx != -1:
            entry = T.adj_entry[idx]
            w = T.eu[entry] if T.ev[entry] == v else T.ev[entry]
            if T.parent[w] == -2:
                T.parent[w] = v
                T.pred_entry[w] = entry
                T.depth[w] = T.depth[v] + 1
                if T.eu[entry] == w:
                    # arc w -> v: c + pi[v] - pi[w] = 0
                    T.pi[w] = T.ecost[entry] + T.pi[v]
                else:
                    T.pi[w] = T.pi[v] - T.ecost[entry]
                T.stack[top] = w
                top += 1
                seen += 1
            idx = T.nxt[idx]
    return 0 if seen == N else -1


def network_simplex(cnp.ndarray[f64, ndim=2] cost,
                    cnp.ndarray[f64, ndim=1] supply,
                    cnp.ndarray[f64, ndim=1] demand):
    """Exact dense transportation solve.

    Returns (rows, cols, values, u, v): the positive plan entries and dual
    potentials with u_i + v_j <= C_ij everywhere and equality on the support.
    Demands are rescaled to balance the supplies exactly.
    """
    cdef Py_ssize_t n = cost.shape[0]
    cdef Py_ssize_t m = cost.shape[1]
    cdef Py_ssize_t N = n + m + 1
    cdef Py_ssize_t root = N - 1

    a_arr = np.ascontiguousarray(supply, dtype=np.float64)
    b_arr = np.ascontiguousarray(demand, dtype=np.float64) * (
        float(np.sum(supply)) / float(np.sum(demand)))
    cdef cnp.ndarray[f64, ndim=1] a = a_arr
    cdef cnp.ndarray[f64, ndim=1] b = b_arr

    cdef f64 cmax = float(np.max(cost)) if n * m else 0.0
    cdef f64 BIG = (1.0 + cmax) * (n + m)
    cdef f64 opt_tol = 1e-11 * (1.0 + cmax)

    cdef Tree T
    T.n_nodes = N
    T.parent = <Py_ssize_t*>malloc(N * sizeof(Py_ssize_t))
    T.pred_entry = <Py_ssize_t*>malloc(N * sizeof(Py_ssize_t))
    T.depth = <Py_ssize_t*>malloc(N * sizeof(Py_ssize_t))
    T.pi = <f64*>malloc(N * sizeof(f64))
    T.eu = <Py_ssize_t*>malloc((N - 1) * sizeof(Py_ssize_t))
    T.ev = <Py_ssize_t*>malloc((N - 1) * sizeof(Py_ssize_t))
    T.eflow = <f64*>malloc((N - 1) * sizeof(f64))
    T.ecost = <f64*>malloc((N - 1) * sizeof(f64))
    T.head = <Py_ssize_t*>malloc(N * sizeof(Py_ssize_t))
    T.nxt = <Py_ssize_t*>malloc(2 * (N - 1) * sizeof(Py_ssize_t))
    T.adj_entry = <Py_ssize_t*>malloc(2 * (N - 1) * sizeof(Py_ssize_t))
    T.stack = <Py_ssize_t*>malloc(N * sizeof(Py_ssize_t))
    if (T.parent == NULL or T.pred_entry == NULL or T.depth == NULL
            or T.pi == NULL or T.eu == NULL or T.ev == NULL
            or T.eflow == NULL or T.ecost == NULL or T.head == NULL
            or T.nxt == NULL or T.adj_entry == NULL or T.stack == NULL):
        _free_tree(&T)
        raise MemoryError()

    cdef Py_ssize_t i, j
    # initial all-artificial basis: sources feed the root, root feeds sinks
    for i in range(n):
        T.eu[i] = i
        T.ev[i] = root
        T.eflow[i] = a[i]
        T.ecost[i] = BIG
    for j in range(m):
        T.eu[n + j] = root
        T.ev[n + j] = n + j
        T.eflow[n + j] = b[j]
        T.ecost[n + j] = BIG

    cdef Py_ssize_t block = <Py_ssize_t>sqrt(<f64>(n * m))
    if block < 64:
        block = 64
    cdef Py_ssize_t max_pivots = 100 * (n + m) + 10000
    cdef Py_ssize_t next_arc = 0, n_arcs = n * m
    cdef Py_ssize_t pivots = 0
    cdef Py_ssize_t scanned, e, best_e, ei, ej
    cdef f64 best_rc, rc, delta, f
    cdef Py_ssize_t eu_node, ev_node, join, w, x
    cdef Py_ssize_t leave_entry, out_side
    cdef int status = 0

    with nogil:
        if _rebuild(&T) != 0:
            status = -9
        while status == 0:
            # block pricing: most negative reduced cost in the next block(s)
            best_e = -1
            best_rc = -opt_tol
            scanned = 0
            while scanned < n_arcs:
                e = next_arc
                next_arc += 1
                if next_arc == n_arcs:
                    next_arc = 0
                scanned += 1
                ei = e // m
                ej = e - ei * m
                rc = cost[ei, ej] + T.pi[n + ej] - T.pi[ei]
                if rc < best_rc:
                    best_rc = rc
                    best_e = e
                if scanned % block == 0 and best_e != -1:
                    break
            if best_e == -1:
                break  # optimal
            pivots += 1
            if pivots > max_pivots:
                status = -2
                break

            ei = best_e // m
            ej = best_e - ei * m
            eu_node = ei
            ev_node = n + ej

            # join = lowest common ancestor
            w = eu_node
            x = ev_node
            while T.depth[w] > T.depth[x]:
                w = T.parent[w]
            while T.depth[x] > T.depth[w]:
                x = T.parent[x]
            while w != x:
                w = T.parent[w]
                x = T.parent[x]
            join = w

            # leaving arc: min residual along the cycle. On the source side
            # the cycle runs parent -> child, so arcs oriented child -> parent
            # lose flow; on the target side the opposite.  Ties prefer the
            # target side (scanned second, non-strict).
            delta = -1.0
            leave_entry = -1
            out_side = 0
            w = eu_node
            while w != join:
                e = T.pred_entry[w]
                if T.eu[e] == w:
                    f = T.eflow[e]
                    if delta < 0 or f < delta:
                        delta = f
                        leave_entry = e
                        out_side = 1
                w = T.parent[w]
            w = ev_node
            while w != join:
                e = T.pred_entry[w]
                if T.ev[e] == w:
                    f = T.eflow[e]
                    if delta < 0 or f <= delta:
                        delta = f
                        leave_entry = e
                        out_side = 2
                w = T.parent[w]
            if leave_entry == -1:
                status = -3  # unbounded: impossible for balanced problems
                break

            # push delta around the cycle
            w = eu_node
            while w != join:
                e = T.pred_entry[w]
                if T.eu[e] == w:
                    T.eflow[e] -= delta
                else:
                    T.eflow[e] += delta
                w = T.parent[w]
            w = ev_node
            while w != join:
                e = T.pred_entry[w]
                if T.ev[e] == w:
                    T.eflow[e] -= delta
                else:
                    T.eflow[e] += delta
                w = T.parent[w]

            # swap leaving for entering and refresh the tree arrays
            T.eu[leave_entry] = eu_node
            T.ev[leave_entry] = ev_node
            T.eflow[leave_entry] = delta
            T.ecost[leave_entry] = cost[ei, ej]
            if _rebuild(&T) != 0:
                status = -9
                break

    if status == -9:
        _free_tree(&T)
        raise RuntimeError("network simplex: tree became disconnected")
    if status == -2:
        _free_tree(&T)
        raise RuntimeError("network simplex: pivot budget exhausted")
    if status == -3:
        _free_tree(&T)
        raise RuntimeError("network simplex: unbounded cycle")

    rows_l = []
    cols_l = []
    vals_l = []
    cdef f64 art_flow = 0.0
    for i in range(N - 1):
        if T.eu[i] == root or T.ev[i] == root:
            art_flow += T.eflow[i] if T.eflow[i] > 0 else -T.eflow[i]
            continue
        if T.eflow[i] > 0.0:
            if T.eu[i] < n:
                rows_l.append(T.eu[i])
                cols_l.append(T.ev[i] - n)
            else:
                rows_l.append(T.ev[i])
                cols_l.append(T.eu[i] - n)
            vals_l.append(T.eflow[i])
    u_arr = np.empty(n)
    v_arr = np.empty(m)
    for i in range(n):
        u_arr[i] = T.pi[i]
    for j in range(m):
        v_arr[j] = -T.pi[n + j]
    _free_tree(&T)
    if art_flow > 1e-9:
        raise RuntimeError(
            f"network simplex: artificial arcs kept flow {art_flow:.3e}")
    return (np.asarray(rows_l, dtype=np.int64),
            np.asarray(cols_l, dtype=np.int64),
            np.asarray(vals_l), u_arr, v_arr)


cdef void _free_tree(Tree* T) nogil:
    free(T.parent); free(T.pred_entry); free(T.depth); free(T.pi)
    free(T.eu); free(T.ev); free(T.eflow); free(T.ecost)
    free(T.head); free(T.nxt); free(T.adj_entry); free(T.stack)
