"""Pure numpy implementations of the hot kernels.

The compiled extension (ifsdrift._kernels) provides the same entry points;
whichever is active is chosen in ifsdrift.backend.  Stepping kernels
accumulate coordinates in the same order as the C loops (k ascending, offset
added last) so both backends produce bit-identical trajectories.
"""

import numpy as np


def steps_path(matrices, offsets, cum_weights, x0, uniforms):
    """Single-particle chaos game: iterate x -> A_j x + b_j, recording visits.

    One uniform is consumed per step; j = searchsorted(cum_weights, u, 'right').
    Returns the (steps, d) array of visited points (x0 itself excluded).
    """
    steps = uniforms.shape[0]
    d = x0.shape[0]
    out = np.empty((steps, d))
    x = [float(v) for v in x0]
    mat = matrices.tolist()
    off = offsets.tolist()
    cw = cum_weights
    for t in range(steps):
        j = int(np.searchsorted(cw, uniforms[t], side="right"))
        a = mat[j]
        b = off[j]
        new = []
        for r in range(d):
            acc = a[r][0] * x[0]
            for k in range(1, d):
                acc = acc + a[r][k] * x[k]
            new.append(acc + b[r])
        x = new
        out[t] = x
    return out


def steps_cloud(matrices, offsets, cum_weights, points, uniforms):
    """Advance an (N, d) cloud in place by uniforms.shape[0] steps.

    uniforms has shape (steps, N): row t holds the draws consumed at step t,
    one per particle.
    """
    steps = uniforms.shape[0]
    d = points.shape[1]
    for t in range(steps):
        idx = np.searchsorted(cum_weights, uniforms[t], side="right")
        sel = matrices[idx]
        selb = offsets[idx]
        new = np.empty_like(points)
        for r in range(d):
            acc = sel[:, r, 0] * points[:, 0]
            for k in range(1, d):
                acc = acc + sel[:, r, k] * points[:, k]
            new[:, r] = acc + selb[:, r]
        points[:] = new
    return points


def accumulate_cells(keys, weights, points):
    """Group atoms by cell key; return sums in ascending key order.

    Returns (unique_keys, weight_sums, moment_sums, inverse) where
    moment_sums[u] = sum of w_i * x_i over the group and inverse maps each
    input row to its group index.
    """
    order = np.argsort(keys, kind="stable")
    sk = keys[order]
    starts = np.r_[0, np.flatnonzero(np.diff(sk)) + 1]
    uniq = sk[starts]
    w_ord = weights[order]
    w_sum = np.add.reduceat(w_ord, starts)
    moments = np.add.reduceat(w_ord[:, None] * points[order], starts, axis=0)
    counts = np.diff(np.r_[starts, sk.shape[0]])
    inverse = np.empty(keys.shape[0], dtype=np.int64)
    inverse[order] = np.repeat(np.arange(uniq.shape[0], dtype=np.int64), counts)
    return uniq, w_sum, moments, inverse


network_simplex = None
