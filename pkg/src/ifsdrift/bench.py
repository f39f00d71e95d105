"""Benchmark the compiled kernels against the pure numpy fallback.

Run as ``python -m ifsdrift.bench``; pass --quick for smaller sizes.
Each task is checked for agreement between backends before timing.
"""

import argparse
import time

import numpy as np

from . import _kernels_py
from ._grid import grid_keys

try:
    from . import _kernels
except ImportError:
    _kernels = None


MAPLE_MATRICES = np.array([
    [[0.8, 0.0], [0.0, 0.8]],
    [[0.5, 0.0], [0.0, 0.5]],
    [[0.355, 0.355], [0.355, -0.355]],
    [[0.355, -0.355], [-0.355, -0.355]],
])
MAPLE_OFFSETS = np.array([
    [0.1, 0.04], [0.25, 0.4], [0.266, 0.078], [0.378, 0.434],
])
MAPLE_CUMW = np.cumsum([0.23, 0.22, 0.22, 0.33])


def _time(fn, repeats=3):
    best = np.inf
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_steps_path(steps):
    rng = np.random.default_rng(0)
    uniforms = rng.random(steps)
    x0 = np.zeros(2)

    def pure():
        return _kernels_py.steps_path(MAPLE_MATRICES, MAPLE_OFFSETS,
                                      MAPLE_CUMW, x0, uniforms)

    t_pure, out_pure = _time(pure)
    row = {"task": f"steps_path (T={steps})", "pure": t_pure}
    if _kernels is not None:
        def compiled():
            return _kernels.steps_path(MAPLE_MATRICES, MAPLE_OFFSETS,
                                       MAPLE_CUMW, x0, uniforms)
        t_c, out_c = _time(compiled)
        assert np.array_equal(out_pure, out_c), "backends disagree bitwise"
        row["compiled"] = t_c
    return row


def bench_steps_cloud(n, steps):
    rng = np.random.default_rng(1)
    uniforms = rng.random((steps, n))
    start = rng.random((n, 2))

    def pure():
        pts = start.copy()
        _kernels_py.steps_cloud(MAPLE_MATRICES, MAPLE_OFFSETS, MAPLE_CUMW,
                                pts, uniforms)
        return pts

    t_pure, out_pure = _time(pure)
    row = {"task": f"steps_cloud (N={n}, T={steps})", "pure": t_pure}
    if _kernels is not None:
        def compiled():
            pts = start.copy()
            _kernels.steps_cloud(MAPLE_MATRICES, MAPLE_OFFSETS, MAPLE_CUMW,
                                 pts, uniforms)
            return pts
        t_c, out_c = _time(compiled)
        assert np.array_equal(out_pure, out_c), "backends disagree bitwise"
        row["compiled"] = t_c
    return row


def bench_accumulate(n_children):
    rng = np.random.default_rng(2)
    pts = rng.random((n_children, 2))
    wts = rng.random(n_children)
    wts /= wts.sum()
    keys = grid_keys(pts, 5e-3)

    t_pure, out_pure = _time(
        lambda: _kernels_py.accumulate_cells(keys, wts, pts))
    row = {"task": f"accumulate_cells (K={n_children})", "pure": t_pure}
    if _kernels is not None:
        t_c, out_c = _time(lambda: _kernels.accumulate_cells(keys, wts, pts))
        assert np.array_equal(out_pure[0], out_c[0])
        assert np.allclose(out_pure[1], out_c[1], rtol=0, atol=1e-13)
        assert np.allclose(out_pure[2], out_c[2], rtol=0, atol=1e-13)
        row["compiled"] = t_c
    return row


def bench_exact_ot(n):
    from scipy.spatial.distance import cdist

    from .transport import _solve_lp

    rng = np.random.default_rng(3)
    xs = rng.random((n, 2))
    ys = rng.random((n, 2))
    aw = rng.random(n)
    aw /= aw.sum()
    bw = rng.random(n)
    bw /= bw.sum()
    cost = cdist(xs, ys)

    t_pure, out_pure = _time(lambda: _solve_lp(cost, aw, bw), repeats=1)
    obj_pure = float(out_pure[2] @ cost[out_pure[0], out_pure[1]])
    row = {"task": f"exact OT {n}x{n} weighted", "pure": t_pure}
    if _kernels is not None:
        t_c, out_c = _time(lambda: _kernels.network_simplex(cost, aw, bw),
                           repeats=3)
        obj_c = float(out_c[2] @ cost[out_c[0], out_c[1]])
        assert abs(obj_pure - obj_c) < 1e-8, (obj_pure, obj_c)
        row["compiled"] = t_c
    return row


def run(quick=False):
    rows = [
        bench_steps_path(30_000 if quick else 300_000),
        bench_steps_cloud(2_000 if quick else 20_000, 20 if quick else 100),
        bench_accumulate(200_000 if quick else 2_000_000),
        bench_exact_ot(100 if quick else 300),
    ]
    print(f"{'task':<38}{'pure (s)':>12}{'compiled (s)':>14}{'speedup':>9}")
    for row in rows:
        pure = row["pure"]
        if "compiled" in row:
            comp = row["compiled"]
            print(f"{row['task']:<38}{pure:>12.4f}{comp:>14.4f}"
                  f"{pure / comp:>9.1f}")
        else:
            print(f"{row['task']:<38}{pure:>12.4f}{'n/a':>14}{'':>9}")
    if _kernels is None:
        print("\ncompiled kernels unavailable; showing pure backend only")
    return rows


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true",
                        help="smaller sizes for smoke testing")
    args = parser.parse_args(argv)
    run(quick=args.quick)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
