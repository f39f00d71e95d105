"""Discrete measures on R^d, the dual Markov operator, and simulation.

Two complementary engines live here.  The exact push-forward applies
P* nu = sum_j mu(j) nu o f_j^{-1} atom by atom, with spatial-hash merging and
weight pruning whose induced W1 perturbation is measured and carried along,
so bound checks stay certified.  Particle simulation runs the chaos game on
clouds with reproducible sharded streams and is used for figures only.

The invariant-measure estimator is grid based: snapping the push-forward to
cells of size h turns P* into a finite stochastic matrix whose fixed point
is computed by (lazy) power iteration.  The returned certificate is the
measured one-step residual d(nu, P* nu) <= snap cost + iteration slack; by
the contraction inequality d(nu, nu*) <= residual / (1 - r), so halting at
residual <= tol * (1 - r) certifies d(nu, nu*) <= tol without knowing nu*.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import backend
from ._grid import MAX_GRID_DIM, cell_centers, grid_keys
from .errors import (
    ConvergenceFailureError,
    InvalidInputError,
    NotContractiveError,
)
from .schedule import derive_stream

__all__ = [
    "DiscreteMeasure",
    "ParticleCloud",
    "SimulationStream",
    "push_forward",
    "push_forward_with_log",
    "PushLog",
    "iterate_push_forward",
    "PushForwardSeries",
    "simulate_path",
    "simulate_epoch",
    "advance_cloud",
    "cesaro_average",
    "estimate_invariant_measure",
    "InvariantEstimate",
    "histogram_density",
]

DEFAULT_ATOM_CAP = 100_000
DEFAULT_MERGE_SCALE = 1e-4
MASS_TOL = 1e-9


class DiscreteMeasure:
    """Weighted atom cloud: points (n, d) with positive weights summing to 1.

    Exact duplicate points are merged at construction (weights added).
    """

    __slots__ = ("points", "weights")

    def __init__(self, points, weights, *, normalize=False, assume_unique=False):
        points = np.ascontiguousarray(points, dtype=float)
        weights = np.asarray(weights, dtype=float).reshape(-1)
        if points.ndim != 2:
            raise InvalidInputError("points must have shape (n, d)")
        if points.shape[0] != weights.shape[0]:
            raise InvalidInputError("points and weights length mismatch")
        if points.shape[0] == 0:
            raise InvalidInputError("measure needs at least one atom")
        if not np.all(np.isfinite(points)):
            raise InvalidInputError("points must be finite")
        if np.any(weights <= 0):
            raise InvalidInputError("weights must be strictly positive")
        if not assume_unique:
            uniq, inv = np.unique(points, axis=0, return_inverse=True)
            if uniq.shape[0] != points.shape[0]:
                merged = np.zeros(uniq.shape[0])
                np.add.at(merged, inv, weights)
                points, weights = uniq, merged
        total = float(weights.sum())
        if normalize:
            weights = weights / total
        elif abs(total - 1.0) > MASS_TOL:
            raise InvalidInputError(f"weights sum to {total!r}, expected 1")
        points.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)

    def __setattr__(self, name, value):
        raise AttributeError("DiscreteMeasure is immutable")

    @property
    def n_atoms(self):
        return self.points.shape[0]

    @property
    def dimension(self):
        return self.points.shape[1]

    def mean(self):
        return self.weights @ self.points

    def bounding_box(self):
        return self.points.min(axis=0), self.points.max(axis=0)

    def diameter_bound(self):
        lo, hi = self.bounding_box()
        return float(np.linalg.norm(hi - lo))

    @staticmethod
    def dirac(x):
        x = np.asarray(x, dtype=float).reshape(1, -1)
        return DiscreteMeasure(x, np.ones(1), assume_unique=True)

    def to_table(self, path):
        """Write the flat text table: d coordinate columns plus weight."""
        d = self.dimension
        header = ",".join([f"x{i}" for i in range(d)] + ["weight"])
        data = np.column_stack([self.points, self.weights])
        _write_csv(path, header, data)

    @staticmethod
    def from_table(path):
        pts, extra = _read_csv(path, expect_weight=True)
        return DiscreteMeasure(pts, extra, normalize=False)

    def __repr__(self):
        return f"DiscreteMeasure(n={self.n_atoms}, d={self.dimension})"


class ParticleCloud:
    """Equal-weight point cloud tagged with (epoch k, within-epoch step i)."""

    __slots__ = ("points", "epoch_index", "step_index")

    def __init__(self, points, epoch_index=0, step_index=0):
        points = np.ascontiguousarray(points, dtype=float)
        if points.ndim != 2 or points.shape[0] < 1:
            raise InvalidInputError("cloud needs at least one point, shape (N, d)")
        if not np.all(np.isfinite(points)):
            raise InvalidInputError("cloud points must be finite")
        self.points = points
        self.epoch_index = int(epoch_index)
        self.step_index = int(step_index)

    @property
    def n_particles(self):
        return self.points.shape[0]

    @property
    def dimension(self):
        return self.points.shape[1]

    def as_measure(self):
        n = self.points.shape[0]
        return DiscreteMeasure(self.points, np.full(n, 1.0 / n), normalize=True)

    def to_table(self, path):
        d = self.dimension
        header = ",".join(f"x{i}" for i in range(d))
        _write_csv(path, header, self.points)

    @staticmethod
    def from_table(path, epoch_index=0, step_index=0):
        pts, _ = _read_csv(path, expect_weight=False)
        return ParticleCloud(pts, epoch_index, step_index)


def _write_csv(path, header, data):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for row in np.atleast_2d(data):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def _read_csv(path, expect_weight):
    raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if expect_weight:
        if raw.shape[1] < 2:
            raise InvalidInputError(f"{path}: expected coordinates plus weight")
        return raw[:, :-1], raw[:, -1]
    return raw, None


# ---------------------------------------------------------------------------
# exact push-forward
# ---------------------------------------------------------------------------

@dataclass
class PushLog:
    """Measured W1 perturbation of one merge/prune pass.

    perturbation = merge displacement + dropped mass x support diameter; this
    upper-bounds the W1 distance between the exact push-forward and what was
    kept.
    """

    merge_displacement: float = 0.0
    dropped_mass: float = 0.0
    diameter: float = 0.0

    @property
    def perturbation(self):
        return self.merge_displacement + self.dropped_mass * self.diameter


def _children(nu, family, mu):
    m = family.size
    if mu.size != m:
        raise InvalidInputError(
            f"measure support {mu.size} does not match family size {m}"
        )
    if family.dimension != nu.dimension:
        raise InvalidInputError("family and measure dimensions disagree")
    n = nu.n_atoms
    pts = np.empty((m * n, nu.dimension))
    wts = np.empty(m * n)
    for j in range(m):
        pts[j * n:(j + 1) * n] = family.map(j + 1).apply_many(nu.points)
        wts[j * n:(j + 1) * n] = mu.weights[j] * nu.weights
    return pts, wts


def push_forward_with_log(nu, family, mu, *, merge_resolution=None,
                          atom_cap=DEFAULT_ATOM_CAP):
    """One exact application of the dual operator, with its perturbation log.

    Children f_j(x_i) carry weight mu(j) w_i.  Atoms are then merged on a
    spatial hash at ``merge_resolution`` (default 1e-4 x absorbing diameter;
    0 disables) and, if the count still exceeds ``atom_cap``, lowest-weight
    atoms are dropped and mass renormalized.  The log records the measured
    W1 cost of both steps.
    """
    from .maps import absorbing_radius  # local import avoids cycle at init

    pts, wts = _children(nu, family, mu)
    log = PushLog()

    if merge_resolution is None:
        radius = absorbing_radius(family)
        merge_resolution = (
            DEFAULT_MERGE_SCALE * 2.0 * radius if radius is not None else 0.0
        )

    if merge_resolution > 0 and pts.shape[1] <= MAX_GRID_DIM:
        keys = grid_keys(pts, merge_resolution)
        uniq, w_sum, moments, inverse = backend.accumulate_cells(keys, wts, pts)
        if uniq.shape[0] < pts.shape[0]:
            centroids = moments / w_sum[:, None]
            disp = np.linalg.norm(pts - centroids[inverse], axis=1)
            log.merge_displacement = float(disp @ wts)
            pts, wts = centroids, w_sum

    if pts.shape[0] > atom_cap:
        lo = pts.min(axis=0)
        hi = pts.max(axis=0)
        log.diameter = float(np.linalg.norm(hi - lo))
        keep = np.argpartition(wts, pts.shape[0] - atom_cap)[-atom_cap:]
        keep.sort()
        total = float(wts.sum())
        kept = float(wts[keep].sum())
        log.dropped_mass = (total - kept) / total
        pts = pts[keep]
        wts = wts[keep]

    out = DiscreteMeasure(pts, wts, normalize=True,
                          assume_unique=merge_resolution > 0)
    return out, log


def push_forward(nu, family, mu, *, merge_resolution=None,
                 atom_cap=DEFAULT_ATOM_CAP):
    """P* nu = sum_j mu(j) nu o f_j^{-1} as a discrete measure."""
    out, _ = push_forward_with_log(nu, family, mu,
                                   merge_resolution=merge_resolution,
                                   atom_cap=atom_cap)
    return out


@dataclass
class PushForwardSeries:
    """Exact iterates nu^0 .. nu^steps plus certified drift bookkeeping.

    drift_bounds[i] bounds W1(kept iterate i, exact unpruned iterate i): each
    application contracts the previous gap by r and the merge/prune pass adds
    its measured perturbation.
    """

    measures: list
    logs: list
    drift_bounds: list
    r: float


def iterate_push_forward(initial, family, mu, steps, *, merge_resolution=None,
                         atom_cap=DEFAULT_ATOM_CAP):
    r = float(mu.weights @ family.lipschitz_constants)
    measures = [initial]
    logs = []
    drift = [0.0]
    for _ in range(steps):
        nxt, log = push_forward_with_log(
            measures[-1], family, mu,
            merge_resolution=merge_resolution, atom_cap=atom_cap)
        measures.append(nxt)
        logs.append(log)
        drift.append(r * drift[-1] + log.perturbation)
    return PushForwardSeries(measures=measures, logs=logs,
                             drift_bounds=drift, r=r)


# ---------------------------------------------------------------------------
# particle simulation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SimulationStream:
    """Reproducible random source for one epoch's particle stepping.

    Particles are split into fixed shards of ``shard_size``; shard s draws
    from SeedSequence(master_seed, spawn_key=(epoch_index, s)).  Each
    particle consumes exactly one uniform per step, so results are
    bit-identical however many workers execute the shards.
    """

    master_seed: int
    epoch_index: int
    shard_size: int = 4096

    def shards(self, n_particles):
        out = []
        s = 0
        while s * self.shard_size < n_particles:
            lo = s * self.shard_size
            hi = min(lo + self.shard_size, n_particles)
            out.append((lo, hi, derive_stream(self.master_seed,
                                              self.epoch_index, s)))
            s += 1
        return out


def _family_arrays(family):
    if not family.is_affine:
        return None
    mats, offs = family.arrays()
    return (np.ascontiguousarray(mats), np.ascontiguousarray(offs))


def advance_cloud(points, family, mu, uniforms):
    """Advance (N, d) points in place; uniforms has shape (steps, N)."""
    arrays = _family_arrays(family)
    if arrays is not None:
        backend.steps_cloud(arrays[0], arrays[1], mu.cum_weights, points,
                            uniforms)
        return points
    for t in range(uniforms.shape[0]):
        idx = np.searchsorted(mu.cum_weights, uniforms[t], side="right")
        new = np.empty_like(points)
        for j in range(family.size):
            mask = idx == j
            if mask.any():
                new[mask] = family.map(j + 1).apply_many(points[mask])
        points[:] = new
    return points


def simulate_path(x0, family, mu, steps, rng):
    """Chaos game for one particle; returns the (steps, d) visited points."""
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if steps == 0:
        return np.empty((0, x0.shape[0]))
    uniforms = rng.random(steps)
    arrays = _family_arrays(family)
    if arrays is not None:
        return backend.steps_path(arrays[0], arrays[1], mu.cum_weights,
                                  x0, uniforms)
    out = np.empty((steps, x0.shape[0]))
    x = x0.copy()
    for t in range(steps):
        j = int(np.searchsorted(mu.cum_weights, uniforms[t], side="right"))
        x = family.map(j + 1).apply(x)
        out[t] = x
    return out


def simulate_epoch(start, family, mu, steps, stream, chunk=1024):
    """All per-step clouds of one epoch (memory O(steps x N x d)).

    ``stream`` is a SimulationStream (sharded, worker-count independent) or a
    numpy Generator (single stream, one uniform per particle per step,
    step-major).  With steps = 0 the start cloud is returned unchanged.
    """
    if steps < 0:
        raise InvalidInputError("steps must be >= 0")
    if steps == 0:
        return [start]
    n = start.n_particles
    d = start.dimension
    traj = np.empty((steps, n, d))
    if isinstance(stream, SimulationStream):
        for lo, hi, rng in stream.shards(n):
            pts = start.points[lo:hi].copy()
            done = 0
            while done < steps:
                take = min(chunk, steps - done)
                uniforms = rng.random((take, hi - lo))
                for t in range(take):
                    advance_cloud(pts, family, mu, uniforms[t:t + 1])
                    traj[done + t, lo:hi] = pts
                done += take
    else:
        pts = start.points.copy()
        done = 0
        while done < steps:
            take = min(chunk, steps - done)
            uniforms = stream.random((take, n))
            for t in range(take):
                advance_cloud(pts, family, mu, uniforms[t:t + 1])
                traj[done + t] = pts
            done += take
    return [
        ParticleCloud(traj[t], start.epoch_index, start.step_index + t + 1)
        for t in range(steps)
    ]


# ---------------------------------------------------------------------------
# Cesaro averaging and invariant-measure estimation
# ---------------------------------------------------------------------------

def cesaro_average(measures):
    """Uniform mixture (1/N) sum nu^j of the given measures, atoms merged."""
    measures = list(measures)
    if not measures:
        raise InvalidInputError("cesaro_average needs at least one measure")
    d = measures[0].dimension
    for m in measures[1:]:
        if m.dimension != d:
            raise InvalidInputError("measures must share one dimension")
    pts = np.concatenate([m.points for m in measures])
    wts = np.concatenate([m.weights for m in measures]) / len(measures)
    return DiscreteMeasure(pts, wts, normalize=True)


@dataclass
class InvariantEstimate:
    """Estimator output: the measure plus its a-posteriori certificate."""

    measure: DiscreteMeasure
    iterations: int
    residual: float           # certified bound on d(nu, P* nu)
    error_bound: float        # residual / (1 - r) >= d(nu, nu*)
    resolution: float
    cells: int
    r: float


def _closure(family, mu, start, h, max_cells):
    """All grid cells reachable from start under the snapped dynamics."""
    d = family.dimension
    active = [j for j in range(family.size) if mu.weights[j] > 0]
    all_keys = grid_keys(start.reshape(1, -1), h)
    frontier = all_keys.copy()
    while frontier.size:
        centers = cell_centers(frontier, h, d)
        kids = np.concatenate(
            [grid_keys(family.map(j + 1).apply_many(centers), h)
             for j in active])
        kids = np.unique(kids)
        pos = np.clip(np.searchsorted(all_keys, kids), 0, all_keys.size - 1)
        new = kids[all_keys[pos] != kids]
        all_keys = np.sort(np.concatenate([all_keys, new]))
        frontier = new
        if all_keys.size > max_cells:
            raise ConvergenceFailureError(
                f"grid support exceeded {max_cells} cells at resolution "
                f"{h:.3e}; contraction too weak or tolerance too tight"
            )
    return all_keys


def estimate_invariant_measure(family, mu, tol, max_iter=200_000, *,
                               start=None, resolution=None,
                               max_cells=5_000_000):
    """Certified fixed-point estimate of the invariant measure of P*.

    Builds the finite Markov chain induced by snapping the push-forward to a
    grid of cell size h, power-iterates to its stationary vector, and
    measures the one-step residual d(nu, P* nu) <= snap cost + slack.  Halts
    once residual <= tol * (1 - r), which certifies d(nu, nu*) <= tol; the
    grid is refined and the chain rebuilt if the measured residual is too
    large.  The default start is a point mass at the origin (any start works
    by contraction; a fixed start keeps runs deterministic).
    """
    if tol <= 0:
        raise InvalidInputError("tol must be positive")
    r = float(mu.weights @ family.lipschitz_constants)
    if r >= 1.0:
        raise NotContractiveError(
            f"mean Lipschitz constant r = {r:.6g} >= 1"
        )
    d = family.dimension
    if d > MAX_GRID_DIM:
        raise InvalidInputError(
            f"invariant-measure estimator supports d <= {MAX_GRID_DIM}"
        )
    if start is None:
        start = np.zeros(d)
    start = np.asarray(start, dtype=float).reshape(-1)

    threshold = tol * (1.0 - r)
    h = resolution if resolution is not None else threshold
    active = [j for j in range(family.size) if mu.weights[j] > 0]
    iterations = 0
    residual = np.inf

    for _attempt in range(6):
        keys = _closure(family, mu, start, h, max_cells)
        n = keys.size
        centers = cell_centers(keys, h, d)
        targets = np.empty((len(active), n), dtype=np.int64)
        disp = np.empty((len(active), n))
        for a_i, j in enumerate(active):
            imgs = family.map(j + 1).apply_many(centers)
            kk = grid_keys(imgs, h)
            targets[a_i] = np.searchsorted(keys, kk)
            disp[a_i] = np.linalg.norm(imgs - cell_centers(kk, h, d), axis=1)
        weights_rep = np.repeat(mu.weights[active], n)
        chain = sp.csr_matrix(
            (weights_rep,
             (targets.ravel(), np.tile(np.arange(n), len(active)))),
            shape=(n, n))

        w = np.zeros(n)
        w[int(np.searchsorted(keys, grid_keys(start.reshape(1, -1), h)[0]))] = 1.0
        lo = centers.min(axis=0)
        hi = centers.max(axis=0)
        diam = float(np.linalg.norm(hi - lo)) + h
        slack_target = 0.05 * threshold / max(diam, 1e-300)
        mu_disp = mu.weights[active] @ disp

        while True:
            wn = 0.5 * (w + chain @ w)
            iterations += 1
            delta = float(np.abs(wn - w).sum())
            w = wn
            if delta <= slack_target:
                break
            if iterations >= max_iter:
                snap = float(w @ mu_disp)
                raise ConvergenceFailureError(
                    f"power iteration budget {max_iter} exhausted "
                    f"(last delta {delta:.3e})",
                    residual=snap + 0.5 * delta * diam,
                )
        slack = float(np.abs(chain @ w - w).sum())
        snap = float(w @ mu_disp)
        residual = snap + 0.5 * slack * diam
        if residual <= threshold:
            est = DiscreteMeasure(centers, np.maximum(w, 1e-300),
                                  normalize=True, assume_unique=True)
            return InvariantEstimate(
                measure=est,
                iterations=iterations,
                residual=residual,
                error_bound=residual / (1.0 - r),
                resolution=h,
                cells=n,
                r=r,
            )
        h *= 0.5

    raise ConvergenceFailureError(
        f"estimator did not certify tol={tol} (last residual {residual:.3e})",
        residual=residual,
    )


# ---------------------------------------------------------------------------
# histograms
# ---------------------------------------------------------------------------

def histogram_density(cloud, bounds, bins):
    """Bin masses of a 2-D cloud on a regular grid.

    Returns the (bins_x, bins_y) array H with H[i, j] = fraction of points in
    x-bin i and y-bin j (row-major: rows sweep x).  Masses sum to the
    fraction of points inside ``bounds``; points outside are discarded.
    """
    if cloud.dimension != 2:
        raise InvalidInputError("histogram_density requires dimension 2")
    if np.isscalar(bins):
        bins = (int(bins), int(bins))
    if bins[0] < 1 or bins[1] < 1:
        raise InvalidInputError("bins must be >= 1")
    (x0, x1), (y0, y1) = bounds
    pts = cloud.points
    inside = (
        (pts[:, 0] >= x0) & (pts[:, 0] <= x1)
        & (pts[:, 1] >= y0) & (pts[:, 1] <= y1)
    )
    h, _, _ = np.histogram2d(
        pts[inside, 0], pts[inside, 1], bins=bins,
        range=((x0, x1), (y0, y1)),
    )
    return h / cloud.n_particles
