"""Time-varying sampling measures over the map index set [1, m].

Total-variation convention: the un-halved sum sum_j |a_j - b_j|.  The slow
change budget e and every bound consuming it use this convention.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "SamplingMeasure",
    "Schedule",
    "ScheduleReport",
    "tv_distance",
    "validate_schedule",
    "sample_index",
    "derive_stream",
]

WEIGHT_SUM_TOL = 1e-12


class SamplingMeasure:
    """Probability vector over map indices [1, m]. Immutable."""

    __slots__ = ("weights", "cum_weights")

    def __init__(self, weights):
        weights = np.array(weights, dtype=float).reshape(-1)
        if weights.size == 0:
            raise InvalidInputError("measure needs at least one weight")
        if np.any(weights < 0):
            raise InvalidInputError("weights must be nonnegative")
        total = float(weights.sum())
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise InvalidInputError(f"weights sum to {total!r}, expected 1")
        weights.setflags(write=False)
        cum = np.cumsum(weights)
        cum[-1] = 1.0  # guard the inverse-CDF search against rounding
        cum.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "cum_weights", cum)

    def __setattr__(self, name, value):
        raise AttributeError("SamplingMeasure is immutable")

    @property
    def size(self):
        return self.weights.shape[0]

    def __len__(self):
        return self.weights.shape[0]

    def __eq__(self, other):
        return isinstance(other, SamplingMeasure) and np.array_equal(
            self.weights, other.weights
        )

    def __repr__(self):
        return f"SamplingMeasure({np.array2string(self.weights, precision=4)})"


def tv_distance(a, b):
    """Total-variation step sum_j |a_j - b_j| (un-halved convention)."""
    if a.size != b.size:
        raise InvalidInputError(
            f"support sizes disagree: {a.size} vs {b.size}"
        )
    return float(np.abs(a.weights - b.weights).sum())


@dataclass(frozen=True)
class Schedule:
    """Ordered (measure, epoch length) pairs plus the TV-step budget e.

    Construction does not enforce the slow-change assumption; use
    ``validate_schedule`` to check it, so that violating schedules can be
    examined and reported rather than being unrepresentable.
    """

    epochs: tuple
    tv_bound: float

    def __init__(self, epochs, tv_bound):
        epochs = tuple(
            (m, int(t)) for m, t in epochs
        )
        for m, t in epochs:
            if not isinstance(m, SamplingMeasure):
                raise InvalidInputError("epochs must pair SamplingMeasure with length")
            if t < 1:
                raise InvalidInputError("epoch lengths must be positive")
        sizes = {m.size for m, _ in epochs}
        if len(sizes) > 1:
            raise InvalidInputError("all measures must share one support size")
        if tv_bound < 0:
            raise InvalidInputError("tv bound e must be >= 0")
        object.__setattr__(self, "epochs", epochs)
        object.__setattr__(self, "tv_bound", float(tv_bound))

    @property
    def n_epochs(self):
        return len(self.epochs)

    def measure(self, k):
        """Sampling measure active during epoch k (0-based)."""
        return self.epochs[k][0]

    def length(self, k):
        return self.epochs[k][1]


@dataclass(frozen=True)
class ScheduleReport:
    """Per-boundary TV steps against the budget; never raises."""

    steps: tuple          # (epoch index k, tv step, within budget) triples
    tv_bound: float
    passed: bool

    def lines(self):
        out = []
        for k, step, ok in self.steps:
            flag = "ok" if ok else "EXCEEDS"
            out.append(
                f"epoch {k} -> {k + 1}: tv step {step:.6g} vs e = "
                f"{self.tv_bound:.6g} [{flag}]"
            )
        out.append("schedule " + ("PASSES" if self.passed else "FAILS")
                   + " the slow-change assumption")
        return out


def validate_schedule(schedule):
    """Check every consecutive epoch pair against the budget e.

    A single-epoch (or empty) schedule passes vacuously.
    """
    steps = []
    ok_all = True
    for k in range(schedule.n_epochs - 1):
        step = tv_distance(schedule.measure(k), schedule.measure(k + 1))
        ok = step <= schedule.tv_bound + 1e-12
        ok_all = ok_all and ok
        steps.append((k, step, ok))
    return ScheduleReport(steps=tuple(steps), tv_bound=schedule.tv_bound,
                          passed=ok_all)


def sample_index(measure, rng):
    """Draw index j in [1, m] with probability weights_j.

    Consumes exactly one uniform draw from ``rng`` and inverts the CDF, so
    replays with the same generator state are bit-reproducible: j is the
    smallest index with cum_weights[j] > u.
    """
    u = rng.random()
    return int(np.searchsorted(measure.cum_weights, u, side="right")) + 1


def derive_stream(master_seed, epoch_index, shard_index=0):
    """Independent child generator for one (epoch, shard) pair.

    The derivation is SeedSequence(master_seed, spawn_key=(epoch, shard)),
    which is stable across platforms and independent of worker count.
    """
    seq = np.random.SeedSequence(master_seed,
                                 spawn_key=(int(epoch_index), int(shard_index)))
    return np.random.Generator(np.random.PCG64(seq))
