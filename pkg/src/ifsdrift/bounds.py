"""Closed-form constants and bound/observed comparisons.

Conventions fixed here once and used everywhere:

* r = sum_j mu(j) L_j, the mean Lipschitz constant. Affine maps have constant
  derivative norm, so the almost-everywhere statement reduces to this sum.
* M = 1 for alpha = 1: the test class is exactly the 1-Lipschitz functions.
* B = 2R, the absorbing-ball diameter: dual potentials may be normalized to
  vanish at a support point, so sup |f| over the support is at most its
  diameter.
* When adjacent epochs have different contraction factors the conservative
  max is used and recorded.

Observed quantities carry an allowance (measured pruning drift plus
subsampling noise); a record is satisfied when
observed <= bound + allowance + 1e-9.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, NotContractiveError
from .schedule import tv_distance
from .transport import self_distance, subsampled_w1, wasserstein_exact

__all__ = [
    "contraction_factor",
    "aposteriori_bound",
    "subsequent_invariants_bound",
    "tracking_error_bound",
    "regret_bound",
    "geometric_decay_check",
    "measure_distance",
    "BoundRecord",
    "BoundsReport",
    "SubsequentBound",
]


def contraction_factor(family, mu):
    """Mean Lipschitz constant r = sum_j mu(j) L_j of the weighted family."""
    if mu.size != family.size:
        raise InvalidInputError(
            f"measure support {mu.size} != family size {family.size}"
        )
    return float(mu.weights @ family.lipschitz_constants)


def measure_distance(a, b, *, exact_cap=2000, subsample=1024, resamples=3,
                     seed=0):
    """Transport distance with a measurement allowance.

    Uses the certified exact solver when the combined support fits under
    ``exact_cap`` (allowance 0); otherwise estimates on equal-weight
    subsamples and reports the measured self-distance of each side as the
    allowance (the inflation such an estimate carries).
    """
    if a.n_atoms + b.n_atoms <= exact_cap:
        dist, _ = wasserstein_exact(a, b, atom_cap=exact_cap)
        return dist, 0.0
    mean, _std, _vals = subsampled_w1(a, b, subsample, resamples, seed)
    noise = (self_distance(a, subsample, resamples, seed + 1)
             + self_distance(b, subsample, resamples, seed + 2))
    return mean, noise


def aposteriori_bound(nu, family, mu, *, exact_cap=2000):
    """Certified bound d(nu, nu*) <= [d(nu, P* nu) + merge drift] / (1 - r).

    The push-forward's merge/prune perturbation is added to the measured
    residual so the certificate survives atom-count control.
    """
    from .measure import push_forward_with_log

    r = contraction_factor(family, mu)
    if r >= 1.0:
        raise NotContractiveError(f"r = {r:.6g} >= 1")
    pushed, log = push_forward_with_log(nu, family, mu)
    residual, _ = wasserstein_exact(nu, pushed, atom_cap=exact_cap)
    return (residual + log.perturbation) / (1.0 - r)


@dataclass(frozen=True)
class SubsequentBound:
    value: float
    r_used: float
    e: float
    map_drift: float
    B: float
    M: float


def subsequent_invariants_bound(family, mu_k, mu_next, B, M=1.0,
                                map_drift=0.0):
    """Bound on d(nu_k*, nu_{k+1}*): (M * drift + B * e) / (1 - r).

    ``map_drift`` is the sum of sup-norm changes of the maps between the
    epochs; it is 0 for a fixed family and exposed as an explicit input.
    e is the un-halved TV step between the two sampling measures; r is the
    conservative max of the two epoch factors, recorded in the result.
    """
    if map_drift < 0:
        raise InvalidInputError("map_drift must be >= 0")
    r_k = contraction_factor(family, mu_k)
    r_n = contraction_factor(family, mu_next)
    r = max(r_k, r_n)
    if r >= 1.0:
        raise NotContractiveError(f"max adjacent r = {r:.6g} >= 1")
    e = tv_distance(mu_k, mu_next)
    value = (M * map_drift + B * e) / (1.0 - r)
    return SubsequentBound(value=value, r_used=r, e=e, map_drift=map_drift,
                           B=B, M=M)


def tracking_error_bound(d10, r):
    """Bound on d(nu^1, nu*): r / (1 - r)^2 times d(nu^1, nu^0)."""
    if not 0.0 < r < 1.0:
        raise InvalidInputError(f"r must lie in (0, 1), got {r}")
    if d10 < 0:
        raise InvalidInputError("d10 must be >= 0")
    return r / (1.0 - r) ** 2 * d10


def regret_bound(d10_per_epoch, r):
    """Sum over epochs of 2r / (1 - r)^2 times d(nu_k^1, nu_k^0).

    ``r`` may be a scalar or a per-epoch sequence.
    """
    d10s = list(d10_per_epoch)
    if np.isscalar(r):
        rs = [float(r)] * len(d10s)
    else:
        rs = [float(v) for v in r]
        if len(rs) != len(d10s):
            raise InvalidInputError("per-epoch r list length mismatch")
    total = 0.0
    for d10, rk in zip(d10s, rs):
        if not 0.0 < rk < 1.0:
            raise InvalidInputError(f"r must lie in (0, 1), got {rk}")
        if d10 < 0:
            raise InvalidInputError("d10 must be >= 0")
        total += 2.0 * rk / (1.0 - rk) ** 2 * d10
    return total


@dataclass
class BoundRecord:
    """One bound/observed comparison; satisfied within allowance + 1e-9."""

    name: str
    bound: float
    observed: float
    allowance: float = 0.0
    satisfied: bool = field(init=False)

    def __post_init__(self):
        self.satisfied = self.observed <= self.bound + self.allowance + 1e-9

    def as_dict(self):
        return {
            "name": self.name,
            "bound": self.bound,
            "observed": self.observed,
            "allowance": self.allowance,
            "satisfied": self.satisfied,
        }


def geometric_decay_check(iterates, r, *, rate_tol=1e-6, drift_bounds=None,
                          distance=None, pair_samples=4, seed=0):
    """Verify geometric decay of exact push-forward iterates.

    Checks d(nu^{i+1}, nu^i) <= r^i d(nu^1, nu^0)(1 + rate_tol) + allowance
    for every i, and the telescoped d(nu^j, nu^i) <= r^i/(1-r) d10 + ...
    for sampled pairs.  ``drift_bounds`` (from iterate_push_forward) supplies
    the certified pruning allowance per iterate; distance-measurement noise
    is added on top for subsampled evaluations.
    """
    iterates = list(iterates)
    if len(iterates) < 3:
        raise InvalidInputError("need at least 3 iterates")
    if not 0.0 < r < 1.0:
        raise InvalidInputError(f"r must lie in (0, 1), got {r}")
    dist = distance or (lambda a, b, seed=0: measure_distance(a, b, seed=seed))
    if drift_bounds is None:
        drift_bounds = [0.0] * len(iterates)

    d10, noise10 = dist(iterates[1], iterates[0], seed=seed)
    records = []
    for i in range(len(iterates) - 1):
        obs, noise = dist(iterates[i + 1], iterates[i], seed=seed + i)
        allowance = drift_bounds[i] + drift_bounds[i + 1] + noise
        bound = (r ** i) * d10 * (1.0 + rate_tol)
        records.append(BoundRecord(
            name=f"consecutive i={i}", bound=bound, observed=obs,
            allowance=allowance))

    rng = np.random.default_rng(seed)
    pair_records = []
    n = len(iterates)
    for _ in range(pair_samples):
        i = int(rng.integers(0, n - 2))
        j = int(rng.integers(i + 1, n))
        obs, noise = dist(iterates[j], iterates[i], seed=seed + 1000 + i)
        allowance = drift_bounds[i] + drift_bounds[j] + noise
        bound = (r ** i) / (1.0 - r) * d10 * (1.0 + rate_tol)
        pair_records.append(BoundRecord(
            name=f"telescoped ({i},{j})", bound=bound, observed=obs,
            allowance=allowance))

    passed = all(rec.satisfied for rec in records + pair_records)
    return GeometricDecayReport(consecutive=records, pairs=pair_records,
                                d10=d10, d10_noise=noise10, r=r,
                                passed=passed)


@dataclass
class GeometricDecayReport:
    consecutive: list
    pairs: list
    d10: float
    d10_noise: float
    r: float
    passed: bool

    def as_dict(self):
        return {
            "r": self.r,
            "d10": self.d10,
            "d10_noise": self.d10_noise,
            "passed": self.passed,
            "consecutive": [rec.as_dict() for rec in self.consecutive],
            "pairs": [rec.as_dict() for rec in self.pairs],
        }


@dataclass
class BoundsReport:
    """Every computed constant plus all bound/observed pairs of one run."""

    r_per_epoch: list
    e_observed: list
    B: float
    M: float
    absorbing_radius: float
    records: list = field(default_factory=list)
    decay_reports: list = field(default_factory=list)

    def add(self, record):
        self.records.append(record)
        return record

    @property
    def all_satisfied(self):
        ok = all(rec.satisfied for rec in self.records)
        return ok and all(rep.passed for rep in self.decay_reports)

    def as_dict(self):
        return {
            "r_per_epoch": list(self.r_per_epoch),
            "e_observed": list(self.e_observed),
            "B": self.B,
            "M": self.M,
            "absorbing_radius": self.absorbing_radius,
            "all_satisfied": self.all_satisfied,
            "records": [rec.as_dict() for rec in self.records],
            "geometric_decay": [rep.as_dict() for rep in self.decay_reports],
        }

    def to_json(self, path=None):
        text = json.dumps(self.as_dict(), indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        return text

    def to_text(self):
        lines = []
        lines.append("constants:")
        for k, r in enumerate(self.r_per_epoch):
            lines.append(f"  r[{k}] = {r:.9f}")
        for k, e in enumerate(self.e_observed):
            lines.append(f"  e[{k}->{k + 1}] = {e:.9f}")
        lines.append(f"  R = {self.absorbing_radius:.9f}")
        lines.append(f"  B = {self.B:.9f}   M = {self.M:.9f}")
        lines.append("")
        lines.append(f"{'check':<34}{'bound':>14}{'observed':>14}"
                     f"{'allowance':>12}  status")
        for rec in self.records:
            status = "ok" if rec.satisfied else "VIOLATED"
            lines.append(
                f"{rec.name:<34}{rec.bound:>14.6g}{rec.observed:>14.6g}"
                f"{rec.allowance:>12.3g}  {status}"
            )
        for rep in self.decay_reports:
            status = "ok" if rep.passed else "VIOLATED"
            lines.append(
                f"{'geometric decay (' + str(len(rep.consecutive)) + ' steps)':<34}"
                f"{'':>14}{'':>14}{'':>12}  {status}"
            )
        lines.append("")
        lines.append("all checks satisfied" if self.all_satisfied
                     else "SOME CHECKS VIOLATED")
        return "\n".join(lines)
