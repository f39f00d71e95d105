"""Experiment runner: config parsing, orchestration, artifact emission.

A run simulates every scheduled epoch sequentially (the final state of epoch
k seeds epoch k+1), estimates each epoch's invariant measure with a
certified tolerance, measures distance series on subsampled clouds, runs the
exact push-forward bound pipeline, and writes CSVs, figures, a bounds
report, and a manifest with content hashes.  All randomness derives from the
config seed through tagged SeedSequence spawn keys, so reruns are
byte-identical.

Spawn-key tags: (k, shard) particle stepping, (1000+k, s) series
subsampling, (2000+k, i) invariant-measure subsamples, (3000+k, s) bound
series distances, (4000+k, i) figure subsamples.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .bounds import (
    BoundRecord,
    BoundsReport,
    contraction_factor,
    regret_bound,
    subsequent_invariants_bound,
    tracking_error_bound,
)
from .errors import ConfigError, InvalidInputError
from .maps import AffineMap, MapFamily, absorbing_radius
from .measure import (
    DiscreteMeasure,
    ParticleCloud,
    advance_cloud,
    estimate_invariant_measure,
    iterate_push_forward,
    simulate_path,
)
from .schedule import SamplingMeasure, Schedule, tv_distance, validate_schedule
from .transport import (
    assignment_w1,
    self_distance,
    subsampled_w1,
    wasserstein_exact,
)

SCHEMA_VERSION = 1

_DEFAULTS = {
    "particles": 1,
    "shard_size": 4096,
    "pruning": {"merge_scale": 1e-4, "atom_cap": 100_000},
    "invariant": {"tol": 1e-3, "max_iter": 200_000},
    "series": {"cadence": 100, "subsample": 192},
    "bounds_series": {"steps": 8, "subsample": 512, "resamples": 1,
                     "merge_scale": 4e-4},
    "figures": {
        "grid_bounds": [[-0.1, 1.1], [-0.1, 1.1]],
        "bins": 128,
        "subsample": 2000,
        "resamples": 5,
    },
}

_ALLOWED = {
    "": {"schema_version", "dimension", "maps", "schedule", "seed",
         "particles", "shard_size", "pruning", "invariant", "series",
         "bounds_series", "figures"},
    "maps[]": {"matrix", "offset"},
    "schedule": {"epochs", "tv_bound"},
    "schedule.epochs[]": {"weights", "length"},
    "pruning": {"merge_scale", "atom_cap"},
    "invariant": {"tol", "max_iter"},
    "series": {"cadence", "subsample"},
    "bounds_series": {"steps", "subsample", "resamples", "merge_scale"},
    "figures": {"grid_bounds", "bins", "subsample", "resamples"},
}


def _check_keys(obj, section):
    allowed = _ALLOWED[section]
    unknown = set(obj) - allowed
    if unknown:
        where = section or "top level"
        raise ConfigError(f"unknown config keys at {where}: {sorted(unknown)}")


@dataclass
class ExperimentConfig:
    family: MapFamily
    schedule: Schedule
    seed: int
    raw: dict

    @property
    def dimension(self):
        return self.family.dimension


def parse_config(data):
    """Strictly validate a config dict and build the domain objects.

    Unknown keys are rejected anywhere; the schedule must satisfy the
    slow-change assumption (use the validate subcommand to inspect
    violations).
    """
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    _check_keys(data, "")
    if data.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(
            f"schema_version must be {SCHEMA_VERSION}, "
            f"got {data.get('schema_version')!r}"
        )
    for key in ("dimension", "maps", "schedule", "seed"):
        if key not in data:
            raise ConfigError(f"missing required config key: {key}")

    dim = data["dimension"]
    if not isinstance(dim, int) or dim < 1:
        raise ConfigError("dimension must be a positive integer")
    if not isinstance(data["seed"], int):
        raise ConfigError("seed must be an integer")

    try:
        maps = []
        for entry in data["maps"]:
            _check_keys(entry, "maps[]")
            maps.append(AffineMap(entry["matrix"], entry["offset"]))
        family = MapFamily(maps)
    except (InvalidInputError, KeyError, TypeError) as exc:
        raise ConfigError(f"bad map specification: {exc}") from exc
    if family.dimension != dim:
        raise ConfigError(
            f"maps have dimension {family.dimension}, config says {dim}"
        )

    sched_raw = data["schedule"]
    _check_keys(sched_raw, "schedule")
    try:
        epochs = []
        for entry in sched_raw.get("epochs", []):
            _check_keys(entry, "schedule.epochs[]")
            epochs.append((SamplingMeasure(entry["weights"]),
                           int(entry["length"])))
        sched = Schedule(epochs, float(sched_raw["tv_bound"]))
    except (InvalidInputError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad schedule: {exc}") from exc
    for m, _t in sched.epochs:
        if m.size != family.size:
            raise ConfigError(
                f"measure support {m.size} != number of maps {family.size}"
            )

    resolved = {k: json.loads(json.dumps(v)) for k, v in _DEFAULTS.items()}
    for key, value in data.items():
        if key in _DEFAULTS and isinstance(value, dict):
            _check_keys(value, key)
            resolved[key].update(value)
        else:
            resolved[key] = value
    resolved["schema_version"] = SCHEMA_VERSION

    cfg = ExperimentConfig(family=family, schedule=sched,
                           seed=int(data["seed"]), raw=resolved)
    _sanity(cfg)
    return cfg


def _sanity(cfg):
    if cfg.raw["particles"] < 1:
        raise ConfigError("particles must be >= 1")
    if cfg.raw["invariant"]["tol"] <= 0:
        raise ConfigError("invariant.tol must be positive")
    ser = cfg.raw["series"]
    if ser["cadence"] < 1 or ser["subsample"] < 1:
        raise ConfigError("series cadence and subsample must be >= 1")
    report = validate_schedule(cfg.schedule)
    if not report.passed:
        raise ConfigError(
            "schedule violates the slow-change assumption:\n  "
            + "\n  ".join(report.lines())
        )


def load_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return parse_config(data)


def _stream(seed, *key):
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(seed, spawn_key=tuple(int(v) for v in key))))


def _subsample_cloud(points, size, rng):
    """Up to ``size`` distinct rows in random order (no replacement)."""
    n = points.shape[0]
    if n <= size:
        return points[rng.permutation(n)]
    return points[rng.choice(n, size=size, replace=False)]


def _sample_measure(measure, size, rng):
    idx = rng.choice(measure.n_atoms, size=size, p=measure.weights)
    return measure.points[idx]


@dataclass
class RunArtifacts:
    config: dict
    out_dir: str
    epoch_clouds: list = field(default_factory=list)       # (n, d) arrays
    invariant_estimates: list = field(default_factory=list)
    distance_series: list = field(default_factory=list)    # row dicts
    bounds_rows: list = field(default_factory=list)        # row dicts
    bounds_inputs: dict = field(default_factory=dict)
    report: BoundsReport | None = None
    files: list = field(default_factory=list)


def run(cfg, out_dir, *, threads=1, figures=True, log=None):
    """Execute the full experiment; returns RunArtifacts.

    Epochs run sequentially with exact state handoff.  ``threads`` only
    parallelizes shard stepping; results are bit-identical for any value.
    """
    say = log or (lambda msg: None)
    os.makedirs(out_dir, exist_ok=True)
    art = RunArtifacts(config=cfg.raw, out_dir=out_dir)
    family, sched, seed = cfg.family, cfg.schedule, cfg.seed
    n_epochs = sched.n_epochs

    inv_cfg = cfg.raw["invariant"]
    ser_cfg = cfg.raw["series"]
    prune_cfg = cfg.raw["pruning"]
    bser_cfg = cfg.raw["bounds_series"]
    fig_cfg = cfg.raw["figures"]

    say(f"estimating {n_epochs} invariant measure(s) at tol "
        f"{inv_cfg['tol']:g}")
    inv_series_samples = []
    for k in range(n_epochs):
        est = estimate_invariant_measure(
            family, sched.measure(k), inv_cfg["tol"], inv_cfg["max_iter"])
        art.invariant_estimates.append(est)
        inv_series_samples.append(_sample_measure(
            est.measure, ser_cfg["subsample"], _stream(seed, 2000 + k, 0)))
        say(f"  epoch {k}: {est.cells} cells, residual {est.residual:.2e}, "
            f"certified error <= {est.error_bound:.2e}")

    art.bounds_inputs["series_sampling_floor"] = [
        self_distance(est.measure, ser_cfg["subsample"], 2, seed + 6000 + k)
        for k, est in enumerate(art.invariant_estimates)
    ]

    _simulate_epochs(art, cfg, inv_series_samples, threads, say)
    _bound_pipeline(art, cfg, prune_cfg, bser_cfg, say)

    # record-level distances run at a reduced size; figure-grade 2000-point
    # comparisons belong to offline analysis, not the timed run
    sub_size = min(1024, fig_cfg["subsample"])
    inv_self = [
        self_distance(est.measure, sub_size, 1, seed + 5100 + k)
        for k, est in enumerate(art.invariant_estimates)
    ]
    subsequent = []
    for k in range(n_epochs - 1):
        mean, _std, _vals = subsampled_w1(
            art.invariant_estimates[k].measure,
            art.invariant_estimates[k + 1].measure,
            sub_size, fig_cfg["resamples"], seed + 5000 + k)
        noise = (
            inv_self[k] + inv_self[k + 1]
            + art.invariant_estimates[k].error_bound
            + art.invariant_estimates[k + 1].error_bound
        )
        subsequent.append(
            {"pair": [k, k + 1], "observed": mean, "allowance": noise})
    art.bounds_inputs["subsequent"] = subsequent
    art.bounds_inputs["estimator_error_bounds"] = [
        e.error_bound for e in art.invariant_estimates]

    report = assemble_report(cfg, art.bounds_inputs)
    report.decay_reports = art.bounds_inputs.pop("_decay_reports")
    art.report = report

    _emit(art, cfg, figures=figures, say=say)
    return art


def _shards(seed, epoch, n_particles, shard_size):
    out = []
    s = 0
    while s * shard_size < n_particles:
        lo = s * shard_size
        hi = min(lo + shard_size, n_particles)
        out.append((lo, hi, _stream(seed, epoch, s)))
        s += 1
    return out


def _simulate_epochs(art, cfg, inv_series_samples, threads, say):
    family, sched, seed = cfg.family, cfg.schedule, cfg.seed
    ser_cfg = cfg.raw["series"]
    cadence = ser_cfg["cadence"]
    n_particles = cfg.raw["particles"]
    d = family.dimension
    state = np.zeros((n_particles, d))
    prev_sample = None

    for k in range(sched.n_epochs):
        mu = sched.measure(k)
        t_k = sched.length(k)
        say(f"epoch {k}: {t_k} steps x {n_particles} particle(s)")

        if n_particles == 1:
            rng = _stream(seed, k, 0)
            visited = simulate_path(state[0], family, mu, t_k, rng)
            state = visited[-1:].copy()
            for s in range(cadence, t_k + 1, cadence):
                sample = _subsample_cloud(
                    visited[:s], ser_cfg["subsample"],
                    _stream(seed, 1000 + k, s))
                prev_sample = _series_point(art, k, s, sample, prev_sample,
                                            inv_series_samples[k])
            art.epoch_clouds.append(visited)
        else:
            shard_list = _shards(seed, k, n_particles, cfg.raw["shard_size"])
            done = 0
            while done < t_k:
                take = min(cadence, t_k - done)

                def step_shard(item):
                    lo, hi, rng = item
                    uniforms = rng.random((take, hi - lo))
                    advance_cloud(state[lo:hi], family, mu, uniforms)

                if threads > 1 and len(shard_list) > 1:
                    with ThreadPoolExecutor(max_workers=threads) as pool:
                        list(pool.map(step_shard, shard_list))
                else:
                    for item in shard_list:
                        step_shard(item)
                done += take
                if done % cadence == 0 and done <= t_k:
                    sample = _subsample_cloud(
                        state, ser_cfg["subsample"],
                        _stream(seed, 1000 + k, done))
                    prev_sample = _series_point(
                        art, k, done, sample, prev_sample,
                        inv_series_samples[k])
            art.epoch_clouds.append(state.copy())


def _series_point(art, k, s, sample, prev_sample, inv_sample):
    # samples are randomly ordered distinct rows, so truncating the larger
    # side to matching counts keeps a uniform subsample; values carry the
    # subsampling floor recorded per epoch in bounds_inputs
    if prev_sample is not None:
        n = min(sample.shape[0], prev_sample.shape[0])
        d_sub = assignment_w1(sample[:n], prev_sample[:n])
    else:
        d_sub = float("nan")
    n = min(sample.shape[0], inv_sample.shape[0])
    d_inv = assignment_w1(sample[:n], inv_sample[:n])
    art.distance_series.append(
        {"epoch": k, "step": s, "d_subsequent": d_sub,
         "d_to_invariant": d_inv})
    return sample


def _bound_distance(bser_cfg, seed):
    """Distance (value, allowance) with a per-measure self-noise cache."""
    noise_cache = {}

    def self_noise(m, tag):
        key = (id(m), tag)
        if key not in noise_cache:
            noise_cache[key] = self_distance(
                m, bser_cfg["subsample"], bser_cfg["resamples"], seed + tag)
        return noise_cache[key]

    def dist(a, b, seed=seed):
        if a.n_atoms + b.n_atoms <= 2000:
            val, _ = wasserstein_exact(a, b)
            return val, 0.0
        mean, _std, _ = subsampled_w1(a, b, bser_cfg["subsample"],
                                      bser_cfg["resamples"], seed)
        return mean, self_noise(a, 1) + self_noise(b, 2)
    return dist


def _bound_pipeline(art, cfg, prune_cfg, bser_cfg, say):
    """Exact push-forward iterates per epoch: tracking, decay, regret data.

    Bound checks use these certified iterates, never particle clouds.  The
    geometric-decay records reuse the measured consecutive distances from
    the series rows rather than re-solving.
    """
    from .bounds import GeometricDecayReport

    family, sched, seed = cfg.family, cfg.schedule, cfg.seed
    say("bound pipeline: exact push-forward iterates")
    radius = absorbing_radius(family)
    # coarser than the raw pruning default: keeps the iterate support under
    # the atom cap by snapping alone, so no mass is ever dropped and the
    # certified chain floors at snap scale instead of dropped-mass scale
    merge_res = (bser_cfg["merge_scale"] * 2.0 * radius
                 if radius is not None else 0.0)

    d10, d10_noise = [], []
    tracking_obs, tracking_noise = [], []
    regret_obs, regret_noise = [], []
    decay_reports = []
    current = DiscreteMeasure.dirac(np.zeros(family.dimension))

    for k in range(sched.n_epochs):
        mu = sched.measure(k)
        series = iterate_push_forward(
            current, family, mu, bser_cfg["steps"],
            merge_resolution=merge_res, atom_cap=prune_cfg["atom_cap"])
        est = art.invariant_estimates[k]
        dist = _bound_distance(bser_cfg, seed + 31 * (k + 1))

        # certified chain for d(nu^s, nu*): one application contracts the
        # previous bound by r, the merge/prune pass adds its perturbation
        d0_meas, d0_noise = dist(series.measures[0], est.measure,
                                 seed=seed + 100 * k + 9999)
        cert = d0_meas + d0_noise + est.error_bound

        obs_sum = noise_sum = 0.0
        consecutive = []
        for s in range(1, len(series.measures)):
            d_cons, n_cons = dist(series.measures[s], series.measures[s - 1],
                                  seed=seed + 100 * k + s)
            d_inv, n_inv = dist(series.measures[s], est.measure,
                                seed=seed + 100 * k + s + 50)
            drift = series.drift_bounds[s]
            cert = series.r * cert + series.logs[s - 1].perturbation
            art.bounds_rows.append({
                "epoch": k, "i": s,
                "d_consecutive": d_cons, "noise_consecutive": n_cons,
                "d_to_invariant": d_inv, "noise_invariant": n_inv,
                "drift_bound": drift,
                "d_to_invariant_cert": cert + est.error_bound,
            })
            obs_sum += d_inv
            noise_sum += n_inv + drift + est.error_bound
            if s == 1:
                d10.append(d_cons)
                d10_noise.append(n_cons + drift + series.drift_bounds[0])
                tracking_obs.append(d_inv)
                tracking_noise.append(n_inv + drift + est.error_bound)
            consecutive.append(BoundRecord(
                name=f"consecutive i={s - 1}",
                bound=(series.r ** (s - 1)) * d10[-1] * (1.0 + 1e-6),
                observed=d_cons,
                allowance=(n_cons + d10_noise[-1]
                           + series.drift_bounds[s - 1] + drift),
            ))
        regret_obs.append(obs_sum)
        regret_noise.append(noise_sum)

        pairs = []
        rng = _stream(seed, 3000 + k, 1)
        n_meas = len(series.measures)
        for _ in range(3):
            i = int(rng.integers(0, n_meas - 2))
            j = int(rng.integers(i + 1, n_meas))
            obs, noise = dist(series.measures[j], series.measures[i],
                              seed=seed + 7000 + 100 * k + i)
            pairs.append(BoundRecord(
                name=f"telescoped ({i},{j})",
                bound=(series.r ** i) / (1.0 - series.r) * d10[-1]
                      * (1.0 + 1e-6),
                observed=obs,
                allowance=(noise + d10_noise[-1] + series.drift_bounds[i]
                           + series.drift_bounds[j]),
            ))
        decay_reports.append(GeometricDecayReport(
            consecutive=consecutive, pairs=pairs, d10=d10[-1],
            d10_noise=d10_noise[-1], r=series.r,
            passed=all(rec.satisfied for rec in consecutive + pairs)))
        current = series.measures[-1]

    art.bounds_inputs.update({
        "d10": d10,
        "d10_noise": d10_noise,
        "tracking_observed": tracking_obs,
        "tracking_allowance": tracking_noise,
        "regret_observed": regret_obs,
        "regret_allowance": regret_noise,
        "_decay_reports": decay_reports,
    })


def assemble_report(cfg, inputs):
    """Build the BoundsReport from constants plus observed quantities."""
    family, sched = cfg.family, cfg.schedule
    n_epochs = sched.n_epochs
    rs = [contraction_factor(family, sched.measure(k))
          for k in range(n_epochs)]
    es = [tv_distance(sched.measure(k), sched.measure(k + 1))
          for k in range(n_epochs - 1)]
    radius = absorbing_radius(family)
    if radius is None:
        radius = float("nan")
    b_const = 2.0 * radius
    report = BoundsReport(r_per_epoch=rs, e_observed=es, B=b_const, M=1.0,
                          absorbing_radius=radius)

    for k in range(n_epochs):
        coef = rs[k] / (1.0 - rs[k]) ** 2
        report.add(BoundRecord(
            name=f"tracking error epoch {k}",
            bound=tracking_error_bound(inputs["d10"][k], rs[k]),
            observed=inputs["tracking_observed"][k],
            allowance=(inputs["tracking_allowance"][k]
                       + coef * inputs["d10_noise"][k]),
        ))
    if n_epochs:
        coef_noise = sum(
            2.0 * rs[k] / (1.0 - rs[k]) ** 2 * inputs["d10_noise"][k]
            for k in range(n_epochs))
        report.add(BoundRecord(
            name="regret (cumulative tracking)",
            bound=regret_bound(inputs["d10"], rs),
            observed=sum(inputs["regret_observed"]),
            allowance=sum(inputs["regret_allowance"]) + coef_noise,
        ))
    for entry in inputs["subsequent"]:
        k, k1 = entry["pair"]
        sb = subsequent_invariants_bound(
            family, sched.measure(k), sched.measure(k1), B=b_const, M=1.0)
        report.add(BoundRecord(
            name=f"subsequent invariants {k}->{k1}",
            bound=sb.value,
            observed=entry["observed"],
            allowance=entry["allowance"],
        ))
    return report


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------

def _write_text(path, text):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _fmt(v):
    return f"{v:.17g}"


def _emit(art, cfg, *, figures, say):
    out = art.out_dir
    files = []

    cfg_text = json.dumps(art.config, indent=2, sort_keys=True) + "\n"
    _write_text(os.path.join(out, "config_resolved.json"), cfg_text)
    files.append("config_resolved.json")

    for k, cloud in enumerate(art.epoch_clouds):
        if cloud.shape[0] == 0:
            continue
        name = f"epoch{k}_cloud.csv"
        ParticleCloud(cloud, k, 0).to_table(os.path.join(out, name))
        files.append(name)

    for k, est in enumerate(art.invariant_estimates):
        name = f"epoch{k}_invariant_sample.csv"
        size = min(art.config["figures"]["subsample"], est.measure.n_atoms)
        pts = _sample_measure(est.measure, size, _stream(cfg.seed, 4000 + k, 1))
        ParticleCloud(pts, k, 0).to_table(os.path.join(out, name))
        files.append(name)

    if art.distance_series:
        rows = ["epoch,step,d_subsequent,d_to_invariant"]
        for row in art.distance_series:
            rows.append(
                f"{row['epoch']},{row['step']},{_fmt(row['d_subsequent'])},"
                f"{_fmt(row['d_to_invariant'])}")
        _write_text(os.path.join(out, "distance_series.csv"),
                    "\n".join(rows) + "\n")
        files.append("distance_series.csv")

    if art.bounds_rows:
        rows = ["epoch,i,d_consecutive,noise_consecutive,"
                "d_to_invariant,noise_invariant,drift_bound,"
                "d_to_invariant_cert"]
        for row in art.bounds_rows:
            rows.append(
                f"{row['epoch']},{row['i']},{_fmt(row['d_consecutive'])},"
                f"{_fmt(row['noise_consecutive'])},"
                f"{_fmt(row['d_to_invariant'])},"
                f"{_fmt(row['noise_invariant'])},{_fmt(row['drift_bound'])},"
                f"{_fmt(row['d_to_invariant_cert'])}")
        _write_text(os.path.join(out, "bounds_series.csv"),
                    "\n".join(rows) + "\n")
        files.append("bounds_series.csv")

    _write_text(os.path.join(out, "bounds_inputs.json"),
                json.dumps(art.bounds_inputs, indent=2, sort_keys=True) + "\n")
    files.append("bounds_inputs.json")

    if art.report is not None:
        art.report.to_json(os.path.join(out, "bounds_report.json"))
        files.append("bounds_report.json")
        _write_text(os.path.join(out, "bounds_report.txt"),
                    art.report.to_text() + "\n")
        files.append("bounds_report.txt")

    fig_cfg = art.config["figures"]
    for k, cloud in enumerate(art.epoch_clouds):
        if cloud.shape[1] != 2 or cloud.shape[0] == 0:
            continue
        name = f"histogram_epoch{k}.csv"
        hist = _histogram(cloud, fig_cfg)
        rows = [",".join(_fmt(v) for v in row) for row in hist]
        _write_text(os.path.join(out, name), "\n".join(rows) + "\n")
        files.append(name)

    if figures and art.epoch_clouds and art.epoch_clouds[0].shape[1] == 2:
        files.extend(_emit_figures(art, cfg))

    manifest = {
        "schema_version": SCHEMA_VERSION,
        "package_version": __version__,
        "seed": cfg.seed,
        "config_sha256": hashlib.sha256(cfg_text.encode()).hexdigest(),
        "files": [],
    }
    for name in sorted(files):
        path = os.path.join(out, name)
        with open(path, "rb") as fh:
            digest = hashlib.sha256(fh.read()).hexdigest()
        manifest["files"].append({
            "path": name,
            "bytes": os.path.getsize(path),
            "sha256": digest,
        })
    _write_text(os.path.join(out, "manifest.json"),
                json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    art.files = files + ["manifest.json"]
    say(f"wrote {len(art.files)} files to {out}")


def _histogram(cloud, fig_cfg):
    from .measure import histogram_density
    return histogram_density(
        ParticleCloud(cloud), fig_cfg["grid_bounds"], fig_cfg["bins"])


_EPOCH_COLORS = ["red", "green", "blue", "orange", "purple", "brown"]


def _emit_figures(art, cfg):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = str(cfg.seed)
    out = art.out_dir
    files = []

    def save(fig, name):
        fig.savefig(os.path.join(out, name), format="svg",
                    metadata={"Date": None})
        plt.close(fig)
        files.append(name)

    for k, cloud in enumerate(art.epoch_clouds):
        fig, ax = plt.subplots(figsize=(6, 6))
        ax.scatter(cloud[:, 0], cloud[:, 1], s=0.4, linewidths=0,
                   color=_EPOCH_COLORS[k % len(_EPOCH_COLORS)])
        ax.set_title(f"support sample, epoch {k}")
        ax.set_aspect("equal")
        save(fig, f"fig_support_epoch{k}.svg")

    fig, ax = plt.subplots(figsize=(6, 6))
    for k, cloud in enumerate(art.epoch_clouds):
        ax.scatter(cloud[:, 0], cloud[:, 1], s=0.4, linewidths=0,
                   color=_EPOCH_COLORS[k % len(_EPOCH_COLORS)],
                   label=f"epoch {k}")
    ax.legend(markerscale=20)
    ax.set_aspect("equal")
    ax.set_title("supports across epochs")
    save(fig, "fig_support_all.svg")

    fig_cfg = art.config["figures"]
    (x0, x1), (y0, y1) = fig_cfg["grid_bounds"]
    for k, cloud in enumerate(art.epoch_clouds):
        hist = _histogram(cloud, fig_cfg)
        fig, ax = plt.subplots(figsize=(6.5, 6))
        im = ax.imshow(hist.T, origin="lower", extent=(x0, x1, y0, y1),
                       aspect="equal", cmap="viridis")
        fig.colorbar(im, ax=ax, shrink=0.85)
        ax.set_title(f"histogram of the state measure, epoch {k}")
        save(fig, f"fig_histogram_epoch{k}.svg")

    if art.distance_series:
        fig, ax = plt.subplots(figsize=(8, 4.5))
        for k in sorted({row["epoch"] for row in art.distance_series}):
            offset = sum(cfg.schedule.length(i) for i in range(k))
            xs = [offset + row["step"] for row in art.distance_series
                  if row["epoch"] == k and np.isfinite(row["d_subsequent"])
                  and row["d_subsequent"] > 0]
            ys = [row["d_subsequent"] for row in art.distance_series
                  if row["epoch"] == k and np.isfinite(row["d_subsequent"])
                  and row["d_subsequent"] > 0]
            ax.plot(xs, ys, color=_EPOCH_COLORS[k % len(_EPOCH_COLORS)],
                    label=f"epoch {k}")
        ax.set_yscale("log")
        ax.set_xlabel("global step")
        ax.set_ylabel("distance between subsequent cloud measures")
        ax.legend()
        save(fig, "fig_distance_subsequent.svg")

    if art.bounds_rows:
        # certified push-forward iterates: the within-epoch decay of the
        # distance to the invariant measure
        fig, ax = plt.subplots(figsize=(8, 4.5))
        for k in sorted({row["epoch"] for row in art.bounds_rows}):
            xs = [row["i"] for row in art.bounds_rows if row["epoch"] == k]
            ys = [row["d_to_invariant_cert"] for row in art.bounds_rows
                  if row["epoch"] == k]
            ax.plot(xs, ys, marker="o", markersize=3,
                    color=_EPOCH_COLORS[k % len(_EPOCH_COLORS)],
                    label=f"epoch {k}")
        ax.set_yscale("log")
        ax.set_xlabel("operator application i")
        ax.set_ylabel("certified distance to invariant measure")
        ax.legend()
        save(fig, "fig_distance_to_invariant.svg")

    return files


def analyze(artifacts_dir):
    """Recompute the bounds report from an existing run directory."""
    cfg = load_config(os.path.join(artifacts_dir, "config_resolved.json"))
    with open(os.path.join(artifacts_dir, "bounds_inputs.json"),
              encoding="utf-8") as fh:
        inputs = json.load(fh)
    report = assemble_report(cfg, inputs)
    report.to_json(os.path.join(artifacts_dir, "bounds_report.json"))
    _write_text(os.path.join(artifacts_dir, "bounds_report.txt"),
                report.to_text() + "\n")
    return report
