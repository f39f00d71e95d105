"""Command-line interface.

Subcommands: run (full experiment), analyze (bounds on existing artifacts),
distances (two measure table files), validate (config + slow-change check).
Exit codes: 0 success, 1 invalid config or input, 2 convergence failure,
3 I/O error.
"""

import argparse
import json
import sys

from .errors import (
    CertificateError,
    ConfigError,
    ConvergenceFailureError,
    ExactSolverSizeError,
    InvalidInputError,
    NotContractiveError,
)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_CONVERGENCE = 2
EXIT_IO = 3


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="ifsdrift",
        description="iterated function systems with switching sampling "
                    "measures: simulation and bound verification",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the full experiment")
    p_run.add_argument("--config", required=True, help="experiment JSON")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--threads", type=int, default=1,
                       help="worker threads for particle shards")
    p_run.add_argument("--no-figures", action="store_true",
                       help="skip SVG emission (CSV is always written)")

    p_an = sub.add_parser("analyze",
                          help="recompute bounds on existing artifacts")
    p_an.add_argument("--out", required=True,
                      help="artifact directory of a previous run")

    p_d = sub.add_parser("distances",
                         help="distance between two measure table files")
    p_d.add_argument("file_a")
    p_d.add_argument("file_b")
    p_d.add_argument("--method", choices=("exact", "sinkhorn", "auto"),
                     default="auto")
    p_d.add_argument("--alpha", type=float, default=1.0)
    p_d.add_argument("--cap", type=int, default=2000,
                     help="exact-solver atom cap")

    p_v = sub.add_parser("validate",
                         help="check a config and its slow-change assumption")
    p_v.add_argument("--config", required=True)

    return parser


def _cmd_run(args):
    from .experiment import load_config, run

    cfg = load_config(args.config)
    if args.seed is not None:
        data = dict(cfg.raw)
        data["seed"] = args.seed
        from .experiment import parse_config
        cfg = parse_config(data)
    art = run(cfg, args.out, threads=args.threads,
              figures=not args.no_figures, log=print)
    report = art.report
    if report is not None:
        print(report.to_text())
    return EXIT_OK


def _cmd_analyze(args):
    from .experiment import analyze

    report = analyze(args.out)
    print(report.to_text())
    return EXIT_OK


def _load_measure(path):
    from .measure import DiscreteMeasure, ParticleCloud

    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    if header and header[-1] == "weight":
        return DiscreteMeasure.from_table(path)
    return ParticleCloud.from_table(path).as_measure()


def _cmd_distances(args):
    from .transport import GroundCost, sinkhorn, wasserstein_exact

    a = _load_measure(args.file_a)
    b = _load_measure(args.file_b)
    cost = GroundCost(alpha=args.alpha)
    method = args.method
    if method == "auto":
        method = ("exact" if a.n_atoms + b.n_atoms <= args.cap
                  else "sinkhorn")
    if method == "exact":
        dist, plan = wasserstein_exact(a, b, cost, atom_cap=args.cap)
        record = {"distance": dist, "method": "exact",
                  "certificate": plan.certificate}
    else:
        res = sinkhorn(a, b, cost)
        record = {"distance": res.estimate, "method": "sinkhorn",
                  "certificate": {"marginal_error": res.marginal_error,
                                  "epsilon": res.epsilon,
                                  "error_bound": res.error_bound,
                                  "iterations": res.iterations}}
    print(f"{record['distance']:.12g}")
    print(json.dumps(record, sort_keys=True))
    return EXIT_OK


def _cmd_validate(args):
    from .experiment import load_config
    from .schedule import validate_schedule

    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_INVALID
    report = validate_schedule(cfg.schedule)
    for line in report.lines():
        print(line)
    print(f"maps: {cfg.family.size}, dimension {cfg.family.dimension}, "
          f"epochs: {cfg.schedule.n_epochs}")
    return EXIT_OK if report.passed else EXIT_INVALID


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    handler = {
        "run": _cmd_run,
        "analyze": _cmd_analyze,
        "distances": _cmd_distances,
        "validate": _cmd_validate,
    }[args.command]
    try:
        return handler(args)
    except (ConfigError, InvalidInputError, NotContractiveError,
            ExactSolverSizeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ConvergenceFailureError, CertificateError) as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    raise SystemExit(main())
