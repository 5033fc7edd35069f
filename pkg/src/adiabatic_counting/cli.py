"""Command-line entry point: ``aqcount <subcommand> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import harness
from .counting import BACKENDS, make_oracle, run_counting
from .dynamics import (
    ReducedRunSpec,
    p_sol_landau_zener_ratio,
    p_sol_small_eps,
    reduced_trajectory,
    solution_probability,
)
from .fullstate import GroverInstance, measure, run_full
from .grover import ScheduleParams
from .schedule import DEFAULT_GRID_POINTS, build_schedule

log = logging.getLogger("adiabatic_counting")

SCHEDULE_COLUMNS = ["s", "t", "ds_dt"]
DYNAMICS_COLUMNS = ["s", "re_a", "im_a", "re_b", "im_b", "norm"]
COUNT_KEYS = ["m_true", "m_hat", "delta_m_hat", "m_star", "k", "p_hat", "total_cost", "flags"]


def _write(text, path):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _emit_table(columns, rows, args):
    records = [dict(zip(columns, r)) for r in rows]
    _write(harness.emit(records, columns, args.format or "csv"), args.out)


def _emit_json(doc, args):
    _write(json.dumps(doc, indent=2) + "\n", args.out)


def cmd_schedule(args):
    sched = build_schedule(ScheduleParams(args.eta_star, args.eps), grid_points=args.grid_points)
    log.info("T=%.17g, quadrature deviation %.3e", sched.total_runtime, sched.max_table_deviation)
    _emit_table(SCHEDULE_COLUMNS, sched.table().tolist(), args)


def cmd_dynamics(args):
    eta_star = args.eta if args.eta_star is None else args.eta_star
    spec = ReducedRunSpec(args.eta, ScheduleParams(eta_star, args.eps), abs_tol=args.tol, rel_tol=args.tol)
    traj = reduced_trajectory(spec, np.linspace(0.0, 1.0, args.points))
    rows = zip(traj.s, traj.a.real, traj.a.imag, traj.b.real, traj.b.imag, traj.norm)
    _emit_table(DYNAMICS_COLUMNS, [list(map(float, r)) for r in rows], args)


def cmd_psol(args):
    eta_star = args.eta if args.eta_star is None else args.eta_star
    doc = {
        "eta": args.eta,
        "eta_star": eta_star,
        "eps": args.eps,
        "tol": args.tol,
        "p_sol_integrated": solution_probability(args.eta, eta_star, args.eps, abs_tol=args.tol, rel_tol=args.tol),
        "p_sol_small_eps": p_sol_small_eps(args.eta, args.eps),
        "p_sol_landau_zener": p_sol_landau_zener_ratio(args.eta, eta_star, args.eps),
    }
    _emit_json(doc, args)


def cmd_fullsim(args):
    if args.marked is not None:
        marked = [int(x) for x in args.marked.split(",") if x.strip()]
        instance = GroverInstance(args.n, frozenset(marked))
    else:
        instance = GroverInstance.first_m(args.n, args.m)
    eta_star = args.eta_star if args.eta_star is not None else max(instance.m, 1) / instance.n
    run = run_full(instance, ScheduleParams(eta_star, args.eps), tol=args.tol)
    index, hit = measure(run.final, instance, np.random.default_rng(args.seed))
    doc = {
        "n": instance.n,
        "m": instance.m,
        "eta_star": eta_star,
        "eps": args.eps,
        "tol": args.tol,
        "seed": args.seed,
        "p_sol": run.p_sol,
        "runtime_T": run.total_runtime,
        "norm_drift": run.norm_drift,
        "sample": {"index": index, "is_solution": hit},
    }
    _emit_json(doc, args)


def cmd_count(args):
    oracle = make_oracle(args.backend, args.n, args.m)
    run = run_counting(
        oracle,
        eps=args.eps,
        target_p=args.target_p,
        mode=args.mode,
        seed=args.seed,
        runs_per_trial=args.runs_per_trial,
        precision=args.precision,
        detect_repeats=args.detect_repeats,
    )
    doc = {"m_true": args.m, **run.estimate.as_dict()}
    doc = {key: doc[key] for key in COUNT_KEYS}
    doc["params"] = {
        "n": args.n,
        "eps": args.eps,
        "target_p": args.target_p,
        "backend": args.backend,
        "mode": args.mode,
        "precision": args.precision,
        "runs_per_trial": args.runs_per_trial,
        "detect_repeats": args.detect_repeats,
        "seed": args.seed,
    }
    _emit_json(doc, args)


def cmd_sweep(args):
    overrides = list(args.set or [])
    for flag in ("seed", "jobs", "out", "format"):
        value = getattr(args, flag)
        if value is not None:
            overrides.append(f"{flag}={value}")
    config = harness.load_config(args.config, overrides)
    rows = harness.run_sweep(config)
    failed = sum(1 for r in rows if r["error"])
    if failed:
        log.warning("%d of %d rows failed; see the error column", failed, len(rows))
    text = harness.emit(rows, config.columns, config.format, config=config)
    _write(text, config.out)


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="root seed")
    common.add_argument("--jobs", type=_positive_int, default=None, help="parallel workers (sweep)")
    common.add_argument("--out", default=None, help="output path (default stdout)")
    common.add_argument("--format", choices=["csv", "json"], default=None)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="aqcount", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("schedule", parents=[common], help="export a local adiabatic schedule as CSV")
    p.add_argument("--eta-star", type=float, required=True)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--grid-points", type=int, default=DEFAULT_GRID_POINTS)
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("dynamics", parents=[common], help="reduced-dynamics trajectory CSV")
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--eta-star", type=float, default=None, help="defaults to --eta")
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--points", type=int, default=101)
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_dynamics)

    p = sub.add_parser("psol", parents=[common], help="integrated vs asymptotic success probabilities")
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--eta-star", type=float, default=None, help="defaults to --eta")
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_psol)

    p = sub.add_parser("fullsim", parents=[common], help="full N-dimensional simulation summary")
    p.add_argument("--n", type=int, required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--m", type=int)
    group.add_argument("--marked", help="comma-separated solution indices")
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--eta-star", type=float, default=None, help="defaults to max(M, 1)/N")
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_fullsim)

    p = sub.add_parser("count", parents=[common], help="run the counting procedure once")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True, help="ground-truth number of solutions")
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--target-p", type=float, default=0.1)
    p.add_argument("--backend", choices=sorted(BACKENDS), default="analytic")
    p.add_argument("--mode", choices=["sqrt", "linear"], default="sqrt")
    p.add_argument("--precision", type=float, default=0.1)
    p.add_argument("--runs-per-trial", type=int, default=200)
    p.add_argument("--detect-repeats", type=int, default=1)
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("sweep", parents=[common], help="run a YAML-configured sweep")
    p.add_argument("config", help="flat YAML config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config field")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    if args.command != "sweep" and args.seed is None:
        args.seed = 0
    try:
        args.func(args)
    except harness.ConfigError as exc:
        print(f"aqcount: config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, TypeError) as exc:
        print(f"aqcount: invalid input: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, OSError) as exc:
        print(f"aqcount: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
