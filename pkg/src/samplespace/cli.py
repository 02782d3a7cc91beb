"""Command-line entry point: ``samplespace <subcommand> ...``.

Exit codes: 0 on success, 1 on a domain error (error JSON on stderr), 2 on a
configuration or parse error. Numbers are printed with 17 significant digits.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .asymptotics import run_experiment
from .config import MEASURE_SCHEMA, SAMPLE_SCHEMA, read_json, schema_errors, validate_config
from .errors import ConfigError, ExperimentAbort, SampleSpaceError
from .means import (SolverOptions, brute_force_q_mean, frechet_mean, kbar_mean, q_mean)
from .samples import SCHEMA_VERSION, Partition, Sample, orbit_type, sample_distance, sample_geodesic, skeleton_index
from .wasserstein import AtomicMeasure, empirical_measure, measure_stratum, optimal_plan

OUTPUT_DIR_ENV = "SAMPLESPACE_OUTPUT_DIR"


def _num(x) -> str:
    return format(float(x), ".17g")


def _load(path, schema, cls):
    obj = read_json(path)
    errors = schema_errors(obj, schema)
    if errors:
        raise ConfigError(f"{path}: invalid input", errors=errors)
    try:
        return cls.from_json(obj)
    except (SampleSpaceError, ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _load_sample(path) -> Sample:
    return _load(path, SAMPLE_SCHEMA, Sample)


def _load_measure(path) -> AtomicMeasure:
    return _load(path, MEASURE_SCHEMA, AtomicMeasure)


def _measure_arg(args) -> AtomicMeasure:
    if args.measure:
        return _load_measure(args.measure)
    return empirical_measure(_load_sample(args.sample))


def _solver(args) -> SolverOptions:
    kw = {"seed": args.seed}
    for name in ("restarts", "max_iterations", "rel_tolerance", "merge_tolerance"):
        if getattr(args, name) is not None:
            kw[name] = getattr(args, name)
    return SolverOptions(**kw)


def _emit(args, payload):
    text = payload if isinstance(payload, str) else json.dumps(payload, indent=2, allow_nan=False)
    if getattr(args, "out", None):
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        sys.stdout.write(text + "\n")


def _result_json(kind, res, **fields):
    return {"schema_version": SCHEMA_VERSION, "type": kind, **fields, **res.to_json()}


# -- subcommands ------------------------------------------------------------------


def cmd_distance(args):
    x, y = (_load_sample(p) for p in args.samples)
    d, _ = sample_distance(x, y, args.p)
    _emit(args, _num(d))
    return 0


def cmd_wasserstein(args):
    P, Q = (_load_measure(p) for p in args.measures)
    plan, cost = optimal_plan(P, Q, args.p)
    if args.plan:
        _emit(args, {"schema_version": SCHEMA_VERSION, "type": "transport_plan", "p": args.p,
                     "distance": max(cost, 0.0) ** (1 / args.p), "coupling": plan.coupling.tolist()})
    else:
        _emit(args, _num(max(cost, 0.0) ** (1 / args.p)))
    return 0


def cmd_geodesic(args):
    x, y = (_load_sample(p) for p in args.samples)
    g = sample_geodesic(x, y, args.p)
    ts = args.t or [0.5]
    _emit(args, {
        "schema_version": SCHEMA_VERSION,
        "type": "geodesic",
        "p": args.p,
        "length": g.length,
        "matching": [int(i) for i in g.matching],
        "points": [{"t": t, "sample": g.at(t).to_json()} for t in ts],
    })
    return 0


def cmd_mean(args):
    res = frechet_mean(_measure_arg(args), args.p, _solver(args))
    _emit(args, _result_json("frechet_mean", res, p=args.p))
    return 0


def cmd_qmean(args):
    res = q_mean(_measure_arg(args), args.q, args.p, _solver(args))
    _emit(args, _result_json("q_mean", res, p=args.p, q=args.q))
    return 0


def _parse_kbar(text) -> Partition:
    try:
        return Partition(tuple(int(k) for k in text.split(",")))
    except ValueError as exc:
        raise ConfigError(f"--kbar: {exc}") from None


def cmd_kbarmean(args):
    kbar = _parse_kbar(args.kbar)
    res = kbar_mean(_load_sample(args.sample), kbar, args.p, _solver(args))
    _emit(args, _result_json("kbar_mean", res, p=args.p, kbar=list(kbar.parts)))
    return 0


def cmd_stratum(args):
    if args.sample:
        x = _load_sample(args.sample)
        k = orbit_type(x, args.tol)
        _emit(args, {"schema_version": SCHEMA_VERSION, "type": "orbit_type", "n": len(x),
                     "partition": list(k.parts), "skeleton_index": skeleton_index(x, args.tol)})
    else:
        s = measure_stratum(_load_measure(args.measure), args.tol)
        _emit(args, {"schema_version": SCHEMA_VERSION, "type": "measure_stratum", "q": s.q,
                     "weights": list(s.weights.weights), "regular": s.regular})
    return 0


def cmd_oracle(args):
    x = _load_sample(args.sample)
    res = brute_force_q_mean(x, args.q, args.p)
    _emit(args, {"schema_version": SCHEMA_VERSION, "type": "brute_force_q_mean", "p": args.p, "q": args.q,
                 "objective": res.objective, "clusters": [list(c) for c in res.clusters],
                 "centers": np.asarray(res.centers).tolist()})
    return 0


def cmd_validate(args):
    cfg, errors = validate_config(args.config)
    if errors:
        raise ConfigError("invalid experiment config", errors=errors)
    _emit(args, cfg.to_json())
    return 0


def cmd_experiment(args):
    cfg, errors = validate_config(args.config)
    if errors:
        raise ConfigError("invalid experiment config", errors=errors)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    out_dir = args.out or os.environ.get(OUTPUT_DIR_ENV) or "."
    result = run_experiment(cfg, threads=args.threads)
    csv_path, json_path = result.write(out_dir, Path(args.config).stem, threads=args.threads)
    sys.stdout.write(json.dumps({"csv": str(csv_path), "summary": str(json_path)}) + "\n")
    return 0


# -- parser -------------------------------------------------------------------------


def _add_p(sp, default=2.0):
    sp.add_argument("--p", type=float, default=default, help="exponent of the L^p / W_p cost (default 2)")


def _add_out(sp, help="write the JSON result to this file instead of stdout"):
    sp.add_argument("--out", help=help)


def _add_solver(sp):
    sp.add_argument("--seed", type=int, required=True, help="seed for the restart streams")
    sp.add_argument("--restarts", type=int)
    sp.add_argument("--max-iterations", dest="max_iterations", type=int)
    sp.add_argument("--rel-tolerance", dest="rel_tolerance", type=float)
    sp.add_argument("--merge-tolerance", dest="merge_tolerance", type=float)


def _add_input(sp):
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--measure", help="measure JSON file")
    g.add_argument("--sample", help="sample JSON file (uses its empirical measure)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="samplespace", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("distance", help="quotient distance between two samples")
    sp.add_argument("--samples", nargs=2, required=True, metavar="FILE")
    _add_p(sp)
    _add_out(sp)
    sp.set_defaults(func=cmd_distance)

    sp = sub.add_parser("wasserstein", help="W_p distance between two atomic measures")
    sp.add_argument("--measures", nargs=2, required=True, metavar="FILE")
    sp.add_argument("--plan", action="store_true", help="print the optimal coupling as JSON")
    _add_p(sp)
    _add_out(sp)
    sp.set_defaults(func=cmd_wasserstein)

    sp = sub.add_parser("geodesic", help="points on the geodesic between two samples")
    sp.add_argument("--samples", nargs=2, required=True, metavar="FILE")
    sp.add_argument("--t", type=float, action="append", help="curve parameter in [0, 1]; repeatable")
    _add_p(sp)
    _add_out(sp)
    sp.set_defaults(func=cmd_geodesic)

    sp = sub.add_parser("mean", help="Fréchet p-mean")
    _add_input(sp)
    _add_p(sp)
    _add_solver(sp)
    _add_out(sp)
    sp.set_defaults(func=cmd_mean)

    sp = sub.add_parser("qmean", help="projection onto the q-skeleton")
    _add_input(sp)
    sp.add_argument("--q", type=int, required=True)
    _add_p(sp)
    _add_solver(sp)
    _add_out(sp)
    sp.set_defaults(func=cmd_qmean)

    sp = sub.add_parser("kbarmean", help="projection onto a partition stratum closure")
    sp.add_argument("--sample", required=True)
    sp.add_argument("--kbar", required=True, help="cluster sizes, e.g. 2,1")
    _add_p(sp)
    _add_solver(sp)
    _add_out(sp)
    sp.set_defaults(func=cmd_kbarmean)

    sp = sub.add_parser("stratum", help="orbit type of a sample or stratum of a measure")
    _add_input(sp)
    sp.add_argument("--tol", type=float, default=0.0, help="coincidence tolerance (default exact)")
    _add_out(sp)
    sp.set_defaults(func=cmd_stratum)

    sp = sub.add_parser("oracle", help="brute-force q-mean of a small sample")
    sp.add_argument("--sample", required=True)
    sp.add_argument("--q", type=int, required=True)
    _add_p(sp)
    _add_out(sp)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("experiment", help="run a Monte-Carlo experiment from a JSON config")
    sp.add_argument("--config", required=True)
    sp.add_argument("--threads", type=int, default=1)
    sp.add_argument("--seed", type=int, help="override the config seed")
    _add_out(sp, help=f"output directory (default ${OUTPUT_DIR_ENV} or the working directory)")
    sp.set_defaults(func=cmd_experiment)

    sp = sub.add_parser("validate", help="check an experiment config and echo it")
    sp.add_argument("--config", required=True)
    _add_out(sp)
    sp.set_defaults(func=cmd_validate)
    return parser


def _fail(code, exc, **extra):
    payload = {"error": type(exc).__name__, "message": str(exc), **extra}
    sys.stderr.write(json.dumps(payload, default=str) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "threads", 1) < 1:
        return _fail(2, ConfigError("--threads must be >= 1"))
    try:
        return args.func(args)
    except ConfigError as exc:
        return _fail(2, exc, errors=exc.errors)
    except OSError as exc:
        return _fail(2, exc)
    except ExperimentAbort as exc:
        return _fail(1, exc, diagnostics=exc.diagnostics)
    except (SampleSpaceError, ValueError, ArithmeticError) as exc:
        return _fail(1, exc)


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
