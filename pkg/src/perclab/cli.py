"""Command-line front door.

Every experiment is configured by flags (optionally pre-loaded from a TOML
file; flags win), runs with a mandatory seed, and persists its rows plus a
JSON manifest written atomically next to the output file.  Same config and
seed give byte-identical output files regardless of --threads.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import subprocess
import sys
import tempfile
import time

try:
    import tomllib
except ModuleNotFoundError:  # python 3.10
    import tomli as tomllib

from . import __version__
from .errors import PerclabError
from .estimators import (
    RemovalExperimentParams,
    angle_scan,
    boosting_search,
    estimate_curve,
    find_threshold,
    influence_exact,
    influence_mc,
    margulis_russo_check,
    removal_experiment,
    sharpness_window,
)
from .hypercube import ModelParams
from .sat import sample_disorder, solution_codes
from .seeding import substream
from .symmetry import AdmissibilityParams, SpinSequence, build_gentle_map, is_admissible
from .lemma_suite import run_lemma_suite

SCHEMA_VERSION = 1


def _parse_p_grid(grid: str, geometric: bool) -> list[float]:
    """"a:b:k" = k points starting at a: step b (linear) or ratio b (geometric)."""
    try:
        a_s, b_s, k_s = grid.split(":")
        a, b, k = float(a_s), float(b_s), int(k_s)
    except ValueError as exc:
        raise PerclabError(f"bad p-grid {grid!r}; expected a:b:k") from exc
    if k < 1:
        raise PerclabError("p-grid needs at least one point")
    if geometric:
        return [a * b ** i for i in range(k)]
    return [a + b * i for i in range(k)]


def _atomic_write(path: str, data: str):
    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".perclab-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def _build_id() -> str:
    try:
        desc = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True, text=True, timeout=5,
        )
        git = desc.stdout.strip() if desc.returncode == 0 else "nogit"
    except OSError:
        git = "nogit"
    return f"perclab-{__version__}+{git}"


def _emit(args, rows: list[dict], summary: dict, started: float):
    if args.out:
        if args.format == "csv":
            _atomic_write(args.out, _rows_to_csv(rows))
        else:
            _atomic_write(args.out, json.dumps(rows, indent=2) + "\n")
        manifest = {
            "schema": SCHEMA_VERSION,
            "config": {k: v for k, v in sorted(vars(args).items())
                       if k not in ("func",) and v is not None},
            "build": _build_id(),
            "started": started,
            "finished": time.time(),
            "summary": summary,
            "exit_status": 0,
        }
        _atomic_write(args.out + ".manifest.json", json.dumps(manifest, indent=2) + "\n")
    else:
        json.dump({"rows": rows, "summary": summary}, sys.stdout, indent=2)
        sys.stdout.write("\n")


def _model(args) -> ModelParams:
    return ModelParams(args.n, args.kappa)


def _cmd_curve(args, started):
    ps = _parse_p_grid(args.p_grid, args.geometric)
    points = estimate_curve(_model(args), ps, args.trials, args.seed, args.threads)
    rows = [vars(pt).copy() for pt in points]
    _emit(args, rows, {"points": len(rows)}, started)
    return 0


def _cmd_threshold(args, started):
    est = find_threshold(_model(args), args.theta, args.trials, args.seed, args.threads)
    row = {
        "theta": est.theta, "p_hat": est.p_hat,
        "p_lo": est.bracket[0], "p_hi": est.bracket[1],
        "trials_per_eval": est.trials_per_eval, "seed": est.seed,
        "separated": est.separated,
    }
    _emit(args, [row], {"p_hat": est.p_hat}, started)
    return 0


def _cmd_sharpness(args, started):
    ratio = sharpness_window(_model(args), args.eps, args.trials, args.seed, args.threads)
    row = {"eps": args.eps, "window_ratio": ratio}
    _emit(args, [row], row, started)
    return 0


def _cmd_influence(args, started):
    params = _model(args)
    if args.exact:
        est = influence_exact(params, args.p)
    else:
        est = influence_mc(params, args.p, args.trials, args.seed)
    row = {"p": est.p, "i_hat": est.i_hat, "method": est.method, "stderr": est.stderr}
    _emit(args, [row], row, started)
    return 0


def _cmd_mr_check(args, started):
    rec = margulis_russo_check(_model(args), args.p, args.dp)
    _emit(args, [rec], rec, started)
    return 0


def _cmd_angle_scan(args, started):
    dists = [int(s) for s in args.dists.split(",")]
    rows = angle_scan(_model(args), dists, args.samples, args.seed)
    _emit(args, rows, {"max_ratio": max(r["max_ratio"] for r in rows)}, started)
    return 0


def _cmd_boost_search(args, started):
    params = _model(args)
    d = sample_disorder(params, args.p, substream(args.seed, 99))
    cert = boosting_search(d, args.delta, args.k_max, args.trials, args.seed)
    if cert is None:
        row = {"found": False, "size": 0, "confidence": 0.0, "set": ""}
    else:
        row = {
            "found": True, "size": len(cert.set), "confidence": cert.confidence,
            "set": ";".join(v.to_str() for v in cert.set),
        }
    _emit(args, [row], row, started)
    return 0


def _cmd_removal(args, started):
    params = _model(args)
    d = sample_disorder(params, args.p, substream(args.seed, 99))
    points = solution_codes(d)
    ap = AdmissibilityParams(args.c2)
    ref = None
    for attempt in range(1000):
        cand = SpinSequence.random(params.n, args.k, substream(args.seed, 98, attempt))
        if is_admissible(cand, ap):
            ref = cand
            break
    if ref is None:
        raise PerclabError("could not draw an admissible reference sequence")
    gmap = build_gentle_map(ref, ap)
    rp = RemovalExperimentParams.for_model(params, args.k, args.trials)
    rec = removal_experiment(points, gmap, params, rp, args.seed)
    rec = {"solution_size": int(points.size), **rec}
    _emit(args, [rec], rec, started)
    return 0


def _cmd_lemma_suite(args, started):
    results = run_lemma_suite(args.seed, args.cases, args.self_test_mutate)
    rows = [
        {"check": r.name, "cases": r.cases, "failures": r.failures,
         "status": "PASS" if r.passed else "FAIL"}
        for r in results
    ]
    for r in rows:
        print(f"{r['status']:4s}  {r['check']:40s} cases={r['cases']} failures={r['failures']}")
    failed = any(not r.passed for r in results)
    _emit(args, rows, {"failed_checks": sum(not r.passed for r in results)}, started)
    return 1 if failed else 0


def _add_common(sp, model=True, trials=True):
    sp.add_argument("--seed", type=int, required=True,
                    help="master RNG seed (mandatory; no wall-clock default)")
    sp.add_argument("--out", help="output file path; stdout JSON when omitted")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--config", help="TOML file with default flag values")
    sp.add_argument("--threads", type=int,
                    default=int(os.environ.get("PERCLAB_THREADS", "1")),
                    help="worker count (output is independent of it)")
    if model:
        sp.add_argument("--n", type=int, required=True, help="dimension N")
        sp.add_argument("--kappa", type=float, default=0.0, help="margin kappa")
    if trials:
        sp.add_argument("--trials", type=int, default=1000)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="perclab",
        description="Bernoulli-disorder Ising perceptron laboratory",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("curve", help="emptiness probability over a p grid")
    _add_common(sp)
    sp.add_argument("--p-grid", required=True, dest="p_grid",
                    help='"a:b:k": k points from a, step b (ratio b with --geometric)')
    sp.add_argument("--geometric", action="store_true")
    sp.set_defaults(func=_cmd_curve)

    sp = sub.add_parser("threshold", help="bisection for p_N(theta)")
    _add_common(sp)
    sp.add_argument("--theta", type=float, required=True)
    sp.set_defaults(func=_cmd_threshold)

    sp = sub.add_parser("sharpness", help="window ratio p_N(1-eps)/p_N(eps)")
    _add_common(sp)
    sp.add_argument("--eps", type=float, required=True)
    sp.set_defaults(func=_cmd_sharpness)

    sp = sub.add_parser("influence", help="total influence at p")
    _add_common(sp)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--exact", action="store_true",
                    help="full disorder enumeration (n <= 4)")
    sp.set_defaults(func=_cmd_influence)

    sp = sub.add_parser("mr-check", help="derivative-vs-influence identity check")
    _add_common(sp, trials=False)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--dp", type=float, default=1e-3)
    sp.set_defaults(func=_cmd_mr_check)

    sp = sub.add_parser("angle-scan", help="half-cube difference constant scan")
    _add_common(sp, trials=False)
    sp.add_argument("--dists", required=True, help="comma-separated Hamming distances")
    sp.add_argument("--samples", type=int, default=100)
    sp.set_defaults(func=_cmd_angle_scan)

    sp = sub.add_parser("boost-search", help="greedy boosting-set search")
    _add_common(sp)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--delta", type=float, required=True)
    sp.add_argument("--k-max", type=int, default=8, dest="k_max")
    sp.set_defaults(func=_cmd_boost_search)

    sp = sub.add_parser("removal", help="q(A) and budgeted removal experiment")
    _add_common(sp)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--k", type=int, default=2)
    sp.add_argument("--c2", type=float, default=4.0)
    sp.set_defaults(func=_cmd_removal)

    sp = sub.add_parser("lemma-suite", help="exact property battery")
    _add_common(sp, model=False, trials=False)
    sp.add_argument("--cases", type=int, default=200)
    sp.add_argument("--self-test-mutate", action="store_true",
                    help="inject a fault to demonstrate suite sensitivity")
    sp.set_defaults(func=_cmd_lemma_suite)

    return parser


def _apply_config_file(args, argv):
    """Fill unset flags from the TOML file; explicit flags always win."""
    if not getattr(args, "config", None):
        return args
    with open(args.config, "rb") as fh:
        conf = tomllib.load(fh)
    explicit = {a.lstrip("-").split("=")[0].replace("-", "_") for a in argv if a.startswith("--")}
    for key, value in conf.items():
        attr = key.replace("-", "_")
        if hasattr(args, attr) and attr not in explicit:
            setattr(args, attr, value)
    return args


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args = _apply_config_file(args, argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    started = time.time()
    try:
        return args.func(args, started)
    except PerclabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
