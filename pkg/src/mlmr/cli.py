"""Command-line entry point: ``mlmr {analyze,bound,run,sweep}``."""

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import _kernels
from .analysis import analyze, l_threshold, theorem1_bound, theorem2_bound
from .errors import MLMRError, NotComputable, ThresholdViolated
from .harness import default_output_dir, load_config, run, shipped_config, sweep, write_sweep, write_trace
from .policies import parse_schedule


def _config_path(name):
    p = Path(name)
    if p.exists():
        return p
    try:
        return shipped_config(p.name)
    except MLMRError:
        return p


def _pairs(matching):
    return "{" + ",".join(f"({i + 1},{j + 1})" for i, j in enumerate(matching)) + "}"


def _table(a, width=8, prec=4):
    return "\n".join("  " + " ".join(f"{x:{width}.{prec}f}" for x in row) for row in a)


def cmd_analyze(args):
    cfg = load_config(_config_path(args.config))
    a = analyze(cfg.instance)
    print(f"M = {a.num_users}, N = {a.num_resources}")
    print("mean rewards mu:")
    print(_table(a.mu))
    print(f"optimal matching: {_pairs(a.optimal_matching)}")
    print(f"mu* = {a.mu_star:.4f}")
    print(f"delta_min = {a.delta_min:.4f}")
    print(f"delta_max = {a.delta_max:.4f}")
    print(f"pi_min = {a.pi_min:.6g}, s_max = {a.s_max}, s_min = {a.s_min}")
    print(f"theta_max = {a.theta_max:.6g}, theta_min = {a.theta_min:.6g}")
    print(f"eps_max = {a.eps_max:.6g}, eps_min = {a.eps_min:.6g}")
    print(f"a_bound = {a.a_bound:.6g}")
    try:
        thr = l_threshold(a)
        print(f"L threshold = {thr:.6f} -> {math.ceil(thr)}")
    except NotComputable as exc:
        print(f"L threshold: not computable ({exc})")
    return 0


def cmd_bound(args):
    cfg = load_config(_config_path(args.config))
    a = analyze(cfg.instance)
    printed = False
    if args.L is not None:
        try:
            b = theorem1_bound(a, args.L, args.n)
            b0 = theorem1_bound(a, args.L, args.n, include_a=False)
            print(f"constant-L bound (L = {args.L:g}, n = {args.n}): {b:.10g}")
            print(f"constant-L bound without a_bound: {b0:.10g}")
            printed = True
        except ThresholdViolated as exc:
            if args.schedule is None:
                raise
            print(f"constant-L bound: not applicable ({exc})")
    if args.schedule is not None:
        sched = parse_schedule(args.schedule)
        b = theorem2_bound(a, sched, args.n)
        b0 = theorem2_bound(a, sched, args.n, include_a=False)
        print(f"schedule bound ({sched}, n = {args.n}): {b:.10g}")
        print(f"schedule bound without a_bound: {b0:.10g}")
        printed = True
    if not printed:
        raise MLMRError("give --L and/or --schedule")
    return 0


def _overrides(cfg, args):
    return cfg.with_overrides(seed=args.seed, horizon=args.horizon, replications=args.replications)


def cmd_run(args):
    cfg = _overrides(load_config(_config_path(args.config)), args)
    trace = run(cfg, workers=args.workers)
    out = Path(args.out or default_output_dir())
    paths = write_trace(trace, out)
    last = len(trace.steps) - 1
    print(f"backend: {_kernels.BACKEND}")
    print(f"policy {cfg.policy}, {cfg.replications} replications, horizon {cfg.horizon}, seed {cfg.seed}")
    print(f"final regret: {trace.regret_mean[last]:.6g} ± {trace.regret_se[last]:.3g}"
          f" (regret / ln n = {trace.regret_per_ln_n[last]:.6g})")
    print(f"wrote {len(paths)} files to {out}")
    return 0


def cmd_sweep(args):
    cfg = _overrides(load_config(_config_path(args.config)), args)
    values = [float(x) for x in args.L.split(",") if x.strip()]
    traces = sweep(cfg, values, workers=args.workers)
    out = Path(args.out or default_output_dir())
    path = write_sweep(traces, out / "sweep.csv")
    for L, tr in traces.items():
        print(f"L = {L:g}: final regret {tr.regret_mean[-1]:.6g} ± {tr.regret_se[-1]:.3g}")
    print(f"wrote {path}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="mlmr", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="print instance statistics and the L threshold")
    a.add_argument("config")
    a.set_defaults(func=cmd_analyze)

    b = sub.add_parser("bound", help="evaluate the regret upper bounds")
    b.add_argument("config")
    b.add_argument("--L", type=float, help="constant exploration parameter")
    b.add_argument("--schedule", help="diverging schedule, e.g. 'log_log(200)'")
    b.add_argument("--n", type=int, required=True, help="horizon")
    b.set_defaults(func=cmd_bound)

    for name, fn, hlp in (("run", cmd_run, "simulate and write trace CSVs"),
                          ("sweep", cmd_sweep, "compare several constant L values")):
        s = sub.add_parser(name, help=hlp)
        s.add_argument("config")
        s.add_argument("--out", help=f"output directory (default ${'{'}MLMR_OUTPUT_DIR{'}'} or ./out)")
        s.add_argument("--seed", type=int)
        s.add_argument("--horizon", type=int)
        s.add_argument("--replications", type=int)
        s.add_argument("--workers", type=int, default=1)
        if name == "sweep":
            s.add_argument("--L", required=True, help="comma-separated L values")
        s.set_defaults(func=fn)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    np.set_printoptions(precision=6, suppress=True)
    try:
        return args.func(args)
    except MLMRError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
