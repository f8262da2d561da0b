"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 numerical abort.
"""
import argparse
import math
import os
import sys

from . import harness
from .config import METHODS, RunConfig, load_config
from .errors import ConfigError, NumericalAbort
from .monodomain import write_snapshot_csv
from .stability import sweep, write_sweep_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _positive_float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (value > 0 and math.isfinite(value)):
        raise argparse.ArgumentTypeError(f"must be positive and finite: {text!r}")
    return value


def _nonneg_float(text):
    value = float(text)
    if not (value >= 0 and math.isfinite(value)):
        raise argparse.ArgumentTypeError(f"must be >= 0: {text!r}")
    return value


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="INI run configuration")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides [output] dir)")
    common.add_argument("--method", metavar="NAME", help="integrator: " + ", ".join(METHODS))
    common.add_argument("--dt", metavar="X", type=_positive_float, help="step size [ms]")
    common.add_argument("--threads", metavar="N", type=int, help="concurrent experiment cells")
    common.add_argument("--cache", metavar="DIR", help="reference-solution cache (default OUT/refcache)")

    parser = argparse.ArgumentParser(prog="emrkc", description="Stabilized multirate integrators for the monodomain model.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="run one simulation")
    sub.add_parser("converge", parents=[common], help="error vs dt against an EXEX-RL reference")
    sub.add_parser("stability-scan", parents=[common], help="effective stability over a dt scan")
    sub.add_parser("efficiency", parents=[common], help="error and cost for several methods")
    sub.add_parser("test-eq", parents=[common], help="amplification factors on the scalar test equation grid")
    st = sub.add_parser("stages", parents=[common], help="print the (s, m, eta) plan")
    st.add_argument("--rho-F", dest="rho_F", type=_nonneg_float, required=True, metavar="X")
    st.add_argument("--rho-S", dest="rho_S", type=_nonneg_float, required=True, metavar="X")
    return parser


def _config(args):
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.method:
        cfg.method = args.method.lower()
    if args.dt is not None:
        cfg.dt = args.dt
    if args.threads is not None:
        cfg.threads = args.threads
    if args.out:
        cfg.out_dir = args.out
    return cfg


def _out(cfg, name):
    os.makedirs(cfg.out_dir, exist_ok=True)
    return os.path.join(cfg.out_dir, name)


def _cache(args, cfg):
    return args.cache or os.path.join(cfg.out_dir, "refcache")


def cmd_simulate(args, cfg):
    cfg.validate()
    problem = cfg.build()
    res = harness.run_simulation(cfg, problem=problem)
    harness.write_csv(_out(cfg, "steps.csv"), ("step", "t", "s", "m", "eta"),
                      [(r.step, r.t, r.s, r.m, r.eta) for r in res.reports])
    c = res.counters.as_dict()
    harness.write_csv(_out(cfg, "counters.csv"),
                      ("method", "dt", "n_steps", "rho_F", "rho_S", "rho_F_analytic", "arrival_time")
                      + harness.COUNTER_COLUMNS,
                      [[cfg.method, cfg.dt, res.n_steps, res.rho_F, res.rho_S, res.rho_F_analytic, res.arrival_time]
                       + [c[k] for k in harness.COUNTER_COLUMNS]])
    if cfg.snapshot == "final":
        write_snapshot_csv(_out(cfg, "snapshot.csv"), problem, res.state)
    print(f"{cfg.method}: {res.n_steps} steps of {cfg.dt:g} ms, rho_F={res.rho_F:.4g}, rho_S={res.rho_S:.4g}, "
          f"wall {res.counters.wall_time:.3f} s")


def cmd_converge(args, cfg):
    cfg.validate()
    rows = harness.run_convergence(cfg, cache_dir=_cache(args, cfg))
    header, body = harness.table_rows(rows, ("dt", "rel_l2_err", "order", "stable", "s", "m"))
    harness.write_csv(_out(cfg, "convergence.csv"), header, body)
    for r in rows:
        print(f"dt={r['dt']:<10g} err={r['rel_l2_err']:.4e} order={r['order']:.3f}")


def cmd_stability_scan(args, cfg):
    cfg.validate()
    dts = (args.dt,) if args.dt is not None else cfg.scan_dts
    rows, limit = harness.run_effective_stability(cfg, dts)
    harness.write_csv(_out(cfg, "stability_scan.csv"), ("dt", "rel_norm", "stable", "s", "m", "dt_explicit"),
                      [(r["dt"], r["rel_norm"], r["stable"], r["s"], r["m"], limit) for r in rows])
    print(f"EXEX-RL limit {limit:.6g} ms")
    for r in rows:
        print(f"dt={r['dt']:<10g} stable={int(r['stable'])} rel_norm={r['rel_norm']:.4g} s={r['s']} m={r['m']}")


def cmd_efficiency(args, cfg):
    cfg.validate()
    rows = harness.run_efficiency(cfg, cache_dir=_cache(args, cfg))
    header, body = harness.table_rows(rows, ("method", "dt", "rel_l2_err", "order", "stable", "s", "m"))
    harness.write_csv(_out(cfg, "efficiency.csv"), header, body)
    for r in rows:
        print(f"{r['method']:<18} dt={r['dt']:<10g} err={r['rel_l2_err']:.4e} "
              f"wall={r['counters'].wall_time:.3f}s")


def cmd_test_eq(args, cfg):
    dts = (args.dt,) if args.dt is not None else cfg.scan_dts
    try:
        results = list(sweep(cfg.lambdas, cfg.lambdas, cfg.lambdas, dts, cfg.epsilon))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    write_sweep_csv(_out(cfg, "test_eq.csv"), results)
    n_bad = sum(not v.stable for _, v in results)
    print(f"{len(results)} parameter tuples, {n_bad} with |R| > 1 + 1e-12")


def cmd_stages(args, cfg):
    try:
        s, m, eta = harness.plan_stages(cfg.dt, args.rho_F, args.rho_S, cfg.epsilon)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    print(f"s={s} m={m} eta={eta!r}")


COMMANDS = {
    "simulate": cmd_simulate,
    "converge": cmd_converge,
    "stability-scan": cmd_stability_scan,
    "efficiency": cmd_efficiency,
    "test-eq": cmd_test_eq,
    "stages": cmd_stages,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = _config(args)
        COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
