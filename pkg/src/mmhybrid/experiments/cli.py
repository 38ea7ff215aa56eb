"""Command-line entry point.

    python -m mmhybrid.experiments run scenarios/example2.cfg
    python -m mmhybrid.experiments timing scenarios/example1.cfg
    python -m mmhybrid.experiments cdf scenarios/example2.cfg --inits 100
    python -m mmhybrid.experiments oracle scenarios/oracle.cfg

Exit status: 0 on success, 2 on a configuration problem, 3 when a result
check fails, 1 on any other error.
"""
import argparse
import sys
from pathlib import Path

from ..errors import ConfigError
from .config import load_scenario
from .runner import run_scenario
from .studies import cdf_study, oracle_study, timing_report

EXIT_OK, EXIT_ERROR, EXIT_CONFIG, EXIT_CHECK = 0, 1, 2, 3


def _outdir(args, scen):
    return Path(args.outdir) if args.outdir else Path(scen.base_dir) / scen.outdir


def _say(args, msg):
    if not args.quiet:
        print(msg, flush=True)


def _report_checks(args, checks):
    ok = True
    for name, passed, detail in checks:
        ok &= passed
        _say(args, f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
    return EXIT_OK if ok else EXIT_CHECK


def cmd_run(args, scen):
    res = run_scenario(scen, _outdir(args, scen), log=None if args.quiet else print)
    for mode, snr, exc in res.failures:
        _say(args, f"[FAIL] {mode.value} stopped at {snr:g} dB: {type(exc).__name__}: {exc}")
    _say(args, f"curves written to {res.outdir}")
    status = _report_checks(args, res.checks)
    if res.failures:
        return EXIT_ERROR
    return status


def cmd_timing(args, scen):
    rows = timing_report(scen, _outdir(args, scen))
    checks = []
    mc_ratio = float(scen.extra.get("timing_mc_ratio", 1.0))
    lb_ratio = float(scen.extra.get("timing_lb_ratio", 1.0))
    _say(args, "snr_db      t_mc[s]      t_lb[s]     t_lba[s]")
    for r in rows:
        _say(args, f"{r.snr_db:6g} {r.t_mc:12.4g} {r.t_lb:12.4g} {r.t_lba:12.4g}")
        checks.append((f"t_mc/t_lb >= {mc_ratio:g} at {r.snr_db:g} dB",
                       r.t_mc > mc_ratio * r.t_lb and r.t_mc > r.t_lb, f"{r.t_mc / r.t_lb:.1f}"))
        checks.append((f"t_lb/t_lba >= {lb_ratio:g} at {r.snr_db:g} dB",
                       r.t_lb > lb_ratio * r.t_lba and r.t_lb > r.t_lba,
                       f"{r.t_lb / r.t_lba:.1f}"))
    return _report_checks(args, checks)


def cmd_cdf(args, scen):
    res = cdf_study(scen, args.inits, _outdir(args, scen))
    limit = float(scen.extra.get("cdf_spread", 0.02))
    _say(args, f"{res.values.size} runs at {res.snr_db:g} dB: min {res.values.min():.5f} "
               f"max {res.values.max():.5f}")
    if res.values.size < 2:
        return EXIT_OK
    return _report_checks(args, [(f"relative spread <= {limit:g}",
                                  res.relative_spread <= limit, f"{res.relative_spread:.4%}")])


def cmd_oracle(args, scen):
    res = oracle_study(scen, _outdir(args, scen))
    limit = float(scen.extra.get("oracle_ratio", 0.9))
    _say(args, f"visited {res.visited} partitions; oracle gain {res.oracle_gain:.6f}, "
               f"subarray design {res.algorithm1_gain:.6f}")
    return _report_checks(args, [(f"design/oracle >= {limit:g}", res.ratio >= limit,
                                  f"{res.ratio:.4f}")])


def build_parser():
    p = argparse.ArgumentParser(prog="mmhybrid", description=__doc__.split("\n")[0])
    p.add_argument("--outdir", help="override the scenario's output directory")
    p.add_argument("-q", "--quiet", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn, helptext in (("run", cmd_run, "run every mode over the SNR grid"),
                               ("oracle", cmd_oracle, "exhaustive subarray search"),
                               ("timing", cmd_timing, "time the MI estimators"),
                               ("cdf", cmd_cdf, "final objectives from random inits")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("config")
        sp.set_defaults(func=fn)
        if name == "cdf":
            sp.add_argument("--inits", type=int, default=100)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        scen = load_scenario(args.config)
        scen.fixed_angles()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if getattr(args, "inits", 1) < 1:
        print("config error: --inits must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args, scen)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
