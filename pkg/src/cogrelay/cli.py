"""Command-line entry point: ``cogrelay <command> --seed N [options]``.

Exit status: 0 on success, 2 for configuration or usage errors, 3 when the
instance is infeasible and 4 when the solver does not converge (or the
oracle comparison exceeds its tolerance).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import numpy as np

from .channel import generate_rayleigh_channels, uniform_amplification
from .config import PRESETS, load_config, parse_values
from .errors import ConfigurationError
from .experiments import AMPLIFICATION, TERMINAL_POWER, SweepSpec, oracle_compare, run_sweep
from .optimizer import CONVERGED, INFEASIBLE, kkt_residuals, subgradient_solve
from .selftest import run_selftest

EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_NOT_CONVERGED = 4
ORACLE_GAP_TOL = 1e-3


def _fmt_vec(v) -> str:
    return "[" + ", ".join(f"{x:.10g}" for x in np.atleast_1d(v)) + "]"


def _cmd_solve(args, run) -> int:
    config = run.network()
    channels = generate_rayleigh_channels(config, args.seed)
    amp = uniform_amplification(config, run.w)
    report = subgradient_solve(channels, amp, config, run.solver)
    out = sys.stdout
    out.write(f"status: {report.status}\n")
    out.write(f"rate_bps_hz: {report.rate!r}\n")
    out.write(f"p1_mw: {_fmt_vec(report.allocation.p1)}\n")
    out.write(f"p2_mw: {_fmt_vec(report.allocation.p2)}\n")
    d = report.duals
    out.write(f"lambda1: {d.lambda1:.10g}\n")
    out.write(f"lambda2: {d.lambda2:.10g}\n")
    out.write(f"lambda_r: {_fmt_vec(d.lambda_r)}\n")
    out.write(f"lambda_th1: {d.lambda_th1:.10g}\n")
    out.write(f"lambda_th2: {d.lambda_th2:.10g}\n")
    out.write(f"iterations: {report.iterations}\n")
    out.write(f"max_constraint_violation: {report.max_constraint_violation:.3e}\n")
    if report.status == INFEASIBLE:
        return EXIT_INFEASIBLE
    kkt = kkt_residuals(report, channels, amp, config)
    out.write(f"duality_gap_estimate: {report.duality_gap_estimate:.3e}\n")
    out.write(f"kkt_primal_violation: {kkt.primal_violation:.3e}\n")
    out.write(f"kkt_comp_slackness: {kkt.comp_slackness:.3e}\n")
    out.write(f"kkt_stationarity: {kkt.stationarity:.3e}\n")
    out.write(f"kkt_stationarity_rel: {kkt.stationarity_rel:.3e}\n")
    return 0 if report.status == CONVERGED else EXIT_NOT_CONVERGED


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _cmd_sweep(args, run, kind) -> int:
    values = run.values
    if not values:
        raise ConfigurationError("no sweep values: pass --values or set 'values' in the config")
    spec = SweepSpec(
        kind=kind,
        base=run.network(),
        sweep_values=values,
        uniform_w=run.w,
        trials=run.trials,
        seed=args.seed,
        options=run.solver,
    )
    result = run_sweep(spec, workers=args.workers)
    _write(args.out, result.to_csv())
    if args.out not in (None, "-"):
        meta = dict(result.metadata)
        meta["run_config"] = run.as_dict()
        with open(args.out + ".meta.json", "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True, default=str)
            fh.write("\n")
    if args.dump_trials:
        _write(args.dump_trials, result.trials_csv())
    if kind == AMPLIFICATION:
        sys.stderr.write(f"w_opt: {result.metadata['w_opt']!r}\n")
    return 0


def _cmd_oracle_compare(args, run) -> int:
    rows = oracle_compare(args.instances, args.seed, run.solver)
    gaps = np.array([r.relative_gap for r in rows])
    statuses = [r.status for r in rows]
    print(f"instances: {len(rows)}")
    print(f"converged: {statuses.count(CONVERGED)}")
    print(f"max_relative_gap: {gaps.max():.3e}")
    print(f"mean_relative_gap: {gaps.mean():.3e}")
    ok = gaps.max() <= ORACLE_GAP_TOL and all(s == CONVERGED for s in statuses)
    return 0 if ok else EXIT_NOT_CONVERGED


def _cmd_selftest(args, run) -> int:
    results = run_selftest(args.seed)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cogrelay",
        description="Power allocation for MIMO two-way cognitive relay networks.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, required=True, help="master random seed")
    common.add_argument(
        "--config",
        default="base",
        help=f"config file path or preset name ({', '.join(PRESETS)}); default: base",
    )
    common.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
        help="override one config key (repeatable)",
    )
    sweep = argparse.ArgumentParser(add_help=False)
    sweep.add_argument("--values", help="sweep values: 'a,b,c' or 'start:stop:step'")
    sweep.add_argument("--trials", type=int, help="Monte Carlo trials per sweep point")
    sweep.add_argument("--out", help="CSV output path (default: stdout)")
    sweep.add_argument("--dump-trials", metavar="PATH", help="also write per-trial rates")
    sweep.add_argument("--workers", type=int, default=1, help="worker processes (default: 1)")

    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("solve", parents=[common], help="solve one fading realization")
    p.add_argument("--w", type=float, help="uniform relay amplification factor")
    p = sub.add_parser("sweep-power", parents=[common, sweep], help="sweep terminal peak power (dBm)")
    p.add_argument("--w", type=float, help="uniform relay amplification factor")
    sub.add_parser("sweep-amp", parents=[common, sweep], help="sweep the relay amplification factor")
    p = sub.add_parser("oracle-compare", parents=[common], help="check the solver against the oracle")
    p.add_argument("--instances", type=int, default=50)
    sub.add_parser("selftest", parents=[common], help="run the built-in invariant checks")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = list(args.overrides)
    for key in ("w", "trials"):
        value = getattr(args, key, None)
        if value is not None:
            overrides.append(f"{key}={value}")
    try:
        run = load_config(args.config, overrides)
        if getattr(args, "values", None):
            run = dataclasses.replace(run, values=parse_values(args.values))
        if getattr(args, "instances", 1) < 1:
            raise ConfigurationError("--instances must be >= 1")
        if getattr(args, "workers", 1) < 1:
            raise ConfigurationError("--workers must be >= 1")
        if args.command == "solve":
            return _cmd_solve(args, run)
        if args.command == "sweep-power":
            return _cmd_sweep(args, run, TERMINAL_POWER)
        if args.command == "sweep-amp":
            return _cmd_sweep(args, run, AMPLIFICATION)
        if args.command == "oracle-compare":
            return _cmd_oracle_compare(args, run)
        return _cmd_selftest(args, run)
    except ConfigurationError as exc:
        print(f"cogrelay: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
