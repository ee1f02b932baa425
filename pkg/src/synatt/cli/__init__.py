"""Command-line front end.

Subcommands: simulate (run a built-in or file scenario, write traces and
plots), verify (seeded invariant suites), critpoints (list the constructed
critical points of the warped family), sweep (parameter studies over
delta_h, k, or n_max). Exit codes: 0 success, 1 verification failure,
2 usage error, 3 simulation abort.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from ..hybrid_sim import SimulationAbort, run
from .scenarios import (
    STUDY_A,
    STUDY_K,
    STUDY_U,
    SpfParams,
    builtin_scenarios,
    load_scenario,
)
from .tracefile import read_trace, write_trace
from .verify import format_report, run_suite

__all__ = ["main", "build_parser", "read_trace", "write_trace"]


def _parse_vec(text: str, n: int, name: str) -> tuple:
    parts = tuple(float(p) for p in text.split(","))
    if len(parts) != n:
        raise ValueError(f"{name} needs {n} comma-separated values")
    return parts


def cmd_simulate(args) -> int:
    spec = load_scenario(args.scenario)
    seed = spec.seed if args.seed is None else args.seed
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    traces = {}
    for leg in spec.legs:
        scenario = leg.build(seed, step=args.step, t_max=args.tmax)
        trace = run(scenario)
        traces[leg.label] = trace
        path = write_trace(out / f"{spec.name}_{leg.label}.csv", trace,
                           extra_meta={"scenario": spec.name})
        sup_tau = float(np.max(np.linalg.norm(trace.tau, axis=1)))
        print(f"{spec.name}/{leg.label}: {len(trace)} samples, "
              f"{len(trace.jumps)} jumps, final eta {trace.eta[-1]:+.6f}, "
              f"sup |tau| {sup_tau:.3e}, ended on {trace.termination} -> {path}")

    from .plots import write_plots

    for p in write_plots(out, spec.name, traces):
        print(f"wrote {p}")
    return 0


def cmd_verify(args) -> int:
    results = run_suite(args.suite)
    print(format_report(results))
    return 0 if all(r.passed for r in results) else 1


def cmd_critpoints(args) -> int:
    params = SpfParams(
        A_diag=_parse_vec(args.A, 3, "--A") if args.A else STUDY_A,
        u=_parse_vec(args.u, 3, "--u") if args.u else STUDY_U,
        k=args.k if args.k is not None else STUDY_K,
    )
    family = params.build("csh")
    pts = family.critical_points()  # raises DegenerateSpectrumError on repeats
    bounds = family.gap_bounds()

    print(f"A = diag{params.A_diag}, u = {tuple(round(x, 12) for x in params.u)}, "
          f"k = {params.k}")
    print(f"certified gap bound delta = {bounds.certified:.12g}"
          + (f", closed form {bounds.closed_form:.12g}" if bounds.closed_form else ""))
    print(f"{'kind':>9} {'q':>2} {'theta*':>12} {'U':>12} {'gap':>12}  Q")
    for cp in pts:
        val = float(family.value(cp.Q, cp.q))
        gap = float(family.synergy_gap(cp.Q, cp.q))
        kind = "desired" if cp.desired else f"undes[{cp.eigen_index}]"
        comps = ", ".join(f"{x:+.6f}" for x in np.asarray(cp.Q))
        print(f"{kind:>9} {cp.q:>2} {cp.theta:>12.8f} {val:>12.8f} {gap:>12.8f}  [{comps}]")
    return 0


def _sweep_legs(spec, param: str, value: float):
    legs = []
    for leg in spec.legs:
        if param == "delta_h":
            legs.append(replace(leg, delta_h=value, experiment_mode=True))
        elif param == "k":
            legs.append(replace(leg, spf=replace(leg.spf, k=value)))
        elif param == "n_max":
            legs.append(replace(leg, measurement="gaussian", n_max=value))
        else:
            raise ValueError(f"unknown sweep parameter {param!r}")
    return legs


def cmd_sweep(args) -> int:
    values = [float(v) for v in args.values.split(",") if v.strip()]
    if not values:
        raise ValueError("empty sweep range")
    default = {"delta_h": "sim1", "k": "sim1", "n_max": "sim3"}[args.param]
    spec = load_scenario(args.scenario or default)
    seed = spec.seed if args.seed is None else args.seed

    print(f"sweep {args.param} over {values} on {spec.name} (seed {seed})")
    print(f"{args.param:>10} {'leg':>14} {'jumps':>6} {'converged':>10} "
          f"{'settle[s]':>10} {'sup|tau|':>11}")
    for value in values:
        try:
            legs = _sweep_legs(spec, args.param, value)
            runs = [(leg, run(leg.build(seed))) for leg in legs]
        except ValueError as e:
            print(f"{value:>10.4g} {'-':>14} {'-':>6} {'invalid':>10} - ({e})")
            continue
        for leg, trace in runs:
            close = np.abs(trace.eta) > 0.99
            converged = bool(close[-1])
            settle = float("inf")
            if converged:
                bad = np.nonzero(~close)[0]
                settle = 0.0 if len(bad) == 0 else float(trace.t[bad[-1] + 1])
            sup_tau = float(np.max(np.linalg.norm(trace.tau, axis=1)))
            print(f"{value:>10.4g} {leg.label:>14} {len(trace.jumps):>6} "
                  f"{str(converged):>10} {settle:>10.3f} {sup_tau:>11.3e}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="synatt",
        description="Quaternion attitude stabilization with synergistic "
                    "switching potentials: simulator and verification suites.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scenario, write traces and plots")
    p.add_argument("scenario",
                   help=f"built-in name ({', '.join(sorted(builtin_scenarios()))}) "
                        "or a key=value scenario file")
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("--step", type=float, default=None, help="override the RK4 step")
    p.add_argument("--tmax", type=float, default=None, help="override the horizon")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run a seeded verification suite")
    p.add_argument("suite", choices=["algebra", "gradients", "consistency",
                                     "critpoints", "gap", "lyapunov", "all"])
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("critpoints", help="list critical points of the warped family")
    p.add_argument("--k", type=float, default=None, help="warp gain")
    p.add_argument("--A", default=None, help="potential diagonal a,b,c")
    p.add_argument("--u", default=None, help="warp axis x,y,z (normalized)")
    p.set_defaults(func=cmd_critpoints)

    p = sub.add_parser("sweep", help="tabulate runs across a parameter range")
    p.add_argument("param", choices=["delta_h", "k", "n_max"])
    p.add_argument("values", help="comma-separated values")
    p.add_argument("--scenario", default=None,
                   help="scenario to sweep (default depends on param)")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SimulationAbort as e:
        print(f"simulation aborted: {e}", file=sys.stderr)
        return 3
    except (KeyError, ValueError, OSError) as e:
        msg = e.args[0] if e.args else e
        print(f"error: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
