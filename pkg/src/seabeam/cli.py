"""Command-line entry point: ``seabeam {solve,converge,sweep,outage,complexity}``.

Exit codes: 0 on success, 2 when the scenario is infeasible, 1 on usage or
configuration errors.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import experiments as ex
from .beamformer import InfeasibleError, complexity_estimate
from .config import ConfigError, load
from .link_budget import watts_to_dbm
from .scenario import build_scenario

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default="default",
                        help="JSON config file, or 'default' for the built-in scenario")
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument("--out", default="results", help="output directory for CSV files")
    common.add_argument("--gnuplot", action="store_true", help="also write a gnuplot script")

    p = _Parser(prog="seabeam", description="Robust maritime satellite-terrestrial beamforming.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    s = sub.add_parser("solve", parents=[common], help="solve one channel realisation")
    s.add_argument("--trial", type=int, default=0)
    s.add_argument("--nonrobust", action="store_true", help="ignore CSI errors")
    c = sub.add_parser("converge", parents=[common], help="write the SCA convergence trace")
    c.add_argument("--trial", type=int, default=0)
    sub.add_parser("sweep", parents=[common], help="average power over a parameter sweep")
    o = sub.add_parser("outage", parents=[common], help="robust vs non-robust outage")
    o.add_argument("--exact-channel", action="store_true",
                   help="perturb the steering angle exactly instead of to first order")
    k = sub.add_parser("complexity", parents=[common], help="print the per-iteration cost estimate")
    k.add_argument("--eta", type=float, default=0.1, help="interior-point accuracy")
    return p


def _fmt_power(w):
    return f"{w:.6e} W ({watts_to_dbm(w):.3f} dBm)" if w > 0 else "0 W"


def _solve(cfg, args, out):
    sc = build_scenario(cfg, args.trial)
    sol, rep = ex.solve_scenario(sc, robust=not args.nonrobust)
    print(f"total power:      {_fmt_power(sol.total_power)}")
    print(f"  TBS:            {_fmt_power(sol.tbs_power)}")
    print(f"  satellite:      {_fmt_power(sol.sat_power)}")
    print(f"iterations:       {rep.iterations} ({rep.termination})")
    print(f"max rank gap:     {sol.max_rank_gap:.3e}")
    return EXIT_OK


def _converge(cfg, args, out):
    res = ex.run_convergence(cfg, args.trial)
    path = ex.write_csv(out / "convergence.csv", ex.CONVERGENCE_COLUMNS, res.rows, res.metadata)
    if args.gnuplot:
        ex.write_gnuplot(out / "convergence.gp", path.name, "iteration", "total power [W]",
                         x_col=1, y_col=2, logscale_y=False)
    print(f"wrote {path}")
    if str(res.metadata.get("status", "")).startswith("infeasible"):
        print(f"scenario {res.metadata['status']}", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def _sweep(cfg, args, out):
    results = ex.run_sweep(cfg)
    meta = {"seed": cfg.seed, "trials": cfg.trials, "channel_model": cfg.channel_model}
    path = ex.write_csv(out / f"sweep_{cfg.sweep_axis}.csv", ex.SWEEP_COLUMNS,
                        [r.row() for r in results], meta)
    if args.gnuplot:
        ex.write_gnuplot(out / f"sweep_{cfg.sweep_axis}.gp", path.name, cfg.sweep_axis,
                         "mean total power [W]")
    print(f"wrote {path}")
    return EXIT_OK


def _outage(cfg, args, out):
    model = "exact" if args.exact_channel else cfg.channel_model
    results = ex.run_outage(cfg, model)
    meta = {"seed": cfg.seed, "channel_model": model}
    path = ex.write_csv(out / "outage.csv", ex.OUTAGE_COLUMNS, [r.row() for r in results], meta)
    for r in results:
        print(f"{r.algorithm:>9}: outage {r.outage_prob:.4f} over {r.trials} trials"
              + (f" ({r.failures} failed)" if r.failures else ""))
    print(f"wrote {path}")
    return EXIT_OK


def _complexity(cfg, args, out):
    est = complexity_estimate(cfg.users_near, cfg.antennas_tbs, cfg.users_off, cfg.antennas_sat,
                              args.eta)
    print(f"c1 (TBS subproblem):       {est.c1:.6e}")
    print(f"c2 (satellite subproblem): {est.c2:.6e}")
    print(f"total:                     {est.total:.6e}")
    return EXIT_OK


COMMANDS = {"solve": _solve, "converge": _converge, "sweep": _sweep, "outage": _outage,
            "complexity": _complexity}


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except UsageError as exc:
        print(f"seabeam: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        cfg = load(args.config)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        return COMMANDS[args.command](cfg, args, Path(args.out))
    except (FileNotFoundError, ConfigError, ValueError) as exc:
        print(f"seabeam: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InfeasibleError as exc:
        print(f"seabeam: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
