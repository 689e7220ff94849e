"""Convergence traces, parameter sweeps and outage estimation.

All randomness is derived from ``(seed, trial, link, user)`` streams, so
results do not depend on execution order and every sweep point sees the
same channel realisations (common random numbers).
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .beamformer import InfeasibleError, nonrobust_solve, penalty_sca_solve
from .channel_model import BeamSet, all_rates
from .config import ExperimentConfig
from .scenario import Scenario, build_scenario

LINK_ERRORS = 3
RATE_TOL = 1e-4

CONVERGENCE_COLUMNS = ("iteration", "objective_w", "rank_gap")
SWEEP_COLUMNS = ("axis", "value", "mean_power_w", "tbs_power_w", "sat_power_w", "mean_iters", "failures")
OUTAGE_COLUMNS = ("algorithm", "delta1", "delta2", "gamma", "trials", "outage_prob")


def solve_scenario(sc: Scenario, robust=True):
    """Run the robust (or non-robust) solver on a built scenario."""
    if robust:
        return penalty_sca_solve(sc.channels, sc.qos, sc.uncertainty, sc.penalty, sc.tolerance)
    return nonrobust_solve(sc.channels, sc.qos, sc.penalty, sc.tolerance)


@dataclass
class ConvergenceResult:
    rows: list
    metadata: dict


def run_convergence(cfg: ExperimentConfig, trial=0) -> ConvergenceResult:
    """One robust solve; rows are ``(iteration, total power [W], max rank gap)``."""
    sc = build_scenario(cfg, trial)
    meta = {"seed": cfg.seed, "trial": trial, "rate": cfg.rate_near}
    try:
        sol, rep = solve_scenario(sc)
    except InfeasibleError as exc:
        meta["status"] = f"infeasible ({exc.constraint_class})"
        return ConvergenceResult([], meta)
    meta.update(status=rep.termination, iterations=rep.iterations,
                rank_one_certified=sol.rank_one_certified)
    rows = [(t, p, g) for t, (p, g) in enumerate(zip(rep.powers_w, rep.max_rank_gaps))]
    return ConvergenceResult(rows, meta)


@dataclass
class SweepResult:
    axis: str
    value: float
    mean_power_w: float
    tbs_power_w: float
    sat_power_w: float
    mean_iters: float
    failures: int
    outage_prob: float
    seed: int
    trials: int
    powers: list = field(default_factory=list, repr=False)

    def row(self):
        return (self.axis, self.value, self.mean_power_w, self.tbs_power_w, self.sat_power_w,
                self.mean_iters, self.failures)


def _error_draw(cfg, sc: Scenario, trial):
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(trial, LINK_ERRORS, 0)))
    return (rng.uniform(-sc.uncertainty.angle_bound_tbs, sc.uncertainty.angle_bound_tbs),
            rng.uniform(-sc.uncertainty.angle_bound_sat, sc.uncertainty.angle_bound_sat))


def perturbed_rates(sc: Scenario, beams: BeamSet, d1, d2, model="first_order"):
    """Achieved rates when the TBS and satellite angles are off by ``d1``, ``d2``."""
    ch, unc = sc.channels, sc.uncertainty
    if model == "exact":
        h1 = np.array([sc.rebuild_near(i, d1) for i in range(ch.n_near)]).reshape(ch.tbs_to_near.shape)
        h2 = np.array([sc.rebuild_off(m, d2) for m in range(ch.n_off)]).reshape(ch.sat_to_off.shape)
    else:
        h1 = ch.tbs_to_near + unc.sensitivity_near * d1 if ch.n_near else ch.tbs_to_near
        h2 = ch.sat_to_off + unc.sensitivity_off * d2 if ch.n_off else ch.sat_to_off
    return all_rates(ch, beams, h1, h2)


def in_outage(sc: Scenario, beams: BeamSet, d1, d2, model="first_order"):
    r1, r2 = perturbed_rates(sc, beams, d1, d2, model)
    return bool(np.any(r1 < sc.qos.rate_near - RATE_TOL) or np.any(r2 < sc.qos.rate_off - RATE_TOL))


def run_sweep(cfg: ExperimentConfig, progress=None) -> list:
    """Average the robust solution over ``cfg.trials`` realisations per axis value."""
    results = []
    for value in cfg.sweep_values:
        point = cfg.with_axis_value(value)
        powers, tbs, sat, iters, outages = [], [], [], [], []
        failures = 0
        for trial in range(cfg.trials):
            sc = build_scenario(point, trial)
            try:
                sol, rep = solve_scenario(sc)
            except InfeasibleError:
                failures += 1
                continue
            if rep.termination == "solver_failure":
                failures += 1
                continue
            powers.append(sol.total_power)
            tbs.append(sol.tbs_power)
            sat.append(sol.sat_power)
            iters.append(rep.iterations)
            d1, d2 = _error_draw(point, sc, trial)
            outages.append(in_outage(sc, sol.beams, d1, d2, point.channel_model))
            if progress:
                progress(value, trial)
        mean = (lambda x: float(np.mean(x)) if x else float("nan"))
        results.append(SweepResult(cfg.sweep_axis, float(value), mean(powers), mean(tbs), mean(sat),
                                   mean(iters), failures, mean(outages), cfg.seed, cfg.trials, powers))
    return results


@dataclass
class OutageResult:
    algorithm: str
    delta1: float
    delta2: float
    gamma: float
    trials: int
    outage_prob: float
    failures: int = 0

    def row(self):
        return (self.algorithm, self.delta1, self.delta2, self.gamma, self.trials, self.outage_prob)


def run_outage(cfg: ExperimentConfig, model=None) -> list:
    """Outage of the robust and non-robust designs under one angle-error draw per realisation.

    Realisations where an algorithm has no solution are excluded from its
    count and reported as failures.
    """
    model = model or cfg.channel_model
    counts = {"robust": [0, 0, 0], "nonrobust": [0, 0, 0]}  # outages, evaluated, failures
    for trial in range(cfg.trials):
        sc = build_scenario(cfg, trial)
        d1, d2 = _error_draw(cfg, sc, trial)
        for name, robust in (("robust", True), ("nonrobust", False)):
            try:
                sol, rep = solve_scenario(sc, robust)
            except InfeasibleError:
                counts[name][2] += 1
                continue
            if rep.termination == "solver_failure":
                counts[name][2] += 1
                continue
            counts[name][1] += 1
            counts[name][0] += in_outage(sc, sol.beams, d1, d2, model)
    out = []
    for name, (bad, n, fails) in counts.items():
        out.append(OutageResult(name, cfg.tidal_near, cfg.tidal_off, cfg.rate_near, n,
                                bad / n if n else float("nan"), fails))
    return out


# ---------------------------------------------------------------------------
# CSV output


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def to_csv(columns, rows, metadata=None) -> str:
    buf = io.StringIO()
    for key, val in (metadata or {}).items():
        buf.write(f"# {key}: {val}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path, columns, rows, metadata=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_csv(columns, rows, metadata))
    return path


def write_gnuplot(path, csv_name, xlabel, ylabel, x_col=2, y_col=3, logscale_y=True):
    """Minimal gnuplot script plotting one CSV column against another."""
    lines = [
        "set datafile separator ','",
        "set key off",
        f"set xlabel '{xlabel}'",
        f"set ylabel '{ylabel}'",
    ]
    if logscale_y:
        lines.append("set logscale y")
    lines.append(f"plot '{csv_name}' every ::1 using {x_col}:{y_col} with linespoints")
    Path(path).write_text("\n".join(lines) + "\n")
    return path
