"""Robust joint TBS/satellite beamforming.

The lifted problem minimises weighted transmit power subject to worst-case
rate constraints for every near-shore user (served by the TBS, interfered
by the satellite) and every off-shore user (served by the satellite).  Each
worst-case constraint over a channel-error ball becomes one LMI through the
S-procedure.  The rank-one requirement is handled by a penalty on
``tr(X) - lambda_max(X)`` linearised at the previous iterate.

Internally the matrices are scaled so that both transmitters work in units
of their first user's noise-limited reference power ``sigma^2/||h||^2``.
TBS and satellite powers differ by several orders of magnitude, and without
this the solver cannot resolve the satellite beams.  All inputs and outputs
are physical (watts, physical channels).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import conic
from .channel_model import BeamSet, ChannelSet, rate
from .conic import (Congruence, LinearConstraint, LinearForm, LMIBlock, MatrixVariable,
                    ScalarVariable)
from .csi_uncertainty import UncertaintyModel


class InfeasibleError(RuntimeError):
    """QoS cannot be met; ``constraint_class`` names the binding group.

    One of ``power_cap``, ``qos_near`` or ``qos_off``.
    """

    def __init__(self, constraint_class, message=""):
        self.constraint_class = constraint_class
        super().__init__(message or f"infeasible ({constraint_class})")


@dataclass(frozen=True)
class QosSpec:
    """Rate targets, objective weights and power caps (watts).

    ``weight_units='normalized'`` applies the weights to powers measured in
    each transmitter's reference unit; ``'physical'`` applies them to watts
    (rescaled so the largest effective weight is 1).
    """

    rate_near: float | np.ndarray = 0.1
    rate_off: float | np.ndarray = 0.1
    weight_near: np.ndarray | None = None
    weight_off: np.ndarray | None = None
    tbs_power_cap: float = 50.0
    sat_per_antenna_cap: float = 1.0
    weight_units: str = "normalized"

    def __post_init__(self):
        if np.any(np.asarray(self.rate_near) < 0) or np.any(np.asarray(self.rate_off) < 0):
            raise ValueError("required rates must be non-negative")
        if not (self.tbs_power_cap > 0 and self.sat_per_antenna_cap > 0):
            raise ValueError("power caps must be positive")
        for w in (self.weight_near, self.weight_off):
            if w is not None and np.any(np.asarray(w) <= 0):
                raise ValueError("weights must be positive")
        if self.weight_units not in ("normalized", "physical"):
            raise ValueError("weight_units must be 'normalized' or 'physical'")

    def targets(self, n_near, n_off):
        """Per-user SINR targets ``2^gamma - 1``."""
        g1 = np.broadcast_to(np.asarray(self.rate_near, dtype=float), (n_near,))
        g2 = np.broadcast_to(np.asarray(self.rate_off, dtype=float), (n_off,))
        return 2.0 ** g1 - 1.0, 2.0 ** g2 - 1.0

    def weights(self, n_near, n_off):
        w1 = np.ones(n_near) if self.weight_near is None else np.broadcast_to(
            np.asarray(self.weight_near, dtype=float), (n_near,))
        w2 = np.ones(n_off) if self.weight_off is None else np.broadcast_to(
            np.asarray(self.weight_off, dtype=float), (n_off,))
        return np.array(w1, dtype=float), np.array(w2, dtype=float)


@dataclass(frozen=True)
class PenaltyConfig:
    initial_penalty: float = 1.0
    penalty_increment: float = 5.0
    max_iterations: int = 50
    rank_gap_tol: float = 1e-3
    objective_rel_tol: float = 1e-4

    def __post_init__(self):
        for name in ("initial_penalty", "penalty_increment", "max_iterations",
                     "rank_gap_tol", "objective_rel_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class RobustSolution:
    lifted_tbs: np.ndarray
    lifted_sat: np.ndarray
    beams: BeamSet
    rank_gaps_tbs: np.ndarray
    rank_gaps_sat: np.ndarray
    tbs_power: float
    sat_power: float
    slack_near: np.ndarray
    slack_off: np.ndarray
    rank_one_certified: bool = True

    @property
    def total_power(self):
        return self.tbs_power + self.sat_power

    @property
    def max_rank_gap(self):
        gaps = np.concatenate([self.rank_gaps_tbs, self.rank_gaps_sat])
        return float(gaps.max()) if gaps.size else 0.0

    @property
    def sat_antenna_powers(self):
        v = self.beams.sat_beams
        return np.sum(np.abs(v) ** 2, axis=0) if v.size else np.zeros(0)


@dataclass
class SolveReport:
    """Per-iteration history; index 0 is the SDR starting point.

    ``objectives`` holds the penalised objective in reference units with the
    true ``lambda_max``, evaluated at the penalty factor of the solve that
    produced the iterate (the first solve's factor for the SDR point).
    ``powers_w`` is the
    physical total transmit power of each iterate.
    """

    objectives: list = field(default_factory=list)
    powers_w: list = field(default_factory=list)
    penalties: list = field(default_factory=list)
    max_rank_gaps: list = field(default_factory=list)
    statuses: list = field(default_factory=list)
    termination: str = ""
    sdr_fallback: bool = False
    solve_time: float = 0.0

    @property
    def iterations(self):
        return max(len(self.objectives) - 1, 0)


def rank_gap(x):
    """``1 - lambda_max / tr`` clipped to [0, 1]; zero for the zero matrix."""
    lam = np.linalg.eigvalsh((x + x.conj().T) / 2)
    tr = lam.sum()
    if tr <= 1e-300:
        return 0.0
    return float(np.clip(1.0 - lam[-1] / tr, 0.0, 1.0))


def top_eigvec(x):
    lam, vec = np.linalg.eigh((x + x.conj().T) / 2)
    return max(lam[-1], 0.0), vec[:, -1]


def extract_beam(x):
    """``sqrt(lambda_max) e_max``."""
    lam, e = top_eigvec(x)
    return np.sqrt(lam) * e


# ---------------------------------------------------------------------------
# LMI blocks


def _near_block(i, g, q, gamma_p, radius, noise, aggregate=False, n_sat=0, row_scale=1.0):
    """Near-shore S-procedure block.

    ``g`` (K1, M1) and ``q`` (K1, M2) enter through ``T X T^H`` congruences;
    the constant carries ``-gamma' noise`` and the slack the
    ``diag(I, -r^2)`` term.  With ``aggregate`` the interference goes through
    the sum variables ``SW = sum_j W_j`` and ``SV = sum_m V_m``, which keeps
    every block down to three matrix variables; otherwise ``n_sat`` satellite
    matrices appear individually.  ``n_sat = 0`` drops the satellite terms.  ``row_scale`` applies the congruence
    ``diag(I, c)`` (PSD-ness is unchanged) to balance the block's entries.
    """
    k1, m1 = g.shape
    n = m1 + 1
    c = row_scale
    t = np.vstack([np.eye(m1), c * g[i].conj()[None, :]])
    last = np.zeros((n, q.shape[1]), dtype=complex)
    if q.size:
        last[-1] = c * q[i].conj()
    if aggregate:
        terms = [Congruence(f"W{i}", t, 1.0 + gamma_p), Congruence("SW", t, -gamma_p)]
        if q.size and n_sat:
            terms.append(Congruence("SV", last, -gamma_p))
    else:
        terms = [Congruence(f"W{i}", t, 1.0)]
        terms += [Congruence(f"W{j}", t, -gamma_p) for j in range(k1) if j != i]
        if q.size:
            terms += [Congruence(f"V{m}", last, -gamma_p) for m in range(n_sat)]
    const = np.zeros((n, n), dtype=complex)
    const[-1, -1] = -gamma_p * noise * c ** 2
    s = np.eye(n, dtype=complex)
    s[-1, -1] = -(c * radius) ** 2
    return LMIBlock(const, tuple(terms), ((f"lam_near{i}", s),), name=f"near{i}")


def _off_block(m, g, gamma_p, radius, noise, aggregate=False, row_scale=1.0):
    """Off-shore analogue of :func:`_near_block` (noise-only constant)."""
    k2, m2 = g.shape
    n = m2 + 1
    c = row_scale
    t = np.vstack([np.eye(m2), c * g[m].conj()[None, :]])
    if aggregate:
        terms = [Congruence(f"V{m}", t, 1.0 + gamma_p), Congruence("SV", t, -gamma_p)]
    else:
        terms = [Congruence(f"V{m}", t, 1.0)]
        terms += [Congruence(f"V{k}", t, -gamma_p) for k in range(k2) if k != m]
    const = np.zeros((n, n), dtype=complex)
    const[-1, -1] = -gamma_p * noise * c ** 2
    s = np.eye(n, dtype=complex)
    s[-1, -1] = -(c * radius) ** 2
    return LMIBlock(const, tuple(terms), ((f"lam_off{m}", s),), name=f"off{m}")


def _as_dict(prefix, mats):
    return {f"{prefix}{k}": np.asarray(x) for k, x in enumerate(mats)}


def lmi_near(i, lifted_tbs, lifted_sat, ch: ChannelSet, rate_near, radius, slack):
    """Numeric value of near-shore user ``i``'s S-procedure block (physical units).

    PSD iff ``(h+e)^H N (h+e) >= gamma' c`` holds for every ``||e|| <= radius``
    with the given multiplier; ``N = W_i - gamma' sum_{j != i} W_j`` and
    ``c = sum_m f_i^H V_m f_i + sigma_i^2``.
    """
    lifted_tbs = np.asarray(lifted_tbs)
    if lifted_tbs.shape[1:] != (ch.tbs_antennas, ch.tbs_antennas) or len(lifted_tbs) != ch.n_near:
        raise ValueError("lifted TBS matrices do not match the channel set")
    gamma_p = 2.0 ** rate_near - 1.0
    blk = _near_block(i, ch.tbs_to_near, ch.sat_to_near if ch.n_off else np.zeros((ch.n_near, 0)),
                      gamma_p, radius, ch.noise_var_near[i], n_sat=ch.n_off)
    mats = {**_as_dict("W", lifted_tbs), **_as_dict("V", lifted_sat)}
    return blk.evaluate(mats, {f"lam_near{i}": slack})


def lmi_off(m, lifted_sat, ch: ChannelSet, rate_off, radius, slack):
    """Numeric value of off-shore user ``m``'s S-procedure block (physical units)."""
    lifted_sat = np.asarray(lifted_sat)
    if lifted_sat.shape[1:] != (ch.sat_antennas, ch.sat_antennas) or len(lifted_sat) != ch.n_off:
        raise ValueError("lifted satellite matrices do not match the channel set")
    gamma_p = 2.0 ** rate_off - 1.0
    blk = _off_block(m, ch.sat_to_off, gamma_p, radius, ch.noise_var_off[m])
    return blk.evaluate(_as_dict("V", lifted_sat), {f"lam_off{m}": slack})


# ---------------------------------------------------------------------------
# formulation


def _inv_norm(v):
    nrm = np.linalg.norm(v)
    return 1.0 / nrm if nrm > 0 else 1.0


def _reference_power(channels, noise):
    """``sigma^2/||h||^2`` of the first user with a nonzero channel."""
    for h, s in zip(channels, noise):
        nrm = np.vdot(h, h).real
        if nrm > 0:
            return s / nrm
    return 1.0


class _Formulation:
    """The lifted program in reference units, compiled once per scenario."""

    def __init__(self, ch: ChannelSet, qos: QosSpec, uncertainty=None, include_near=True,
                 include_off=True, include_caps=True):
        self.ch = ch
        k1, k2 = ch.n_near, ch.n_off
        m1, m2 = ch.tbs_antennas, ch.sat_antennas
        self.s1 = _reference_power(ch.tbs_to_near, ch.noise_var_near)
        self.s2 = _reference_power(ch.sat_to_off, ch.noise_var_off)
        g1p, g2p = qos.targets(k1, k2)
        r1, r2 = (uncertainty or UncertaintyModel()).radii(k1, k2)
        a1, a2 = qos.weights(k1, k2)
        if qos.weight_units == "physical":
            a1, a2 = a1 * self.s1, a2 * self.s2
            top = max(a1.max(initial=0.0), a2.max(initial=0.0))
            a1, a2 = a1 / top, a2 / top
        self.a1, self.a2 = a1, a2

        sig1 = np.sqrt(ch.noise_var_near)[:, None]
        sig2 = np.sqrt(ch.noise_var_off)[:, None]
        g1 = ch.tbs_to_near * np.sqrt(self.s1) / sig1 if k1 else ch.tbs_to_near
        q1 = ch.sat_to_near * np.sqrt(self.s2) / sig1 if k1 else ch.sat_to_near
        g2 = ch.sat_to_off * np.sqrt(self.s2) / sig2 if k2 else ch.sat_to_off
        rr1 = r1 * np.sqrt(self.s1) / np.sqrt(ch.noise_var_near) if k1 else r1
        rr2 = r2 * np.sqrt(self.s2) / np.sqrt(ch.noise_var_off) if k2 else r2
        if not k2:
            q1 = np.zeros((k1, 0), dtype=complex)

        # a zero rate target makes the user's optimal beam zero, so it gets no variable
        act1 = [i for i in range(k1) if g1p[i] > 0]
        act2 = [m for m in range(k2) if g2p[m] > 0]
        self.weight = {f"W{i}": a1[i] for i in act1}
        self.weight.update({f"V{m}": a2[m] for m in act2})
        mvars = [MatrixVariable(f"W{i}", m1) for i in act1]
        mvars += [MatrixVariable(f"V{m}", m2) for m in act2]
        svars, blocks, lins = [], [], []
        self.near_slacks, self.off_slacks = {}, {}
        if include_near:
            for i in act1:
                if rr1[i] > 0:
                    name = f"lam_near{i}"
                    svars.append(ScalarVariable(name))
                    self.near_slacks[i] = name
                    blocks.append(_near_block(i, g1, q1, g1p[i], rr1[i], 1.0, aggregate=True,
                                              row_scale=_inv_norm(g1[i]), n_sat=len(act2)))
                else:
                    gg = np.outer(g1[i], g1[i].conj())
                    terms = [(f"W{i}", gg)] + [(f"W{j}", -g1p[i] * gg) for j in act1 if j != i]
                    if act2:
                        qq = np.outer(q1[i], q1[i].conj())
                        terms += [(f"V{m}", -g1p[i] * qq) for m in act2]
                    lins.append(LinearConstraint(LinearForm(tuple(terms)), ">=", g1p[i], f"near{i}"))
        if include_off:
            for m in act2:
                if rr2[m] > 0:
                    name = f"lam_off{m}"
                    svars.append(ScalarVariable(name))
                    self.off_slacks[m] = name
                    blocks.append(_off_block(m, g2, g2p[m], rr2[m], 1.0, aggregate=True,
                                             row_scale=_inv_norm(g2[m])))
                else:
                    gg = np.outer(g2[m], g2[m].conj())
                    terms = [(f"V{m}", gg)] + [(f"V{k}", -g2p[m] * gg) for k in act2 if k != m]
                    lins.append(LinearConstraint(LinearForm(tuple(terms)), ">=", g2p[m], f"off{m}"))
        if include_caps:
            if act1:
                # caps are written as fractions of the cap to keep rows well scaled
                eye = np.eye(m1) * (self.s1 / qos.tbs_power_cap)
                lins.append(LinearConstraint(
                    LinearForm(tuple((f"W{i}", eye) for i in act1)), "<=", 1.0, "tbs_power"))
            if act2:
                for k in range(m2):
                    e = np.zeros((m2, m2))
                    e[k, k] = self.s2 / qos.sat_per_antenna_cap
                    lins.append(LinearConstraint(
                        LinearForm(tuple((f"V{m}", e) for m in act2)), "<=", 1.0,
                        f"sat_antenna{k}"))
        self.names = [v.name for v in mvars]
        used = {t.var for b in blocks for t in b.congruences}
        if "SW" in used:
            mvars.append(MatrixVariable("SW", m1, hermitian_psd=False))
            lins += conic.matrix_equality("SW", [f"W{i}" for i in act1], m1)
        if "SV" in used:
            mvars.append(MatrixVariable("SV", m2, hermitian_psd=False))
            lins += conic.matrix_equality("SV", [f"V{m}" for m in act2], m2)
        self.program = conic.assemble(mvars, svars, None, blocks, lins)
        self.compiled = conic.compile_program(self.program) if mvars else None

    def objective(self, penalty=0.0, directions=None):
        terms = []
        for var in self.program.matrix_variables[:len(self.names)]:
            c = self.weight[var.name] * np.eye(var.dim, dtype=complex)
            if penalty and directions is not None:
                e = directions[var.name]
                c = c + penalty * (np.eye(var.dim) - np.outer(e, e.conj()))
            terms.append((var.name, c))
        return LinearForm(tuple(terms))

    def weighted_trace(self, mats):
        return sum(self.weight[n] * np.trace(mats[n]).real for n in self.names)

    def rank_penalty(self, mats):
        total = 0.0
        for name in self.names:
            x = mats[name]
            lam = np.linalg.eigvalsh((x + x.conj().T) / 2)
            total += lam.sum() - lam[-1]
        return total

    def solve(self, objective, tolerance, adapter):
        return conic.solve(self.program.with_objective(objective), tolerance=tolerance,
                           adapter=adapter, compiled=self.compiled)

    def physical(self, mats):
        k1, k2 = self.ch.n_near, self.ch.n_off
        m1, m2 = self.ch.tbs_antennas, self.ch.sat_antennas
        w = np.zeros((k1, m1, m1), dtype=complex)
        v = np.zeros((k2, m2, m2), dtype=complex)
        for i in range(k1):
            if f"W{i}" in mats:
                w[i] = mats[f"W{i}"] * self.s1
        for m in range(k2):
            if f"V{m}" in mats:
                v[m] = mats[f"V{m}"] * self.s2
        return w, v

    def slacks(self, scalars):
        k1, k2 = self.ch.n_near, self.ch.n_off
        lam1 = np.array([scalars.get(self.near_slacks.get(i), 0.0) * self.s1 for i in range(k1)])
        lam2 = np.array([scalars.get(self.off_slacks.get(m), 0.0) * self.s2 for m in range(k2)])
        return lam1, lam2


def _classify_infeasibility(ch, qos, uncertainty, tolerance, adapter):
    relaxed = _Formulation(ch, qos, uncertainty, include_caps=False)
    sol = relaxed.solve(relaxed.objective(), tolerance, adapter)
    if sol.status == conic.OPTIMAL:
        return "power_cap"
    off_only = _Formulation(ch, qos, uncertainty, include_near=False)
    sol = off_only.solve(off_only.objective(), tolerance, adapter)
    if sol.status == conic.INFEASIBLE:
        return "qos_off"
    return "qos_near"


def _sdr(form: _Formulation, ch, qos, uncertainty, tolerance, adapter):
    sol = form.solve(form.objective(), tolerance, adapter)
    if sol.status == conic.INFEASIBLE:
        cls = _classify_infeasibility(ch, qos, uncertainty, tolerance, adapter)
        raise InfeasibleError(cls, f"QoS targets cannot be met; binding constraint class: {cls}")
    if sol.status != conic.OPTIMAL:
        m1, m2 = ch.tbs_antennas, ch.sat_antennas
        w_names = [n for n in form.names if n[0] == "W"]
        v_names = [n for n in form.names if n[0] == "V"]
        mats = {n: np.eye(m1) * qos.tbs_power_cap / (len(w_names) * m1) / form.s1 for n in w_names}
        mats.update({n: np.eye(m2) * qos.sat_per_antenna_cap / len(v_names) / form.s2 for n in v_names})
        return mats, {}, True
    return sol.matrix_values, sol.scalar_values, False


def sdr_initialize(ch: ChannelSet, qos: QosSpec, uncertainty=None, tolerance=conic.DEFAULT_TOLERANCE,
                   adapter=None):
    """Plain semidefinite relaxation (no rank constraint).

    Returns physical ``(W, V)`` stacks of shape ``(K1, M1, M1)`` and
    ``(K2, M2, M2)``.  Raises :class:`InfeasibleError` when the QoS targets
    cannot be met.
    """
    form = _Formulation(ch, qos, uncertainty)
    if not form.names:
        return form.physical({})
    mats, _, _ = _sdr(form, ch, qos, uncertainty, tolerance, adapter)
    return form.physical(mats)


def _finish(form, mats, scalars, cfg):
    w, v = form.physical(mats)
    tbs_beams = np.array([extract_beam(x) for x in w]).reshape(len(w), form.ch.tbs_antennas)
    sat_beams = np.array([extract_beam(x) for x in v]).reshape(len(v), form.ch.sat_antennas)
    gaps1 = np.array([rank_gap(x) for x in w])
    gaps2 = np.array([rank_gap(x) for x in v])
    lam1, lam2 = form.slacks(scalars)
    beams = BeamSet(tbs_beams, sat_beams)
    worst = max(gaps1.max(initial=0.0), gaps2.max(initial=0.0))
    return RobustSolution(
        lifted_tbs=w, lifted_sat=v, beams=beams, rank_gaps_tbs=gaps1, rank_gaps_sat=gaps2,
        tbs_power=float(np.sum(np.abs(tbs_beams) ** 2)),
        sat_power=float(np.sum(np.abs(sat_beams) ** 2)),
        slack_near=lam1, slack_off=lam2, rank_one_certified=bool(worst <= cfg.rank_gap_tol))


def penalty_sca_solve(ch: ChannelSet, qos: QosSpec, uncertainty=None, cfg=None,
                      tolerance=conic.DEFAULT_TOLERANCE, adapter=None):
    """Penalty-based successive convex approximation from the SDR optimum.

    Returns ``(RobustSolution, SolveReport)``.  Raises
    :class:`InfeasibleError` if the QoS targets are infeasible.  When the
    iteration budget runs out with a rank gap above tolerance, the solution
    is returned with ``rank_one_certified=False``.
    """
    import time

    cfg = cfg or PenaltyConfig()
    t0 = time.perf_counter()
    form = _Formulation(ch, qos, uncertainty)
    report = SolveReport()
    if not form.names:
        # every target is zero: the zero beams are optimal
        report.objectives = [0.0, 0.0]
        report.powers_w = [0.0, 0.0]
        report.penalties = [cfg.initial_penalty] * 2
        report.max_rank_gaps = [0.0, 0.0]
        report.statuses = [conic.OPTIMAL, "certified"]
        report.termination = "converged"
        return _finish(form, {}, {}, cfg), report

    mats, scalars, fallback = _sdr(form, ch, qos, uncertainty, tolerance, adapter)
    report.sdr_fallback = fallback

    def gaps(m):
        return max(rank_gap(m[n]) for n in form.names)

    def physical_power(m):
        w, v = form.physical(m)
        return float(sum(np.trace(x).real for x in w) + sum(np.trace(x).real for x in v))

    # the SDR optimum bounds every penalised subproblem from below
    lower = -np.inf if fallback else form.weighted_trace(mats)
    penalty = cfg.initial_penalty
    current = form.weighted_trace(mats) + penalty * form.rank_penalty(mats)
    report.objectives.append(current)
    report.powers_w.append(physical_power(mats))
    report.penalties.append(penalty)
    report.max_rank_gaps.append(gaps(mats))
    report.statuses.append("fallback" if fallback else conic.OPTIMAL)
    report.termination = "max_iterations"

    for _ in range(cfg.max_iterations):
        # value of the linearised subproblem at the current point
        current = form.weighted_trace(mats) + penalty * form.rank_penalty(mats)
        gap = gaps(mats)
        if gap <= cfg.rank_gap_tol and current - lower <= cfg.objective_rel_tol * abs(current):
            # the current point already solves this subproblem to the objective tolerance
            status = "certified"
        else:
            directions = {n: top_eigvec(mats[n])[1] for n in form.names}
            objective = form.objective(penalty, directions)
            sol = form.solve(objective, tolerance, adapter)
            status = sol.status
            if sol.status == conic.INFEASIBLE:
                raise InfeasibleError("qos_near", "penalised subproblem became infeasible")
            if sol.status != conic.OPTIMAL:
                report.statuses.append(status)
                report.termination = "solver_failure"
                break
            if objective.evaluate(sol.matrix_values, sol.scalar_values) <= current:
                mats, scalars = sol.matrix_values, sol.scalar_values
            else:
                # inexact solve landed above the incumbent; keep the incumbent
                status = "kept_incumbent"
        obj = form.weighted_trace(mats) + penalty * form.rank_penalty(mats)
        gap = gaps(mats)
        report.objectives.append(obj)
        report.powers_w.append(physical_power(mats))
        report.penalties.append(penalty)
        report.max_rank_gaps.append(gap)
        report.statuses.append(status)
        change = abs(current - obj) / max(abs(current), 1e-300)
        if gap <= cfg.rank_gap_tol and (change <= cfg.objective_rel_tol or abs(current - obj) <= 1e-12):
            report.termination = "converged"
            break
        if gap > cfg.rank_gap_tol:
            penalty += cfg.penalty_increment

    report.solve_time = time.perf_counter() - t0
    return _finish(form, mats, scalars, cfg), report


def nonrobust_solve(ch: ChannelSet, qos: QosSpec, cfg=None, tolerance=conic.DEFAULT_TOLERANCE,
                    adapter=None):
    """Same pipeline with zero uncertainty radii."""
    return penalty_sca_solve(ch, qos, None, cfg, tolerance, adapter)


# ---------------------------------------------------------------------------
# verification


def lifted_sinr_near(i, lifted_tbs, lifted_sat, ch: ChannelSet, tbs_channel=None):
    h = ch.tbs_to_near[i] if tbs_channel is None else np.asarray(tbs_channel)
    p = np.array([np.vdot(h, x @ h).real for x in lifted_tbs])
    f = ch.sat_to_near[i]
    leak = sum(np.vdot(f, x @ f).real for x in lifted_sat)
    return p[i] / (p.sum() - p[i] + leak + ch.noise_var_near[i])


def lifted_sinr_off(m, lifted_sat, ch: ChannelSet, sat_channel=None):
    h = ch.sat_to_off[m] if sat_channel is None else np.asarray(sat_channel)
    p = np.array([np.vdot(h, x @ h).real for x in lifted_sat])
    return p[m] / (p.sum() - p[m] + ch.noise_var_off[m])


def _beam_sinr_near(i, beams, ch, h):
    gains = np.abs(beams.tbs_beams.conj() @ h) ** 2
    leak = np.sum(np.abs(beams.sat_beams.conj() @ ch.sat_to_near[i]) ** 2) if ch.n_off else 0.0
    return gains[i] / (gains.sum() - gains[i] + leak + ch.noise_var_near[i])


def _beam_sinr_off(m, beams, ch, h):
    gains = np.abs(beams.sat_beams.conj() @ h) ** 2
    return gains[m] / (gains.sum() - gains[m] + ch.noise_var_off[m])


@dataclass
class WorstCaseReport:
    min_rate_near: np.ndarray
    min_rate_off: np.ndarray
    satisfied: bool


def verify_worst_case(sol: RobustSolution, ch: ChannelSet, uncertainty: UncertaintyModel | None,
                      qos: QosSpec, n_grid=41, lifted=False, tol=1e-4):
    """Minimum rate per user over a grid of angle errors (first-order model).

    The grid spans ``[-eps, eps]`` and includes both end points.  With
    ``lifted=True`` rates are computed from the lifted matrices rather than
    the extracted beams.
    """
    unc = uncertainty or UncertaintyModel()
    g1 = np.linspace(-unc.angle_bound_tbs, unc.angle_bound_tbs, n_grid) if unc.angle_bound_tbs else [0.0]
    g2 = np.linspace(-unc.angle_bound_sat, unc.angle_bound_sat, n_grid) if unc.angle_bound_sat else [0.0]
    n1 = unc.sensitivity_near if unc.sensitivity_near.size else np.zeros_like(ch.tbs_to_near)
    n2 = unc.sensitivity_off if unc.sensitivity_off.size else np.zeros_like(ch.sat_to_off)
    near = np.empty(ch.n_near)
    for i in range(ch.n_near):
        vals = []
        for d in g1:
            h = ch.tbs_to_near[i] + n1[i] * d
            s = lifted_sinr_near(i, sol.lifted_tbs, sol.lifted_sat, ch, h) if lifted \
                else _beam_sinr_near(i, sol.beams, ch, h)
            vals.append(s)
        near[i] = rate(max(min(vals), 0.0))
    off = np.empty(ch.n_off)
    for m in range(ch.n_off):
        vals = []
        for d in g2:
            h = ch.sat_to_off[m] + n2[m] * d
            s = lifted_sinr_off(m, sol.lifted_sat, ch, h) if lifted else _beam_sinr_off(m, sol.beams, ch, h)
            vals.append(s)
        off[m] = rate(max(min(vals), 0.0))
    r1 = np.broadcast_to(np.asarray(qos.rate_near, dtype=float), (ch.n_near,))
    r2 = np.broadcast_to(np.asarray(qos.rate_off, dtype=float), (ch.n_off,))
    ok = bool(np.all(near >= r1 - tol) and np.all(off >= r2 - tol))
    return WorstCaseReport(near, off, ok)


def sample_ball_boundary(rng, radius, dim, n):
    """``n`` complex vectors uniformly on the sphere ``||e|| = radius``."""
    z = rng.standard_normal((n, dim)) + 1j * rng.standard_normal((n, dim))
    return radius * z / np.linalg.norm(z, axis=1, keepdims=True)


def sampled_worst_case(sol: RobustSolution, ch: ChannelSet, radius_near, radius_off, rng,
                       n_samples=1000, lifted=True):
    """Minimum rate per user over random errors on the channel-ball boundary."""
    near = np.empty(ch.n_near)
    for i in range(ch.n_near):
        errs = sample_ball_boundary(rng, radius_near[i], ch.tbs_antennas, n_samples)
        vals = [lifted_sinr_near(i, sol.lifted_tbs, sol.lifted_sat, ch, ch.tbs_to_near[i] + e) if lifted
                else _beam_sinr_near(i, sol.beams, ch, ch.tbs_to_near[i] + e) for e in errs]
        near[i] = rate(max(min(vals), 0.0))
    off = np.empty(ch.n_off)
    for m in range(ch.n_off):
        errs = sample_ball_boundary(rng, radius_off[m], ch.sat_antennas, n_samples)
        vals = [lifted_sinr_off(m, sol.lifted_sat, ch, ch.sat_to_off[m] + e) if lifted
                else _beam_sinr_off(m, sol.beams, ch, ch.sat_to_off[m] + e) for e in errs]
        off[m] = rate(max(min(vals), 0.0))
    return near, off


# ---------------------------------------------------------------------------
# complexity


@dataclass(frozen=True)
class ComplexityEstimate:
    """Interior-point cost estimate of one penalised subproblem.

    ``bracket_*`` are the integer cost polynomials ``n * {...}`` (matrix
    formation plus factorisation); ``c1`` and ``c2`` multiply them by
    ``sqrt(2 K1 (M1 + 1))`` and ``sqrt(K2 (2 M2 + 3))`` respectively and by
    ``ln(1/eta)``. ``beta_*`` are the full barrier parameters.
    """

    n1: int
    n2: int
    beta1: int
    beta2: int
    bracket_near: int
    bracket_off: int
    c1: float
    c2: float

    @property
    def total(self):
        return self.c1 + self.c2


def complexity_estimate(k1, m1, k2, m2, eta=0.1):
    for v in (k1, m1, k2, m2):
        if int(v) != v or v < 1:
            raise ValueError("user and antenna counts must be positive integers")
    if not 0 < eta < 1:
        raise ValueError("eta must lie in (0, 1)")
    k1, m1, k2, m2 = int(k1), int(m1), int(k2), int(m2)
    n1 = k1 * m1 ** 2
    n2 = k2 * m2 ** 2
    beta1 = k1 * (m1 + 1) + k1 * m1 + k1 + 1
    beta2 = k2 * (m2 + 1) + k2 * m2 + 2 * k2
    b1 = n1 * (k1 * ((m1 + 1) ** 3 + m1 ** 3 + 1) + k1 * n1 * ((m1 + 1) ** 2 + m1 ** 2 + 1) + n1 ** 2)
    b2 = n2 * (k2 * ((m2 + 1) ** 3 + m2 ** 3 + 2) + k2 * n2 * ((m2 + 1) ** 2 + m2 ** 2 + 2) + n2 ** 2)
    log = math.log(1.0 / eta)
    c1 = math.sqrt(2 * k1 * (m1 + 1)) * b1 * log
    c2 = math.sqrt(k2 * (2 * m2 + 3)) * b2 * log
    return ComplexityEstimate(n1, n2, beta1, beta2, b1, b2, c1, c2)
