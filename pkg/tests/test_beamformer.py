import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import small_instance
from seabeam import (ChannelSet, InfeasibleError, PenaltyConfig, QosSpec, UncertaintyModel,
                     complexity_estimate, nonrobust_solve, penalty_sca_solve, sdr_initialize,
                     verify_worst_case)
from seabeam.beamformer import (extract_beam, lmi_near, lmi_off, rank_gap, sampled_worst_case,
                                lifted_sinr_near)


def single_user(h, noise=1.0):
    h = np.atleast_2d(np.asarray(h, dtype=complex))
    return ChannelSet(h, np.zeros((0, 1)), np.zeros((1, 1)), noise, 1.0)


# --- closed-form single-user oracles -------------------------------------

def test_sdr_nominal_mrt():
    w, v = sdr_initialize(single_user([1, 1]), QosSpec(1.0, 1.0))
    assert np.trace(w[0]).real == pytest.approx(0.5, abs=1e-5)
    assert v.shape == (0, 1, 1)


def test_sdr_robust_scalar():
    w, _ = sdr_initialize(single_user([1]), QosSpec(1.0, 1.0), UncertaintyModel.from_radii([0.5]))
    assert np.trace(w[0]).real == pytest.approx(4.0, abs=1e-4)


@pytest.mark.parametrize("h,radius,want", [([1, 1], 0.0, 0.5), ([1], 0.5, 4.0), ([2], 0.0, 0.25)])
def test_penalty_sca_single_user(h, radius, want):
    unc = UncertaintyModel.from_radii([radius])
    sol, rep = penalty_sca_solve(single_user(h), QosSpec(1.0, 1.0), unc)
    assert sol.total_power == pytest.approx(want, abs=1e-4 * max(1, want))
    assert rep.termination == "converged"
    assert rep.iterations == 1
    assert sol.max_rank_gap <= 1e-6


def test_zero_rates_give_zero_beams(instance):
    ch, unc = instance
    w, v = sdr_initialize(ch, QosSpec(0.0, 0.0), unc)
    assert np.all(w == 0) and np.all(v == 0)
    sol, rep = penalty_sca_solve(ch, QosSpec(0.0, 0.0), unc)
    assert sol.total_power == 0.0
    assert rep.iterations == 1 and rep.termination == "converged"


def test_zero_rate_user_gets_no_power(instance):
    ch, unc = instance
    sol, _ = penalty_sca_solve(ch, QosSpec(rate_near=np.array([0.0, 1.0]), rate_off=1.0), unc)
    assert np.all(sol.beams.tbs_beams[0] == 0)
    assert np.linalg.norm(sol.beams.tbs_beams[1]) > 0


# --- LMI blocks -------------------------------------------------------------

def test_lmi_near_reduces_to_nominal_constraint(instance):
    ch, _ = instance
    rng = np.random.default_rng(4)
    w = np.array([np.outer(x, x.conj()) for x in rng.standard_normal((2, 3))])
    v = np.array([np.outer(x, x.conj()) for x in rng.standard_normal((2, 3))])
    gp = 2 ** 0.7 - 1
    blk = lmi_near(0, w, v, ch, 0.7, 0.0, 0.0)
    h = ch.tbs_to_near[0]
    n = w[0] - gp * w[1]
    c = sum(np.vdot(ch.sat_to_near[0], x @ ch.sat_to_near[0]).real for x in v) + ch.noise_var_near[0]
    assert blk[-1, -1].real == pytest.approx(np.vdot(h, n @ h).real - gp * c, rel=1e-12)
    np.testing.assert_allclose(blk[:-1, :-1], n, atol=1e-12)


def test_lmi_off_reduces_to_nominal_constraint(instance):
    ch, _ = instance
    rng = np.random.default_rng(5)
    v = np.array([np.outer(x, x.conj()) for x in rng.standard_normal((2, 3))])
    gp = 2 ** 0.4 - 1
    blk = lmi_off(1, v, ch, 0.4, 0.0, 0.0)
    h = ch.sat_to_off[1]
    n = v[1] - gp * v[0]
    assert blk[-1, -1].real == pytest.approx(np.vdot(h, n @ h).real - gp * ch.noise_var_off[1], rel=1e-12)


def test_lmi_zero_rate_is_vacuous(instance):
    ch, _ = instance
    w = np.zeros((2, 3, 3))
    v = np.zeros((2, 3, 3))
    assert np.linalg.eigvalsh(lmi_near(0, w, v, ch, 0.0, 0.0, 0.0))[0] >= -1e-15


def test_lmi_rejects_shape_mismatch(instance):
    ch, _ = instance
    with pytest.raises(ValueError):
        lmi_near(0, np.zeros((2, 4, 4)), np.zeros((2, 3, 3)), ch, 0.5, 0.1, 0.0)


@pytest.mark.parametrize("seed", range(3))
def test_lmi_feasible_point_is_worst_case_sound(seed):
    ch, unc = small_instance(seed)
    qos = QosSpec(0.8, 0.8)
    sol, _ = penalty_sca_solve(ch, qos, unc)
    r1, r2 = unc.radii(2, 2)
    gp = 2 ** 0.8 - 1
    for i in range(2):
        blk = lmi_near(i, sol.lifted_tbs, sol.lifted_sat, ch, 0.8, r1[i], sol.slack_near[i])
        assert np.linalg.eigvalsh(blk)[0] >= -1e-6 * np.abs(blk).max()
    near, off = sampled_worst_case(sol, ch, r1, r2, np.random.default_rng(seed), 1000)
    assert np.all(near >= 0.8 - 1e-4) and np.all(off >= 0.8 - 1e-4)


# --- solver behaviour -------------------------------------------------------

def test_nonrobust_equals_robust_without_uncertainty(instance):
    ch, _ = instance
    a, _ = nonrobust_solve(ch, QosSpec(0.5, 0.5))
    b, _ = penalty_sca_solve(ch, QosSpec(0.5, 0.5), UncertaintyModel())
    assert a.total_power == pytest.approx(b.total_power, rel=1e-9)


@pytest.mark.parametrize("seed", range(3))
def test_nonrobust_uses_less_power(seed):
    ch, unc = small_instance(seed)
    rob, _ = penalty_sca_solve(ch, QosSpec(0.8, 0.8), unc)
    nom, _ = nonrobust_solve(ch, QosSpec(0.8, 0.8))
    assert nom.total_power <= rob.total_power * (1 + 1e-6)


@pytest.mark.parametrize("seed", range(3))
def test_objective_trace_non_increasing(seed):
    ch, unc = small_instance(seed, rel_radius=0.2)
    _, rep = penalty_sca_solve(ch, QosSpec(1.0, 1.0), unc)
    obj = np.array(rep.objectives)
    assert np.all(obj[1:] <= obj[:-1] * (1 + 1e-6))
    assert rep.iterations <= 30


def test_power_cap_infeasibility():
    ch, unc = small_instance(1)
    with pytest.raises(InfeasibleError) as exc:
        penalty_sca_solve(ch, QosSpec(1.0, 1.0, tbs_power_cap=1e-6), unc)
    assert exc.value.constraint_class == "power_cap"


def test_qos_off_infeasibility():
    # two off-shore users with one shared antenna and identical channels cannot both exceed 0 dB
    h = np.array([[1.0], [1.0]], dtype=complex)
    ch = ChannelSet(np.ones((1, 1)), h, np.zeros((1, 1)), 1.0, 1.0)
    with pytest.raises(InfeasibleError) as exc:
        penalty_sca_solve(ch, QosSpec(0.1, 1.0))
    assert exc.value.constraint_class == "qos_off"


def test_qos_near_infeasibility():
    h = np.array([[1.0], [1.0]], dtype=complex)
    ch = ChannelSet(h, np.ones((1, 1)), np.zeros((2, 1)), 1.0, 1.0)
    with pytest.raises(InfeasibleError) as exc:
        penalty_sca_solve(ch, QosSpec(1.0, 0.1))
    assert exc.value.constraint_class == "qos_near"


def test_power_caps_respected(instance):
    ch, unc = instance
    qos = QosSpec(0.5, 0.5, tbs_power_cap=10.0, sat_per_antenna_cap=0.4)
    sol, _ = penalty_sca_solve(ch, qos, unc)
    assert sol.tbs_power <= 10.0 * (1 + 1e-6)
    assert np.all(sol.sat_antenna_powers <= 0.4 * (1 + 1e-6))


def test_physical_weights_minimise_watts(instance):
    ch, unc = instance
    a, _ = penalty_sca_solve(ch, QosSpec(0.5, 0.5, weight_units="physical"), unc)
    b, _ = penalty_sca_solve(ch, QosSpec(0.5, 0.5, weight_off=np.full(2, 50.0)), unc)
    assert a.total_power <= b.total_power * (1 + 1e-6)


def test_qos_validation():
    with pytest.raises(ValueError):
        QosSpec(-0.1, 0.1)
    with pytest.raises(ValueError):
        QosSpec(0.1, 0.1, tbs_power_cap=0.0)
    with pytest.raises(ValueError):
        PenaltyConfig(max_iterations=0)


# --- verification helpers ---------------------------------------------------

def test_verify_zero_uncertainty_matches_nominal(instance):
    ch, _ = instance
    sol, _ = nonrobust_solve(ch, QosSpec(0.5, 0.5))
    rep = verify_worst_case(sol, ch, None, QosSpec(0.5, 0.5))
    from seabeam import all_rates
    r1, r2 = all_rates(ch, sol.beams)
    np.testing.assert_allclose(rep.min_rate_near, r1, rtol=1e-12)
    np.testing.assert_allclose(rep.min_rate_off, r2, rtol=1e-12)
    assert rep.satisfied


def test_rank_gap_and_extraction():
    x = np.diag([4.0, 0.0, 0.0])
    assert rank_gap(x) == 0.0
    assert rank_gap(np.eye(2)) == pytest.approx(0.5)
    assert rank_gap(np.zeros((2, 2))) == 0.0
    b = extract_beam(x)
    np.testing.assert_allclose(np.abs(b), [2, 0, 0], atol=1e-12)


@settings(max_examples=25)
@given(st.integers(0, 10_000))
def test_lifted_sinr_equals_beam_sinr_for_rank_one(seed):
    rng = np.random.default_rng(seed)
    ch, _ = small_instance(seed)
    w = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
    v = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
    from seabeam import BeamSet
    from seabeam.channel_model import sinr_near
    lw = np.array([np.outer(x, x.conj()) for x in w])
    lv = np.array([np.outer(x, x.conj()) for x in v])
    assert lifted_sinr_near(0, lw, lv, ch) == pytest.approx(sinr_near(0, ch, BeamSet(w, v)), rel=1e-10)


# --- complexity -------------------------------------------------------------

def reference_costs(k1, m1, k2, m2, eta):
    n1, n2 = k1 * m1 * m1, k2 * m2 * m2
    b1 = n1 * (k1 * ((m1 + 1) ** 3 + m1 ** 3 + 1) + k1 * n1 * ((m1 + 1) ** 2 + m1 ** 2 + 1) + n1 ** 2)
    b2 = n2 * (k2 * ((m2 + 1) ** 3 + m2 ** 3 + 2) + k2 * n2 * ((m2 + 1) ** 2 + m2 ** 2 + 2) + n2 ** 2)
    with mp.workdps(50):
        c1 = mp.sqrt(2 * k1 * (m1 + 1)) * b1 * mp.log(1 / mp.mpf(eta))
        c2 = mp.sqrt(k2 * (2 * m2 + 3)) * b2 * mp.log(1 / mp.mpf(eta))
    return n1, n2, b1, b2, c1, c2


def test_complexity_n1_table_point():
    assert complexity_estimate(4, 8, 6, 8).n1 == 256


def test_complexity_frozen_value():
    est = complexity_estimate(4, 8, 6, 8, 0.1)
    assert est.bracket_near == 56_322_048
    assert est.c1 == pytest.approx(1.1004249e9, rel=1e-7)


@pytest.mark.parametrize("args", [(4, 8, 6, 8, 0.1), (1, 1, 1, 1, 0.5), (8, 16, 8, 12, 1e-3)])
def test_complexity_matches_reevaluation(args):
    est = complexity_estimate(*args)
    n1, n2, b1, b2, c1, c2 = reference_costs(*args)
    assert (est.n1, est.n2, est.bracket_near, est.bracket_off) == (n1, n2, b1, b2)
    assert abs(est.c1 - float(c1)) <= 2 * math.ulp(float(c1))
    assert abs(est.c2 - float(c2)) <= 2 * math.ulp(float(c2))


def test_complexity_barrier_parameters():
    est = complexity_estimate(4, 8, 6, 8)
    assert est.beta1 == 4 * 9 + 4 * 8 + 4 + 1
    assert est.beta2 == 6 * 9 + 6 * 8 + 12


@given(st.integers(1, 12), st.integers(1, 12), st.integers(1, 12), st.integers(1, 12))
def test_complexity_monotone(k1, m1, k2, m2):
    base = complexity_estimate(k1, m1, k2, m2)
    for bumped in ((k1 + 1, m1, k2, m2), (k1, m1 + 1, k2, m2)):
        assert complexity_estimate(*bumped).c1 > base.c1
    for bumped in ((k1, m1, k2 + 1, m2), (k1, m1, k2, m2 + 1)):
        assert complexity_estimate(*bumped).c2 > base.c2
    assert complexity_estimate(k1, m1, k2, m2, 0.01).total > base.total


def test_complexity_domain():
    with pytest.raises(ValueError):
        complexity_estimate(0, 8, 6, 8)
    with pytest.raises(ValueError):
        complexity_estimate(4, 8, 6, 8, 1.5)
