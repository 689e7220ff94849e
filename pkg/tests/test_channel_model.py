import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from seabeam.channel_model import (BeamSet, ChannelSet, all_rates, complex_normal, rate, rician_mix,
                                   satellite_channel, satellite_large_scale, sinr_near, sinr_off,
                                   steering, terrestrial_channel, two_ray_amplitude)
from seabeam.link_budget import Geometry, free_space_loss, satellite_beam_gain

LAM = 1.8737


def geom(**kw):
    base = dict(tbs_height_m=50.0, user_height_m=10.0, carrier_wavelength_m=LAM,
                antenna_spacing_m=LAM / 2, three_db_angle_rad=np.deg2rad(0.4))
    base.update(kw)
    return Geometry(**base)


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def test_steering_broadside():
    np.testing.assert_allclose(steering(np.pi / 2, 4, 1.0, 2.0).elements, np.ones(4), atol=1e-15)


def test_steering_half_wavelength_endfire():
    np.testing.assert_allclose(steering(0.0, 2, 0.5, 1.0).elements, [1, -1], atol=1e-15)


@given(st.floats(0, np.pi), st.integers(1, 32), st.floats(0.1, 2.0))
def test_steering_unit_modulus(theta, m, ratio):
    a = steering(theta, m, ratio, 1.0).elements
    np.testing.assert_allclose(np.abs(a), 1.0, rtol=1e-12)
    assert a[0] == 1
    assert np.vdot(a, a).real == pytest.approx(m, rel=1e-12)


@given(st.floats(0, np.pi))
def test_steering_supplementary_angle_is_conjugate(theta):
    a = steering(theta, 6, 0.5, 1.0).elements
    b = steering(np.pi - theta, 6, 0.5, 1.0).elements
    np.testing.assert_allclose(b, a.conj(), atol=1e-12)


def test_steering_rejects_bad_sizes():
    with pytest.raises(ValueError):
        steering(0.3, 0, 0.5, 1.0)


def test_two_ray_example():
    h = terrestrial_channel(1000.0, geom(), np.pi / 2, 4)
    np.testing.assert_allclose(h, 2.9653856194456206e-4 * np.ones(4), rtol=1e-9)


def test_two_ray_null():
    d = 2 * 50 * 10 / LAM  # 2 pi Ht Hu / (lambda d) = pi
    h = terrestrial_channel(d, geom(), 0.4, 3)
    assert np.max(np.abs(h)) < 1e-16


@given(st.floats(100.0, 36000.0))
def test_two_ray_bounded(d):
    amp = two_ray_amplitude(d, 50, 10, LAM)
    assert abs(amp) <= LAM / (2 * np.pi * d) * (1 + 1e-12)


def test_terrestrial_tx_gain_scales_amplitude():
    h0 = terrestrial_channel(3000.0, geom(), 0.5, 4)
    h1 = terrestrial_channel(3000.0, geom(), 0.5, 4, tx_gain=1000.0)
    np.testing.assert_allclose(h1, np.sqrt(1000.0) * h0)


def test_terrestrial_beyond_horizon():
    with pytest.raises(ValueError, match="horizon"):
        terrestrial_channel(5e4, geom(), 0.5, 4)


def test_satellite_large_scale_composition():
    phi, phi3 = np.deg2rad(0.2), np.deg2rad(0.4)
    got = satellite_large_scale(LAM, 5.5e5, 100.0, 3e5, phi, phi3, 0.8)
    want = 0.8 * np.sqrt(free_space_loss(LAM, 5.5e5) * 100.0 * satellite_beam_gain(3e5, phi, phi3))
    assert got == pytest.approx(want, rel=1e-14)


def test_rician_limits():
    los = steering(0.3, 4, 0.5, 1.0).elements
    nlos = np.ones(4) * (1 + 2j)
    np.testing.assert_allclose(rician_mix(2.0, np.inf, nlos, los), 2.0 * los)
    np.testing.assert_allclose(rician_mix(2.0, 0.0, nlos, los), 2.0 * nlos)
    with pytest.raises(ValueError):
        rician_mix(1.0, -1.0, nlos, los)


def test_rician_los_power_share():
    rng = np.random.default_rng(3)
    los = steering(0.35, 8, 0.5, 1.0).elements
    k = 10.0
    share = []
    for _ in range(10_000):
        h = rician_mix(1.0, k, complex_normal(rng, 8), los)
        los_part = np.sqrt(k / (1 + k)) * los
        share.append(np.vdot(los_part, los_part).real / np.vdot(h, h).real)
    # ratio of mean LoS power to mean total power
    total = 1.0 / np.mean(1.0 / np.array(share))
    assert total == pytest.approx(10 / 11, rel=0.02)


def test_satellite_channel_shape_and_stream():
    g = geom(sat_user_distance_m=[5.5e5], boresight_angle_rad=[0.001])
    h1 = satellite_channel(g, 0, 1.0, 100.0, 3e5, 10.0, 0.35, 8, np.random.default_rng(5))
    h2 = satellite_channel(g, 0, 1.0, 100.0, 3e5, 10.0, 0.35, 8, np.random.default_rng(5))
    assert h1.shape == (8,)
    np.testing.assert_array_equal(h1, h2)


def test_complex_normal_prefix_stable():
    a = complex_normal(np.random.default_rng(9), 4)
    b = complex_normal(np.random.default_rng(9), 6)
    np.testing.assert_array_equal(a, b[:4])


def scalar_sinr_near(i, h1, f1, w, v, s2):
    def inner(x, y):
        return sum(x[k].conjugate() * y[k] for k in range(len(x)))
    num = abs(inner(h1[i], w[i])) ** 2
    den = s2
    for j in range(len(w)):
        if j != i:
            den += abs(inner(h1[i], w[j])) ** 2
    for m in range(len(v)):
        den += abs(inner(f1[i], v[m])) ** 2
    return num / den


def scalar_sinr_off(m, h2, v, s2):
    def inner(x, y):
        return sum(x[k].conjugate() * y[k] for k in range(len(x)))
    num = abs(inner(h2[m], v[m])) ** 2
    den = s2 + sum(abs(inner(h2[m], v[k])) ** 2 for k in range(len(v)) if k != m)
    return num / den


def random_instance(seed, k1=3, k2=2, m1=4, m2=3):
    rng = np.random.default_rng(seed)
    ch = ChannelSet(crandn(rng, k1, m1), crandn(rng, k2, m2), crandn(rng, k1, m2),
                    rng.uniform(0.5, 2, k1), rng.uniform(0.5, 2, k2))
    beams = BeamSet(crandn(rng, k1, m1), crandn(rng, k2, m2))
    return ch, beams


def test_sinr_near_no_interference():
    ch = ChannelSet(np.array([[1, 0]]), np.zeros((0, 1)), np.zeros((1, 1)), 1.0, 1.0)
    assert sinr_near(0, ch, BeamSet(np.array([[1, 0]]), np.zeros((0, 1)))) == pytest.approx(1.0)


@pytest.mark.parametrize("seed", range(5))
def test_sinr_matches_scalar_loops(seed):
    ch, b = random_instance(seed)
    for i in range(ch.n_near):
        ref = scalar_sinr_near(i, ch.tbs_to_near, ch.sat_to_near, b.tbs_beams, b.sat_beams,
                               ch.noise_var_near[i])
        assert sinr_near(i, ch, b) == pytest.approx(ref, rel=1e-12)
    for m in range(ch.n_off):
        ref = scalar_sinr_off(m, ch.sat_to_off, b.sat_beams, ch.noise_var_off[m])
        assert sinr_off(m, ch, b) == pytest.approx(ref, rel=1e-12)


def test_sinr_off_single_user():
    rng = np.random.default_rng(0)
    h, v = crandn(rng, 1, 3), crandn(rng, 1, 3)
    ch = ChannelSet(np.zeros((0, 2)), h, np.zeros((0, 3)), 1.0, 2.0)
    assert sinr_off(0, ch, BeamSet(np.zeros((0, 2)), v)) == pytest.approx(
        abs(np.vdot(h[0], v[0])) ** 2 / 2.0, rel=1e-12)


def test_sinr_off_ignores_tbs_beams():
    ch, b = random_instance(1)
    b2 = BeamSet(b.tbs_beams * 17.0, b.sat_beams)
    for m in range(ch.n_off):
        assert sinr_off(m, ch, b) == sinr_off(m, ch, b2)


@settings(max_examples=30)
@given(st.integers(0, 10_000), st.floats(1.01, 10.0))
def test_sinr_increases_with_common_scaling(seed, c):
    ch, b = random_instance(seed)
    scaled = BeamSet(c * b.tbs_beams, c * b.sat_beams)
    for i in range(ch.n_near):
        assert sinr_near(i, ch, scaled) > sinr_near(i, ch, b)


@settings(max_examples=30)
@given(st.integers(0, 10_000), st.integers(0, 2), st.integers(0, 1))
def test_removing_interferer_never_hurts(seed, drop_near, drop_off):
    ch, b = random_instance(seed)
    r1, r2 = all_rates(ch, b)
    for reduced in (b.without(near=[drop_near]), b.without(off=[drop_off])):
        s1, s2 = all_rates(ch, reduced)
        keep1 = [i for i in range(ch.n_near) if not np.all(reduced.tbs_beams[i] == 0)]
        keep2 = [m for m in range(ch.n_off) if not np.all(reduced.sat_beams[m] == 0)]
        assert np.all(s1[keep1] >= r1[keep1] - 1e-12)
        assert np.all(s2[keep2] >= r2[keep2] - 1e-12)


def test_dimension_mismatch():
    ch, b = random_instance(0)
    with pytest.raises(ValueError):
        sinr_near(0, ch, BeamSet(b.tbs_beams[:, :2], b.sat_beams))


@pytest.mark.parametrize("s,r", [(0, 0), (1, 1), (3, 2)])
def test_rate_values(s, r):
    assert rate(s) == r


def test_rate_negative():
    with pytest.raises(ValueError):
        rate(-0.1)
