"""Scenario synthesis from an :class:`~seabeam.config.ExperimentConfig`.

Each user's random quantities come from its own stream keyed by
``(seed, trial, link, user)``, and within a stream the geometry and rain
draws precede the scattered component.  Changing a user or antenna count
therefore only appends draws, so sweep points share their common
realisations.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .beamformer import PenaltyConfig, QosSpec
from .channel_model import (ChannelSet, complex_normal, rician_mix, satellite_large_scale, steering,
                            two_ray_amplitude)
from .config import ExperimentConfig
from .csi_uncertainty import UncertaintyModel, channel_sensitivity
from .link_budget import RainModel, max_los_distance, sample_rain_attenuation

LINK_NEAR, LINK_OFF, LINK_SAT_NEAR = 0, 1, 2


def user_stream(seed, trial, link, user):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial, link, user)))


@dataclass
class Scenario:
    """One channel realisation with everything needed to solve and stress it."""

    channels: ChannelSet
    uncertainty: UncertaintyModel
    qos: QosSpec
    penalty: PenaltyConfig
    tolerance: float
    # ingredients for rebuilding channels at a perturbed angle
    near_amplitude: np.ndarray
    off_large_scale: np.ndarray
    off_nlos: np.ndarray
    angles_near: np.ndarray
    angles_off: np.ndarray
    rician_factor: float
    spacing_over_wavelength: float

    def rebuild_near(self, i, dtheta):
        a = _steer(self.angles_near[i] + dtheta, self.channels.tbs_antennas, self.spacing_over_wavelength)
        return self.near_amplitude[i] * a

    def rebuild_off(self, m, dtheta):
        a = _steer(self.angles_off[m] + dtheta, self.channels.sat_antennas, self.spacing_over_wavelength)
        return rician_mix(self.off_large_scale[m], self.rician_factor, self.off_nlos[m], a)


def _steer(theta, n, ratio):
    return np.exp(-1j * 2.0 * np.pi * ratio * np.arange(n) * np.cos(theta))


def _angles(default_deg, overrides, count):
    if overrides is None:
        return np.full(count, np.deg2rad(default_deg))
    return np.deg2rad(np.asarray(overrides[:count], dtype=float))


def build_scenario(cfg: ExperimentConfig, trial=0, seed=None) -> Scenario:
    """Draw trial ``trial`` of the configured scenario."""
    seed = cfg.seed if seed is None else seed
    lin = cfg.linear
    lam = lin.wavelength_m
    ratio = cfg.antenna_spacing_wavelengths
    k1, k2, m1, m2 = cfg.users_near, cfg.users_off, cfg.antennas_tbs, cfg.antennas_sat
    rain = RainModel(cfg.rain_log_mean, cfg.rain_log_variance)
    horizon = max_los_distance(cfg.tbs_height_m, cfg.user_height_m)
    if cfg.near_distance_max_m > horizon:
        raise ValueError(f"near_distance_max_m exceeds the line-of-sight horizon ({horizon:.0f} m)")
    theta1 = _angles(cfg.departure_angle_tbs_deg, cfg.departure_angles_near_deg, k1)
    theta2 = _angles(cfg.departure_angle_sat_deg, cfg.departure_angles_off_deg, k2)
    big_k = cfg.rician_factor
    los_share = np.sqrt(big_k / (1.0 + big_k)) if np.isfinite(big_k) else 1.0

    amp = np.empty(k1)
    h1 = np.zeros((k1, m1), dtype=complex)
    n1 = np.zeros((k1, m1), dtype=complex)
    f1 = np.zeros((k1, m2), dtype=complex)
    for i in range(k1):
        rng = user_stream(seed, trial, LINK_NEAR, i)
        d = rng.uniform(cfg.near_distance_min_m, cfg.near_distance_max_m)
        amp[i] = np.sqrt(lin.tbs_gain) * two_ray_amplitude(d, cfg.tbs_height_m, cfg.user_height_m, lam)
        a = steering(theta1[i], m1, lin.antenna_spacing_m, lam)
        h1[i] = amp[i] * a.elements
        n1[i] = channel_sensitivity(h1[i], a, link="terrestrial")

        rng = user_stream(seed, trial, LINK_SAT_NEAR, i)
        phi = np.deg2rad(rng.uniform(cfg.near_boresight_min_deg, cfg.near_boresight_max_deg))
        r = sample_rain_attenuation(rain, rng)
        large = satellite_large_scale(lam, cfg.orbit_altitude_m, lin.user_gain, lin.sat_max_gain, phi,
                                      lin.three_db_angle_rad, r, cfg.fsl_distance_exponent)
        los = steering(lin.departure_angle_sat_rad, m2, lin.antenna_spacing_m, lam).elements
        f1[i] = rician_mix(large, big_k, complex_normal(rng, m2), los)

    large2 = np.empty(k2)
    nlos2 = np.zeros((k2, m2), dtype=complex)
    h2 = np.zeros((k2, m2), dtype=complex)
    n2 = np.zeros((k2, m2), dtype=complex)
    for m in range(k2):
        rng = user_stream(seed, trial, LINK_OFF, m)
        phi = np.deg2rad(rng.uniform(0.0, cfg.off_boresight_max_deg))
        r = sample_rain_attenuation(rain, rng)
        large2[m] = satellite_large_scale(lam, cfg.orbit_altitude_m, lin.user_gain, lin.sat_max_gain,
                                          phi, lin.three_db_angle_rad, r, cfg.fsl_distance_exponent)
        nlos2[m] = complex_normal(rng, m2)
        a = steering(theta2[m], m2, lin.antenna_spacing_m, lam)
        h2[m] = rician_mix(large2[m], big_k, nlos2[m], a.elements)
        n2[m] = channel_sensitivity(h2[m], a, link="satellite", rician_scale=large2[m] * los_share)

    channels = ChannelSet(h1, h2, f1, lin.noise_w, lin.noise_w)
    eps1 = cfg.tidal_near * lin.departure_angle_tbs_rad
    eps2 = cfg.tidal_off * lin.departure_angle_sat_rad
    unc = UncertaintyModel.from_sensitivities(n1.reshape(k1, m1), n2.reshape(k2, m2), eps1, eps2,
                                              lin.departure_angle_tbs_rad, lin.departure_angle_sat_rad)
    qos = QosSpec(rate_near=cfg.rate_near, rate_off=cfg.rate_off, tbs_power_cap=lin.tbs_power_cap_w,
                  sat_per_antenna_cap=lin.sat_antenna_cap_w, weight_units=cfg.weight_units)
    penalty = PenaltyConfig(cfg.penalty_initial, cfg.penalty_increment, cfg.max_iterations,
                            cfg.rank_gap_tol, cfg.objective_rel_tol)
    return Scenario(channels, unc, qos, penalty, cfg.solver_tolerance, amp, large2, nlos2,
                    theta1, theta2, big_k, ratio)
