"""Nominal channel synthesis and SINR/rate evaluation.

Channels are column vectors and a beam ``w`` reaches user ``i`` as
``h_i^H w``.  Users are stacked along the first axis, so a set of ``K``
channels for an ``M``-antenna transmitter is a ``(K, M)`` complex array.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .link_budget import Geometry, free_space_loss, satellite_beam_gain


@dataclass(frozen=True)
class SteeringVector:
    elements: np.ndarray
    departure_angle_rad: float
    spacing_over_wavelength: float

    @property
    def size(self) -> int:
        return self.elements.shape[0]


def steering(theta, n_antennas, spacing, wavelength) -> SteeringVector:
    """Uniform linear array response ``exp(-j 2 pi b k cos(theta) / lambda)``."""
    if n_antennas < 1:
        raise ValueError("n_antennas must be at least 1")
    if spacing <= 0 or wavelength <= 0:
        raise ValueError("spacing and wavelength must be positive")
    ratio = spacing / wavelength
    k = np.arange(n_antennas)
    return SteeringVector(np.exp(-1j * 2.0 * np.pi * ratio * k * np.cos(theta)), float(theta), ratio)


def two_ray_amplitude(distance, tbs_height, user_height, wavelength):
    """Real two-ray amplitude ``lambda/(2 pi d) sin(2 pi Ht Hu / (lambda d))``."""
    d = np.asarray(distance, dtype=float)
    return wavelength / (2.0 * np.pi * d) * np.sin(2.0 * np.pi * tbs_height * user_height / (wavelength * d))


def terrestrial_channel(distance, geom: Geometry, theta, n_antennas, tx_gain=1.0):
    """TBS -> near-shore user channel under the two-ray model.

    ``tx_gain`` is a linear power gain applied as ``sqrt(tx_gain)``; the bare
    two-ray model corresponds to the default of 1.
    """
    if distance <= 0:
        raise ValueError("distance must be positive")
    if distance > geom.max_los_distance_m:
        raise ValueError(
            f"user at {distance:.1f} m is beyond the TBS horizon "
            f"({geom.max_los_distance_m:.1f} m); off-shore users have no terrestrial link")
    amp = two_ray_amplitude(distance, geom.tbs_height_m, geom.user_height_m, geom.carrier_wavelength_m)
    a = steering(theta, n_antennas, geom.antenna_spacing_m, geom.carrier_wavelength_m)
    return np.sqrt(tx_gain) * amp * a.elements


def satellite_large_scale(wavelength, distance, rx_gain, max_gain, boresight, three_db_angle,
                          rain_factor=1.0, distance_exponent=1):
    """``g_m sqrt(P_m)`` with ``g_m = r_m sqrt(r_FSL G_m)``."""
    fsl = free_space_loss(wavelength, distance, distance_exponent)
    beam = satellite_beam_gain(max_gain, boresight, three_db_angle)
    return rain_factor * np.sqrt(fsl * rx_gain) * np.sqrt(beam)


def rician_mix(large_scale, rician_factor, nlos, los):
    """Combine scattered and LoS parts; ``rician_factor=inf`` keeps only LoS."""
    if rician_factor < 0:
        raise ValueError("rician_factor must be non-negative")
    if np.isinf(rician_factor):
        return large_scale * np.asarray(los)
    return large_scale * (np.sqrt(1.0 / (1.0 + rician_factor)) * nlos
                          + np.sqrt(rician_factor / (1.0 + rician_factor)) * los)


def complex_normal(rng, n):
    """``CN(0, 1)`` draws; extending ``n`` only appends entries for a fixed stream."""
    z = rng.standard_normal((n, 2))
    return (z[:, 0] + 1j * z[:, 1]) / np.sqrt(2.0)


def satellite_channel(geom: Geometry, user, rain_factor, rx_gain, max_gain, rician_factor,
                      theta, n_antennas, rng, distance_exponent=1):
    """Satellite -> off-shore user ``user`` channel with a fresh NLoS draw.

    ``rain_factor`` is the amplitude factor from
    :func:`~seabeam.link_budget.sample_rain_attenuation`.
    """
    large = satellite_large_scale(
        geom.carrier_wavelength_m, geom.sat_user_distance_m[user], rx_gain, max_gain,
        geom.boresight_angle_rad[user], geom.three_db_angle_rad, rain_factor, distance_exponent)
    los = steering(theta, n_antennas, geom.antenna_spacing_m, geom.carrier_wavelength_m).elements
    return rician_mix(large, rician_factor, complex_normal(rng, n_antennas), los)


def _rows(x, width=0):
    arr = np.asarray(x, dtype=complex)
    if arr.size == 0:
        return np.zeros((arr.shape[0] if arr.ndim == 2 else 0, width), dtype=complex)
    return arr.reshape(1, -1) if arr.ndim == 1 else arr


@dataclass(frozen=True)
class ChannelSet:
    """Nominal channels of one scenario.

    tbs_to_near : (K1, M1) TBS -> near-shore users
    sat_to_off  : (K2, M2) satellite -> off-shore users
    sat_to_near : (K1, M2) satellite interference reaching near-shore users
    """

    tbs_to_near: np.ndarray
    sat_to_off: np.ndarray
    sat_to_near: np.ndarray
    noise_var_near: np.ndarray
    noise_var_off: np.ndarray

    def __post_init__(self):
        h1 = _rows(self.tbs_to_near)
        h2 = _rows(self.sat_to_off)
        h2n = _rows(self.sat_to_near, h2.shape[1] if h2.size else 0)
        if h1.shape[0] != h2n.shape[0] and h2n.size:
            raise ValueError("sat_to_near needs one row per near-shore user")
        if h2.size and h2n.size and h2.shape[1] != h2n.shape[1]:
            raise ValueError("satellite channels must share one antenna count")
        if not h2n.size:
            h2n = np.zeros((h1.shape[0], h2.shape[1]), dtype=complex)
        s1 = np.broadcast_to(np.asarray(self.noise_var_near, dtype=float), (h1.shape[0],)).copy()
        s2 = np.broadcast_to(np.asarray(self.noise_var_off, dtype=float), (h2.shape[0],)).copy()
        for arr in (h1, h2, h2n):
            if not np.all(np.isfinite(arr)):
                raise ValueError("channel entries must be finite")
        if np.any(s1 <= 0) or np.any(s2 <= 0):
            raise ValueError("noise variances must be positive")
        for name, val in (("tbs_to_near", h1), ("sat_to_off", h2), ("sat_to_near", h2n),
                          ("noise_var_near", s1), ("noise_var_off", s2)):
            object.__setattr__(self, name, val)

    @property
    def n_near(self) -> int:
        return self.tbs_to_near.shape[0]

    @property
    def n_off(self) -> int:
        return self.sat_to_off.shape[0]

    @property
    def tbs_antennas(self) -> int:
        return self.tbs_to_near.shape[1]

    @property
    def sat_antennas(self) -> int:
        return self.sat_to_off.shape[1] if self.n_off else self.sat_to_near.shape[1]


@dataclass(frozen=True)
class BeamSet:
    tbs_beams: np.ndarray
    sat_beams: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "tbs_beams", np.atleast_2d(np.asarray(self.tbs_beams, dtype=complex)))
        object.__setattr__(self, "sat_beams", np.atleast_2d(np.asarray(self.sat_beams, dtype=complex)))

    def without(self, near=(), off=()):
        """Copy with the listed beams zeroed."""
        w, v = self.tbs_beams.copy(), self.sat_beams.copy()
        w[list(near)] = 0
        v[list(off)] = 0
        return BeamSet(w, v)


def _check_dims(ch: ChannelSet, beams: BeamSet):
    if beams.tbs_beams.shape != (ch.n_near, ch.tbs_antennas) and ch.n_near:
        raise ValueError(f"tbs_beams shape {beams.tbs_beams.shape} does not match "
                         f"({ch.n_near}, {ch.tbs_antennas})")
    if beams.sat_beams.shape != (ch.n_off, ch.sat_antennas) and ch.n_off:
        raise ValueError(f"sat_beams shape {beams.sat_beams.shape} does not match "
                         f"({ch.n_off}, {ch.sat_antennas})")


def sinr_near(i, ch: ChannelSet, beams: BeamSet, tbs_channel=None):
    """SINR of near-shore user ``i``.

    ``tbs_channel`` optionally replaces ``ch.tbs_to_near[i]`` (used to
    evaluate perturbed CSI).
    """
    _check_dims(ch, beams)
    h = ch.tbs_to_near[i] if tbs_channel is None else np.asarray(tbs_channel)
    gains = np.abs(beams.tbs_beams.conj() @ h) ** 2
    leak = np.sum(np.abs(beams.sat_beams.conj() @ ch.sat_to_near[i]) ** 2) if ch.n_off else 0.0
    return gains[i] / (gains.sum() - gains[i] + leak + ch.noise_var_near[i])


def sinr_off(m, ch: ChannelSet, beams: BeamSet, sat_channel=None):
    """SINR of off-shore user ``m``; the TBS does not reach these users."""
    _check_dims(ch, beams)
    h = ch.sat_to_off[m] if sat_channel is None else np.asarray(sat_channel)
    gains = np.abs(beams.sat_beams.conj() @ h) ** 2
    return gains[m] / (gains.sum() - gains[m] + ch.noise_var_off[m])


def rate(sinr):
    """Achievable rate ``log2(1 + SINR)`` in bps/Hz."""
    s = np.asarray(sinr, dtype=float)
    if np.any(s < 0):
        raise ValueError("SINR must be non-negative")
    r = np.log2(1.0 + s)
    return r if r.ndim else float(r)


def all_rates(ch: ChannelSet, beams: BeamSet, tbs_channels=None, sat_channels=None):
    """Rates of every near-shore and off-shore user as two arrays."""
    h1 = ch.tbs_to_near if tbs_channels is None else tbs_channels
    h2 = ch.sat_to_off if sat_channels is None else sat_channels
    near = np.array([sinr_near(i, ch, beams, h1[i]) for i in range(ch.n_near)])
    off = np.array([sinr_off(m, ch, beams, h2[m]) for m in range(ch.n_off)])
    return rate(near) if near.size else near, rate(off) if off.size else off
