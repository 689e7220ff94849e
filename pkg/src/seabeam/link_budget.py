"""Closed-form geometry and propagation quantities.

Line-of-sight horizon distance, free-space loss, the LEO spot-beam gain
pattern and log-normal rain attenuation.  Everything here is linear-scale;
dB conversions live at the bottom and are only used at config load.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special

SPEED_OF_LIGHT = 299_792_458.0
EARTH_RADIUS_M = 6.371e6

# psi = _HALF_POWER_PSI puts the beam pattern at its -3 dB point
_HALF_POWER_PSI = 2.07123
# below this the pattern is replaced by its analytic limit
_PSI_LIMIT = 1e-6


@dataclass(frozen=True)
class Geometry:
    """Scenario geometry.

    Per-user quantities are 1-D arrays; ``tbs_user_distance_m`` has one
    entry per near-shore user, ``sat_user_distance_m`` and
    ``boresight_angle_rad`` one entry per off-shore user.
    """

    tbs_height_m: float
    user_height_m: float
    carrier_wavelength_m: float
    antenna_spacing_m: float
    three_db_angle_rad: float
    tbs_user_distance_m: np.ndarray = field(default_factory=lambda: np.zeros(0))
    sat_user_distance_m: np.ndarray = field(default_factory=lambda: np.zeros(0))
    boresight_angle_rad: np.ndarray = field(default_factory=lambda: np.zeros(0))
    earth_radius_m: float = EARTH_RADIUS_M

    def __post_init__(self):
        for name in ("tbs_user_distance_m", "sat_user_distance_m", "boresight_angle_rad"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))
        for name in ("tbs_height_m", "user_height_m", "carrier_wavelength_m",
                     "antenna_spacing_m", "earth_radius_m"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if not 0 < self.three_db_angle_rad < np.pi / 2:
            raise ValueError("three_db_angle_rad must lie in (0, pi/2)")
        if np.any(self.tbs_user_distance_m <= 0) or np.any(self.sat_user_distance_m <= 0):
            raise ValueError("user distances must be strictly positive")
        if np.any(self.tbs_user_distance_m > self.max_los_distance_m):
            raise ValueError("near-shore user beyond the line-of-sight horizon")

    @property
    def max_los_distance_m(self) -> float:
        return max_los_distance(self.tbs_height_m, self.user_height_m, self.earth_radius_m)


@dataclass(frozen=True)
class RainModel:
    """Log-normal rain fade: ``ln(attenuation_dB) ~ N(log_mean_db, log_variance_db)``."""

    log_mean_db: float = -2.6
    log_variance_db: float = 1.63

    def __post_init__(self):
        if self.log_variance_db < 0:
            raise ValueError("log_variance_db must be non-negative")


def max_los_distance(tbs_height, user_height, earth_radius=EARTH_RADIUS_M):
    """Maximum LoS range between a TBS and a user over a spherical Earth."""
    if tbs_height < 0 or user_height < 0:
        raise ValueError("antenna heights must be non-negative")
    if earth_radius <= 0:
        raise ValueError("earth_radius must be positive")
    return (np.sqrt(tbs_height ** 2 + 2.0 * tbs_height * earth_radius)
            + np.sqrt(user_height ** 2 + 2.0 * user_height * earth_radius))


def free_space_loss(wavelength, distance, distance_exponent=1):
    """Free-space loss ``lambda^2 / ((4 pi)^2 D^k)``.

    ``distance_exponent`` defaults to 1, the form used by the channel model
    this package reproduces; pass 2 for the textbook Friis loss.
    """
    if wavelength <= 0 or np.any(np.asarray(distance) <= 0):
        raise ValueError("wavelength and distance must be positive")
    return wavelength ** 2 / ((4.0 * np.pi) ** 2 * np.asarray(distance, dtype=float) ** distance_exponent)


def bessel_j(order, x):
    """First-kind Bessel function of integer order (thin wrapper over scipy)."""
    return special.jv(order, x)


def satellite_beam_gain(max_gain, boresight_angle, three_db_angle):
    """Spot-beam transmit gain towards a user ``boresight_angle`` off axis.

    Returns ``G_max (J1(psi)/(2 psi) + 36 J3(psi)/psi^3)^2`` with
    ``psi = 2.07123 sin(phi) / sin(phi_3dB)``.  Vectorised over
    ``boresight_angle``.
    """
    phi = np.asarray(boresight_angle, dtype=float)
    if max_gain <= 0:
        raise ValueError("max_gain must be positive")
    if np.any(phi < 0) or np.any(phi >= np.pi / 2):
        raise ValueError("boresight angle must lie in [0, pi/2)")
    if not 0 < three_db_angle < np.pi / 2:
        raise ValueError("three_db_angle must lie in (0, pi/2)")

    psi = _HALF_POWER_PSI * np.sin(phi) / np.sin(three_db_angle)
    small = psi < _PSI_LIMIT
    safe = np.where(small, 1.0, psi)
    pattern = bessel_j(1, safe) / (2.0 * safe) + 36.0 * bessel_j(3, safe) / safe ** 3
    # J1(x)/(2x) -> 1/4 and 36 J3(x)/x^3 -> 3/4 as x -> 0
    pattern = np.where(small, 1.0, pattern)
    gain = max_gain * pattern ** 2
    return gain if gain.ndim else float(gain)


def sample_rain_attenuation(model: RainModel, rng: np.random.Generator, size=None):
    """Draw rain amplitude factors ``10^(-r_dB/20)`` in (0, 1]."""
    x = rng.normal(model.log_mean_db, np.sqrt(model.log_variance_db), size=size)
    return 10.0 ** (-np.exp(x) / 20.0)


def wavelength_from_frequency(frequency_hz):
    return SPEED_OF_LIGHT / frequency_hz


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def dbm_to_watts(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


def watts_to_dbm(watts):
    return 10.0 * np.log10(np.asarray(watts, dtype=float)) + 30.0
