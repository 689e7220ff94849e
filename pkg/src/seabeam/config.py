"""Flat JSON experiment configuration.

Every scenario parameter has one canonical key and a default.  Powers,
gains and noise are written in dB units in the file and converted to linear
watts once, when the configuration is loaded (:attr:`ExperimentConfig.linear`).
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from .link_budget import db_to_linear, dbm_to_watts, wavelength_from_frequency

SWEEP_AXES = ("rate", "users_near", "users_off", "antennas_tbs", "antennas_sat",
              "tidal_near", "tidal_off")


class ConfigError(ValueError):
    """Malformed configuration; ``key`` names the offending entry."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"config key '{key}': {message}")


@dataclass(frozen=True)
class LinearParams:
    wavelength_m: float
    antenna_spacing_m: float
    sat_max_gain: float
    tbs_gain: float
    user_gain: float
    noise_w: float
    tbs_power_cap_w: float
    sat_antenna_cap_w: float
    three_db_angle_rad: float
    departure_angle_tbs_rad: float
    departure_angle_sat_rad: float


@dataclass(frozen=True)
class ExperimentConfig:
    # system
    carrier_frequency_hz: float = 160e6
    bandwidth_hz: float = 20e6
    antennas_tbs: int = 8
    antennas_sat: int = 8
    users_near: int = 4
    users_off: int = 6
    sat_max_gain_dbi: float = 55.0
    tbs_gain_dbi: float = 30.0
    user_gain_dbi: float = 20.0
    orbit_altitude_m: float = 550e3
    noise_dbm: float = -110.0
    rain_log_mean: float = -2.6
    rain_log_variance: float = 1.63
    three_db_angle_deg: float = 0.4
    rician_factor: float = 10.0
    rate_near: float = 0.1
    rate_off: float = 0.1
    tbs_power_dbm: float = 47.0
    sat_antenna_power_dbm: float = 30.0
    tbs_height_m: float = 50.0
    user_height_m: float = 10.0
    fsl_distance_exponent: int = 1
    # geometry draws
    near_distance_min_m: float = 2000.0
    near_distance_max_m: float = 10000.0
    off_boresight_max_deg: float = 0.4
    near_boresight_min_deg: float = 0.4
    near_boresight_max_deg: float = 0.8
    antenna_spacing_wavelengths: float = 0.5
    departure_angle_tbs_deg: float = 20.0
    departure_angle_sat_deg: float = 20.0
    departure_angles_near_deg: tuple | None = None
    departure_angles_off_deg: tuple | None = None
    # uncertainty
    tidal_near: float = 0.05
    tidal_off: float = 0.05
    # algorithm
    penalty_initial: float = 1.0
    penalty_increment: float = 5.0
    max_iterations: int = 50
    rank_gap_tol: float = 1e-3
    objective_rel_tol: float = 1e-4
    solver_tolerance: float = 1e-7
    weight_units: str = "normalized"
    # experiment
    sweep_axis: str = "rate"
    sweep_values: tuple = (0.1, 0.2, 0.3)
    trials: int = 50
    seed: int = 2024
    channel_model: str = "first_order"

    def __post_init__(self):
        _validate(self)

    @property
    def linear(self) -> LinearParams:
        lam = float(wavelength_from_frequency(self.carrier_frequency_hz))
        return LinearParams(
            wavelength_m=lam,
            antenna_spacing_m=self.antenna_spacing_wavelengths * lam,
            sat_max_gain=float(db_to_linear(self.sat_max_gain_dbi)),
            tbs_gain=float(db_to_linear(self.tbs_gain_dbi)),
            user_gain=float(db_to_linear(self.user_gain_dbi)),
            noise_w=float(dbm_to_watts(self.noise_dbm)),
            tbs_power_cap_w=float(dbm_to_watts(self.tbs_power_dbm)),
            sat_antenna_cap_w=float(dbm_to_watts(self.sat_antenna_power_dbm)),
            three_db_angle_rad=float(np.deg2rad(self.three_db_angle_deg)),
            departure_angle_tbs_rad=float(np.deg2rad(self.departure_angle_tbs_deg)),
            departure_angle_sat_rad=float(np.deg2rad(self.departure_angle_sat_deg)),
        )

    def with_axis_value(self, value):
        """Copy with the sweep axis parameter set to ``value``."""
        key = {"rate": None, "users_near": "users_near", "users_off": "users_off",
               "antennas_tbs": "antennas_tbs", "antennas_sat": "antennas_sat",
               "tidal_near": "tidal_near", "tidal_off": "tidal_off"}[self.sweep_axis]
        if key is None:
            return replace(self, rate_near=float(value), rate_off=float(value))
        if key.startswith(("users", "antennas")):
            return replace(self, **{key: int(value)})
        return replace(self, **{key: float(value)})

    def to_dict(self):
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d


_INT_KEYS = {"antennas_tbs", "antennas_sat", "users_near", "users_off", "max_iterations",
             "trials", "seed", "fsl_distance_exponent"}
_STR_CHOICES = {"weight_units": ("normalized", "physical"), "sweep_axis": SWEEP_AXES,
                "channel_model": ("first_order", "exact")}
_LIST_KEYS = {"sweep_values", "departure_angles_near_deg", "departure_angles_off_deg"}
_POSITIVE = {"carrier_frequency_hz", "bandwidth_hz", "antennas_tbs", "antennas_sat",
             "orbit_altitude_m", "three_db_angle_deg", "tbs_height_m", "user_height_m",
             "near_distance_min_m", "near_distance_max_m", "antenna_spacing_wavelengths",
             "penalty_initial", "penalty_increment", "max_iterations", "rank_gap_tol",
             "objective_rel_tol", "solver_tolerance", "trials", "fsl_distance_exponent"}
_NONNEG = {"users_near", "users_off", "rain_log_variance", "rician_factor", "rate_near",
           "rate_off", "off_boresight_max_deg", "near_boresight_min_deg",
           "near_boresight_max_deg", "tidal_near", "tidal_off", "seed"}


def _validate(cfg):
    for f in fields(cfg):
        key = f.name
        val = getattr(cfg, key)
        if key in _STR_CHOICES:
            if val not in _STR_CHOICES[key]:
                raise ConfigError(key, f"must be one of {list(_STR_CHOICES[key])}, got {val!r}")
            continue
        if key in _LIST_KEYS:
            if val is None and key != "sweep_values":
                continue
            if not isinstance(val, (list, tuple)) or not all(
                    isinstance(x, (int, float)) and not isinstance(x, bool) for x in val):
                raise ConfigError(key, "must be a list of numbers")
            object.__setattr__(cfg, key, tuple(float(x) for x in val))
            continue
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ConfigError(key, f"must be a number, got {val!r}")
        if not np.isfinite(val):
            raise ConfigError(key, "must be finite")
        if key in _INT_KEYS:
            if int(val) != val:
                raise ConfigError(key, f"must be an integer, got {val!r}")
            object.__setattr__(cfg, key, int(val))
        if key in _POSITIVE and not val > 0:
            raise ConfigError(key, f"must be positive, got {val!r}")
        if key in _NONNEG and val < 0:
            raise ConfigError(key, f"must be non-negative, got {val!r}")
    if cfg.near_distance_min_m > cfg.near_distance_max_m:
        raise ConfigError("near_distance_min_m", "exceeds near_distance_max_m")
    if cfg.near_boresight_min_deg > cfg.near_boresight_max_deg:
        raise ConfigError("near_boresight_min_deg", "exceeds near_boresight_max_deg")
    if not 0 < cfg.departure_angle_tbs_deg < 180:
        raise ConfigError("departure_angle_tbs_deg", "must lie in (0, 180)")
    if not 0 < cfg.departure_angle_sat_deg < 180:
        raise ConfigError("departure_angle_sat_deg", "must lie in (0, 180)")
    vals = cfg.sweep_values
    if len(vals) == 0:
        raise ConfigError("sweep_values", "must not be empty")
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise ConfigError("sweep_values", "must be strictly increasing")
    if cfg.sweep_axis in ("users_near", "users_off", "antennas_tbs", "antennas_sat") and \
            any(int(v) != v for v in vals):
        raise ConfigError("sweep_values", f"axis '{cfg.sweep_axis}' needs integer values")
    for key, count in (("departure_angles_near_deg", cfg.users_near),
                       ("departure_angles_off_deg", cfg.users_off)):
        val = getattr(cfg, key)
        if val is not None and len(val) < count:
            raise ConfigError(key, f"needs at least {count} entries")


def from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("<root>", "configuration must be a JSON object")
    known = {f.name for f in fields(ExperimentConfig)}
    for key in data:
        if key not in known:
            raise ConfigError(key, "unknown key")
    return ExperimentConfig(**data)


def load(source) -> ExperimentConfig:
    """Load a config from a path, or return the defaults for ``'default'``."""
    if source in (None, "default"):
        return ExperimentConfig()
    path = Path(source)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise FileNotFoundError(f"config file not found: {path}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<root>", f"invalid JSON ({exc})") from None
    return from_dict(data)


def dump(cfg: ExperimentConfig, path):
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
