import json
from pathlib import Path

import pytest

from seabeam.config import ConfigError, ExperimentConfig, dump, from_dict, load


def test_defaults_cover_the_reference_scenario():
    cfg = load("default")
    assert (cfg.carrier_frequency_hz, cfg.bandwidth_hz) == (160e6, 20e6)
    assert (cfg.antennas_tbs, cfg.antennas_sat, cfg.users_near, cfg.users_off) == (8, 8, 4, 6)
    assert (cfg.sat_max_gain_dbi, cfg.tbs_gain_dbi, cfg.user_gain_dbi) == (55, 30, 20)
    assert cfg.orbit_altitude_m == 550e3 and cfg.noise_dbm == -110
    assert (cfg.rain_log_mean, cfg.rain_log_variance) == (-2.6, 1.63)
    assert cfg.three_db_angle_deg == 0.4 and cfg.rician_factor == 10
    assert cfg.rate_near == cfg.rate_off == 0.1
    assert cfg.tbs_power_dbm == 47 and (cfg.tbs_height_m, cfg.user_height_m) == (50, 10)


def test_linear_conversion_happens_once():
    lin = ExperimentConfig().linear
    assert lin.noise_w == pytest.approx(1e-14)
    assert lin.tbs_power_cap_w == pytest.approx(50.118723362727)
    assert lin.sat_max_gain == pytest.approx(10 ** 5.5)
    assert lin.wavelength_m == pytest.approx(1.8737028625)


def test_roundtrip(tmp_path):
    cfg = ExperimentConfig(users_near=3, sweep_axis="users_near", sweep_values=(1, 2, 3))
    dump(cfg, tmp_path / "c.json")
    assert load(tmp_path / "c.json") == cfg


def test_unknown_key_named():
    with pytest.raises(ConfigError, match="'antenas_tbs'"):
        from_dict({"antenas_tbs": 4})


@pytest.mark.parametrize("key,val", [
    ("trials", 0), ("trials", 2.5), ("antennas_tbs", -1), ("rate_near", -0.1),
    ("sweep_axis", "bogus"), ("noise_dbm", "loud"), ("sweep_values", [0.3, 0.2]),
    ("sweep_values", []), ("carrier_frequency_hz", float("inf")), ("channel_model", "second"),
])
def test_invalid_values_name_the_key(key, val):
    with pytest.raises(ConfigError) as exc:
        from_dict({key: val})
    assert exc.value.key == key


def test_integer_axis_needs_integer_values():
    with pytest.raises(ConfigError, match="sweep_values"):
        ExperimentConfig(sweep_axis="antennas_sat", sweep_values=(4, 6.5))


def test_missing_file():
    with pytest.raises(FileNotFoundError):
        load("/nonexistent/config.json")


def test_bad_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        load(p)
    p.write_text(json.dumps([1, 2]))
    with pytest.raises(ConfigError):
        load(p)


@pytest.mark.parametrize("axis,value,attr", [
    ("rate", 0.3, "rate_near"), ("users_near", 2, "users_near"), ("antennas_sat", 6, "antennas_sat"),
    ("tidal_off", 0.1, "tidal_off"),
])
def test_with_axis_value(axis, value, attr):
    cfg = ExperimentConfig(sweep_axis=axis, sweep_values=(value,)).with_axis_value(value)
    assert getattr(cfg, attr) == value
    if axis == "rate":
        assert cfg.rate_off == value


@pytest.mark.parametrize("path", sorted((Path(__file__).parents[1] / "configs").glob("*.json")),
                         ids=lambda p: p.stem)
def test_shipped_configs_load(path):
    cfg = load(path)
    assert cfg.trials >= 1 and cfg.sweep_values
