import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jsccra.errors import ConfigError, SchemaError
from jsccra.scenario import (
    DEFAULT_CR_SET,
    Scenario,
    SystemConfig,
    User,
    channel_gain_sq,
    dbm_to_watt,
    generate_scenario,
    load_config,
    load_scenario,
    pathloss_db,
    save_scenario,
)

SMALL = SystemConfig(num_users=4, num_rbs=3, num_subchannels=9)


def test_default_constants():
    c = SystemConfig()
    assert c.subchannels_per_rb == 3
    assert c.noise_power_w == pytest.approx(10 ** (-14.4), rel=1e-12)
    assert DEFAULT_CR_SET[0] == Fraction(1, 48) and DEFAULT_CR_SET[-1] == Fraction(1, 6)
    assert len(DEFAULT_CR_SET) == 8


def test_dbm_to_watt():
    assert dbm_to_watt(30.0) == 1.0
    assert dbm_to_watt(0.0) == pytest.approx(1e-3, rel=1e-12)


def test_pathloss_at_one_km():
    assert pathloss_db(1000.0) == pytest.approx(128.1, rel=1e-12)
    assert pathloss_db(100.0) == pytest.approx(128.1 - 37.6, rel=1e-12)


def test_gain_at_one_km_without_shadowing():
    assert channel_gain_sq(1000.0, 0.0, 1.0) == pytest.approx(10 ** (-12.81), rel=1e-12)
    # 10 dB of shadowing loss divides the gain by 10
    assert channel_gain_sq(1000.0, 10.0, 1.0) == pytest.approx(10 ** (-13.81), rel=1e-12)


@pytest.mark.parametrize(
    "changes",
    [
        {"num_rbs": 0},
        {"num_subchannels": 2, "num_rbs": 3},
        {"bs_power_w": -1.0},
        {"cr_set": ()},
        {"cr_set": (Fraction(1, 6), Fraction(1, 12))},
        {"cr_set": (Fraction(3, 2),)},
        {"delay_range_s": (0.0, 1e-3)},
        {"psnr_range_db": (25.0, 20.0)},
        {"cell_radius_m": float("nan")},
        {"min_distance_m": 600.0},
        {"delay_classes_s": ()},
    ],
)
def test_invalid_configs_rejected(changes):
    with pytest.raises(ConfigError):
        SystemConfig(**changes)


def test_config_dict_round_trip():
    c = SystemConfig(num_users=7, delay_classes_s=(4e-3, 6e-3))
    data = json.loads(json.dumps(c.to_dict()))
    assert data["cr_set"][0] == "1/48"
    assert SystemConfig.from_dict(data) == c


def test_config_unknown_field():
    with pytest.raises(SchemaError, match="bogus"):
        SystemConfig.from_dict({"bogus": 1})


def test_load_shipped_default_config():
    from pathlib import Path

    path = Path(__file__).resolve().parents[1] / "configs" / "default_config.json"
    assert load_config(path) == SystemConfig()


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_draws_respect_bounds(seed):
    config = SMALL.replace(rng_seed=seed)
    scenario = generate_scenario(config)
    assert len(scenario.users) == 4
    for u in scenario.users:
        assert config.min_distance_m <= u.distance_m <= config.cell_radius_m
        assert 4e-3 <= u.delay_bound_s <= 6e-3
        assert 20.0 <= u.psnr_bound_db <= 25.0
        assert np.all(u.channel_gain_sq > 0)
        # shadowing in [0, 10] dB and fading > 0 bound the gain from above only by pathloss
        ceiling = 10 ** (-pathloss_db(u.distance_m) / 10)
        assert np.all(u.channel_gain_sq / ceiling < 50.0)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), k=st.integers(1, 6))
def test_users_are_prefix_stable(seed, k):
    small = generate_scenario(SMALL.replace(num_users=k, rng_seed=seed))
    large = generate_scenario(SMALL.replace(num_users=6, rng_seed=seed))
    assert small.users == large.users[:k]


def test_generation_is_deterministic():
    a = generate_scenario(SystemConfig(rng_seed=5))
    b = generate_scenario(SystemConfig(rng_seed=5))
    c = generate_scenario(SystemConfig(rng_seed=6))
    assert a == b
    assert a != c


def test_class_draws_cover_all_classes_and_keep_channels():
    base = SystemConfig(num_users=200, rng_seed=3, delay_range_s=(5e-3, 5e-3))
    classes = generate_scenario(base.replace(delay_classes_s=(4e-3, 5e-3, 6e-3)))
    plain = generate_scenario(base)
    delays = [u.delay_bound_s for u in classes.users]
    assert set(delays) == {4e-3, 5e-3, 6e-3}
    # the class draw replaces the range draw one for one
    assert all(
        np.array_equal(a.channel_gain_sq, b.channel_gain_sq)
        for a, b in zip(classes.users, plain.users)
    )


def test_single_class_equals_pinned_range():
    base = SystemConfig(num_users=10, rng_seed=9, psnr_range_db=(23.0, 23.0))
    pinned = generate_scenario(base.replace(psnr_classes_db=(23.0,)))
    assert generate_scenario(base).users == pinned.users


def test_fading_has_unit_mean():
    config = SystemConfig(num_users=40, shadowing_max_db=0.0, rng_seed=1)
    scenario = generate_scenario(config)
    ratios = np.concatenate([
        u.channel_gain_sq / 10 ** (-pathloss_db(u.distance_m) / 10) for u in scenario.users
    ])
    # Exp(1) fading over 4000 samples: standard error of the mean is about 0.016
    assert abs(ratios.mean() - 1.0) < 0.08


def test_save_load_round_trip_is_exact(tmp_path):
    scenario = generate_scenario(SMALL.replace(rng_seed=12))
    path = tmp_path / "s.json"
    save_scenario(scenario, path)
    assert load_scenario(path) == scenario
    save_scenario(load_scenario(path), tmp_path / "t.json")
    assert path.read_bytes() == (tmp_path / "t.json").read_bytes()


def test_schema_error_names_the_user(tmp_path):
    data = generate_scenario(SMALL).to_dict()
    data["users"][2]["channel_gain_sq"] = data["users"][2]["channel_gain_sq"][:-1]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(data))
    with pytest.raises(SchemaError) as info:
        load_scenario(path)
    assert info.value.path == "users[2] (id 2).channel_gain_sq"


def test_schema_error_on_missing_field():
    data = generate_scenario(SMALL).to_dict()
    del data["users"][0]["psnr_bound_db"]
    with pytest.raises(SchemaError, match="psnr_bound_db"):
        Scenario.from_dict(data)


def test_invalid_json(tmp_path):
    path = tmp_path / "x.json"
    path.write_text("{not json")
    with pytest.raises(SchemaError):
        load_scenario(path)


def test_user_validation():
    with pytest.raises(ConfigError):
        User(0, 10.0, 0.0, 22.0, np.ones(3))
    with pytest.raises(ConfigError):
        User(0, 10.0, 5e-3, 22.0, np.array([1.0, -1.0]))
    with pytest.raises(ConfigError):
        Scenario(SMALL, (User(1, 10.0, 5e-3, 22.0, np.ones(9)),) * 4)


def test_user_gains_are_read_only():
    user = generate_scenario(SMALL).users[0]
    with pytest.raises(ValueError):
        user.channel_gain_sq[0] = 1.0


def test_rb_gains_slices_contiguous_subchannels():
    gains = np.arange(1.0, 10.0)
    user = User(0, 10.0, 5e-3, 22.0, gains)
    assert list(user.rb_gains(1, SMALL)) == [4.0, 5.0, 6.0]


def test_with_config_keeps_users():
    scenario = generate_scenario(SMALL)
    other = scenario.with_config(bs_power_w=0.5)
    assert other.users is scenario.users
    assert other.config.bs_power_w == 0.5
    assert math.isclose(scenario.config.bs_power_w, 1.0)
