import datetime as dt

import numpy as np
import pytest

from mobweigh.ingest import validate_bundle
from mobweigh.synth import SynthConfig, bundle_csvs, generate_bundle, ground_truth, simulate


def test_deterministic_for_seed():
    a = bundle_csvs(generate_bundle(SynthConfig(n_animals=10, seed=4)))
    b = bundle_csvs(generate_bundle(SynthConfig(n_animals=10, seed=4)))
    c = bundle_csvs(generate_bundle(SynthConfig(n_animals=10, seed=5)))
    assert a == b and a != c


def test_bundle_is_a_copy():
    cfg = SynthConfig(n_animals=3, seed=1)
    b = generate_bundle(cfg)
    b.events.clear()
    assert generate_bundle(cfg).events


def test_noise_free_events_equal_ground_truth():
    cfg = SynthConfig(n_animals=4, measurement_noise_sd=0.0, seed=8)
    for e in generate_bundle(cfg).events:
        assert e.weight_kg == ground_truth(cfg, e.eid, e.date)


def test_growth_model_daily_increment():
    cfg = SynthConfig(n_animals=2, adg_sd=0.0, measurement_noise_sd=0.0, seed=3)
    herd = simulate(cfg)
    animal = herd.bundle.animals[0]
    weather = {w.date: w for w in herd.bundle.weather}
    d = dt.date(2022, 5, 10)
    age = (d.year - animal.date_of_birth.year) * 12 + d.month - animal.date_of_birth.month
    w = weather[d]
    expected = (cfg.base_adg + cfg.age_effect * age + cfg.rain_boost * w.rainfall_mm
                - cfg.heat_penalty * max(0.0, w.temperature_c - cfg.heat_threshold))
    step = ground_truth(cfg, animal.eid, d + dt.timedelta(days=1)) - ground_truth(cfg, animal.eid, d)
    assert step == pytest.approx(expected, abs=1e-9)
    assert ground_truth(cfg, animal.eid, animal.weaning_date) == animal.weaning_weight


def test_weather_covers_two_months_before_window_and_validates():
    b = generate_bundle(SynthConfig(n_animals=5))
    assert b.weather[0].date == dt.date(2021, 12, 1) and b.weather[-1].date == dt.date(2022, 10, 31)
    assert not validate_bundle(b)
    assert all(b.window.contains(e.date) for e in b.events)


def test_access_probability_thins_events():
    full = generate_bundle(SynthConfig(n_animals=5, daily_access_prob=1.0))
    part = generate_bundle(SynthConfig(n_animals=5, daily_access_prob=0.3))
    assert len(full.events) == 5 * 273
    assert 0.2 < len(part.events) / len(full.events) < 0.4


def test_config_validation():
    with pytest.raises(ValueError):
        SynthConfig(n_animals=0)
    with pytest.raises(ValueError):
        SynthConfig(daily_access_prob=1.5)
    with pytest.raises(ValueError):
        SynthConfig(weaning_date=dt.date(2021, 8, 1))
    with pytest.raises(KeyError):
        ground_truth(SynthConfig(n_animals=1), "nope", dt.date(2022, 3, 1))
