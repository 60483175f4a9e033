"""Deterministic synthetic herd: animals, daily weather and weigh events.

The growth model is piecewise-daily linear. On day ``d`` an animal gains

    base_adg + animal offset + age_effect * age_months(d)
    - heat_penalty * max(0, temperature(d) - heat_threshold)
    + rain_boost * rainfall(d)

kilograms, starting from its weaning weight on the weaning date.
"""
from __future__ import annotations

import csv
import datetime as dt
import io
import json
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from ._time import DEFAULT_WINDOW, StudyWindow, YearMonth
from .ingest import (ACTUAL_WEIGHT, DATE_OF_BIRTH, DATE_OF_WEIGHT, EID, RAINFALL_DATE, RAINFALL_QUANTITY,
                     TEMPERATURE, TEMPERATURE_DATE, WEANING_DATE, WEANING_WEIGHT, AnimalRecord, RawBundle,
                     WeatherDaily, WeighEvent, identity_manifest)

# (mean daily rainfall mm, mean temperature C) by calendar month, Jan..Dec;
# loosely a southern-hemisphere inland grazing climate
DEFAULT_PROFILE: tuple[tuple[float, float], ...] = (
    (3.3, 31.3), (0.6, 30.7), (1.1, 28.9), (2.2, 22.9), (2.5, 17.8), (1.5, 13.1),
    (0.6, 13.9), (2.6, 14.8), (2.5, 17.4), (2.2, 21.0), (1.8, 25.0), (1.6, 29.0),
)


@dataclass(frozen=True)
class SynthConfig:
    n_animals: int = 108
    window: StudyWindow = DEFAULT_WINDOW
    dob_start: dt.date = dt.date(2021, 7, 15)
    dob_end: dt.date = dt.date(2021, 10, 15)
    weaning_date: dt.date = dt.date(2022, 1, 31)
    weaning_weight_mean: float = 200.0
    weaning_weight_sd: float = 20.0
    base_adg: float = 0.9
    adg_sd: float = 0.2
    age_effect: float = -0.02
    heat_penalty: float = 0.1
    heat_threshold: float = 25.0
    rain_boost: float = 0.3
    daily_access_prob: float = 0.4
    measurement_noise_sd: float = 10.0
    weather_profile: tuple[tuple[float, float], ...] = DEFAULT_PROFILE
    rain_jitter: float = 0.8
    temperature_jitter: float = 3.0
    seed: int = 0

    def __post_init__(self):
        if self.n_animals < 1:
            raise ValueError("n_animals must be positive")
        if not 0 <= self.daily_access_prob <= 1:
            raise ValueError("daily_access_prob must lie in [0, 1]")
        for name in ("weaning_weight_sd", "adg_sd", "measurement_noise_sd", "temperature_jitter"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not 0 <= self.rain_jitter <= 1:
            raise ValueError("rain_jitter must lie in [0, 1]")
        if self.dob_end < self.dob_start:
            raise ValueError("empty date-of-birth range")
        if not self.dob_end < self.weaning_date:
            raise ValueError("weaning date must follow every date of birth")
        if self.weaning_date < self.weather_start or self.weaning_date > self.window.last_month.last_day():
            raise ValueError("weaning date must fall inside the weather period")
        if len(self.weather_profile) != 12:
            raise ValueError("weather_profile needs 12 monthly entries")

    @property
    def weather_start(self) -> dt.date:
        return (self.window.first_month - 2).first_day()

    @property
    def end(self) -> dt.date:
        return self.window.last_month.last_day()


def make_eid(i: int) -> str:
    return f"982{123000000000 + i:012d}"


@dataclass
class SynthHerd:
    config: SynthConfig
    bundle: RawBundle
    days: list[dt.date]
    truth: dict[str, np.ndarray]  # weight at the start of each day in ``days``
    offsets: dict[str, float] = field(default_factory=dict)

    def ground_truth(self, eid: str, date: dt.date) -> float:
        if eid not in self.truth:
            raise KeyError(f"unknown EID {eid}")
        first = self.bundle_animal(eid).weaning_date
        if date < first or date > self.days[-1]:
            raise ValueError(f"{date} outside the simulated span {first}..{self.days[-1]}")
        return float(self.truth[eid][(date - self.days[0]).days])

    def bundle_animal(self, eid: str) -> AnimalRecord:
        for a in self.bundle.animals:
            if a.eid == eid:
                return a
        raise KeyError(eid)


def _weather(cfg: SynthConfig, rng: np.random.Generator, days: list[dt.date]):
    rain = np.empty(len(days))
    temp = np.empty(len(days))
    for k, d in enumerate(days):
        r_mean, t_mean = cfg.weather_profile[d.month - 1]
        rain[k] = r_mean * (1.0 + cfg.rain_jitter * rng.uniform(-1.0, 1.0))
        temp[k] = t_mean + cfg.temperature_jitter * rng.uniform(-1.0, 1.0)
    return rain, temp


@lru_cache(maxsize=8)
def simulate(cfg: SynthConfig) -> SynthHerd:
    ss = np.random.SeedSequence(cfg.seed & (2**64 - 1))
    streams = ss.spawn(cfg.n_animals + 1)
    n_days = (cfg.end - cfg.weather_start).days + 1
    days = [cfg.weather_start + dt.timedelta(days=k) for k in range(n_days)]
    rain, temp = _weather(cfg, np.random.default_rng(streams[0]), days)
    weather = [WeatherDaily(d, float(r), float(t)) for d, r, t in zip(days, rain, temp)]
    env_gain = cfg.rain_boost * rain - cfg.heat_penalty * np.maximum(0.0, temp - cfg.heat_threshold)
    month_of_day = np.array([YearMonth.of(d).index for d in days])
    w0 = (cfg.weaning_date - cfg.weather_start).days
    in_window = np.array([cfg.window.contains(d) for d in days])

    dob_span = (cfg.dob_end - cfg.dob_start).days
    animals, events, truth, offsets = [], [], {}, {}
    for i in range(cfg.n_animals):
        rng = np.random.default_rng(streams[i + 1])
        eid = make_eid(i)
        dob = cfg.dob_start + dt.timedelta(days=int(rng.integers(0, dob_span + 1)))
        ww = float(rng.normal(cfg.weaning_weight_mean, cfg.weaning_weight_sd))
        ww = max(ww, 0.25 * cfg.weaning_weight_mean)
        offset = float(rng.normal(0.0, cfg.adg_sd)) if cfg.adg_sd > 0 else 0.0
        age = month_of_day - YearMonth.of(dob).index
        gain = cfg.base_adg + offset + cfg.age_effect * age + env_gain
        weights = np.full(n_days, np.nan)
        weights[w0] = ww
        weights[w0 + 1:] = ww + np.cumsum(gain[w0:-1])
        access = rng.random(n_days) < cfg.daily_access_prob
        noise = rng.normal(0.0, cfg.measurement_noise_sd, n_days) if cfg.measurement_noise_sd > 0 else np.zeros(n_days)
        for k in np.nonzero(access & in_window)[0]:
            events.append(WeighEvent(eid, days[k], float(weights[k] + noise[k])))
        animals.append(AnimalRecord(eid, dob, cfg.weaning_date, ww))
        truth[eid] = weights
        offsets[eid] = offset
    bundle = RawBundle(animals, weather, events, cfg.window)
    return SynthHerd(cfg, bundle, days, truth, offsets)


def generate_bundle(cfg: SynthConfig) -> RawBundle:
    """A fresh copy of the simulated bundle (the simulation itself is cached)."""
    b = simulate(cfg).bundle
    return RawBundle(list(b.animals), list(b.weather), list(b.events), b.window)


def ground_truth(cfg: SynthConfig, eid: str, date: dt.date) -> float:
    """Noise-free model weight of ``eid`` at the start of ``date``."""
    return simulate(cfg).ground_truth(eid, date)


def _num(v: float) -> str:
    return repr(float(v))


def bundle_csvs(bundle: RawBundle) -> dict[str, str]:
    """CSV text for animals.csv, weather.csv and weights.csv (canonical headers)."""
    def render(header, rows):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        return buf.getvalue()

    animals = render([EID, DATE_OF_BIRTH, WEANING_DATE, WEANING_WEIGHT],
                     [[a.eid, a.date_of_birth.isoformat(), a.weaning_date.isoformat(), _num(a.weaning_weight)]
                      for a in bundle.animals])
    weather_rows = []
    for w in bundle.weather:
        d = w.date.isoformat()
        weather_rows.append([d if w.rainfall_mm is not None else "",
                             _num(w.rainfall_mm) if w.rainfall_mm is not None else "",
                             d if w.temperature_c is not None else "",
                             _num(w.temperature_c) if w.temperature_c is not None else ""])
    weather = render([RAINFALL_DATE, RAINFALL_QUANTITY, TEMPERATURE_DATE, TEMPERATURE], weather_rows)
    weights = render([EID, DATE_OF_WEIGHT, ACTUAL_WEIGHT],
                     [[e.eid, e.date.isoformat(), _num(e.weight_kg)] for e in bundle.events])
    return {"animals.csv": animals, "weather.csv": weather, "weights.csv": weights}


def write_bundle(bundle: RawBundle, out_dir) -> Path:
    """Write the three CSVs plus ``manifest.json``; returns the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in bundle_csvs(bundle).items():
        (out / name).write_text(text, encoding="utf-8")
    manifest = identity_manifest(Path("animals.csv"), Path("weather.csv"), Path("weights.csv"))
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest.to_json(), indent=2) + "\n", encoding="utf-8")
    return path
