"""Cleaning and monthly aggregation of weigh events and weather."""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ._time import StudyWindow, YearMonth
from .ingest import WeatherDaily, WeighEvent

__all__ = [
    "StudyWindow", "YearMonth", "CleaningPolicy", "MonthlyWeight", "MonthlyWeather",
    "PreprocessError", "MissingCellError", "CoverageError",
    "select_eligible", "outlier_statistics", "remove_outlier_events",
    "remove_irregular_animals", "aggregate_monthly_weights", "aggregate_monthly_weather",
]

MAD_CONSISTENCY = 1.4826


class PreprocessError(ValueError):
    pass


class MissingCellError(PreprocessError):
    def __init__(self, eid: str, month: YearMonth):
        self.eid, self.month = eid, month
        super().__init__(f"no surviving weigh events for {eid} in {month} and imputation is off")


class CoverageError(PreprocessError):
    pass


@dataclass(frozen=True)
class CleaningPolicy:
    outlier_z_threshold: float = 3.5
    irregular_drop_pct: float = 0.10
    impute: bool = True

    def __post_init__(self) -> None:
        if not self.outlier_z_threshold > 0:
            raise ValueError("outlier_z_threshold must be positive")
        if not 0 < self.irregular_drop_pct < 1:
            raise ValueError("irregular_drop_pct must lie in (0, 1)")


@dataclass(frozen=True)
class MonthlyWeight:
    eid: str
    month: YearMonth
    mean_weight_kg: float
    n_events: int
    imputed: bool = False


@dataclass(frozen=True)
class MonthlyWeather:
    month: YearMonth
    mean_daily_rainfall_mm: float
    mean_temperature_c: float


def select_eligible(events: Iterable[WeighEvent], window: StudyWindow) -> set[str]:
    """Animals weighed at least once in every month of the window."""
    seen: dict[str, set[YearMonth]] = defaultdict(set)
    for e in events:
        if window.contains(e.date):
            seen[e.eid].add(YearMonth.of(e.date))
    need = len(window)
    return {eid for eid, months in seen.items() if len(months) == need}


def _median(values: np.ndarray) -> float:
    return float(np.median(values))


def outlier_statistics(events: Iterable[WeighEvent]) -> dict[str, tuple[float, float]]:
    """Per-animal (median, MAD) of event weights, for animals with at least 3 events."""
    by_eid: dict[str, list[float]] = defaultdict(list)
    for e in events:
        by_eid[e.eid].append(e.weight_kg)
    stats = {}
    for eid, ws in by_eid.items():
        if len(ws) < 3:
            continue
        arr = np.asarray(ws)
        med = _median(arr)
        stats[eid] = (med, _median(np.abs(arr - med)))
    return stats


def robust_z(x: float, median: float, mad: float) -> float:
    dev = abs(x - median)
    if dev == 0:
        return 0.0
    if mad == 0:
        return math.inf
    return dev / (MAD_CONSISTENCY * mad)


def remove_outlier_events(events: Sequence[WeighEvent], policy: CleaningPolicy,
                          stats: dict[str, tuple[float, float]] | None = None) -> list[WeighEvent]:
    """Drop events whose per-animal robust z-score exceeds the policy threshold.

    ``stats`` freezes the per-animal (median, MAD); by default they are
    estimated from ``events``. Animals with fewer than three events pass
    through untouched. When MAD is zero, events equal to the median are kept
    and any other value counts as infinitely far out.
    """
    if stats is None:
        stats = outlier_statistics(events)
    thr = policy.outlier_z_threshold
    kept = []
    for e in events:
        st = stats.get(e.eid)
        if st is None or not robust_z(e.weight_kg, *st) > thr:
            kept.append(e)
    return kept


def _slope(values: Sequence[float]) -> float:
    t = np.arange(len(values), dtype=float)
    t -= t.mean()
    # shifting by the first value keeps a constant series exactly zero
    v = np.asarray(values, dtype=float) - values[0]
    return float(np.dot(t, v - v.mean()) / np.dot(t, t))


def remove_irregular_animals(panel: Iterable[MonthlyWeight], policy: CleaningPolicy) -> set[str]:
    """Animals whose monthly means drop too sharply or fail to trend upward."""
    series: dict[str, list[MonthlyWeight]] = defaultdict(list)
    for mw in panel:
        series[mw.eid].append(mw)
    removed = set()
    for eid, cells in series.items():
        means = [c.mean_weight_kg for c in sorted(cells, key=lambda c: c.month)]
        drops = any((b - a) / a < -policy.irregular_drop_pct for a, b in zip(means, means[1:]))
        if drops or len(means) < 2 or _slope(means) <= 0:
            removed.add(eid)
    return removed


def aggregate_monthly_weights(events: Iterable[WeighEvent], eligible: set[str], window: StudyWindow,
                              policy: CleaningPolicy = CleaningPolicy()) -> list[MonthlyWeight]:
    """Mean weight per (eligible animal, window month), sorted by (eid, month).

    Cells left empty by outlier removal take the mob mean of that month when
    ``policy.impute`` is set.
    """
    months = window.months()
    sums: dict[tuple[str, YearMonth], list[float]] = defaultdict(list)
    for e in events:
        if e.eid in eligible and window.contains(e.date):
            sums[(e.eid, YearMonth.of(e.date))].append(e.weight_kg)

    observed: dict[tuple[str, YearMonth], float] = {
        key: math.fsum(ws) / len(ws) for key, ws in sums.items()
    }
    mob_mean: dict[YearMonth, float] = {}
    for m in months:
        vals = [observed[(eid, m)] for eid in eligible if (eid, m) in observed]
        if vals:
            mob_mean[m] = math.fsum(vals) / len(vals)

    out = []
    for eid in sorted(eligible):
        for m in months:
            key = (eid, m)
            if key in observed:
                out.append(MonthlyWeight(eid, m, observed[key], len(sums[key]), False))
            elif policy.impute and m in mob_mean:
                out.append(MonthlyWeight(eid, m, mob_mean[m], 0, True))
            elif policy.impute:
                raise CoverageError(f"no animal has a surviving weigh event in {m}")
            else:
                raise MissingCellError(eid, m)
    return out


def aggregate_monthly_weather(daily: Iterable[WeatherDaily], months: Sequence[YearMonth]) -> list[MonthlyWeather]:
    """Mean daily rainfall and mean temperature per month over the days observed."""
    rain: dict[YearMonth, list[float]] = defaultdict(list)
    temp: dict[YearMonth, list[float]] = defaultdict(list)
    wanted = set(months)
    for w in daily:
        m = YearMonth.of(w.date)
        if m not in wanted:
            continue
        if w.rainfall_mm is not None:
            rain[m].append(w.rainfall_mm)
        if w.temperature_c is not None:
            temp[m].append(w.temperature_c)
    out = []
    for m in months:
        if not rain[m] or not temp[m]:
            field = "rainfall" if not rain[m] else "temperature"
            raise CoverageError(f"no daily {field} records in {m}")
        out.append(MonthlyWeather(m, math.fsum(rain[m]) / len(rain[m]), math.fsum(temp[m]) / len(temp[m])))
    return out
