"""Monthly panel -> one supervised row per animal per interior month."""
from __future__ import annotations

import csv
import datetime as dt
import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ._time import StudyWindow, YearMonth
from .ingest import AnimalRecord
from .preprocess import CoverageError, MonthlyWeather, MonthlyWeight


class FeatureError(ValueError):
    pass


class ConsistencyError(FeatureError):
    pass


# attribute name -> output column title, in output order; the target comes first
COLUMNS: tuple[tuple[str, str], ...] = (
    ("next_month_weight", "Next month weight"),
    ("weaning_weight", "Weaning weight"),
    ("age_months", "Current age by month"),
    ("current_month_weight", "Current month weight"),
    ("previous_month_weight", "Previous month weight"),
    ("rainfall_0", "Current month rainfall"),
    ("rainfall_1", "Previous first-month rainfall"),
    ("rainfall_2", "Previous second-month rainfall"),
    ("temperature_0", "Current month temperature"),
    ("temperature_1", "Previous first-month temperature"),
    ("temperature_2", "Previous second-month temperature"),
)
TARGET = "next_month_weight"
HEADER = [title for _, title in COLUMNS]
TITLE_OF = dict(COLUMNS)
ATTR_OF = {title: attr for attr, title in COLUMNS}


@dataclass(frozen=True)
class FeatureRow:
    eid: str
    month: YearMonth
    next_month_weight: float
    weaning_weight: float
    age_months: int
    current_month_weight: float
    previous_month_weight: float
    rainfall_0: float
    rainfall_1: float
    rainfall_2: float
    temperature_0: float
    temperature_1: float
    temperature_2: float

    def values(self) -> list:
        return [getattr(self, attr) for attr, _ in COLUMNS]


_WEATHER = ("rainfall_0", "rainfall_1", "rainfall_2", "temperature_0", "temperature_1", "temperature_2")


class DatasetVariant(enum.Enum):
    WEATHER_AND_AGE = "weather-age"
    WEATHER_ONLY = "weather"
    AGE_ONLY = "age"
    BASELINE = "baseline"

    @property
    def predictors(self) -> tuple[str, ...]:
        return _PREDICTORS[self]

    @property
    def title(self) -> str:
        return _TITLES[self]

    @classmethod
    def parse(cls, text: str) -> "DatasetVariant":
        key = text.strip().lower().replace("_", "-")
        for v in cls:
            if key in (v.value, v.name.lower().replace("_", "-")):
                return v
        raise ValueError(f"unknown dataset variant {text!r}")


_PREDICTORS = {
    DatasetVariant.WEATHER_AND_AGE: ("weaning_weight", "age_months", "current_month_weight",
                                     "previous_month_weight") + _WEATHER,
    DatasetVariant.WEATHER_ONLY: ("weaning_weight", "current_month_weight", "previous_month_weight") + _WEATHER,
    DatasetVariant.AGE_ONLY: ("weaning_weight", "age_months", "current_month_weight", "previous_month_weight"),
    DatasetVariant.BASELINE: ("weaning_weight", "current_month_weight", "previous_month_weight"),
}
_TITLES = {
    DatasetVariant.WEATHER_AND_AGE: "Dataset Including Weather and Age Factors",
    DatasetVariant.WEATHER_ONLY: "Dataset With Weather Factors (Excluding Age Factor)",
    DatasetVariant.AGE_ONLY: "Dataset With Age Factor (Excluding Weather Factors)",
    DatasetVariant.BASELINE: "Dataset Excluding Age and Weather Factors",
}
VARIANTS = tuple(DatasetVariant)


def age_in_months(dob: dt.date, month: YearMonth) -> int:
    age = month - YearMonth.of(dob)
    if age < 0:
        raise FeatureError(f"{month} precedes date of birth {dob}")
    return age


def build_feature_rows(weights: Iterable[MonthlyWeight], weather: Iterable[MonthlyWeather],
                       animals: Iterable[AnimalRecord], window: StudyWindow) -> list[FeatureRow]:
    """Rows for every animal in the panel and every month strictly inside the window."""
    panel: dict[str, dict[YearMonth, float]] = {}
    for mw in weights:
        panel.setdefault(mw.eid, {})[mw.month] = mw.mean_weight_kg
    wx = {w.month: w for w in weather}
    missing = [str(m) for m in window.weather_months() if m not in wx]
    if missing:
        raise CoverageError(f"monthly weather missing for {', '.join(missing)}")
    info = {a.eid: a for a in animals}

    months = window.months()
    rows = []
    for eid in sorted(panel):
        if eid not in info:
            raise ConsistencyError(f"{eid} has weights but no animal record")
        cells = panel[eid]
        gaps = [str(m) for m in months if m not in cells]
        if gaps:
            raise ConsistencyError(f"{eid} missing monthly weight for {', '.join(gaps)}")
        animal = info[eid]
        for prev, cur, nxt in zip(months, months[1:], months[2:]):
            w0, w1, w2 = wx[cur], wx[cur - 1], wx[cur - 2]
            rows.append(FeatureRow(
                eid=eid, month=cur,
                next_month_weight=cells[nxt],
                weaning_weight=animal.weaning_weight,
                age_months=age_in_months(animal.date_of_birth, cur),
                current_month_weight=cells[cur],
                previous_month_weight=cells[prev],
                rainfall_0=w0.mean_daily_rainfall_mm, rainfall_1=w1.mean_daily_rainfall_mm,
                rainfall_2=w2.mean_daily_rainfall_mm,
                temperature_0=w0.mean_temperature_c, temperature_1=w1.mean_temperature_c,
                temperature_2=w2.mean_temperature_c,
            ))
    return rows


def select_variant(rows: Sequence[FeatureRow], variant: DatasetVariant) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Predictor matrix, target vector and predictor column titles for a variant."""
    if not rows:
        raise FeatureError("no feature rows to select from")
    attrs = variant.predictors
    X = np.array([[float(getattr(r, a)) for a in attrs] for r in rows], dtype=float)
    y = np.array([r.next_month_weight for r in rows], dtype=float)
    return X, y, [TITLE_OF[a] for a in attrs]


def table_matrix(rows: Sequence[FeatureRow]) -> np.ndarray:
    """All output columns (target first) as a float matrix."""
    return np.array([[float(v) for v in r.values()] for r in rows], dtype=float).reshape(len(rows), len(COLUMNS))


@dataclass
class FeatureTable:
    """A feature table read back from CSV: the full column matrix plus optional row keys."""

    matrix: np.ndarray
    eids: list[str] | None = None
    months: list[YearMonth] | None = None

    def select(self, variant: DatasetVariant) -> tuple[np.ndarray, np.ndarray, list[str]]:
        attrs = [attr for attr, _ in COLUMNS]
        idx = [attrs.index(a) for a in variant.predictors]
        return self.matrix[:, idx].copy(), self.matrix[:, 0].copy(), [TITLE_OF[a] for a in variant.predictors]

    def column(self, attr: str) -> np.ndarray:
        return self.matrix[:, [a for a, _ in COLUMNS].index(attr)]

    def __len__(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_rows(cls, rows: Sequence[FeatureRow]) -> "FeatureTable":
        return cls(table_matrix(rows), [r.eid for r in rows], [r.month for r in rows])


def format_value(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    f = float(v)
    return str(int(f)) if f.is_integer() and abs(f) < 2**53 else repr(f)


def read_feature_table(path, index_path=None) -> FeatureTable:
    """Read a table written by :func:`mobweigh.cli.write_feature_table`."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != HEADER:
            raise FeatureError(f"{path}: unexpected header {header}")
        data = [[float(c) for c in r] for r in reader if r]
    matrix = np.array(data, dtype=float).reshape(len(data), len(HEADER))
    eids = months = None
    if index_path is not None and Path(index_path).exists():
        with open(index_path, newline="", encoding="utf-8") as fh:
            keyed = list(csv.DictReader(fh))
        if len(keyed) != len(data):
            raise FeatureError(f"{index_path}: {len(keyed)} keys for {len(data)} rows")
        eids = [k["eid"] for k in keyed]
        months = [YearMonth.parse(k["month"]) for k in keyed]
    return FeatureTable(matrix, eids, months)
