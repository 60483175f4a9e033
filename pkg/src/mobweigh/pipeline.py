"""Raw bundle -> cleaned monthly panel -> feature rows."""
from __future__ import annotations

from dataclasses import dataclass

from .features import FeatureRow, build_feature_rows
from .ingest import RawBundle, ValidationReport, validate_bundle
from .preprocess import (CleaningPolicy, MonthlyWeather, MonthlyWeight, PreprocessError,
                         aggregate_monthly_weather, aggregate_monthly_weights, remove_irregular_animals,
                         remove_outlier_events, select_eligible)


class NoEligibleAnimalsError(PreprocessError):
    pass


class InvalidBundleError(ValueError):
    def __init__(self, report: ValidationReport):
        self.report = report
        super().__init__("; ".join(f"{f.kind}: {f.detail}" for f in report.findings if f.fatal))


@dataclass
class Prepared:
    eligible: set[str]
    irregular: set[str]
    outliers_removed: int
    weights: list[MonthlyWeight]
    weather: list[MonthlyWeather]
    rows: list[FeatureRow]
    validation: ValidationReport


def prepare(bundle: RawBundle, policy: CleaningPolicy = CleaningPolicy()) -> Prepared:
    report = validate_bundle(bundle)
    if not report.accepted:
        raise InvalidBundleError(report)
    window = bundle.window
    eligible = select_eligible(bundle.events, window)
    if not eligible:
        raise NoEligibleAnimalsError("no eligible animals: none was weighed in every month of the window")
    events = [e for e in bundle.events if e.eid in eligible and window.contains(e.date)]
    cleaned = remove_outlier_events(events, policy)
    panel = aggregate_monthly_weights(cleaned, eligible, window, policy)
    irregular = remove_irregular_animals(panel, policy)
    kept = [mw for mw in panel if mw.eid not in irregular]
    if not kept:
        raise NoEligibleAnimalsError("no eligible animals left after irregular-growth removal")
    weather = aggregate_monthly_weather(bundle.weather, window.weather_months())
    rows = build_feature_rows(kept, weather, bundle.animals, window)
    return Prepared(eligible, irregular, len(events) - len(cleaned), kept, weather, rows, report)
