"""Raw CSV ingestion driven by a column-mapping manifest.

Three kinds of source file are understood (``animal``, ``weather``,
``weights``). A manifest maps the required feature names onto whatever
headers a particular export uses, and declares the date format per file.
"""
from __future__ import annotations

import csv
import datetime as dt
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from ._time import StudyWindow, YearMonth

ROLES = ("animal", "weather", "weights")

EID = "EID"
DATE_OF_BIRTH = "Date of Birth"
WEANING_DATE = "Weaning Date"
WEANING_WEIGHT = "Weaning Weight"
DATE_OF_WEIGHT = "Date of Weight"
ACTUAL_WEIGHT = "Actual Weight"
RAINFALL_DATE = "Rainfall Date"
RAINFALL_QUANTITY = "Rainfall Quantity"
TEMPERATURE_DATE = "Temperature Date"
TEMPERATURE = "Temperature"

REQUIRED_FEATURES = {
    "animal": (EID, DATE_OF_BIRTH, WEANING_DATE, WEANING_WEIGHT),
    "weights": (EID, DATE_OF_WEIGHT, ACTUAL_WEIGHT),
}
# a weather file must carry at least one complete (date, value) pair
WEATHER_PAIRS = ((RAINFALL_DATE, RAINFALL_QUANTITY), (TEMPERATURE_DATE, TEMPERATURE))

DEFAULT_DATE_FORMAT = "YYYY-MM-DD"


class IngestError(ValueError):
    """Base class for ingestion failures."""


class ManifestError(IngestError):
    pass


class RowError(IngestError):
    def __init__(self, path, row: int, message: str):
        self.path = str(path)
        self.row = row
        super().__init__(f"{path}: data row {row}: {message}")


class DuplicateKeyError(IngestError):
    pass


@dataclass(frozen=True)
class AnimalRecord:
    eid: str
    date_of_birth: dt.date
    weaning_date: dt.date
    weaning_weight: float


@dataclass(frozen=True)
class WeatherDaily:
    """One day of weather. ``None`` marks a field no source observed."""

    date: dt.date
    rainfall_mm: float | None = None
    temperature_c: float | None = None

    @property
    def rainfall_missing(self) -> bool:
        return self.rainfall_mm is None

    @property
    def temperature_missing(self) -> bool:
        return self.temperature_c is None


@dataclass(frozen=True)
class WeighEvent:
    eid: str
    date: dt.date
    weight_kg: float


@dataclass(frozen=True)
class SourceFile:
    path: Path
    role: str
    columns: Mapping[str, str]
    date_format: str = DEFAULT_DATE_FORMAT


@dataclass(frozen=True)
class ColumnManifest:
    files: tuple[SourceFile, ...]

    def for_role(self, role: str) -> list[SourceFile]:
        return [f for f in self.files if f.role == role]

    def lookup(self, path) -> SourceFile:
        target = Path(path).resolve()
        for f in self.files:
            if f.path.resolve() == target:
                return f
        raise ManifestError(f"{path} is not declared in the manifest")

    def to_json(self, relative_to: Path | None = None) -> dict:
        out = []
        for f in self.files:
            p = f.path
            if relative_to is not None:
                try:
                    p = p.relative_to(relative_to)
                except ValueError:
                    pass
            out.append({"path": str(p), "role": f.role, "date_format": f.date_format,
                        "columns": dict(f.columns)})
        return {"files": out}


@dataclass
class RawBundle:
    animals: list[AnimalRecord]
    weather: list[WeatherDaily]
    events: list[WeighEvent]
    window: StudyWindow


@dataclass(frozen=True)
class Finding:
    kind: str
    fatal: bool
    detail: str
    items: tuple = ()


@dataclass
class ValidationReport:
    findings: list[Finding] = field(default_factory=list)

    @property
    def accepted(self) -> bool:
        return not any(f.fatal for f in self.findings)

    def of_kind(self, kind: str) -> list[Finding]:
        return [f for f in self.findings if f.kind == kind]

    def __bool__(self) -> bool:
        return bool(self.findings)


# -- manifest -----------------------------------------------------------------

def _validate_columns(role: str, columns: Mapping[str, str], where: str) -> None:
    if role == "weather":
        pairs = [p for p in WEATHER_PAIRS if any(k in columns for k in p)]
        if not pairs:
            raise ManifestError(f"{where}: weather file maps neither rainfall nor temperature")
        for pair in pairs:
            missing = [k for k in pair if k not in columns]
            if missing:
                raise ManifestError(f"{where}: weather file missing mapping for {missing}")
        return
    missing = [k for k in REQUIRED_FEATURES[role] if k not in columns]
    if missing:
        raise ManifestError(f"{where}: role {role!r} missing mapping for {missing}")


def manifest_from_dict(doc: Mapping, base_dir: Path | None = None) -> ColumnManifest:
    if "files" not in doc or not isinstance(doc["files"], list):
        raise ManifestError("manifest must contain a 'files' list")
    files = []
    for i, entry in enumerate(doc["files"]):
        where = f"files[{i}]"
        try:
            path = Path(entry["path"])
            role = entry["role"]
        except (KeyError, TypeError) as exc:
            raise ManifestError(f"{where}: missing {exc}") from None
        if role not in ROLES:
            raise ManifestError(f"{where}: unknown role {role!r}")
        columns = dict(entry.get("columns") or {})
        _validate_columns(role, columns, where)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        files.append(SourceFile(path, role, columns, entry.get("date_format") or DEFAULT_DATE_FORMAT))
    roles = {f.role for f in files}
    for role in ROLES:
        if role not in roles:
            raise ManifestError(f"manifest declares no {role!r} file")
    mapped = {k for f in files if f.role == "weather" for k in f.columns}
    for pair in WEATHER_PAIRS:
        if pair[1] not in mapped:
            raise ManifestError(f"no weather file maps {pair[1]!r}")
    return ColumnManifest(tuple(files))


def load_manifest(path) -> ColumnManifest:
    """Read a JSON manifest; relative file paths resolve against its directory."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return manifest_from_dict(doc, base_dir=path.parent)


def identity_manifest(animal: Path, weather: Path, weights: Path,
                      date_format: str = DEFAULT_DATE_FORMAT) -> ColumnManifest:
    """Manifest for files whose headers already use the canonical feature names."""
    weather_cols = {k: k for pair in WEATHER_PAIRS for k in pair}
    return ColumnManifest((
        SourceFile(Path(animal), "animal", {k: k for k in REQUIRED_FEATURES["animal"]}, date_format),
        SourceFile(Path(weather), "weather", weather_cols, date_format),
        SourceFile(Path(weights), "weights", {k: k for k in REQUIRED_FEATURES["weights"]}, date_format),
    ))


# -- parsing ------------------------------------------------------------------

_TOKENS = (("YYYY", "%Y"), ("YY", "%y"), ("MM", "%m"), ("DD", "%d"), ("Mon", "%b"))


def strptime_format(fmt: str) -> str:
    """Translate ``YYYY-MM-DD`` style patterns; strftime patterns pass through."""
    if "%" in fmt:
        return fmt
    out = fmt
    for token, directive in _TOKENS:
        out = out.replace(token, directive)
    return out


def _parse_date(text: str, fmt: str) -> dt.date:
    return dt.datetime.strptime(text.strip(), fmt).date()


def _parse_float(text: str) -> float:
    value = float(text.strip())
    if not math.isfinite(value):
        raise ValueError(f"non-finite number {text!r}")
    return value


def _read_rows(path: Path, columns: Mapping[str, str]) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ManifestError(f"{path}: file has no header row") from None
        rows = [r for r in reader if any(cell.strip() for cell in r)]
    header = [h.strip() for h in header]
    absent = [src for src in columns.values() if src not in header]
    if absent:
        raise ManifestError(f"{path}: mapped column(s) {absent} not in header {header}")
    return header, rows


def parse_source(path, manifest: ColumnManifest, role: str) -> list:
    """Parse one declared source file into typed records.

    Returns AnimalRecord, WeatherDaily or WeighEvent instances depending on
    ``role``. Row numbers in errors count data rows from 1.
    """
    spec = manifest.lookup(path)
    if spec.role != role:
        raise ManifestError(f"{path} is declared as {spec.role!r}, not {role!r}")
    header, rows = _read_rows(Path(path), spec.columns)
    col = {feat: header.index(src) for feat, src in spec.columns.items()}
    fmt = strptime_format(spec.date_format)
    parse_row = {"animal": _animal_row, "weather": _weather_rows, "weights": _weigh_row}[role]

    records: list = []
    for i, row in enumerate(rows, start=1):
        try:
            cells = {feat: row[j] if j < len(row) else "" for feat, j in col.items()}
            out = parse_row(cells, fmt)
        except (ValueError, IndexError) as exc:
            raise RowError(path, i, str(exc)) from None
        if role == "weather":
            records.extend(out)
        else:
            records.append(out)

    if role == "animal":
        dupes = sorted(k for k, n in Counter(a.eid for a in records).items() if n > 1)
        if dupes:
            raise DuplicateKeyError(f"{path}: duplicate EID(s) {dupes}")
    elif role == "weather":
        records = merge_weather([records], source=str(path))
    return records


def _animal_row(cells, fmt) -> AnimalRecord:
    eid = cells[EID].strip()
    if not eid:
        raise ValueError("empty EID")
    return AnimalRecord(
        eid=eid,
        date_of_birth=_parse_date(cells[DATE_OF_BIRTH], fmt),
        weaning_date=_parse_date(cells[WEANING_DATE], fmt),
        weaning_weight=_parse_float(cells[WEANING_WEIGHT]),
    )


def _weigh_row(cells, fmt) -> WeighEvent:
    eid = cells[EID].strip()
    if not eid:
        raise ValueError("empty EID")
    return WeighEvent(eid, _parse_date(cells[DATE_OF_WEIGHT], fmt), _parse_float(cells[ACTUAL_WEIGHT]))


def _weather_rows(cells, fmt) -> list[WeatherDaily]:
    # rainfall and temperature may sit on one row with different dates
    out = []
    if RAINFALL_DATE in cells and cells[RAINFALL_DATE].strip():
        rain = _parse_float(cells[RAINFALL_QUANTITY])
        if rain < 0:
            raise ValueError(f"negative rainfall {rain}")
        out.append(WeatherDaily(_parse_date(cells[RAINFALL_DATE], fmt), rainfall_mm=rain))
    if TEMPERATURE_DATE in cells and cells[TEMPERATURE_DATE].strip():
        out.append(WeatherDaily(_parse_date(cells[TEMPERATURE_DATE], fmt),
                                temperature_c=_parse_float(cells[TEMPERATURE])))
    return out


def merge_weather(sources: Iterable[Sequence[WeatherDaily]], source: str = "weather") -> list[WeatherDaily]:
    """Merge partial daily observations by date; each field may be set once per date."""
    rain: dict[dt.date, float] = {}
    temp: dict[dt.date, float] = {}
    for records in sources:
        for w in records:
            if w.rainfall_mm is not None:
                if w.date in rain:
                    raise DuplicateKeyError(f"{source}: duplicate rainfall for {w.date}")
                rain[w.date] = w.rainfall_mm
            if w.temperature_c is not None:
                if w.date in temp:
                    raise DuplicateKeyError(f"{source}: duplicate temperature for {w.date}")
                temp[w.date] = w.temperature_c
    days = sorted(set(rain) | set(temp))
    return [WeatherDaily(d, rain.get(d), temp.get(d)) for d in days]


def load_bundle(manifest: ColumnManifest, window: StudyWindow) -> RawBundle:
    animals: list[AnimalRecord] = []
    for f in manifest.for_role("animal"):
        animals.extend(parse_source(f.path, manifest, "animal"))
    dupes = sorted(k for k, n in Counter(a.eid for a in animals).items() if n > 1)
    if dupes:
        raise DuplicateKeyError(f"duplicate EID(s) across animal files: {dupes}")
    weather = merge_weather(parse_source(f.path, manifest, "weather") for f in manifest.for_role("weather"))
    events: list[WeighEvent] = []
    for f in manifest.for_role("weights"):
        events.extend(parse_source(f.path, manifest, "weights"))
    return RawBundle(animals, weather, events, window)


# -- validation ---------------------------------------------------------------

def validate_bundle(bundle: RawBundle) -> ValidationReport:
    """Cross-source consistency checks; never raises."""
    report = ValidationReport()
    known = {a.eid for a in bundle.animals}

    orphans = [e for e in bundle.events if e.eid not in known]
    if orphans:
        ids = tuple(sorted({e.eid for e in orphans}))
        report.findings.append(Finding("orphan_events", True,
                                       f"{len(orphans)} weigh event(s) reference unknown EID(s)", ids))

    bad_ww = tuple(a.eid for a in bundle.animals if not a.weaning_weight > 0)
    if bad_ww:
        report.findings.append(Finding("weaning_weight", True, "non-positive weaning weight", bad_ww))

    bad_dates = tuple(a.eid for a in bundle.animals if not a.weaning_date > a.date_of_birth)
    if bad_dates:
        report.findings.append(Finding("weaning_date", True, "weaning date not after date of birth", bad_dates))

    bad_weights = tuple(sorted({e.eid for e in bundle.events if not e.weight_kg > 0}))
    if bad_weights:
        report.findings.append(Finding("event_weight", True, "non-positive weigh event", bad_weights))

    required = bundle.window.weather_months()
    rain_months = {YearMonth.of(w.date) for w in bundle.weather if w.rainfall_mm is not None}
    temp_months = {YearMonth.of(w.date) for w in bundle.weather if w.temperature_c is not None}
    for label, seen in (("rainfall", rain_months), ("temperature", temp_months)):
        gaps = tuple(str(m) for m in required if m not in seen)
        if gaps:
            report.findings.append(Finding(f"{label}_coverage", True,
                                           f"no {label} observations for {', '.join(gaps)}", gaps))
    return report
