import datetime as dt
import json

import pytest

from mobweigh._time import StudyWindow, YearMonth
from mobweigh.ingest import (AnimalRecord, ColumnManifest, DuplicateKeyError, ManifestError, RawBundle,
                             RowError, SourceFile, WeatherDaily, WeighEvent, load_bundle, load_manifest,
                             manifest_from_dict, merge_weather, parse_source, strptime_format,
                             validate_bundle)
from mobweigh.synth import SynthConfig, bundle_csvs, generate_bundle, write_bundle

ANIMAL_COLS = {"EID": "Tag", "Date of Birth": "DOB", "Weaning Date": "Weaned", "Weaning Weight": "WeanKg"}


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def animal_manifest(path, fmt="DD/MM/YYYY"):
    return ColumnManifest((SourceFile(path, "animal", ANIMAL_COLS, fmt),))


def test_animal_row_from_table_example(tmp_path):
    p = write(tmp_path / "a.csv", "Tag,DOB,Weaned,WeanKg\n982123768703781,08/08/2021,31/01/2022,194.5\n")
    recs = parse_source(p, animal_manifest(p), "animal")
    assert recs == [AnimalRecord("982123768703781", dt.date(2021, 8, 8), dt.date(2022, 1, 31), 194.5)]


def test_header_only_file_parses_to_empty(tmp_path):
    p = write(tmp_path / "a.csv", "Tag,DOB,Weaned,WeanKg\n")
    assert parse_source(p, animal_manifest(p), "animal") == []


def test_rain_and_temperature_rows_merge_by_date(tmp_path):
    p = write(tmp_path / "w.csv", "RDate,Rain,TDate,Temp\n2022-02-25,16.6,2022-02-18,28.7\n")
    cols = {"Rainfall Date": "RDate", "Rainfall Quantity": "Rain", "Temperature Date": "TDate",
            "Temperature": "Temp"}
    m = ColumnManifest((SourceFile(p, "weather", cols),))
    recs = parse_source(p, m, "weather")
    assert recs == [WeatherDaily(dt.date(2022, 2, 18), None, 28.7), WeatherDaily(dt.date(2022, 2, 25), 16.6, None)]
    assert recs[0].rainfall_missing and not recs[0].temperature_missing
    assert recs[1].temperature_missing


def test_weather_from_two_files(tmp_path):
    r = write(tmp_path / "rain.csv", "day,mm\n2022-02-01,1.5\n2022-02-02,0\n")
    t = write(tmp_path / "temp.csv", "day,c\n2022-02-01,30.5\n")
    merged = merge_weather([
        parse_source(r, ColumnManifest((SourceFile(r, "weather", {"Rainfall Date": "day", "Rainfall Quantity": "mm"}),)), "weather"),
        parse_source(t, ColumnManifest((SourceFile(t, "weather", {"Temperature Date": "day", "Temperature": "c"}),)), "weather"),
    ])
    assert merged == [WeatherDaily(dt.date(2022, 2, 1), 1.5, 30.5), WeatherDaily(dt.date(2022, 2, 2), 0.0, None)]


def test_missing_mapped_column_is_manifest_error(tmp_path):
    p = write(tmp_path / "a.csv", "Tag,DOB,WeanKg\n1,08/08/2021,100\n")
    with pytest.raises(ManifestError, match="Weaned"):
        parse_source(p, animal_manifest(p), "animal")


@pytest.mark.parametrize("row,needle", [
    ("1,2021-13-45,31/01/2022,10", "data row 2"),
    ("1,08/08/2021,31/01/2022,heavy", "data row 2"),
])
def test_bad_cells_report_row_index(tmp_path, row, needle):
    p = write(tmp_path / "a.csv", f"Tag,DOB,Weaned,WeanKg\n0,01/01/2021,01/06/2021,90\n{row}\n")
    with pytest.raises(RowError, match=needle) as info:
        parse_source(p, animal_manifest(p), "animal")
    assert info.value.row == 2


def test_duplicate_eid_in_animal_source(tmp_path):
    p = write(tmp_path / "a.csv", "Tag,DOB,Weaned,WeanKg\n7,01/01/2021,01/06/2021,90\n7,01/02/2021,01/07/2021,95\n")
    with pytest.raises(DuplicateKeyError, match="7"):
        parse_source(p, animal_manifest(p), "animal")


def test_duplicate_weigh_events_are_kept(tmp_path):
    p = write(tmp_path / "w.csv", "EID,Date of Weight,Actual Weight\n1,2022-02-18,209\n1,2022-02-18,211\n")
    m = ColumnManifest((SourceFile(p, "weights", {"EID": "EID", "Date of Weight": "Date of Weight",
                                                  "Actual Weight": "Actual Weight"}),))
    assert len(parse_source(p, m, "weights")) == 2


def test_date_format_tokens():
    assert strptime_format("YYYY-MM-DD") == "%Y-%m-%d"
    assert strptime_format("DD/MM/YYYY") == "%d/%m/%Y"
    assert strptime_format("%d %B %Y") == "%d %B %Y"


def test_manifest_requires_all_roles_and_features():
    with pytest.raises(ManifestError, match="weights"):
        manifest_from_dict({"files": [
            {"path": "a.csv", "role": "animal", "columns": {k: k for k in ANIMAL_COLS}},
            {"path": "w.csv", "role": "weather", "columns": {"Rainfall Date": "d", "Rainfall Quantity": "r",
                                                           "Temperature Date": "d", "Temperature": "t"}},
        ]})
    with pytest.raises(ManifestError, match="Weaning Weight"):
        manifest_from_dict({"files": [{"path": "a.csv", "role": "animal", "columns": {"EID": "e"}}]})
    with pytest.raises(ManifestError, match="role"):
        manifest_from_dict({"files": [{"path": "a.csv", "role": "goats", "columns": {}}]})


def _bundle(window, events=None, weather_months=None):
    animals = [AnimalRecord("A", dt.date(2021, 8, 8), dt.date(2022, 1, 31), 194.5)]
    months = weather_months if weather_months is not None else window.weather_months()
    weather = [WeatherDaily(m.first_day(), 1.0, 20.0) for m in months]
    return RawBundle(animals, weather, events or [WeighEvent("A", dt.date(2022, 2, 3), 200.0)], window)


def test_validate_consistent_bundle_is_empty(window):
    report = validate_bundle(_bundle(window))
    assert not report and report.accepted


def test_validate_flags_orphan_event(window):
    report = validate_bundle(_bundle(window, events=[WeighEvent("A", dt.date(2022, 2, 3), 200.0),
                                                      WeighEvent("ZZ", dt.date(2022, 2, 3), 201.0)]))
    (f,) = report.of_kind("orphan_events")
    assert f.fatal and f.items == ("ZZ",) and "1 weigh event" in f.detail
    assert not report.accepted


def test_validate_lists_missing_weather_months(window):
    # required months: Dec 2021 .. Oct 2022; drop January 2022
    months = [m for m in window.weather_months() if m != YearMonth(2022, 1)]
    report = validate_bundle(_bundle(window, weather_months=months))
    rain = report.of_kind("rainfall_coverage")
    assert rain and rain[0].items == ("2022-01",)
    assert report.of_kind("temperature_coverage")[0].items == ("2022-01",)


def test_validate_synthetic_bundle_clean():
    assert not validate_bundle(generate_bundle(SynthConfig(n_animals=5, seed=1)))


def test_validate_non_positive_weaning_weight(window):
    b = _bundle(window)
    b.animals[0] = AnimalRecord("A", dt.date(2021, 8, 8), dt.date(2022, 1, 31), 0.0)
    assert [f.kind for f in validate_bundle(b).findings] == ["weaning_weight"]


def test_roundtrip_through_canonical_writer(tmp_path):
    bundle = generate_bundle(SynthConfig(n_animals=6, seed=5))
    manifest = load_manifest(write_bundle(bundle, tmp_path))
    again = load_bundle(manifest, bundle.window)
    assert again.animals == bundle.animals
    assert again.weather == bundle.weather
    assert again.events == bundle.events


def test_header_renaming_is_pure(tmp_path):
    bundle = generate_bundle(SynthConfig(n_animals=4, seed=9))
    texts = bundle_csvs(bundle)
    canon = tmp_path / "canon"
    manifest_path = write_bundle(bundle, canon)
    renamed = tmp_path / "renamed"
    renamed.mkdir()
    mapping = {"EID": "tag_id", "Date of Birth": "born", "Weaning Date": "weaned_on", "Weaning Weight": "wean_kg",
               "Date of Weight": "when", "Actual Weight": "kg", "Rainfall Date": "rain_day",
               "Rainfall Quantity": "rain_mm", "Temperature Date": "temp_day", "Temperature": "temp_c"}
    files = []
    for name, role in (("animals.csv", "animal"), ("weather.csv", "weather"), ("weights.csv", "weights")):
        header, rest = texts[name].split("\n", 1)
        cols = header.split(",")
        (renamed / name).write_text(",".join(mapping[c] for c in cols) + "\n" + rest, encoding="utf-8")
        files.append({"path": name, "role": role, "columns": {c: mapping[c] for c in cols}})
    (renamed / "m.json").write_text(json.dumps({"files": files}), encoding="utf-8")
    a = load_bundle(load_manifest(manifest_path), bundle.window)
    b = load_bundle(load_manifest(renamed / "m.json"), bundle.window)
    assert (a.animals, a.weather, a.events) == (b.animals, b.weather, b.events)


def test_record_count_equals_data_rows(tmp_path):
    bundle = generate_bundle(SynthConfig(n_animals=3, seed=2))
    write_bundle(bundle, tmp_path)
    n_rows = len((tmp_path / "weights.csv").read_text().strip().splitlines()) - 1
    m = load_manifest(tmp_path / "manifest.json")
    assert len(parse_source(tmp_path / "weights.csv", m, "weights")) == n_rows
