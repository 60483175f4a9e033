import csv
import json
import subprocess
import sys

import pytest

from mobweigh.cli import main
from mobweigh.features import HEADER
from mobweigh.synth import SynthConfig, generate_bundle, write_bundle

FAST_GRID = {"forest": [{"n_estimators": 5}], "svr": [{"c": 1.0, "gamma": 1.0}],
             "lstm": [{"hidden_units": 3, "epochs": 2, "batch_size": 64, "learning_rate": 0.5}]}


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    assert main(["synth", "--out", str(root / "raw"), "--n-animals", "30", "--seed", "3"]) == 0
    assert main(["preprocess", "--manifest", str(root / "raw" / "manifest.json"), "--out", str(root / "prep")]) == 0
    (root / "grid.json").write_text(json.dumps(FAST_GRID))
    return root


def test_feature_header_is_exact(workspace):
    first = (workspace / "prep" / "features.csv").read_text().splitlines()[0]
    assert first == ",".join(HEADER)
    index = list(csv.reader(open(workspace / "prep" / "features_index.csv")))
    assert index[0] == ["eid", "month"] and len(index) > 1


def _run(workspace, out, *extra):
    return main(["run", "--features", str(workspace / "prep" / "features.csv"), "--out", str(out),
                 "--grid", str(workspace / "grid.json"), "--folds", "3", "--seed", "1", *extra])


def test_run_is_byte_reproducible(workspace, tmp_path):
    assert _run(workspace, tmp_path / "a") == 0
    assert _run(workspace, tmp_path / "b") == 0
    for name in ("report.json", "forest_test.csv", "svr_train.csv", "lstm_test.csv", "rmse_bars.csv",
                 "monthly_trend.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name


def test_run_from_manifest_and_report_reemit(workspace, tmp_path, capsys):
    assert main(["run", "--manifest", str(workspace / "raw" / "manifest.json"), "--out", str(tmp_path / "r"),
                 "--grid", str(workspace / "grid.json"), "--model", "forest", "--variant", "baseline",
                 "--folds", "3", "--paper-compat", "--metric-space", "both"]) == 0
    doc = json.loads((tmp_path / "r" / "report.json").read_text())
    assert doc["settings"]["scaling"] == "paper-compat" and doc["metric_space"] == "both"
    assert (tmp_path / "r" / "forest_test_kg.csv").exists()
    assert main(["report", "--report", str(tmp_path / "r" / "report.json"), "--out", str(tmp_path / "again")]) == 0
    assert (tmp_path / "again" / "forest_test.csv").read_bytes() == (tmp_path / "r" / "forest_test.csv").read_bytes()


def test_stats_command(workspace, tmp_path, capsys):
    assert main(["stats", "--features", str(workspace / "prep" / "features.csv"), "--out", str(tmp_path)]) == 0
    assert "pearson(age, weight)" in capsys.readouterr().out
    assert (tmp_path / "stats.csv").read_text().startswith("analysis,term,coefficient")


def test_no_eligible_animals_guard(tmp_path, capsys):
    bundle = generate_bundle(SynthConfig(n_animals=4, seed=2))
    bundle.events[:] = [e for e in bundle.events if e.date.month != 6]
    manifest = write_bundle(bundle, tmp_path / "raw")
    assert main(["preprocess", "--manifest", str(manifest), "--out", str(tmp_path / "o")]) == 1
    assert "no eligible animals" in capsys.readouterr().err


def test_invalid_bundle_exit_code(tmp_path, capsys):
    bundle = generate_bundle(SynthConfig(n_animals=4, seed=2))
    bundle.weather[:] = [w for w in bundle.weather if w.date.month != 1]
    manifest = write_bundle(bundle, tmp_path / "raw")
    assert main(["preprocess", "--manifest", str(manifest), "--out", str(tmp_path / "o")]) == 1
    assert "rainfall_coverage" in capsys.readouterr().err


def test_usage_errors_exit_2(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["run", "--out", str(tmp_path)])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 2


def test_missing_file_exit_1(tmp_path, capsys):
    assert main(["preprocess", "--manifest", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 1
    assert capsys.readouterr().err.startswith("error:")


def test_env_seed(monkeypatch, tmp_path):
    monkeypatch.setenv("MOBWEIGH_SEED", "9")
    assert main(["synth", "--out", str(tmp_path / "a"), "--n-animals", "3"]) == 0
    assert main(["synth", "--out", str(tmp_path / "b"), "--n-animals", "3", "--seed", "9"]) == 0
    assert (tmp_path / "a" / "weights.csv").read_bytes() == (tmp_path / "b" / "weights.csv").read_bytes()


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "mobweigh", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("mobweigh ")
