import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from mobweigh.evaluate import (METRIC_LABELS, CvPlan, EvaluationError, EvaluationReport, GridSpec, MetricError,
                               MetricSet, accuracy_pct, cross_validate, emit_report, grid_search, kfold_split, mae,
                               mape, metric_set, r2, rmse, run_experiment)
from mobweigh.features import VARIANTS, DatasetVariant
from mobweigh.models import ForestConfig, SvrConfig
from mobweigh.models.base import MeanConfig
from mobweigh.scaling import ShapeError

# (y, yhat, r2, rmse, mae, mape%, accuracy%) worked by hand
HAND = [
    ([1, 2, 3], [1.1, 2.0, 2.9], 0.99, math.sqrt(0.02 / 3), 0.2 / 3, (10 / 1 + 0 + 0.1 / 3 * 100) / 3, (1 - 0.2 / 6) * 100),
    ([0, 2], [0, 0], -1.0, math.sqrt(2), 1.0, None, 0.0),
    ([1, 3], [2, 2], 0.0, 1.0, 1.0, (100 + 100 / 3) / 2, 50.0),
    ([100, 200], [110, 180], 1 - 500 / 5000, math.sqrt(250), 15.0, 10.0, 90.0),
    ([10, 10.5], [9, 11], 1 - 1.25 / 0.125, math.sqrt(0.625), 0.75, (10 + 0.5 / 10.5 * 100) / 2, (1 - 1.5 / 20.5) * 100),
    ([2, 4, 6, 8], [5, 5, 5, 5], 0.0, math.sqrt(5), 2.0, (150 + 25 + 100 / 6 + 37.5) / 4, (1 - 8 / 20) * 100),
    ([5, -5, 5], [5, -5, 5], 1.0, 0.0, 0.0, 0.0, 100.0),
    ([1, 2, 3, 4], [1.1, 2.2, 3.3, 4.4], 1 - 0.3 / 5, math.sqrt(0.3 / 4), 0.25, 10.0, 90.0),
    ([3, 4], [0, 0], -49.0, math.sqrt(12.5), 3.5, 100.0, 0.0),
]


@pytest.mark.parametrize("y,p,e_r2,e_rmse,e_mae,e_mape,e_acc", HAND)
def test_metrics_against_hand_values(y, p, e_r2, e_rmse, e_mae, e_mape, e_acc):
    assert r2(y, p) == pytest.approx(e_r2, abs=1e-9)
    assert rmse(y, p) == pytest.approx(e_rmse, abs=1e-9)
    assert mae(y, p) == pytest.approx(e_mae, abs=1e-9)
    assert accuracy_pct(y, p) == pytest.approx(e_acc, abs=1e-9)
    if e_mape is None:
        with pytest.raises(MetricError, match="zero"):
            mape(y, p)
    else:
        assert mape(y, p) == pytest.approx(e_mape, abs=1e-9)


def test_metric_edge_cases():
    y = np.array([1.0, 4.0, 2.0])
    assert r2(y, y) == 1.0 and rmse(y, y) == 0.0 and mae(y, y) == 0.0 and mape(y, y) == 0.0
    assert r2(y, np.full(3, y.mean())) == 0.0
    assert mape(y, 1.1 * y) == pytest.approx(10.0, abs=1e-12)
    assert accuracy_pct([10, 10], [9, 11]) == 90.0
    assert mae([1, 3], [2, 2]) == mae([2, 2], [1, 3])
    with pytest.raises(MetricError):
        r2([2, 2], [1, 3])
    with pytest.raises(MetricError):
        accuracy_pct([0, 0], [1, 1])
    with pytest.raises(ShapeError):
        rmse([1, 2], [1])


@settings(max_examples=300, deadline=None)
@given(arrays(np.float64, st.integers(1, 50), elements=st.floats(0.5, 1e3)),
       st.integers(0, 2**32 - 1))
def test_accuracy_identity(y, seed):
    p = y + np.random.default_rng(seed).normal(scale=5.0, size=y.size)
    assert accuracy_pct(y, p) == pytest.approx((1 - y.size * mae(y, p) / np.abs(y).sum()) * 100, abs=1e-12)


def test_metric_set_uses_kg_for_ratio_metrics():
    ys, ps = np.array([0.0, 0.5, 1.0]), np.array([0.1, 0.5, 0.9])
    yk, pk = 100 + 100 * ys, 100 + 100 * ps
    ms = metric_set(ys, ps, yk, pk)
    assert ms.rmse == rmse(ys, ps) and ms.mape == mape(yk, pk) / 100 and ms.accuracy_pct == accuracy_pct(yk, pk)


def test_fold_mean_of_rmse():
    a = MetricSet(0.9, 0.1, 0.1, 0.01, 99.0)
    b = MetricSet(0.7, 0.3, 0.2, 0.03, 97.0)
    assert MetricSet.mean([a, b]).rmse == pytest.approx(0.2, abs=1e-15)


@pytest.mark.parametrize("n", [10, 11, 756, 1000])
def test_kfold_partition(n):
    folds = kfold_split(n, CvPlan(k=10, seed=3))
    tests = [te for _, te in folds]
    assert np.array_equal(np.sort(np.concatenate(tests)), np.arange(n))
    sizes = [len(t) for t in tests]
    assert max(sizes) - min(sizes) <= 1
    for tr, te in folds:
        assert len(np.intersect1d(tr, te)) == 0 and len(tr) + len(te) == n
    again = kfold_split(n, CvPlan(k=10, seed=3))
    assert all(np.array_equal(a[1], b[1]) for a, b in zip(folds, again))


def test_kfold_756_sizes_and_loo():
    assert sorted(len(te) for _, te in kfold_split(756, CvPlan())) == [75] * 4 + [76] * 6
    assert [te.tolist() for _, te in kfold_split(10, CvPlan(shuffle=False))] == [[i] for i in range(10)]
    with pytest.raises(ValueError):
        kfold_split(9, CvPlan())


def test_mean_predictor_scores_near_zero_r2():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(1000, 2))
    y = X[:, 0] + rng.normal(size=1000) + 10
    res = cross_validate(MeanConfig(), X, y, CvPlan(k=10, seed=1))
    assert abs(res.test["scaled"].r2) < 0.1


def test_duplicated_rows_with_paired_folds_score_perfectly():
    rng = np.random.default_rng(2)
    X = rng.uniform(size=(30, 2))
    y = X[:, 0] * 3 + X[:, 1]
    X2, y2 = np.vstack([X, X]), np.concatenate([y, y])
    cfg = ForestConfig(n_estimators=1, features_per_split=2, bootstrap=False)
    res = cross_validate(cfg, X2, y2, CvPlan(k=2, shuffle=False))
    assert res.test["scaled"].r2 == 1.0 and res.test["kg"].r2 == 1.0


def test_scaling_modes_and_out_of_fold_predictions():
    rng = np.random.default_rng(5)
    X = rng.uniform(size=(50, 3))
    y = X @ [1.0, 2.0, 0.5] + 100
    fold = cross_validate(ForestConfig(n_estimators=5), X, y, CvPlan(k=5), "fold")
    compat = cross_validate(ForestConfig(n_estimators=5), X, y, CvPlan(k=5), "paper-compat")
    kg, sc = fold.predictions(50)
    assert np.isfinite(kg).all() and np.isfinite(sc).all()
    # trees only see the order of each column, so kg-space results do not depend on the scaler
    assert fold.test["kg"].rmse == pytest.approx(compat.test["kg"].rmse, rel=1e-9)
    svr_fold = cross_validate(SvrConfig(c=10.0), X, y, CvPlan(k=5), "fold")
    svr_compat = cross_validate(SvrConfig(c=10.0), X, y, CvPlan(k=5), "paper-compat")
    assert svr_fold.test["kg"].rmse != svr_compat.test["kg"].rmse
    with pytest.raises(ValueError):
        cross_validate(MeanConfig(), X, y, CvPlan(k=5), "global")


def test_grid_search_contracts():
    rng = np.random.default_rng(1)
    X = rng.uniform(-1, 1, size=(200, 2))
    y = np.sin(3 * X[:, 0]) * X[:, 1] + 0.05 * rng.normal(size=200)
    plan = CvPlan(k=5)
    single = grid_search(GridSpec("forest", [ForestConfig(n_estimators=3)]), X, y, plan)
    assert single.best_index == 0
    small = ForestConfig(n_estimators=1, max_depth=1)
    big = ForestConfig(n_estimators=100, max_depth=10)
    assert grid_search(GridSpec("forest", [small, big]), X, y, plan).best_config == big
    tie = grid_search(GridSpec("forest", [ForestConfig(n_estimators=3, seed=1), ForestConfig(n_estimators=3, seed=1)]),
                      X, y, plan)
    assert tie.best_index == 0 and tie.scores[0] == tie.scores[1]


def test_grid_search_records_failures():
    X = np.random.default_rng(0).uniform(size=(20, 2))
    y = X[:, 0]
    bad = ForestConfig(features_per_split=3)
    res = grid_search(GridSpec("forest", [bad, ForestConfig(n_estimators=2)]), X, y, CvPlan(k=4))
    assert res.best_index == 1 and res.scores[0] is None and "features_per_split" in res.errors[0]
    with pytest.raises(EvaluationError, match="every grid candidate failed"):
        grid_search(GridSpec("forest", [bad]), X, y, CvPlan(k=4))


def _report(metric_space="scaled", seed=0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(size=(40, 10))
    y = 200 + 50 * X[:, 2] + 10 * X[:, 5]
    months = [f"2022-0{3 + i % 7}" for i in range(40)]
    widths = {v: len(v.predictors) for v in VARIANTS}
    data = lambda v: (X[:, :widths[v]], y, [f"c{i}" for i in range(widths[v])])
    grids = {"forest": GridSpec("forest", [ForestConfig(n_estimators=4, seed=seed)])}
    return run_experiment(data, grids, VARIANTS, CvPlan(k=4, seed=seed), metric_space=metric_space, months=months)


def test_emit_report_layout(tmp_path):
    report = _report("both")
    names = {p.name for p in emit_report(report, tmp_path)}
    assert {"forest_train.csv", "forest_test.csv", "forest_train_kg.csv", "forest_test_kg.csv", "rmse_bars.csv",
            "r2_heatmap.csv", "mae_heatmap.csv", "scatter.csv", "monthly_trend.csv", "report.json"} == names
    rows = list(csv.reader(open(tmp_path / "forest_test.csv")))
    assert rows[0] == ["Evaluation Metrics", "Dataset Including Weather and Age Factors",
                       "Dataset With Weather Factors (Excluding Age Factor)",
                       "Dataset With Age Factor (Excluding Weather Factors)",
                       "Dataset Excluding Age and Weather Factors"]
    assert [r[0] for r in rows[1:]] == list(METRIC_LABELS) == ["R2", "RMSE", "MAE", "MAPE", "Accuracy%"]
    assert len(list(csv.reader(open(tmp_path / "scatter.csv")))) == 1 + 4 * 40
    trend = list(csv.reader(open(tmp_path / "monthly_trend.csv")))
    assert len(trend) == 1 + 4 * 7


def test_report_json_roundtrip_and_determinism(tmp_path):
    emit_report(_report(), tmp_path / "a")
    emit_report(_report(), tmp_path / "b")
    a = (tmp_path / "a" / "report.json").read_bytes()
    assert a == (tmp_path / "b" / "report.json").read_bytes()
    back = EvaluationReport.from_dict(json.loads(a))
    emit_report(back, tmp_path / "c")
    for name in ("forest_test.csv", "rmse_bars.csv", "report.json"):
        assert (tmp_path / "c" / name).read_bytes() == (tmp_path / "a" / name).read_bytes()


def test_empty_report_refused(tmp_path):
    with pytest.raises(EvaluationError):
        emit_report(EvaluationReport(), tmp_path)


def test_svr_entry_in_experiment(tmp_path):
    rng = np.random.default_rng(3)
    X = rng.uniform(size=(30, 10))
    y = 100 + 20 * X[:, 0]
    rep = run_experiment(lambda v: (X[:, :len(v.predictors)], y, None),
                         {"svr": GridSpec("svr", [SvrConfig(c=1.0), SvrConfig(c=10.0)])},
                         [DatasetVariant.BASELINE], CvPlan(k=3))
    assert len(rep.entries) == 1 and len(rep.entries[0].grid) == 2
    assert rep.get("svr", DatasetVariant.BASELINE).test["scaled"].r2 > 0.5
