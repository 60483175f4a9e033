"""Metrics, k-fold cross-validation, grid search and report emission."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from .features import VARIANTS, DatasetVariant
from .models import config_from_dict, fit_model
from .models.base import config_to_dict
from .scaling import MinMaxScaler, ShapeError

METRIC_LABELS = ("R2", "RMSE", "MAE", "MAPE", "Accuracy%")
SCALING_MODES = ("fold", "paper-compat")
METRIC_SPACES = ("scaled", "kg", "both")


class MetricError(ValueError):
    pass


class EvaluationError(RuntimeError):
    pass


def _pair(y, y_hat) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=float).ravel()
    y_hat = np.asarray(y_hat, dtype=float).ravel()
    if y.shape != y_hat.shape:
        raise ShapeError(f"length mismatch: {y.shape[0]} vs {y_hat.shape[0]}")
    if y.size == 0:
        raise MetricError("metrics need at least one observation")
    return y, y_hat


def r2(y, y_hat) -> float:
    y, y_hat = _pair(y, y_hat)
    if y.size < 2:
        raise MetricError("r2 needs at least two observations")
    tss = float(np.sum((y - y.mean()) ** 2))
    if tss == 0:
        raise MetricError("r2 undefined: target has zero variance")
    rss = float(np.sum((y - y_hat) ** 2))
    return 1.0 - rss / tss


def rmse(y, y_hat) -> float:
    y, y_hat = _pair(y, y_hat)
    return math.sqrt(float(np.mean((y_hat - y) ** 2)))


def mae(y, y_hat) -> float:
    y, y_hat = _pair(y, y_hat)
    return float(np.mean(np.abs(y - y_hat)))


def mape(y, y_hat) -> float:
    """Mean absolute percentage error, in percent."""
    y, y_hat = _pair(y, y_hat)
    if np.any(y == 0):
        raise MetricError("mape undefined: zero in the actual values")
    return float(np.mean(np.abs((y - y_hat) / y))) * 100.0


def accuracy_pct(y, y_hat) -> float:
    y, y_hat = _pair(y, y_hat)
    denom = float(np.sum(np.abs(y)))
    if denom == 0:
        raise MetricError("accuracy undefined: actual values sum to zero in magnitude")
    return (1.0 - float(np.sum(np.abs(y - y_hat))) / denom) * 100.0


@dataclass(frozen=True)
class MetricSet:
    """``mape`` is fractional (multiply by 100 for percent), as the tables print it."""

    r2: float
    rmse: float
    mae: float
    mape: float
    accuracy_pct: float

    def row(self) -> list[float]:
        return [self.r2, self.rmse, self.mae, self.mape, self.accuracy_pct]

    @classmethod
    def mean(cls, sets: Sequence["MetricSet"]) -> "MetricSet":
        arr = np.array([s.row() for s in sets])
        return cls(*(float(v) for v in arr.mean(axis=0)))


def metric_set(y, y_hat, y_kg=None, y_hat_kg=None) -> MetricSet:
    """All five metrics.

    R2, RMSE and MAE are taken on ``(y, y_hat)``. MAPE and accuracy are
    ratio metrics and need a zero-free scale, so they use the kg-space pair
    when one is given (MinMax-scaled targets contain an exact 0).
    """
    ya, pa = (y, y_hat) if y_kg is None else (y_kg, y_hat_kg)
    return MetricSet(r2(y, y_hat), rmse(y, y_hat), mae(y, y_hat), mape(ya, pa) / 100.0, accuracy_pct(ya, pa))


# -- cross-validation ---------------------------------------------------------

@dataclass(frozen=True)
class CvPlan:
    k: int = 10
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("k must be at least 2")


def kfold_split(n: int, plan: CvPlan) -> list[tuple[np.ndarray, np.ndarray]]:
    """(train, test) index pairs; test sets partition range(n), sizes differ by at most one."""
    if n < plan.k:
        raise ValueError(f"cannot split {n} rows into {plan.k} folds")
    order = np.random.default_rng(plan.seed & (2**64 - 1)).permutation(n) if plan.shuffle else np.arange(n)
    base, extra = divmod(n, plan.k)
    folds = []
    start = 0
    for f in range(plan.k):
        size = base + (1 if f < extra else 0)
        test = np.sort(order[start:start + size])
        train_mask = np.ones(n, dtype=bool)
        train_mask[test] = False
        folds.append((np.nonzero(train_mask)[0], test))
        start += size
    return folds


@dataclass
class FoldResult:
    fold: int
    train: dict[str, MetricSet]
    test: dict[str, MetricSet]
    test_index: np.ndarray
    test_pred_kg: np.ndarray
    test_pred_scaled: np.ndarray


@dataclass
class CvResult:
    """Fold-mean train/test metrics per metric space, plus per-fold detail."""

    train: dict[str, MetricSet]
    test: dict[str, MetricSet]
    folds: list[FoldResult]

    def predictions(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Out-of-fold predictions (kg, scaled) aligned to the input rows."""
        kg = np.full(n, np.nan)
        sc = np.full(n, np.nan)
        for f in self.folds:
            kg[f.test_index] = f.test_pred_kg
            sc[f.test_index] = f.test_pred_scaled
        return kg, sc


def _fold(i, tr, te, cfg, X, y, columns, full_scaler, scaling) -> FoldResult:
    if scaling == "fold":
        scaler = MinMaxScaler().fit(np.column_stack([X[tr], y[tr]]))
    else:
        scaler = full_scaler
    Z = scaler.transform(np.column_stack([X, y]))
    Xs, ys = Z[:, :-1], Z[:, -1]
    try:
        model = fit_model(cfg, Xs[tr], ys[tr], columns=columns)
        p_tr = model.predict(Xs[tr])
        p_te = model.predict(Xs[te])
    except Exception as exc:
        raise EvaluationError(f"fold {i}: {exc}") from exc

    def to_kg(z):
        return z * (scaler.max_[-1] - scaler.min_[-1]) + scaler.min_[-1]

    k_tr, k_te = to_kg(p_tr), to_kg(p_te)
    try:
        train = {"scaled": metric_set(ys[tr], p_tr, y[tr], k_tr), "kg": metric_set(y[tr], k_tr)}
        test = {"scaled": metric_set(ys[te], p_te, y[te], k_te), "kg": metric_set(y[te], k_te)}
    except (MetricError, ShapeError) as exc:
        raise EvaluationError(f"fold {i}: {exc}") from exc
    return FoldResult(i, train, test, te, k_te, p_te)


def cross_validate(cfg, X, y, plan: CvPlan = CvPlan(), scaling: str = "fold",
                   columns: Sequence[str] | None = None, n_jobs: int = 1) -> CvResult:
    """Fit/score ``cfg`` on each fold.

    ``scaling="fold"`` fits the MinMax scaler on each training split;
    ``"paper-compat"`` fits it once on the whole dataset.
    """
    if scaling not in SCALING_MODES:
        raise ValueError(f"scaling must be one of {SCALING_MODES}")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    folds = kfold_split(len(y), plan)
    full = MinMaxScaler().fit(np.column_stack([X, y])) if scaling == "paper-compat" else None
    args = [(i, tr, te, cfg, X, y, columns, full, scaling) for i, (tr, te) in enumerate(folds)]
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(lambda a: _fold(*a), args))
    else:
        results = [_fold(*a) for a in args]
    spaces = ("scaled", "kg")
    train = {s: MetricSet.mean([r.train[s] for r in results]) for s in spaces}
    test = {s: MetricSet.mean([r.test[s] for r in results]) for s in spaces}
    return CvResult(train, test, results)


# -- grid search --------------------------------------------------------------

@dataclass
class GridSpec:
    kind: str
    candidates: list
    metric: str = "rmse"
    space: str = "scaled"

    def __post_init__(self):
        if not self.candidates:
            raise ValueError("grid has no candidates")


@dataclass
class GridResult:
    best_index: int
    best_config: Any
    best: CvResult
    scores: list[float | None]
    errors: list[str | None]


def grid_search(grid: GridSpec, X, y, plan: CvPlan = CvPlan(), scaling: str = "fold",
                columns=None, n_jobs: int = 1) -> GridResult:
    """Score each candidate by fold-mean test metric (lower is better; ties -> first declared)."""
    results: list[CvResult | None] = []
    scores: list[float | None] = []
    errors: list[str | None] = []
    for cfg in grid.candidates:
        try:
            res = cross_validate(cfg, X, y, plan, scaling, columns, n_jobs)
        except Exception as exc:  # candidate-level failure is recorded, not fatal
            results.append(None)
            scores.append(None)
            errors.append(f"{type(exc).__name__}: {exc}")
            continue
        results.append(res)
        score = getattr(res.test[grid.space], grid.metric)
        if grid.metric in ("r2", "accuracy_pct"):
            score = -score
        scores.append(float(score))
        errors.append(None)
    valid = [i for i, s in enumerate(scores) if s is not None and math.isfinite(s)]
    if not valid:
        raise EvaluationError("every grid candidate failed: " + "; ".join(e or "" for e in errors))
    best = min(valid, key=lambda i: (scores[i], i))
    return GridResult(best, grid.candidates[best], results[best], scores, errors)


# -- report -------------------------------------------------------------------

@dataclass
class ReportEntry:
    model: str
    variant: DatasetVariant
    config: Any
    train: dict[str, MetricSet]
    test: dict[str, MetricSet]
    folds: list[dict]
    grid: list[dict]
    actual_kg: list[float]
    predicted_kg: list[float]
    months: list[str] | None = None


@dataclass
class EvaluationReport:
    entries: list[ReportEntry] = field(default_factory=list)
    metric_space: str = "scaled"
    settings: dict = field(default_factory=dict)

    def get(self, model: str, variant: DatasetVariant) -> ReportEntry | None:
        for e in self.entries:
            if e.model == model and e.variant == variant:
                return e
        return None

    def models(self) -> list[str]:
        seen: list[str] = []
        for e in self.entries:
            if e.model not in seen:
                seen.append(e.model)
        return seen

    def to_dict(self) -> dict:
        return {
            "metric_space": self.metric_space,
            "settings": self.settings,
            "entries": [{
                "model": e.model, "variant": e.variant.value, "config": config_to_dict(e.config),
                "train": {k: asdict(v) for k, v in e.train.items()},
                "test": {k: asdict(v) for k, v in e.test.items()},
                "folds": e.folds, "grid": e.grid,
                "actual_kg": e.actual_kg, "predicted_kg": e.predicted_kg, "months": e.months,
            } for e in self.entries],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "EvaluationReport":
        entries = []
        for d in doc["entries"]:
            entries.append(ReportEntry(
                d["model"], DatasetVariant(d["variant"]), config_from_dict(d["config"]),
                {k: MetricSet(**v) for k, v in d["train"].items()},
                {k: MetricSet(**v) for k, v in d["test"].items()},
                d["folds"], d["grid"], d["actual_kg"], d["predicted_kg"], d.get("months"),
            ))
        return cls(entries, doc.get("metric_space", "scaled"), doc.get("settings", {}))


def make_entry(model: str, variant: DatasetVariant, grid: GridSpec, result: GridResult,
               y_kg: np.ndarray, months: Sequence | None = None) -> ReportEntry:
    cv = result.best
    pred_kg, _ = cv.predictions(len(y_kg))
    folds = [{"fold": f.fold, "n_test": int(f.test_index.size),
              "train": {k: asdict(v) for k, v in f.train.items()},
              "test": {k: asdict(v) for k, v in f.test.items()}} for f in cv.folds]
    table = [{"config": config_to_dict(c), "score": s, "error": err}
             for c, s, err in zip(grid.candidates, result.scores, result.errors)]
    return ReportEntry(model, variant, result.best_config, cv.train, cv.test, folds, table,
                       [float(v) for v in y_kg], [float(v) for v in pred_kg],
                       [str(m) for m in months] if months is not None else None)


def _fmt(v) -> str:
    return "" if v is None else repr(float(v))


def atomic_write(path: Path, text: str) -> None:
    """Write via a temp file in the same directory, then rename over ``path``."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv(rows: list[list]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def metric_table(report: EvaluationReport, model: str, split: str, space: str) -> list[list]:
    rows = [["Evaluation Metrics"] + [v.title for v in VARIANTS]]
    for i, label in enumerate(METRIC_LABELS):
        row: list = [label]
        for v in VARIANTS:
            e = report.get(model, v)
            row.append(_fmt(getattr(e, split)[space].row()[i]) if e else "")
        rows.append(row)
    return rows


def _spaces(report: EvaluationReport) -> list[str]:
    return ["scaled", "kg"] if report.metric_space == "both" else [report.metric_space]


def emit_report(report: EvaluationReport, out_dir) -> list[Path]:
    """Write metric tables, chart-data CSVs and ``report.json`` under ``out_dir``."""
    if not report.entries:
        raise EvaluationError("refusing to emit an empty report")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def put(name: str, text: str):
        p = out / name
        atomic_write(p, text)
        written.append(p)

    spaces = _spaces(report)
    primary = spaces[0]
    for model in report.models():
        for space in spaces:
            suffix = "" if space == primary else f"_{space}"
            for split in ("train", "test"):
                put(f"{model}_{split}{suffix}.csv", _csv(metric_table(report, model, split, space)))

    header = ["Model"] + [v.title for v in VARIANTS]
    for name, attr in (("rmse_bars.csv", "rmse"), ("r2_heatmap.csv", "r2"), ("mae_heatmap.csv", "mae")):
        rows = [header]
        for model in report.models():
            row = [model]
            for v in VARIANTS:
                e = report.get(model, v)
                row.append(_fmt(getattr(e.test[primary], attr)) if e else "")
            rows.append(row)
        put(name, _csv(rows))

    scatter = [["model", "variant", "actual", "predicted"]]
    trend = [["model", "variant", "month", "mean_actual", "mean_predicted"]]
    for e in report.entries:
        for a, p in zip(e.actual_kg, e.predicted_kg):
            scatter.append([e.model, e.variant.value, _fmt(a), _fmt(p)])
        if e.months:
            by_month: dict[str, list[tuple[float, float]]] = {}
            for m, a, p in zip(e.months, e.actual_kg, e.predicted_kg):
                by_month.setdefault(m, []).append((a, p))
            for m in sorted(by_month):
                pairs = np.array(by_month[m])
                trend.append([e.model, e.variant.value, m, _fmt(pairs[:, 0].mean()), _fmt(pairs[:, 1].mean())])
    put("scatter.csv", _csv(scatter))
    put("monthly_trend.csv", _csv(trend))
    put("report.json", json.dumps(report.to_dict(), indent=1, sort_keys=True) + "\n")
    return written


def run_experiment(data: Callable[[DatasetVariant], tuple], grids: dict[str, GridSpec],
                   variants: Sequence[DatasetVariant], plan: CvPlan, scaling: str = "fold",
                   metric_space: str = "scaled", months=None, n_jobs: int = 1,
                   progress: Callable[[str], None] | None = None) -> EvaluationReport:
    """Grid search + CV for every requested model x variant, in canonical order."""
    if metric_space not in METRIC_SPACES:
        raise ValueError(f"metric_space must be one of {METRIC_SPACES}")
    report = EvaluationReport(metric_space=metric_space, settings={
        "k": plan.k, "seed": plan.seed, "shuffle": plan.shuffle, "scaling": scaling,
    })
    for model, grid in grids.items():
        for variant in VARIANTS:
            if variant not in variants:
                continue
            X, y, columns = data(variant)
            if progress:
                progress(f"{model} / {variant.value}: {len(grid.candidates)} candidate(s)")
            res = grid_search(grid, X, y, plan, scaling, columns, n_jobs)
            report.entries.append(make_entry(model, variant, grid, res, y, months))
    return report
