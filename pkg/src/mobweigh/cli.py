"""``mobweigh`` command line: synth, preprocess, run, stats, report."""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

from . import __version__
from ._time import DEFAULT_WINDOW, StudyWindow
from .evaluate import (METRIC_SPACES, SCALING_MODES, CvPlan, EvaluationReport, GridSpec, atomic_write,
                       emit_report, run_experiment)
from .features import HEADER, VARIANTS, DatasetVariant, FeatureRow, FeatureTable, format_value, read_feature_table
from .ingest import load_bundle, load_manifest
from .models import MODEL_KINDS, ForestConfig, LstmConfig, SvrConfig, config_from_dict
from .pipeline import prepare
from .preprocess import CleaningPolicy
from .stats import analyze
from .synth import SynthConfig, simulate, write_bundle

FEATURES_FILE = "features.csv"
INDEX_FILE = "features_index.csv"


def default_seed() -> int:
    raw = os.environ.get("MOBWEIGH_SEED")
    if raw is None or not raw.strip():
        return 0
    try:
        return int(raw)
    except ValueError:
        raise SystemExit(f"MOBWEIGH_SEED must be an integer, got {raw!r}") from None


def default_grids(seed: int) -> dict[str, list]:
    return {
        "forest": [ForestConfig(n_estimators=100, max_depth=d, min_samples_split=s, seed=seed)
                   for d in (None, 8) for s in (2, 5)],
        "svr": [SvrConfig(c=c, epsilon=0.01, kernel="rbf", gamma=g, seed=seed)
                for c in (1.0, 10.0) for g in (0.5, 2.0)],
        "lstm": [LstmConfig(hidden_units=16, num_layers=1, learning_rate=0.5, batch_size=32,
                            epochs=60, seed=seed, sequence_mode=mode)
                 for mode in ("feature-as-sequence", "single-step")],
    }


def load_grids(path, seed: int) -> dict[str, list]:
    """JSON ``{"forest": [{...}, ...], ...}``; configs without a seed get ``seed``."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    grids = {}
    for kind, cands in doc.items():
        if kind not in MODEL_KINDS:
            raise ValueError(f"grid file: unknown model {kind!r}")
        grids[kind] = [config_from_dict({"seed": seed, **c, "kind": kind}) for c in cands]
    return grids


def write_feature_table(rows: list[FeatureRow], path: Path, index_path: Path | None = None) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    for r in rows:
        w.writerow([format_value(v) for v in r.values()])
    atomic_write(path, buf.getvalue())
    if index_path is not None:
        ibuf = io.StringIO()
        iw = csv.writer(ibuf, lineterminator="\n")
        iw.writerow(["eid", "month"])
        iw.writerows([[r.eid, str(r.month)] for r in rows])
        atomic_write(index_path, ibuf.getvalue())


# -- argument groups ----------------------------------------------------------

def _window_args(p):
    p.add_argument("--window-start", default=str(DEFAULT_WINDOW.first_month), metavar="YYYY-MM")
    p.add_argument("--window-end", default=str(DEFAULT_WINDOW.last_month), metavar="YYYY-MM")


def _cleaning_args(p):
    d = CleaningPolicy()
    p.add_argument("--outlier-z", type=float, default=d.outlier_z_threshold,
                   help="robust z-score cut-off for weigh events (default %(default)s)")
    p.add_argument("--irregular-drop-pct", type=float, default=d.irregular_drop_pct,
                   help="largest tolerated month-over-month decline (default %(default)s)")
    p.add_argument("--no-impute", action="store_true", help="fail instead of imputing empty monthly cells")


def _source_args(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--manifest", type=Path, help="column-mapping manifest (JSON)")
    src.add_argument("--features", type=Path, help="feature table written by `preprocess`")
    _window_args(p)
    _cleaning_args(p)


def _window(ns) -> StudyWindow:
    return StudyWindow.parse(ns.window_start, ns.window_end)


def _policy(ns) -> CleaningPolicy:
    return CleaningPolicy(ns.outlier_z, ns.irregular_drop_pct, not ns.no_impute)


def _table(ns) -> FeatureTable:
    if ns.features is not None:
        return read_feature_table(ns.features, ns.features.with_name(INDEX_FILE))
    prepared = prepare(load_bundle(load_manifest(ns.manifest), _window(ns)), _policy(ns))
    return FeatureTable.from_rows(prepared.rows)


# -- commands -----------------------------------------------------------------

def cmd_synth(ns) -> int:
    seed = ns.seed if ns.seed is not None else default_seed()
    cfg = SynthConfig(n_animals=ns.n_animals, window=_window(ns), daily_access_prob=ns.access_prob,
                      measurement_noise_sd=ns.noise_sd, base_adg=ns.base_adg, age_effect=ns.age_effect,
                      heat_penalty=ns.heat_penalty, rain_boost=ns.rain_boost, seed=seed)
    manifest = write_bundle(simulate(cfg).bundle, ns.out)
    print(f"wrote synthetic bundle ({cfg.n_animals} animals, seed {seed}) -> {manifest}")
    return 0


def cmd_preprocess(ns) -> int:
    bundle = load_bundle(load_manifest(ns.manifest), _window(ns))
    prepared = prepare(bundle, _policy(ns))
    out = Path(ns.out)
    out.mkdir(parents=True, exist_ok=True)
    write_feature_table(prepared.rows, out / FEATURES_FILE, out / INDEX_FILE)
    n_animals = len({r.eid for r in prepared.rows})
    print(f"eligible animals: {len(prepared.eligible)}; irregular removed: {len(prepared.irregular)}; "
          f"outlier events removed: {prepared.outliers_removed}")
    print(f"monthly records: {len(prepared.weights)}; feature rows: {len(prepared.rows)} "
          f"({n_animals} animals) -> {out / FEATURES_FILE}")
    return 0


def cmd_run(ns) -> int:
    seed = ns.seed if ns.seed is not None else default_seed()
    table = _table(ns)
    grids_all = load_grids(ns.grid, seed) if ns.grid else default_grids(seed)
    models = MODEL_KINDS if ns.model == "all" else (ns.model,)
    grids = {m: GridSpec(m, grids_all[m]) for m in models if m in grids_all}
    missing = [m for m in models if m not in grids]
    if missing:
        raise ValueError(f"no grid for model(s) {missing}")
    variants = VARIANTS if ns.variant == "all" else (DatasetVariant.parse(ns.variant),)
    plan = CvPlan(k=ns.folds, seed=seed, shuffle=not ns.no_shuffle)
    report = run_experiment(table.select, grids, variants, plan, ns.scaling, ns.metric_space,
                            months=table.months, n_jobs=ns.jobs,
                            progress=(lambda msg: print(msg, file=sys.stderr)) if ns.verbose else None)
    written = emit_report(report, ns.out)
    for e in report.entries:
        t = e.test[report.metric_space if report.metric_space != "both" else "scaled"]
        print(f"{e.model:6s} {e.variant.value:12s} test R2={t.r2:.4f} RMSE={t.rmse:.4f} "
              f"Accuracy={t.accuracy_pct:.2f}%")
    print(f"wrote {len(written)} files -> {ns.out}")
    return 0


def cmd_stats(ns) -> int:
    summary = analyze(_table(ns), degree=ns.degree)
    out = Path(ns.out)
    out.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in summary.table():
        w.writerow([format_value(v) if isinstance(v, float) else v for v in row])
    atomic_write(out / "stats.csv", buf.getvalue())
    c = summary.age_weight
    print(f"pearson(age, weight): r={c.r:.4f} p={c.p_value:.3g} n={c.n}")
    print(f"wrote {out / 'stats.csv'}")
    return 0


def cmd_report(ns) -> int:
    report = EvaluationReport.from_dict(json.loads(Path(ns.report).read_text(encoding="utf-8")))
    written = emit_report(report, ns.out)
    print(f"wrote {len(written)} files -> {ns.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mobweigh", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic raw bundle + manifest")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--seed", type=int, default=None, help="default: $MOBWEIGH_SEED or 0")
    d = SynthConfig()
    p.add_argument("--n-animals", type=int, default=d.n_animals)
    p.add_argument("--access-prob", type=float, default=d.daily_access_prob)
    p.add_argument("--noise-sd", type=float, default=d.measurement_noise_sd)
    p.add_argument("--base-adg", type=float, default=d.base_adg)
    p.add_argument("--age-effect", type=float, default=d.age_effect)
    p.add_argument("--heat-penalty", type=float, default=d.heat_penalty)
    p.add_argument("--rain-boost", type=float, default=d.rain_boost)
    _window_args(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("preprocess", help="clean raw sources and write the feature table")
    p.add_argument("--manifest", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    _window_args(p)
    _cleaning_args(p)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("run", help="grid search + k-fold CV; write metric tables and chart data")
    _source_args(p)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--model", choices=("all",) + MODEL_KINDS, default="all")
    p.add_argument("--variant", choices=("all",) + tuple(v.value for v in VARIANTS), default="all")
    p.add_argument("--grid", type=Path, help="JSON file of candidate configs per model")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=None, help="default: $MOBWEIGH_SEED or 0")
    p.add_argument("--no-shuffle", action="store_true")
    p.add_argument("--scaling", choices=SCALING_MODES, default="fold")
    p.add_argument("--paper-compat", dest="scaling", action="store_const", const="paper-compat",
                   help="fit the scaler on the whole dataset (same as --scaling paper-compat)")
    p.add_argument("--metric-space", choices=METRIC_SPACES, default="scaled")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("stats", help="correlation and regression summary")
    _source_args(p)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--degree", type=int, default=2)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("report", help="re-emit tables and chart data from a report.json")
    p.add_argument("--report", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        return ns.func(ns)
    except (ValueError, OSError, RuntimeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
