"""Bagged regression-tree forest."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from .. import _kernels
from .base import FittedModel, ModelError, config_to_dict


@dataclass(frozen=True)
class ForestConfig:
    n_estimators: int = 100
    max_depth: int | None = None
    min_samples_split: int = 2
    features_per_split: int | None = None  # None -> ceil(n_features / 3)
    bootstrap_fraction: float = 1.0
    bootstrap: bool = True
    seed: int = 0
    n_jobs: int = 1

    kind: ClassVar[str] = "forest"

    def __post_init__(self):
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be positive")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be positive or None")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be at least 2")
        if not 0 < self.bootstrap_fraction <= 1:
            raise ValueError("bootstrap_fraction must lie in (0, 1]")
        if self.features_per_split is not None and self.features_per_split < 1:
            raise ValueError("features_per_split must be positive")

    def resolved_features(self, n_features: int) -> int:
        if self.features_per_split is None:
            return max(1, math.ceil(n_features / 3))
        if self.features_per_split > n_features:
            raise ValueError(f"features_per_split={self.features_per_split} exceeds {n_features} features")
        return self.features_per_split


@dataclass(frozen=True)
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray

    def predict(self, X) -> np.ndarray:
        return _kernels.predict_tree(self.feature, self.threshold, self.left, self.right, self.value, X)

    @property
    def node_count(self) -> int:
        return int(self.feature.shape[0])

    def to_dict(self) -> dict:
        return {"feature": self.feature.tolist(), "threshold": self.threshold.tolist(),
                "left": self.left.tolist(), "right": self.right.tolist(),
                "value": self.value.tolist(), "n_samples": self.n_samples.tolist()}

    @classmethod
    def from_dict(cls, d) -> "Tree":
        return cls(np.array(d["feature"], dtype=np.int64), np.array(d["threshold"], dtype=float),
                   np.array(d["left"], dtype=np.int64), np.array(d["right"], dtype=np.int64),
                   np.array(d["value"], dtype=float), np.array(d["n_samples"], dtype=np.int64))


class ForestModel(FittedModel):
    kind = "forest"

    def __init__(self, trees: list[Tree], config: ForestConfig, y_range: tuple[float, float],
                 columns, n_features: int):
        super().__init__(columns, n_features)
        self.trees = trees
        self.config = config
        self.y_range = y_range

    def tree_predictions(self, X) -> np.ndarray:
        X = self.check_input(X)
        return np.vstack([t.predict(X) for t in self.trees])

    def _predict(self, X):
        per_tree = np.vstack([t.predict(X) for t in self.trees])
        p0 = per_tree[0]
        # averaging relative to the first tree keeps identical trees exact
        out = p0 + (per_tree - p0).sum(axis=0) / len(self.trees)
        # rounding guard: a mean of leaf means never leaves the target range
        return np.clip(out, *self.y_range)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "config": config_to_dict(self.config), "columns": self.columns,
                "n_features": self.n_features, "params": {"y_range": list(self.y_range),
                                                          "trees": [t.to_dict() for t in self.trees]}}

    @classmethod
    def from_dict(cls, doc):
        cfg = {k: v for k, v in doc["config"].items() if k != "kind"}
        p = doc["params"]
        return cls([Tree.from_dict(t) for t in p["trees"]], ForestConfig(**cfg), tuple(p["y_range"]),
                   doc["columns"], doc["n_features"])


def tree_seeds(seed: int, n: int) -> list[np.random.SeedSequence]:
    """Independent per-tree streams, so results do not depend on thread count."""
    return np.random.SeedSequence(seed & (2**64 - 1)).spawn(n)


def _grow(X, y, cfg: ForestConfig, mtry: int, ss: np.random.SeedSequence) -> Tree:
    n = X.shape[0]
    gen = np.random.default_rng(ss)
    if cfg.bootstrap:
        m = max(1, int(round(cfg.bootstrap_fraction * n)))
        samples = gen.integers(0, n, size=m)
    else:
        samples = np.arange(n)
    kernel_seed = int(gen.integers(0, 2**63))
    depth = -1 if cfg.max_depth is None else cfg.max_depth
    return Tree(*_kernels.build_tree(X, y, samples, depth, cfg.min_samples_split, mtry, kernel_seed))


def forest_fit(X, y, cfg: ForestConfig = ForestConfig(), columns=None) -> ForestModel:
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ModelError(f"X {X.shape} and y {y.shape} disagree")
    if X.shape[0] < cfg.min_samples_split:
        raise ModelError(f"{X.shape[0]} rows is fewer than min_samples_split={cfg.min_samples_split}")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise ModelError("non-finite values in training data")
    mtry = cfg.resolved_features(X.shape[1])
    seeds = tree_seeds(cfg.seed, cfg.n_estimators)
    if cfg.n_jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.n_jobs) as pool:
            trees = list(pool.map(lambda ss: _grow(X, y, cfg, mtry, ss), seeds))
    else:
        trees = [_grow(X, y, cfg, mtry, ss) for ss in seeds]
    return ForestModel(trees, cfg, (float(y.min()), float(y.max())), columns, X.shape[1])
