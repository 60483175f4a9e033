"""Shared model contract: column checking, prediction, JSON persistence."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import ClassVar, Sequence

import numpy as np

from ..scaling import ShapeError


class ModelError(ValueError):
    pass


class NumericError(ModelError):
    pass


class FittedModel:
    """Base for fitted regressors. Subclasses implement ``_predict`` and (de)serialisation."""

    kind: ClassVar[str] = ""

    def __init__(self, columns: Sequence[str] | None, n_features: int):
        self.columns = list(columns) if columns is not None else None
        self.n_features = int(n_features)

    def check_input(self, X, columns: Sequence[str] | None = None) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1 and X.size == 0:
            X = X.reshape(0, self.n_features)
        if X.ndim != 2:
            raise ShapeError(f"expected a 2-D matrix, got {X.ndim}-D")
        if X.shape[1] != self.n_features:
            raise ShapeError(f"model trained on {self.n_features} columns, got {X.shape[1]}")
        if columns is not None and self.columns is not None and list(columns) != self.columns:
            raise ShapeError(f"column mismatch: trained on {self.columns}, got {list(columns)}")
        return X

    def predict(self, X, columns: Sequence[str] | None = None) -> np.ndarray:
        X = self.check_input(X, columns)
        if X.shape[0] == 0:
            return np.empty(0)
        return self._predict(X)

    def _predict(self, X: np.ndarray) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def to_dict(self) -> dict:  # pragma: no cover - abstract
        raise NotImplementedError


@dataclass(frozen=True)
class MeanConfig:
    """Predict the training-target mean; the reference floor for comparisons."""

    kind: ClassVar[str] = "mean"


class MeanModel(FittedModel):
    kind = "mean"

    def __init__(self, mean: float, columns, n_features: int):
        super().__init__(columns, n_features)
        self.mean = float(mean)

    def _predict(self, X):
        return np.full(X.shape[0], self.mean)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "config": {}, "columns": self.columns,
                "n_features": self.n_features, "params": {"mean": self.mean}}

    @classmethod
    def from_dict(cls, doc):
        return cls(doc["params"]["mean"], doc["columns"], doc["n_features"])


def mean_fit(X, y, cfg: MeanConfig = MeanConfig(), columns=None) -> MeanModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.size == 0:
        raise ModelError("cannot fit on an empty target")
    return MeanModel(float(np.mean(y)), columns, X.shape[1])


def config_to_dict(cfg) -> dict:
    out = {"kind": cfg.kind}
    out.update(asdict(cfg))
    return out


def predict(model: FittedModel, X, columns: Sequence[str] | None = None) -> np.ndarray:
    return model.predict(X, columns)


def save_model(model: FittedModel, path) -> None:
    Path(path).write_text(json.dumps(model.to_dict()) + "\n", encoding="utf-8")
