"""Per-column MinMax scaling to [0, 1]."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import numpy as np


class NotFittedError(RuntimeError):
    pass


class ShapeError(ValueError):
    pass


class MinMaxScaler:
    """z = (x - min) / (max - min), column by column.

    Constant columns (max == min) map to 0, and their inverse is ``min``.
    Data outside the fitted range is not clipped.
    """

    def __init__(self, columns: Sequence[str] | None = None):
        self.columns = list(columns) if columns is not None else None
        self.min_: np.ndarray | None = None
        self.max_: np.ndarray | None = None

    @property
    def fitted(self) -> bool:
        return self.min_ is not None

    def fit(self, X) -> "MinMaxScaler":
        X = _as_2d(X)
        if X.shape[0] == 0:
            raise ValueError("cannot fit a scaler on an empty matrix")
        if self.columns is not None and len(self.columns) != X.shape[1]:
            raise ShapeError(f"{len(self.columns)} column names for {X.shape[1]} columns")
        self.min_ = X.min(axis=0)
        self.max_ = X.max(axis=0)
        return self

    def _check(self, X) -> np.ndarray:
        if not self.fitted:
            raise NotFittedError("scaler has not been fitted")
        X = _as_2d(X)
        if X.shape[1] != self.min_.shape[0]:
            raise ShapeError(f"expected {self.min_.shape[0]} columns, got {X.shape[1]}")
        return X

    @property
    def span_(self) -> np.ndarray:
        return self.max_ - self.min_

    def transform(self, X) -> np.ndarray:
        X = self._check(X)
        span = self.span_
        safe = np.where(span > 0, span, 1.0)
        return np.where(span > 0, (X - self.min_) / safe, 0.0)

    def fit_transform(self, X) -> np.ndarray:
        return self.fit(X).transform(X)

    def inverse_transform(self, Z) -> np.ndarray:
        Z = self._check(Z)
        return Z * self.span_ + self.min_

    def to_dict(self) -> dict:
        if not self.fitted:
            raise NotFittedError("scaler has not been fitted")
        names = self.columns or [f"x{i}" for i in range(self.min_.shape[0])]
        return {"columns": [{"name": n, "min": float(lo), "max": float(hi)}
                            for n, lo, hi in zip(names, self.min_, self.max_)]}

    @classmethod
    def from_dict(cls, doc: dict) -> "MinMaxScaler":
        cols = doc["columns"]
        sc = cls([c["name"] for c in cols])
        sc.min_ = np.array([c["min"] for c in cols], dtype=float)
        sc.max_ = np.array([c["max"] for c in cols], dtype=float)
        return sc

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "MinMaxScaler":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _as_2d(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got {X.ndim}-D")
    return X


def fit(X, columns: Sequence[str] | None = None) -> MinMaxScaler:
    return MinMaxScaler(columns).fit(X)


def transform(scaler: MinMaxScaler, X) -> np.ndarray:
    return scaler.transform(X)


def inverse_transform(scaler: MinMaxScaler, Z) -> np.ndarray:
    return scaler.inverse_transform(Z)
