"""Regressors sharing one fit/predict contract."""
from __future__ import annotations

import json
from pathlib import Path

from .base import FittedModel, MeanConfig, MeanModel, ModelError, NumericError, mean_fit, predict, save_model
from .forest import ForestConfig, ForestModel, forest_fit
from .lstm import DivergenceError, LstmConfig, LstmModel, lstm_fit
from .svr import SvrConfig, SvrModel, kkt_check, svr_fit

MODEL_KINDS = ("forest", "svr", "lstm")

_CONFIGS = {"forest": ForestConfig, "svr": SvrConfig, "lstm": LstmConfig, "mean": MeanConfig}
_FITTERS = {ForestConfig: forest_fit, SvrConfig: svr_fit, LstmConfig: lstm_fit, MeanConfig: mean_fit}
_MODELS = {"forest": ForestModel, "svr": SvrModel, "lstm": LstmModel, "mean": MeanModel}


def fit_model(cfg, X, y, columns=None) -> FittedModel:
    """Dispatch on the config type."""
    try:
        fitter = _FITTERS[type(cfg)]
    except KeyError:
        raise ModelError(f"unknown model config {type(cfg).__name__}") from None
    return fitter(X, y, cfg, columns=columns)


def config_from_dict(doc: dict):
    doc = dict(doc)
    kind = doc.pop("kind")
    try:
        return _CONFIGS[kind](**doc)
    except KeyError:
        raise ModelError(f"unknown model kind {kind!r}") from None


def model_from_dict(doc: dict) -> FittedModel:
    return _MODELS[doc["kind"]].from_dict(doc)


def load_model(path) -> FittedModel:
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


__all__ = [
    "FittedModel", "ModelError", "NumericError", "DivergenceError", "MODEL_KINDS",
    "ForestConfig", "ForestModel", "forest_fit",
    "SvrConfig", "SvrModel", "svr_fit", "kkt_check",
    "LstmConfig", "LstmModel", "lstm_fit",
    "MeanConfig", "MeanModel", "mean_fit",
    "fit_model", "predict", "config_from_dict", "model_from_dict", "save_model", "load_model",
]
