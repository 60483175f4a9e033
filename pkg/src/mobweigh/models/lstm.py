"""Stacked LSTM regressor trained by mini-batch gradient descent with BPTT.

Gate layout in every weight block is (input, forget, candidate, output).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from .base import FittedModel, ModelError, config_to_dict

SEQUENCE_MODES = ("feature-as-sequence", "single-step")


class DivergenceError(ModelError):
    def __init__(self, epoch: int):
        self.epoch = epoch
        super().__init__(f"training loss became non-finite in epoch {epoch}")


@dataclass(frozen=True)
class LstmConfig:
    hidden_units: int = 16
    num_layers: int = 1
    learning_rate: float = 0.1
    batch_size: int = 32
    epochs: int = 100
    seed: int = 0
    sequence_mode: str = "feature-as-sequence"

    kind: ClassVar[str] = "lstm"

    def __post_init__(self):
        for name in ("hidden_units", "num_layers", "batch_size", "epochs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.sequence_mode not in SEQUENCE_MODES:
            raise ValueError(f"sequence_mode must be one of {SEQUENCE_MODES}")

    def input_size(self, n_features: int) -> int:
        return 1 if self.sequence_mode == "feature-as-sequence" else n_features


def sigmoid(z):
    # split by sign so large |z| does not overflow exp
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def init_params(n_features: int, cfg: LstmConfig, rng: np.random.Generator | None = None) -> dict:
    """Uniform(-1/sqrt(H), 1/sqrt(H)) init; ``rng=None`` gives all zeros."""
    H = cfg.hidden_units
    bound = 1.0 / math.sqrt(H)

    def draw(*shape):
        if rng is None:
            return np.zeros(shape)
        return rng.uniform(-bound, bound, size=shape)

    params = {}
    d = cfg.input_size(n_features)
    for layer in range(cfg.num_layers):
        params[f"W{layer}"] = draw(4 * H, d)
        params[f"U{layer}"] = draw(4 * H, H)
        params[f"b{layer}"] = draw(4 * H)
        d = H
    params["w_out"] = draw(H)
    params["b_out"] = draw(1)
    return params


def to_sequence(X: np.ndarray, mode: str) -> np.ndarray:
    """(rows, features) -> (steps, rows, step_inputs)."""
    if mode == "feature-as-sequence":
        return np.ascontiguousarray(X.T[:, :, None])
    return X[None, :, :]


def forward(params: dict, X: np.ndarray, cfg: LstmConfig, keep: bool = False):
    """Predictions, plus per-layer caches when ``keep`` is set."""
    seq = to_sequence(np.asarray(X, dtype=float), cfg.sequence_mode)
    T, B = seq.shape[0], seq.shape[1]
    H = cfg.hidden_units
    caches = []
    inputs = seq
    for layer in range(cfg.num_layers):
        W, U, b = params[f"W{layer}"], params[f"U{layer}"], params[f"b{layer}"]
        h = np.zeros((B, H))
        c = np.zeros((B, H))
        hs = np.empty((T, B, H))
        steps = []
        for t in range(T):
            z = inputs[t] @ W.T + h @ U.T + b
            i = sigmoid(z[:, :H])
            f = sigmoid(z[:, H:2 * H])
            g = np.tanh(z[:, 2 * H:3 * H])
            o = sigmoid(z[:, 3 * H:])
            c_prev, h_prev = c, h
            c = f * c + i * g
            tc = np.tanh(c)
            h = o * tc
            hs[t] = h
            if keep:
                steps.append((inputs[t], h_prev, c_prev, i, f, g, o, c, tc))
        caches.append(steps)
        inputs = hs
    out = inputs[-1] @ params["w_out"] + params["b_out"][0]
    return (out, caches, inputs[-1]) if keep else out


def loss_and_grad(params: dict, X: np.ndarray, y: np.ndarray, cfg: LstmConfig):
    """Mean squared error and its gradient with respect to every parameter."""
    pred, caches, h_last = forward(params, X, cfg, keep=True)
    y = np.asarray(y, dtype=float)
    B = y.shape[0]
    err = pred - y
    loss = float(np.mean(err * err))
    dpred = 2.0 * err / B

    grads = {"w_out": h_last.T @ dpred, "b_out": np.array([dpred.sum()])}
    H = cfg.hidden_units
    T = len(caches[0])
    dh_above = np.zeros((T, B, H))
    dh_above[-1] = np.outer(dpred, params["w_out"])

    for layer in reversed(range(cfg.num_layers)):
        W, U = params[f"W{layer}"], params[f"U{layer}"]
        dW = np.zeros_like(W)
        dU = np.zeros_like(U)
        db = np.zeros(4 * H)
        d_in = W.shape[1]
        dx = np.zeros((T, B, d_in))
        dh_next = np.zeros((B, H))
        dc_next = np.zeros((B, H))
        for t in reversed(range(T)):
            x, h_prev, c_prev, i, f, g, o, c, tc = caches[layer][t]
            dh = dh_above[t] + dh_next
            dc = dc_next + dh * o * (1.0 - tc * tc)
            dz = np.concatenate([
                dc * g * i * (1.0 - i),
                dc * c_prev * f * (1.0 - f),
                dc * i * (1.0 - g * g),
                dh * tc * o * (1.0 - o),
            ], axis=1)
            dW += dz.T @ x
            dU += dz.T @ h_prev
            db += dz.sum(axis=0)
            dx[t] = dz @ W
            dh_next = dz @ U
            dc_next = dc * f
        grads[f"W{layer}"], grads[f"U{layer}"], grads[f"b{layer}"] = dW, dU, db
        dh_above = dx
    return loss, grads


class LstmModel(FittedModel):
    kind = "lstm"

    def __init__(self, params: dict, config: LstmConfig, columns, n_features: int,
                 loss_history: list[float] | None = None):
        super().__init__(columns, n_features)
        self.params = params
        self.config = config
        self.loss_history = loss_history or []

    @classmethod
    def zeros(cls, n_features: int, cfg: LstmConfig, head_bias: float = 0.0, columns=None) -> "LstmModel":
        params = init_params(n_features, cfg, rng=None)
        params["b_out"][0] = head_bias
        return cls(params, cfg, columns, n_features)

    def _predict(self, X):
        return forward(self.params, X, self.config)

    def trace(self, X):
        """Per-layer lists of (input, forget, candidate, output, cell, hidden) per step."""
        X = self.check_input(X)
        _, caches, _ = forward(self.params, X, self.config, keep=True)
        return [[(i, f, g, o, c, o * tc) for (_, _, _, i, f, g, o, c, tc) in steps] for steps in caches]

    def to_dict(self) -> dict:
        return {"kind": self.kind, "config": config_to_dict(self.config), "columns": self.columns,
                "n_features": self.n_features,
                "params": {k: v.tolist() for k, v in self.params.items()},
                "loss_history": self.loss_history}

    @classmethod
    def from_dict(cls, doc):
        cfg = LstmConfig(**{k: v for k, v in doc["config"].items() if k != "kind"})
        params = {k: np.array(v, dtype=float) for k, v in doc["params"].items()}
        return cls(params, cfg, doc["columns"], doc["n_features"], doc.get("loss_history"))


def lstm_fit(X, y, cfg: LstmConfig = LstmConfig(), columns=None) -> LstmModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ModelError(f"X {X.shape} and y {y.shape} disagree")
    n = X.shape[0]
    if n < cfg.batch_size:
        raise ModelError(f"{n} rows is fewer than batch_size={cfg.batch_size}")
    rng = np.random.default_rng(cfg.seed & (2**64 - 1))
    params = init_params(X.shape[1], cfg, rng)
    history = []
    with np.errstate(over="ignore", invalid="ignore"):  # _train raises DivergenceError itself
        _train(params, X, y, cfg, rng, history)
    return LstmModel(params, cfg, columns, X.shape[1], history)


def _train(params, X, y, cfg, rng, history):
    n = X.shape[0]
    lr = cfg.learning_rate
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            rows = order[start:start + cfg.batch_size]
            loss, grads = loss_and_grad(params, X[rows], y[rows], cfg)
            if not math.isfinite(loss):
                raise DivergenceError(epoch)
            for k, gk in grads.items():
                params[k] -= lr * gk
        pred = forward(params, X, cfg)
        full = float(np.mean((pred - y) ** 2))
        if not math.isfinite(full):
            raise DivergenceError(epoch)
        history.append(full)
