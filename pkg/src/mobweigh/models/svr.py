"""Epsilon-insensitive kernel regression trained in the dual."""
from __future__ import annotations

from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from .. import _kernels
from .base import FittedModel, ModelError, NumericError, config_to_dict

KERNELS = ("linear", "polynomial", "rbf")


@dataclass(frozen=True)
class SvrConfig:
    c: float = 1.0
    epsilon: float = 0.01
    kernel: str = "rbf"
    gamma: float = 1.0
    degree: int = 2
    tolerance: float = 1e-3
    max_passes: int = 200
    seed: int = 0

    kind: ClassVar[str] = "svr"

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("c must be positive")
        if not self.epsilon >= 0:
            raise ValueError("epsilon must be non-negative")
        if self.kernel not in KERNELS:
            raise ValueError(f"kernel must be one of {KERNELS}")
        if self.kernel == "rbf" and not self.gamma > 0:
            raise ValueError("rbf gamma must be positive")
        if self.kernel == "polynomial" and self.degree < 1:
            raise ValueError("polynomial degree must be at least 1")
        if not self.tolerance > 0 or self.max_passes < 1:
            raise ValueError("tolerance and max_passes must be positive")


def kernel_matrix(A, B, cfg: SvrConfig) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if cfg.kernel == "linear":
        K = A @ B.T
    elif cfg.kernel == "polynomial":
        K = (A @ B.T + 1.0) ** cfg.degree
    else:
        sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * (A @ B.T)
        K = np.exp(-cfg.gamma * np.maximum(sq, 0.0))
    if not np.isfinite(K).all():
        raise NumericError("kernel produced non-finite values")
    return K


@dataclass(frozen=True)
class KKTReport:
    max_violation: float
    violations: int

    @property
    def ok(self) -> bool:
        return self.violations == 0


def kkt_check(beta, residual, c: float, epsilon: float, tolerance: float) -> KKTReport:
    """Audit the dual solution against the epsilon-tube optimality conditions."""
    beta = np.asarray(beta)
    r = np.asarray(residual)
    worst = np.zeros_like(r)
    at_zero = beta == 0
    at_bound = np.abs(beta) == c
    free = ~at_zero & ~at_bound
    worst[at_zero] = np.abs(r[at_zero]) - epsilon
    worst[at_bound] = epsilon - np.sign(beta[at_bound]) * r[at_bound]
    worst[free] = np.abs(r[free] - np.sign(beta[free]) * epsilon)
    out_of_box = np.abs(beta) > c
    worst[out_of_box] = np.inf
    return KKTReport(float(worst.max(initial=0.0)), int((worst > tolerance).sum()))


class SvrModel(FittedModel):
    kind = "svr"

    def __init__(self, support: np.ndarray, beta: np.ndarray, bias: float, config: SvrConfig,
                 columns, n_features: int, iterations: int = 0, converged: bool = True):
        super().__init__(columns, n_features)
        self.support = support
        self.beta = beta
        self.bias = float(bias)
        self.config = config
        self.iterations = iterations
        self.converged = converged

    def _predict(self, X):
        if self.beta.size == 0:
            return np.full(X.shape[0], self.bias)
        return kernel_matrix(X, self.support, self.config) @ self.beta + self.bias

    def to_dict(self) -> dict:
        return {"kind": self.kind, "config": config_to_dict(self.config), "columns": self.columns,
                "n_features": self.n_features,
                "params": {"support": self.support.tolist(), "beta": self.beta.tolist(), "bias": self.bias,
                           "iterations": self.iterations, "converged": self.converged}}

    @classmethod
    def from_dict(cls, doc):
        cfg = SvrConfig(**{k: v for k, v in doc["config"].items() if k != "kind"})
        p = doc["params"]
        support = np.array(p["support"], dtype=float).reshape(len(p["beta"]), doc["n_features"])
        return cls(support, np.array(p["beta"], dtype=float), p["bias"], cfg, doc["columns"],
                   doc["n_features"], p["iterations"], p["converged"])


def svr_fit(X, y, cfg: SvrConfig = SvrConfig(), columns=None, *, audit: bool = True) -> SvrModel:
    """Solve the dual by pairwise coordinate steps on the maximal KKT-violating pair.

    With ``audit`` on, a fit that reports convergence is re-checked against
    the KKT conditions and a failure raises :class:`NumericError`.
    """
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0] or y.shape[0] < 1:
        raise ModelError(f"X {X.shape} and y {y.shape} disagree or are empty")
    K = kernel_matrix(X, X, cfg)
    n = y.shape[0]
    beta, bias, iters, converged = _kernels.smo_solve(K, y, cfg.c, cfg.epsilon, cfg.tolerance,
                                                      cfg.max_passes * max(n, 1), cfg.seed)
    if not np.isfinite(beta).all() or not np.isfinite(bias):
        raise NumericError("dual solver produced non-finite coefficients")
    if audit and converged:
        report = kkt_check(beta, y - (K @ beta + bias), cfg.c, cfg.epsilon, cfg.tolerance)
        if not report.ok:
            raise NumericError(f"KKT audit failed: {report.violations} point(s), worst {report.max_violation:.3g}")
    keep = beta != 0
    return SvrModel(X[keep].copy(), beta[keep].copy(), bias, cfg, columns, X.shape[1], iters, converged)
