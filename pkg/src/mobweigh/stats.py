"""Correlation and least-squares regression with exact t-distribution p values."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class StatsError(ValueError):
    pass


class CollinearityError(StatsError):
    pass


def _betacf(a: float, b: float, x: float, tol: float = 1e-15, max_iter: int = 1000) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < tol:
            return h
    raise StatsError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if not (a > 0 and b > 0):
        raise ValueError("a and b must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_two_sided_p(t: float, df: float) -> float:
    """P(|T| >= |t|) for Student's t with ``df`` degrees of freedom."""
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    if math.isinf(t):
        return 0.0
    if math.isnan(t):
        return math.nan
    return betainc(df / 2.0, 0.5, df / (df + t * t))


@dataclass(frozen=True)
class CorrelationResult:
    r: float
    t_stat: float
    p_value: float
    n: int


def pearson(x, y) -> CorrelationResult:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise StatsError("x and y must be 1-D and equally long")
    n = x.size
    if n < 3:
        raise StatsError("pearson needs at least 3 points")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise StatsError("correlation undefined for a constant input")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    df = n - 2
    if abs(r) == 1.0:
        return CorrelationResult(r, math.copysign(math.inf, r), 0.0, n)
    t = r * math.sqrt(df / (1.0 - r * r))
    return CorrelationResult(r, t, t_two_sided_p(t, df), n)


@dataclass
class RegressionFit:
    terms: list[str]
    coefficients: np.ndarray
    std_errors: np.ndarray
    t_stats: np.ndarray
    p_values: np.ndarray
    r2: float
    degree: int
    residuals: np.ndarray
    perfect_fit: bool = False
    center: float | None = None
    design: np.ndarray = field(repr=False, default=None)

    def predict(self, X) -> np.ndarray:
        return _design(np.asarray(X, dtype=float), self.degree, self.center)[0] @ self.coefficients

    def rows(self) -> list[tuple]:
        return list(zip(self.terms, self.coefficients, self.std_errors, self.t_stats, self.p_values))


def _design(X: np.ndarray, degree: int, center: float | None):
    if X.ndim == 1:
        X = X[:, None]
    if degree > 1:
        if X.shape[1] != 1:
            raise StatsError("polynomial expansion takes a single predictor")
        x = X[:, 0]
        if center is None:
            center = float(x.mean())
        xc = x - center
        cols = [xc ** p for p in range(1, degree + 1)]
        return np.column_stack([np.ones(len(x))] + cols), center
    return np.column_stack([np.ones(X.shape[0]), X]), None


def fit_regression(X, y, degree: int = 1, names: list[str] | None = None) -> RegressionFit:
    """OLS with intercept via the normal equations.

    ``degree > 1`` expands a single predictor into centred powers
    ``(x - mean(x))**k``; coefficients refer to that centred basis.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if degree < 1:
        raise StatsError("degree must be at least 1")
    D, center = _design(X, degree, None)
    n, p = D.shape
    if y.shape[0] != n:
        raise StatsError("design and response lengths differ")
    if n <= p:
        raise StatsError(f"need more rows ({n}) than columns ({p})")
    # rank check on the column-normalised design, so units do not matter
    norms = np.linalg.norm(D, axis=0)
    if np.any(norms == 0) or np.linalg.matrix_rank(D / norms) < p:
        raise CollinearityError("design matrix is rank deficient")
    gram = D.T @ D
    coef = np.linalg.solve(gram, D.T @ y)
    resid = y - D @ coef
    rss = float(resid @ resid)
    tss = float(((y - y.mean()) ** 2).sum())
    r2_fit = 1.0 - rss / tss if tss > 0 else 1.0
    df = n - p
    perfect = rss <= 1e-24 * max(tss, float(y @ y), 1.0)
    if perfect:
        se = np.zeros(p)
        tst = np.full(p, math.inf)
        pv = np.zeros(p)
    else:
        sigma2 = rss / df
        se = np.sqrt(np.diag(np.linalg.inv(gram)) * sigma2)
        tst = coef / se
        pv = np.array([t_two_sided_p(float(t), df) for t in tst])
    if names is None:
        names = [f"x{i + 1}" for i in range(X.shape[1] if X.ndim > 1 else 1)]
    if degree > 1:
        terms = ["intercept"] + [f"({names[0]} - {center:.6g})^{k}" for k in range(1, degree + 1)]
    else:
        terms = ["intercept"] + list(names)
    return RegressionFit(terms, coef, se, tst, pv, r2_fit, degree, resid, perfect, center, D)


def residual_orthogonality(fit: RegressionFit) -> float:
    """Largest |D_j . r| relative to ||D_j|| ||y||; zero at the exact OLS solution."""
    D = fit.design
    r = fit.residuals
    scale = np.linalg.norm(D, axis=0) * max(np.linalg.norm(r + D @ fit.coefficients), 1e-300)
    return float(np.max(np.abs(D.T @ r) / scale))


@dataclass
class StatsSummary:
    age_weight: CorrelationResult
    growth_poly: RegressionFit
    weather: RegressionFit

    def table(self) -> list[list]:
        rows = [["analysis", "term", "coefficient", "stderr", "t", "p"]]
        c = self.age_weight
        rows.append(["pearson(age, current weight)", "r", c.r, "", c.t_stat, c.p_value])
        for label, fit in (("polynomial(weight ~ age)", self.growth_poly),
                           ("multiple(next weight ~ rainfall + temperature)", self.weather)):
            for term, b, se, t, p in fit.rows():
                rows.append([label, term, b, se, t, p])
            rows.append([label, "r2", fit.r2, "", "", ""])
        return rows


def analyze(table, degree: int = 2) -> StatsSummary:
    """The standard analysis over a feature table (one observation per feature row)."""
    age = table.column("age_months")
    weight = table.column("current_month_weight")
    nxt = table.column("next_month_weight")
    rain = table.column("rainfall_0")
    temp = table.column("temperature_0")
    return StatsSummary(
        pearson(age, weight),
        fit_regression(age, weight, degree=degree, names=["age"]),
        fit_regression(np.column_stack([rain, temp]), nxt, names=["rainfall", "temperature"]),
    )
