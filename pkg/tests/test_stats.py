import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

scipy_stats = pytest.importorskip("scipy.stats")
scipy_special = pytest.importorskip("scipy.special")

from mobweigh.stats import (CollinearityError, StatsError, analyze, betainc, fit_regression, pearson,
                            residual_orthogonality, t_two_sided_p)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.05, 200), st.floats(0.05, 200), st.floats(0, 1))
def test_betainc_matches_scipy(a, b, x):
    assert betainc(a, b, x) == pytest.approx(float(scipy_special.betainc(a, b, x)), rel=1e-9, abs=1e-13)


@pytest.mark.parametrize("t,df", [(0.0, 5), (1.0, 1), (2.5, 10), (-3.2, 30), (10.0, 200), (0.3, 1000)])
def test_t_p_values_match_scipy(t, df):
    assert t_two_sided_p(t, df) == pytest.approx(2 * scipy_stats.t.sf(abs(t), df), rel=1e-9, abs=1e-15)


def test_pearson_exact_on_lines():
    x = np.arange(10.0)
    up, down = pearson(x, 3 * x + 2), pearson(x, -0.5 * x + 7)
    assert up.r == 1.0 and up.p_value == 0.0
    assert down.r == -1.0 and down.p_value == 0.0


@pytest.mark.parametrize("seed", range(5))
def test_pearson_matches_scipy(seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=40)
    y = 0.3 * x + rng.normal(size=40)
    ours = pearson(x, y)
    ref = scipy_stats.pearsonr(x, y)
    assert ours.r == pytest.approx(ref.statistic, abs=1e-12)
    assert ours.p_value == pytest.approx(ref.pvalue, rel=1e-8)


def test_pearson_errors():
    with pytest.raises(StatsError):
        pearson([1, 2, 3], [4, 4, 4])
    with pytest.raises(StatsError):
        pearson([1, 2], [3, 4])


def test_exact_coefficient_recovery():
    rng = np.random.default_rng(0)
    X = rng.uniform(size=(30, 2))
    y = 1 + 2 * X[:, 0] + 3 * X[:, 1]
    fit = fit_regression(X, y)
    np.testing.assert_allclose(fit.coefficients, [1, 2, 3], rtol=0, atol=1e-9)
    assert fit.perfect_fit and fit.r2 == pytest.approx(1.0)


@pytest.mark.parametrize("seed", range(3))
def test_regression_matches_lstsq_and_scipy(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(50, 2))
    y = 0.5 + X @ [1.5, -2.0] + rng.normal(size=50)
    fit = fit_regression(X, y)
    D = np.column_stack([np.ones(50), X])
    ref, *_ = np.linalg.lstsq(D, y, rcond=None)
    np.testing.assert_allclose(fit.coefficients, ref, rtol=1e-10, atol=1e-12)
    assert residual_orthogonality(fit) < 1e-10
    lin = scipy_stats.linregress(X[:, 0], y)
    single = fit_regression(X[:, 0], y)
    assert single.coefficients[1] == pytest.approx(lin.slope, rel=1e-10)
    assert single.std_errors[1] == pytest.approx(lin.stderr, rel=1e-8)
    assert single.p_values[1] == pytest.approx(lin.pvalue, rel=1e-6, abs=1e-300)


def test_polynomial_fit_centered():
    x = np.linspace(0, 10, 25)
    y = 4 - x + 0.5 * x ** 2
    fit = fit_regression(x, y, degree=2, names=["age"])
    np.testing.assert_allclose(fit.predict(x), y, atol=1e-9)
    assert fit.terms[0] == "intercept" and fit.terms[2].endswith("^2")


def test_collinear_design_rejected():
    x = np.arange(10.0)
    with pytest.raises(CollinearityError):
        fit_regression(np.column_stack([x, 2 * x]), x)


def test_synthetic_age_weight_association():
    from mobweigh.features import FeatureTable
    from mobweigh.pipeline import prepare
    from mobweigh.synth import SynthConfig, generate_bundle
    rows = prepare(generate_bundle(SynthConfig(seed=2))).rows
    assert len(rows) >= 200
    summary = analyze(FeatureTable.from_rows(rows))
    assert summary.age_weight.r > 0 and summary.age_weight.p_value < 0.05
    assert summary.table()[0] == ["analysis", "term", "coefficient", "stderr", "t", "p"]
