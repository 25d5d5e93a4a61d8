import math
import warnings

import mpmath
import numpy as np
import pytest
import scipy.stats
import statsmodels.api as sm
from hypothesis import given, settings
from hypothesis import strategies as st
from statsmodels.stats.diagnostic import linear_harvey_collier
from statsmodels.stats.outliers_influence import OLSInfluence
from statsmodels.stats.stattools import jarque_bera as sm_jarque_bera

from paynowcast.diagnostics import (
    build_diagnostics,
    durbin_watson,
    harvey_collier,
    influence_measures,
    information_criteria,
    jarque_bera,
    jarque_bera_from_moments,
    omnibus_normality,
    plotting_positions,
    qq_points,
    recursive_residuals,
)
from paynowcast.errors import (
    AllZeroResiduals,
    DegenerateFit,
    DegenerateRecursion,
    NotTimeOrdered,
    SampleTooSmall,
)
from paynowcast.linmodel import fit_ols
from paynowcast.numerics import DesignMatrix, Normal
from paynowcast.series import Period


def simple(x, y):
    return fit_ols(DesignMatrix.from_predictors(x, ["x"]), y)


# -- Durbin-Watson ---------------------------------------------------------------------

def test_dw_examples():
    assert durbin_watson([1, 1, 1]) == 0.0
    assert durbin_watson([1, -1, 1, -1]) == 3.0
    assert durbin_watson([0.1, 0.2, -0.7, 0.4]) == pytest.approx(2.03 / 0.70, abs=1e-12)
    assert round(durbin_watson([0.1, 0.2, -0.7, 0.4]), 1) == 2.9
    with pytest.raises(AllZeroResiduals):
        durbin_watson([0.0, 0.0])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=50).filter(lambda v: any(abs(a) > 1e-100 for a in v)))
def test_dw_range(values):
    assert 0.0 <= durbin_watson(values) <= 4.0


def test_dw_iid_and_ar1(rng):
    assert abs(durbin_watson(rng.normal(size=10_000)) - 2.0) < 0.05
    below = 0
    for _ in range(100):
        e = np.empty(2000)
        e[0] = rng.normal()
        for t in range(1, 2000):
            e[t] = 0.6 * e[t - 1] + rng.normal()
        below += durbin_watson(e) < 1.2
    assert below >= 95


# -- Jarque-Bera ---------------------------------------------------------------------------

def test_jb_examples():
    assert jarque_bera_from_moments(100, 0.0, 3.0) == (0.0, 1.0)
    jb, p = jarque_bera_from_moments(52, -0.159, 2.044)
    assert jb == pytest.approx(2.20, abs=0.01) and p == pytest.approx(0.333, abs=0.002)
    jb, p = jarque_bera([1, 2, 3, 4, 5])
    assert jb == pytest.approx(5 / 6 * (1.69 / 4), abs=1e-12) and p == pytest.approx(0.839, abs=1e-3)
    with pytest.raises(SampleTooSmall):
        jarque_bera([1, 2, 3])


def test_jb_against_statsmodels(rng):
    e = rng.standard_t(5, size=300)
    jb, p = jarque_bera(e)
    ref = sm_jarque_bera(e)
    assert jb == pytest.approx(ref[0], rel=1e-10) and p == pytest.approx(ref[1], rel=1e-9)


# -- omnibus ------------------------------------------------------------------------------------

def omnibus_transcribed(x):
    """D'Agostino (1970) skewness and Anscombe-Glynn (1983) kurtosis transforms, in mpmath."""
    mpmath.mp.dps = 30
    x = [mpmath.mpf(v) for v in x]
    n = len(x)
    mean = sum(x) / n
    m2 = sum((v - mean) ** 2 for v in x) / n
    m3 = sum((v - mean) ** 3 for v in x) / n
    m4 = sum((v - mean) ** 4 for v in x) / n
    b1 = m3 / m2 ** mpmath.mpf(1.5)
    b2 = m4 / m2**2
    # skewness
    Y = b1 * mpmath.sqrt(mpmath.mpf((n + 1) * (n + 3)) / (6 * (n - 2)))
    beta2 = mpmath.mpf(3 * (n**2 + 27 * n - 70) * (n + 1) * (n + 3)) / ((n - 2) * (n + 5) * (n + 7) * (n + 9))
    W2 = -1 + mpmath.sqrt(2 * (beta2 - 1))
    delta = 1 / mpmath.sqrt(mpmath.log(mpmath.sqrt(W2)))
    alpha = mpmath.sqrt(2 / (W2 - 1))
    Z1 = delta * mpmath.asinh(Y / alpha)
    # kurtosis
    E = mpmath.mpf(3 * (n - 1)) / (n + 1)
    var = mpmath.mpf(24 * n * (n - 2) * (n - 3)) / ((n + 1) ** 2 * (n + 3) * (n + 5))
    xk = (b2 - E) / mpmath.sqrt(var)
    sb1 = (mpmath.mpf(6 * (n * n - 5 * n + 2)) / ((n + 7) * (n + 9))
           * mpmath.sqrt(mpmath.mpf(6 * (n + 3) * (n + 5)) / (n * (n - 2) * (n - 3))))
    A = 6 + 8 / sb1 * (2 / sb1 + mpmath.sqrt(1 + 4 / sb1**2))
    inner = (1 - 2 / A) / (1 + xk * mpmath.sqrt(2 / (A - 4)))
    cube = mpmath.sign(inner) * abs(inner) ** (mpmath.mpf(1) / 3)
    Z2 = (1 - 2 / (9 * A) - cube) / mpmath.sqrt(2 / (9 * A))
    k2 = Z1**2 + Z2**2
    return float(k2), float(mpmath.exp(-k2 / 2))


def test_omnibus_transcription_oracle():
    sample = [0.31, -1.2, 0.05, 2.4, -0.77, 0.9, 1.1, -0.15, -2.05, 0.44,
              0.62, -0.38, 1.73, -0.91, 0.08, 0.27, -1.46, 3.1, -0.52, 0.19]
    k2, p = omnibus_normality(sample)
    k2_ref, p_ref = omnibus_transcribed(sample)
    assert k2 == pytest.approx(k2_ref, rel=1e-10)
    assert p == pytest.approx(p_ref, rel=1e-9)


def test_omnibus_against_scipy(rng):
    for dist in (rng.normal(size=60), rng.exponential(size=45), rng.uniform(size=200)):
        k2, p = omnibus_normality(dist)
        ref = scipy.stats.normaltest(dist)
        assert k2 == pytest.approx(ref.statistic, rel=1e-9) and p == pytest.approx(ref.pvalue, rel=1e-8, abs=1e-15)


def test_omnibus_reference_tail():
    from paynowcast.numerics import ChiSquare
    assert ChiSquare(2).sf(4.952) == pytest.approx(0.084, abs=1e-3)
    with pytest.raises(SampleTooSmall):
        omnibus_normality(np.arange(7.0))


def test_omnibus_large_normal_samples():
    r = np.random.default_rng(99)
    ok = sum(omnibus_normality(r.normal(size=10_000))[1] > 0.01 for _ in range(200))
    assert ok >= 0.99 * 200 - 2  # binomial slack of ~1 sd around the 99% target


# -- Harvey-Collier -------------------------------------------------------------------------------

def test_hc_exact_line():
    x = np.arange(10.0)
    with pytest.raises(DegenerateRecursion):
        harvey_collier(DesignMatrix.from_predictors(x), 2 * x + 1)


def test_hc_is_one_sample_t_on_recursive_residuals(rng):
    x = np.sort(rng.uniform(0, 10, 60))
    y = 1 + 0.5 * x + 0.05 * x**2 + rng.normal(size=60)
    X = DesignMatrix.from_predictors(x)
    t, p = harvey_collier(X, y)
    ref = scipy.stats.ttest_1samp(recursive_residuals(X, y), 0.0)
    assert t == pytest.approx(ref.statistic, rel=1e-10) and p == pytest.approx(ref.pvalue, rel=1e-9)


def test_hc_against_statsmodels_three_columns(rng):
    # statsmodels drops a fixed 3 leading recursive residuals; with p = 3 that
    # coincides with the textbook statistic over all n - p of them
    x = rng.normal(size=(50, 2)).cumsum(axis=0)
    y = 1 + x @ [0.5, -0.3] + 0.02 * x[:, 0] ** 2 + rng.normal(size=50)
    X = sm.add_constant(x)
    t, p = harvey_collier(X, y)
    ref = linear_harvey_collier(sm.OLS(y, X).fit())
    assert t == pytest.approx(ref.statistic, rel=1e-8) and p == pytest.approx(ref.pvalue, rel=1e-7)


def test_recursive_residuals_against_statsmodels(rng):
    x = rng.normal(size=(30, 2))
    y = x @ [1.0, 2.0] + rng.normal(size=30)
    X = sm.add_constant(x)
    rr = recursive_residuals(X, y)
    # element 4 holds the standardized one-step-ahead errors
    ref = np.asarray(sm.stats.recursive_olsresiduals(sm.OLS(y, X).fit())[4])
    np.testing.assert_allclose(rr, ref[3:], rtol=1e-9)


def test_hc_time_order():
    x = np.arange(12.0)
    y = x + np.sin(x)
    periods = [Period.quarter(1994 + i // 4, i % 4 + 1) for i in range(12)]
    harvey_collier(DesignMatrix.from_predictors(x), y, periods=periods)
    shuffled = periods[1:2] + periods[:1] + periods[2:]
    with pytest.raises(NotTimeOrdered):
        harvey_collier(DesignMatrix.from_predictors(x), y, periods=shuffled)


# -- influence -------------------------------------------------------------------------------------

def test_influence_intercept_only():
    y = np.array([1.0, 4.0, 2.0, 8.0, 5.0])
    fit = fit_ols(DesignMatrix(np.ones((5, 1)), ("const",), True), y)
    assert all(r.leverage == pytest.approx(1 / 5, abs=1e-15) for r in influence_measures(fit))


def test_influence_trace(rng):
    for _ in range(20):
        n, p = int(rng.integers(5, 30)), int(rng.integers(1, 4))
        fit = fit_ols(DesignMatrix.from_predictors(rng.normal(size=(n, p))), rng.normal(size=n))
        assert sum(r.leverage for r in influence_measures(fit)) == pytest.approx(p + 1, abs=1e-8)


def test_influence_three_point_hand():
    x = np.array([0.0, 1.0, 10.0])
    y = np.array([0.0, 2.0, 9.0])
    fit = simple(x, y)
    xbar, sxx = x.mean(), np.sum((x - x.mean()) ** 2)
    h = 1 / 3 + (x - xbar) ** 2 / sxx
    e = y - fit.fitted
    s2 = e @ e / 1
    recs = influence_measures(fit)
    for i, r in enumerate(recs):
        assert r.leverage == pytest.approx(h[i], abs=1e-12)
        stud = e[i] / math.sqrt(s2 * (1 - h[i]))
        assert r.studentized_residual == pytest.approx(stud, rel=1e-10)
        assert r.cooks_distance == pytest.approx(stud**2 / 2 * h[i] / (1 - h[i]), rel=1e-10)
    assert recs[2].leverage == max(r.leverage for r in recs)


def test_influence_against_statsmodels(rng):
    x = rng.normal(size=25)
    y = 1 + x + rng.normal(size=25)
    fit = simple(x, y)
    ref = OLSInfluence(sm.OLS(y, sm.add_constant(x)).fit())
    recs = influence_measures(fit)
    np.testing.assert_allclose([r.cooks_distance for r in recs], ref.cooks_distance[0], rtol=1e-9)
    np.testing.assert_allclose([r.studentized_residual for r in recs], ref.resid_studentized_internal, rtol=1e-9)


def test_influence_flags():
    x = np.array([0.0, 1.0, 2.0])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateFit)
        fit = simple(x, 2 * x)
    assert {r.flag for r in influence_measures(fit)} == {"DegenerateFit"}


def test_cooks_distance_ranks_refit_impact(rng):
    x = rng.normal(size=20)
    y = 1 + x + rng.normal(size=20)
    y[3] += 6
    fit = simple(x, y)
    cooks = [r.cooks_distance for r in influence_measures(fit)]
    imax, imin = int(np.argmax(cooks)), int(np.argmin(cooks))

    def shift(i):
        keep = np.arange(20) != i
        return np.linalg.norm(simple(x[keep], y[keep]).beta - fit.beta)

    assert shift(imax) > shift(imin)


# -- build_diagnostics ---------------------------------------------------------------------------

def test_information_criteria_reference():
    aic, bic = information_criteria(-1308.1, 2, 52)
    assert aic == pytest.approx(2620, abs=1) and bic == pytest.approx(2624, abs=1)


def test_build_diagnostics_against_statsmodels(rng):
    x = rng.uniform(1, 100, 52)
    y = 5 + 2 * x + rng.normal(0, 10, 52)
    fit = simple(x, y)
    d = build_diagnostics(fit)
    ref = sm.OLS(y, sm.add_constant(x)).fit()
    assert d.r_squared == pytest.approx(ref.rsquared, abs=1e-12)
    assert d.adj_r_squared == pytest.approx(ref.rsquared_adj, abs=1e-12)
    assert d.f_statistic == pytest.approx(ref.fvalue, rel=1e-9)
    assert d.f_pvalue == pytest.approx(ref.f_pvalue, rel=1e-6, abs=1e-300)
    assert d.log_likelihood == pytest.approx(ref.llf, rel=1e-12)
    assert d.aic == pytest.approx(ref.aic, rel=1e-12) and d.bic == pytest.approx(ref.bic, rel=1e-12)
    assert d.condition_number == pytest.approx(ref.condition_number, rel=1e-8)
    assert d.f_statistic == pytest.approx(fit.t_values[1] ** 2, rel=1e-8)
    assert d.bic - d.aic == pytest.approx(2 * (math.log(52) - 2), abs=1e-9)


def test_build_diagnostics_perfect_fit():
    x = np.arange(3.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateFit)
        d = build_diagnostics(simple(x, 4 * x - 1))
    assert d.r_squared == 1.0 and d.adj_r_squared == 1.0
    assert d.jarque_bera is None and "jarque_bera" in d.null_reasons


# -- QQ ----------------------------------------------------------------------------------------------

def test_qq_identity():
    z = [Normal().ppf(q) for q in plotting_positions(15)]
    for theo, sample in qq_points(z):
        assert theo == pytest.approx(sample, abs=1e-9)


def test_qq_symmetric_sample():
    pts = qq_points([-3.0, -1.0, -0.5, 0.5, 1.0, 3.0])
    for (t1, s1), (t2, s2) in zip(pts, reversed(pts)):
        assert t1 == pytest.approx(-t2, abs=1e-9) and s1 == pytest.approx(-s2, abs=1e-9)


def test_qq_four_points():
    np.testing.assert_allclose(plotting_positions(4), [0.125, 0.375, 0.625, 0.875])
    e = np.array([2.0, -1.0, 0.5, 3.5])
    z = np.array([Normal().ppf(q) for q in (0.125, 0.375, 0.625, 0.875)])
    for q, zq in zip((0.125, 0.375, 0.625, 0.875), z):
        assert Normal().cdf(zq) == pytest.approx(q, abs=1e-14)
    expected = e.mean() + z * e.std(ddof=1) / z.std(ddof=1)
    pts = qq_points(e)
    np.testing.assert_allclose([p[0] for p in pts], expected, rtol=1e-12)
    np.testing.assert_allclose([p[1] for p in pts], np.sort(e))
