"""Residual diagnostics for fitted regressions.

Normality: Jarque-Bera and the D'Agostino-Pearson omnibus K^2 (D'Agostino
skewness transform, Anscombe-Glynn kurtosis transform).  Autocorrelation:
Durbin-Watson.  Linearity: Harvey-Collier on recursive residuals.
Influence: leverage, internally studentized residuals and Cook's distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np

from .descriptive import central_moments
from .errors import (
    AllZeroResiduals,
    DegenerateRecursion,
    InsufficientObservations,
    NotTimeOrdered,
    RankDeficient,
    RankDeficientPrefix,
    SampleTooSmall,
    ZeroVariance,
)
from .numerics.distributions import ChiSquare, FisherF, Normal, StudentT
from .numerics.linalg import as_design, condition_number, solve_least_squares


def durbin_watson(residuals):
    e = np.asarray(residuals, dtype=float).ravel()
    if e.size < 2:
        raise InsufficientObservations("Durbin-Watson needs at least 2 residuals")
    denom = float(e @ e)
    if denom == 0.0:
        raise AllZeroResiduals("Durbin-Watson is undefined for all-zero residuals")
    d = np.diff(e)
    return float(d @ d) / denom


def jarque_bera(residuals):
    """``JB = n/6 (S^2 + (K - 3)^2 / 4)`` with a chi-square(2) p-value."""
    e = np.asarray(residuals, dtype=float).ravel()
    if e.size < 4:
        raise SampleTooSmall(f"Jarque-Bera needs n >= 4, got {e.size}")
    skew, kurt = central_moments(e)
    return jarque_bera_from_moments(e.size, skew, kurt)


def jarque_bera_from_moments(n, skew, kurt):
    jb = n / 6.0 * (skew**2 + (kurt - 3.0) ** 2 / 4.0)
    return jb, ChiSquare(2).sf(jb)


def skewness_z(skew, n):
    """D'Agostino's normalizing transform of the sample skewness."""
    y = skew * math.sqrt((n + 1) * (n + 3) / (6.0 * (n - 2)))
    beta2 = 3.0 * (n * n + 27 * n - 70) * (n + 1) * (n + 3) / ((n - 2.0) * (n + 5) * (n + 7) * (n + 9))
    w2 = -1.0 + math.sqrt(2.0 * (beta2 - 1.0))
    delta = 1.0 / math.sqrt(0.5 * math.log(w2))
    alpha = math.sqrt(2.0 / (w2 - 1.0))
    ya = y / alpha
    return delta * math.log(ya + math.sqrt(ya * ya + 1.0))


def kurtosis_z(kurt, n):
    """Anscombe-Glynn normalizing transform of the (non-excess) kurtosis."""
    mean = 3.0 * (n - 1) / (n + 1)
    var = 24.0 * n * (n - 2) * (n - 3) / ((n + 1.0) ** 2 * (n + 3) * (n + 5))
    x = (kurt - mean) / math.sqrt(var)
    sqrt_beta1 = (6.0 * (n * n - 5 * n + 2) / ((n + 7.0) * (n + 9))
                  * math.sqrt(6.0 * (n + 3) * (n + 5) / (n * (n - 2.0) * (n - 3))))
    a = 6.0 + 8.0 / sqrt_beta1 * (2.0 / sqrt_beta1 + math.sqrt(1.0 + 4.0 / sqrt_beta1**2))
    denom = 1.0 + x * math.sqrt(2.0 / (a - 4.0))
    if denom == 0.0:
        return math.copysign(math.inf, -1.0)
    term2 = math.copysign(abs((1.0 - 2.0 / a) / denom) ** (1.0 / 3.0), denom)
    return (1.0 - 2.0 / (9.0 * a) - term2) / math.sqrt(2.0 / (9.0 * a))


def omnibus_normality(residuals):
    """D'Agostino-Pearson ``K^2 = Z_skew^2 + Z_kurt^2`` with a chi-square(2) p-value."""
    e = np.asarray(residuals, dtype=float).ravel()
    n = e.size
    if n < 8:
        raise SampleTooSmall(f"omnibus test needs n >= 8, got {n}")
    skew, kurt = central_moments(e)
    k2 = skewness_z(skew, n) ** 2 + kurtosis_z(kurt, n) ** 2
    return k2, ChiSquare(2).sf(k2)


def recursive_residuals(X, y):
    """Standardized one-step-ahead prediction errors for rows ``p+1..n``."""
    X = as_design(X).values
    y = np.asarray(y, dtype=float).ravel()
    n, p = X.shape
    out = np.empty(n - p)
    for t in range(p, n):
        try:
            sol = solve_least_squares(X[:t], y[:t])
        except RankDeficient as exc:
            raise RankDeficientPrefix(f"first {t} rows are rank deficient") from exc
        x_t = X[t]
        scale = math.sqrt(1.0 + float(x_t @ sol.xtx_inverse @ x_t))
        out[t - p] = (y[t] - float(x_t @ sol.beta)) / scale
    return out


def harvey_collier(X, y, periods=None):
    """Harvey-Collier linearity test; rows must be in time order.

    The statistic is ``mean(w) * sqrt(m - 1) / sd(w)`` over the ``m = n - p``
    recursive residuals ``w`` (``sd`` with divisor ``m``), referred to a
    Student t with ``m - 1`` degrees of freedom.  Passing ``periods`` lets
    the function refuse rows that are not strictly increasing in time.
    """
    if periods is not None:
        ords = [getattr(q, "ordinal", q) for q in periods]
        if any(b <= a for a, b in zip(ords, ords[1:])):
            raise NotTimeOrdered("Harvey-Collier requires observations in time order")
    X = as_design(X)
    y = np.asarray(y, dtype=float).ravel()
    n, p = X.shape
    if n < p + 2:
        raise InsufficientObservations(f"Harvey-Collier needs n >= p + 2, got n={n}, p={p}")
    w = recursive_residuals(X, y)
    m = w.size
    sd = float(np.std(w))
    if sd <= 1e-12 * max(1.0, float(np.max(np.abs(y)))):
        raise DegenerateRecursion("recursive residuals have no variation (exactly linear data)")
    t = float(np.mean(w)) * math.sqrt(m - 1) / sd
    return t, StudentT(m - 1).tails(-abs(t))[0] * 2.0


@dataclass(frozen=True)
class InfluenceRecord:
    index: int
    leverage: float
    studentized_residual: float | None
    cooks_distance: float | None
    flag: str | None = None


def influence_measures(fit):
    """Leverage, internally studentized residual and Cook's distance per row."""
    h = np.asarray(fit.hat_diagonals)
    e = np.asarray(fit.residuals)
    s = math.sqrt(fit.sigma2)
    p = fit.p
    out = []
    for i, (hi, ei) in enumerate(zip(h, e)):
        hi = float(min(max(hi, 0.0), 1.0))
        if 1.0 - hi <= 1e-12:
            out.append(InfluenceRecord(i, hi, None, None, "LeverageOne"))
            continue
        if s == 0.0:
            out.append(InfluenceRecord(i, hi, None, None, "DegenerateFit"))
            continue
        r = float(ei) / (s * math.sqrt(1.0 - hi))
        out.append(InfluenceRecord(i, hi, r, r * r / p * hi / (1.0 - hi)))
    return out


def plotting_positions(n):
    return (np.arange(1, n + 1) - 0.5) / n


def qq_points(residuals):
    """``(theoretical, sample)`` pairs for a normal QQ plot.

    Sample quantiles are the sorted residuals.  Theoretical quantiles are
    standard-normal quantiles at ``(i - 0.5) / n``, rescaled so their sample
    standard deviation equals the residuals' and shifted to the residual
    mean.
    """
    e = np.sort(np.asarray(residuals, dtype=float).ravel())
    n = e.size
    if n < 3:
        raise SampleTooSmall(f"QQ plot needs n >= 3, got {n}")
    z = np.array([Normal().ppf(q) for q in plotting_positions(n)])
    sd_e = float(np.std(e, ddof=1))
    theo = e.mean() + z * (sd_e / float(np.std(z, ddof=1)))
    return list(zip(theo.tolist(), e.tolist()))


@dataclass(frozen=True)
class DiagnosticsReport:
    r_squared: float | None
    adj_r_squared: float | None
    f_statistic: float | None
    f_pvalue: float | None
    log_likelihood: float | None
    aic: float | None
    bic: float | None
    durbin_watson: float | None
    jarque_bera: float | None
    jb_pvalue: float | None
    omnibus: float | None
    omnibus_pvalue: float | None
    residual_skew: float | None
    residual_kurtosis: float | None
    condition_number: float | None
    n_observations: int
    df_resid: int
    null_reasons: dict = field(default_factory=dict)

    def to_dict(self):
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["null_reasons"] = dict(sorted(self.null_reasons.items()))
        return out


def information_criteria(log_likelihood, n_params, n):
    return 2.0 * n_params - 2.0 * log_likelihood, n_params * math.log(n) - 2.0 * log_likelihood


def gaussian_log_likelihood(sse, n):
    if sse <= 0.0:
        return math.inf
    return -n / 2.0 * (math.log(2.0 * math.pi) + math.log(sse / n) + 1.0)


def build_diagnostics(fit):
    """Every scalar of the regression summary block for ``fit``.

    Quantities that are undefined for the fit (e.g. Jarque-Bera with n < 4)
    are ``None`` with an entry in ``null_reasons``.
    """
    n, p = fit.n, fit.p
    reasons = {}
    vals = {}
    y = np.asarray(fit.y)
    intercept = fit.has_intercept
    sst = fit.sst if intercept else float(y @ y)
    sse = 0.0 if fit.degenerate else fit.sse
    k_const = 1 if intercept else 0

    if sst > 0:
        r2 = 1.0 - sse / sst
        vals["r_squared"] = r2
        vals["adj_r_squared"] = 1.0 - (n - k_const) / fit.df_resid * (1.0 - r2)
    else:
        reasons["r_squared"] = reasons["adj_r_squared"] = "total sum of squares is zero"

    df_model = p - k_const
    if df_model < 1:
        reasons["f_statistic"] = reasons["f_pvalue"] = "model has no regressors besides the constant"
    elif sse == 0.0:
        reasons["f_statistic"] = "perfect fit: F is infinite"
        vals["f_pvalue"] = 0.0
    else:
        f = ((sst - sse) / df_model) / (sse / fit.df_resid)
        vals["f_statistic"] = f
        vals["f_pvalue"] = FisherF(df_model, fit.df_resid).sf(f)

    if sse > 0.0:
        ll = gaussian_log_likelihood(sse, n)
        vals["log_likelihood"] = ll
        vals["aic"], vals["bic"] = information_criteria(ll, p, n)
    else:
        for k in ("log_likelihood", "aic", "bic"):
            reasons[k] = "perfect fit: likelihood is unbounded"

    e = np.asarray(fit.residuals)
    for key, fn, outs in (
        ("durbin_watson", durbin_watson, ("durbin_watson",)),
        ("jarque_bera", jarque_bera, ("jarque_bera", "jb_pvalue")),
        ("omnibus", omnibus_normality, ("omnibus", "omnibus_pvalue")),
        ("moments", central_moments, ("residual_skew", "residual_kurtosis")),
    ):
        if fit.degenerate:
            for k in outs:
                reasons[k] = "perfect fit: residuals are zero"
            continue
        try:
            res = fn(e)
        except (SampleTooSmall, ZeroVariance, AllZeroResiduals, InsufficientObservations) as exc:
            for k in outs:
                reasons[k] = str(exc)
            continue
        res = res if isinstance(res, tuple) else (res,)
        vals.update(zip(outs, (float(v) for v in res)))

    X_cond = fit.X_original if fit.X_original is not None else fit.X
    cond = condition_number(X_cond)
    if math.isfinite(cond):
        vals["condition_number"] = cond
    else:
        reasons["condition_number"] = "design matrix is singular"

    names = [f.name for f in fields(DiagnosticsReport)][:15]
    kwargs = {k: (float(vals[k]) if k in vals else None) for k in names}
    return DiagnosticsReport(**kwargs, n_observations=int(n), df_resid=int(fit.df_resid), null_reasons=reasons)
