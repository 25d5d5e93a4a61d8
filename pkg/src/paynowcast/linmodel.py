"""OLS, feasible GLS with AR(1) errors, polynomial regression, and
mean-response confidence bands.

The ``fit_*`` functions work on :class:`DesignMatrix` objects and return
immutable :class:`RegressionFit` records.  The estimator classes at the end
wrap them in the scikit-learn ``fit``/``predict`` protocol.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .errors import (
    ConvergenceError,
    DegenerateFit,
    DegreeTooHigh,
    InsufficientObservations,
    RhoOutOfRange,
    ShapeMismatch,
    ZeroVariance,
)
from .numerics.distributions import StudentT
from .numerics.linalg import DesignMatrix, as_design, solve_least_squares

MAX_POLY_DEGREE = 5
OLS = "OLS"
GLS_AR1 = "GLS_AR1"


def polynomial_kind(degree):
    return f"Polynomial({int(degree)})"


def _frozen(a):
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class RegressionFit:
    """A fitted linear model and its inference quantities.

    For GLS fits ``X``, ``y``, ``fitted`` and ``residuals`` live in the
    Prais-Winsten transformed space; ``X_original``/``y_original`` keep the
    untransformed data.
    """

    kind: str
    predictor_names: tuple
    X: DesignMatrix
    y: np.ndarray
    beta: np.ndarray
    std_errors: np.ndarray
    t_values: np.ndarray
    p_values: np.ndarray
    conf_intervals: np.ndarray
    fitted: np.ndarray
    residuals: np.ndarray
    sse: float
    sst: float
    df_resid: int
    sigma2: float
    xtx_inverse: np.ndarray = field(repr=False)
    hat_diagonals: np.ndarray = field(repr=False)
    rho: float | None = None
    degenerate: bool = False
    conf_level: float = 0.95
    target_name: str = "y"
    X_original: DesignMatrix | None = field(default=None, repr=False)
    y_original: np.ndarray | None = field(default=None, repr=False)
    iterations: int = 0

    @property
    def n(self):
        return self.X.n

    @property
    def p(self):
        return self.X.p

    @property
    def has_intercept(self):
        return self.X.has_intercept or (self.X_original is not None and self.X_original.has_intercept)

    @property
    def r_squared(self):
        if self.sst == 0.0:
            return float("nan")
        return 1.0 - self.sse / self.sst

    def coefficient_table(self):
        return [
            {
                "name": name,
                "coef": float(b),
                "std_err": float(se),
                "t": float(t),
                "p_value": float(pv),
                "ci_low": float(lo),
                "ci_high": float(hi),
            }
            for name, b, se, t, pv, (lo, hi) in zip(
                self.X.names, self.beta, self.std_errors, self.t_values, self.p_values, self.conf_intervals
            )
        ]


def _is_degenerate(sse, y):
    return sse <= 1e-20 * max(1.0, float(y @ y))


def _inference(kind, X, y, sol, level=0.95, **extra):
    n, p = X.shape
    df_resid = n - p
    if df_resid < 1:
        raise InsufficientObservations(f"{n} observations leave no residual degrees of freedom for {p} parameters")
    degenerate = _is_degenerate(sol.sse, y)
    sigma2 = 0.0 if degenerate else sol.sse / df_resid
    se = np.sqrt(sigma2 * np.diag(sol.xtx_inverse))
    dist = StudentT(df_resid)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se > 0, sol.beta / np.where(se > 0, se, 1.0), np.sign(sol.beta) * np.inf)
    if degenerate:
        warnings.warn("perfect fit (SSE = 0): standard errors are zero and p-values 0", DegenerateFit, stacklevel=3)
        pvals = np.zeros(p)
    else:
        pvals = np.array([dist.tails(abs(v))[1] * 2.0 if np.isfinite(v) else 0.0 for v in t])
        pvals = np.clip(pvals, 0.0, 1.0)
    crit = dist.ppf(0.5 + level / 2.0)
    ci = np.column_stack([sol.beta - crit * se, sol.beta + crit * se])
    dy = y - y.mean()
    return RegressionFit(
        kind=kind,
        predictor_names=tuple(nm for nm in X.names if not (X.has_intercept and nm == X.names[0])),
        X=X,
        y=_frozen(y),
        beta=_frozen(sol.beta),
        std_errors=_frozen(se),
        t_values=_frozen(t),
        p_values=_frozen(pvals),
        conf_intervals=_frozen(ci),
        fitted=_frozen(sol.fitted),
        residuals=_frozen(sol.residuals),
        sse=float(sol.sse),
        sst=float(dy @ dy),
        df_resid=int(df_resid),
        sigma2=float(sigma2),
        xtx_inverse=_frozen(sol.xtx_inverse),
        hat_diagonals=_frozen(sol.hat_diagonals),
        degenerate=bool(degenerate),
        conf_level=level,
        **extra,
    )


def fit_ols(X, y, level=0.95, target_name="y", kind=OLS):
    """Ordinary least squares with classical (non-robust) inference."""
    X = as_design(X)
    y = np.asarray(y, dtype=float).ravel()
    if X.n <= X.p:
        raise InsufficientObservations(f"OLS needs n > p, got n={X.n}, p={X.p}")
    sol = solve_least_squares(X, y)
    return _inference(kind, X, y, sol, level, target_name=target_name)


def lag1_autocorrelation(e):
    """``sum(e_t e_{t-1}) / sum(e_t^2)``."""
    e = np.asarray(e, dtype=float)
    denom = float(e @ e)
    if denom == 0.0:
        return 0.0
    return float(e[1:] @ e[:-1]) / denom


def prais_winsten(values, rho):
    """AR(1) whitening that keeps the first row, scaled by ``sqrt(1 - rho^2)``."""
    v = np.asarray(values, dtype=float)
    out = np.empty_like(v)
    out[0] = math.sqrt(1.0 - rho * rho) * v[0]
    out[1:] = v[1:] - rho * v[:-1]
    return out


def fit_gls_ar1(X, y, iterate=False, max_iter=50, tol=1e-6, rho=None, level=0.95, target_name="y"):
    """Feasible GLS under AR(1) errors (Prais-Winsten).

    ``rho`` is estimated from the OLS residuals unless given.  With
    ``iterate`` the estimate is refreshed from the GLS residuals until it
    moves by less than ``tol``.
    """
    X = as_design(X)
    y = np.asarray(y, dtype=float).ravel()
    if X.n <= X.p + 1:
        raise InsufficientObservations(f"GLS needs n > p + 1, got n={X.n}, p={X.p}")
    fixed = rho is not None
    if not fixed:
        rho = lag1_autocorrelation(solve_least_squares(X, y).residuals)
    iterations = 0
    while True:
        if not -1.0 < rho < 1.0:
            raise RhoOutOfRange(rho)
        Xt = DesignMatrix(prais_winsten(X.values, rho), X.names, has_intercept=False)
        yt = prais_winsten(y, rho)
        sol = solve_least_squares(Xt, yt)
        iterations += 1
        if fixed or not iterate:
            break
        new_rho = lag1_autocorrelation(y - X.values @ sol.beta)
        if abs(new_rho - rho) < tol:
            rho = new_rho
            Xt = DesignMatrix(prais_winsten(X.values, rho), X.names, has_intercept=False)
            yt = prais_winsten(y, rho)
            sol = solve_least_squares(Xt, yt)
            break
        if iterations >= max_iter:
            raise ConvergenceError(f"rho did not converge in {max_iter} iterations (last change {abs(new_rho - rho):.3g})")
        rho = new_rho
    return _inference(GLS_AR1, Xt, yt, sol, level, rho=float(rho), target_name=target_name,
                      X_original=X, y_original=_frozen(y), iterations=iterations)


class PolynomialExpansion(TransformerMixin, BaseEstimator):
    """Map a single predictor to ``[1, x, x^2, ..., x^degree]``.

    With ``standardize`` each power column is centred and scaled to unit
    sample standard deviation using statistics learned in ``fit``.
    """

    def __init__(self, degree=2, standardize=True, include_bias=True):
        self.degree = degree
        self.standardize = standardize
        self.include_bias = include_bias

    def _powers(self, x):
        return np.column_stack([x**k for k in range(1, self.degree + 1)])

    def fit(self, X, y=None):
        if not 1 <= int(self.degree) <= MAX_POLY_DEGREE:
            raise DegreeTooHigh(f"degree must be in 1..{MAX_POLY_DEGREE}, got {self.degree}")
        x = _single_column(X)
        P = self._powers(x)
        self.mean_ = P.mean(axis=0) if self.standardize else np.zeros(P.shape[1])
        self.scale_ = P.std(axis=0, ddof=1) if self.standardize else np.ones(P.shape[1])
        if np.any(self.scale_ == 0):
            raise ZeroVariance("cannot standardize a constant power column")
        self.n_features_in_ = 1
        return self

    def transform(self, X):
        check_is_fitted(self, "mean_")
        P = (self._powers(_single_column(X)) - self.mean_) / self.scale_
        if self.include_bias:
            P = np.column_stack([np.ones(P.shape[0]), P])
        return P

    def feature_names(self, base="x"):
        names = [base if k == 1 else f"{base}^{k}" for k in range(1, self.degree + 1)]
        return (["const"] if self.include_bias else []) + names

    def design(self, X, base="x"):
        return DesignMatrix(self.transform(X), tuple(self.feature_names(base)), has_intercept=self.include_bias)


def _single_column(X):
    x = np.asarray(X, dtype=float)
    if x.ndim == 2 and x.shape[1] == 1:
        x = x[:, 0]
    if x.ndim != 1:
        raise ShapeMismatch(f"polynomial expansion takes one predictor, got shape {x.shape}")
    return x


def expand_polynomial(x, degree, standardize=True, name="x"):
    """Design matrix ``[1, x, ..., x^degree]`` (power columns standardized by default)."""
    return PolynomialExpansion(degree, standardize).fit(x).design(x, name)


def fit_polynomial(x, y, degree=2, level=0.95, name="x", target_name="y"):
    X = expand_polynomial(x, degree, name=name)
    return fit_ols(X, y, level=level, target_name=target_name, kind=polynomial_kind(degree))


def predict_with_interval(fit, X_new, level=0.95):
    """Predictions with a mean-response confidence band.

    Returns ``(prediction, lower, upper)`` where the half-width is
    ``t * sqrt(sigma2 * x0' (X'X)^-1 x0)``.
    """
    X_new = as_design(X_new).values
    if X_new.shape[1] != fit.p:
        raise ShapeMismatch(f"X_new has {X_new.shape[1]} columns, the fit has {fit.p}")
    pred = X_new @ fit.beta
    var = np.einsum("ij,jk,ik->i", X_new, fit.xtx_inverse, X_new) * fit.sigma2
    half = StudentT(fit.df_resid).ppf(0.5 + level / 2.0) * np.sqrt(np.maximum(var, 0.0))
    return pred, pred - half, pred + half


# -- scikit-learn estimators ---------------------------------------------------

class _LinearBase(RegressorMixin, BaseEstimator):
    def _design(self, X):
        X = check_array(X, ensure_2d=True)
        names = getattr(self, "feature_names_", None) or [f"x{j + 1}" for j in range(X.shape[1])]
        return DesignMatrix.from_predictors(X, names, intercept=self.fit_intercept)

    def _store(self, result):
        self.result_ = result
        beta = np.asarray(result.beta)
        if self.fit_intercept:
            self.intercept_, self.coef_ = float(beta[0]), beta[1:].copy()
        else:
            self.intercept_, self.coef_ = 0.0, beta.copy()
        return self

    def predict(self, X):
        check_is_fitted(self, "result_")
        return self._design(X).values @ self.result_.beta

    def predict_interval(self, X, level=0.95):
        check_is_fitted(self, "result_")
        return predict_with_interval(self.result_, self._design(X), level)

    def diagnostics(self):
        from .diagnostics import build_diagnostics

        check_is_fitted(self, "result_")
        return build_diagnostics(self.result_)

    def summary(self):
        from .diagnostics import build_diagnostics
        from .report.summary import render_summary_text

        check_is_fitted(self, "result_")
        return render_summary_text(self.result_, build_diagnostics(self.result_))


class OLSRegression(_LinearBase):
    """Ordinary least squares estimator.

    Parameters
    ----------
    fit_intercept : bool
        Prepend a column of ones.
    level : float
        Confidence level of ``result_.conf_intervals``.
    """

    def __init__(self, fit_intercept=True, level=0.95):
        self.fit_intercept = fit_intercept
        self.level = level

    def fit(self, X, y, feature_names=None):
        X, y = check_X_y(X, y, y_numeric=True)
        self.feature_names_ = list(feature_names) if feature_names is not None else None
        self.n_features_in_ = X.shape[1]
        return self._store(fit_ols(self._design(X), y, level=self.level))


class GLSAR1Regression(_LinearBase):
    """Feasible GLS with AR(1) errors; ``rho_`` holds the estimate used."""

    def __init__(self, fit_intercept=True, iterate=False, max_iter=50, tol=1e-6, rho=None, level=0.95):
        self.fit_intercept = fit_intercept
        self.iterate = iterate
        self.max_iter = max_iter
        self.tol = tol
        self.rho = rho
        self.level = level

    def fit(self, X, y, feature_names=None):
        X, y = check_X_y(X, y, y_numeric=True)
        self.feature_names_ = list(feature_names) if feature_names is not None else None
        self.n_features_in_ = X.shape[1]
        result = fit_gls_ar1(self._design(X), y, iterate=self.iterate, max_iter=self.max_iter,
                             tol=self.tol, rho=self.rho, level=self.level)
        self.rho_ = result.rho
        return self._store(result)


class PolynomialRegression(RegressorMixin, BaseEstimator):
    """OLS on standardized powers of a single predictor."""

    def __init__(self, degree=2, standardize=True, level=0.95):
        self.degree = degree
        self.standardize = standardize
        self.level = level

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        self.expansion_ = PolynomialExpansion(self.degree, self.standardize).fit(X)
        self.n_features_in_ = 1
        self.result_ = fit_ols(self.expansion_.design(X), y, level=self.level, kind=polynomial_kind(self.degree))
        self.coef_ = np.asarray(self.result_.beta[1:]).copy()
        self.intercept_ = float(self.result_.beta[0])
        return self

    def predict(self, X):
        check_is_fitted(self, "result_")
        X = check_array(X)
        return self.expansion_.transform(X) @ self.result_.beta

    def predict_interval(self, X, level=0.95):
        check_is_fitted(self, "result_")
        return predict_with_interval(self.result_, self.expansion_.transform(check_array(X)), level)
