"""Fixed-width regression summary table."""

from __future__ import annotations

import math

from ..linmodel import GLS_AR1

WIDTH = 78
HALF = 38


def _num(v, fmt):
    if v is None:
        return "n/a"
    v = float(v)
    if math.isnan(v):
        return "n/a"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, fmt)


def _pair(label, value):
    return label + value.rjust(HALF - len(label))


def _row(left, right):
    left = _pair(*left) if left else " " * HALF
    right = _pair(*right) if right else ""
    return (left + "  " + right).rstrip()


def render_summary_text(fit, diag, dep_name=None):
    """Render ``fit`` and its diagnostics in the familiar OLS results layout.

    Test statistics use 3 decimals, coefficients 4 significant digits in
    scientific notation; undefined quantities print as ``n/a``.
    """
    dep = dep_name or fit.target_name
    gls = fit.kind == GLS_AR1
    method = "Prais-Winsten" if gls else "Least Squares"
    rho_row = ("AR(1) rho:", _num(fit.rho, ".3f")) if gls else None
    lines = [
        f"{fit.kind} Regression Results".center(WIDTH).rstrip(),
        "=" * WIDTH,
        _row(("Dep. Variable:", str(dep)), ("R-squared:", _num(diag.r_squared, ".3f"))),
        _row(("Model:", fit.kind), ("Adj. R-squared:", _num(diag.adj_r_squared, ".3f"))),
        _row(("Method:", method), ("F-statistic:", _num(diag.f_statistic, "#.4g"))),
        _row(("No. Observations:", str(diag.n_observations)), ("Prob (F-statistic):", _num(diag.f_pvalue, ".3g"))),
        _row(("DF Residuals:", str(diag.df_resid)), ("Log-Likelihood:", _num(diag.log_likelihood, "#.5g"))),
        _row(rho_row, ("AIC:", _num(diag.aic, "#.4g"))),
        _row(None, ("BIC:", _num(diag.bic, "#.4g"))),
        "=" * WIDTH,
    ]
    names = [str(n) for n in fit.X.names]
    w = max(10, max(len(n) for n in names))
    cols = ("coef", "std err", "t", "P>|t|", "[0.025", "0.975]")
    lines.append(" " * w + "".join(c.rjust(11) for c in cols))
    lines.append("-" * max(WIDTH, w + 66))
    for name, b, se, t, pv, (lo, hi) in zip(
        names, fit.beta, fit.std_errors, fit.t_values, fit.p_values, fit.conf_intervals
    ):
        cells = (_num(b, ".3e"), _num(se, ".2e"), _num(t, ".3f"), _num(pv, ".3f"), _num(lo, ".2e"), _num(hi, ".2e"))
        lines.append(name.ljust(w) + "".join(c.rjust(11) for c in cells))
    lines += [
        "=" * WIDTH,
        _row(("Omnibus:", _num(diag.omnibus, ".3f")), ("Durbin-Watson:", _num(diag.durbin_watson, ".3f"))),
        _row(("Prob(Omnibus):", _num(diag.omnibus_pvalue, ".3f")), ("Jarque-Bera (JB):", _num(diag.jarque_bera, ".3f"))),
        _row(("Skew:", _num(diag.residual_skew, ".3f")), ("Prob(JB):", _num(diag.jb_pvalue, ".3f"))),
        _row(("Kurtosis:", _num(diag.residual_kurtosis, ".3f")), ("Cond. No.", _num(diag.condition_number, ".3g"))),
        "=" * WIDTH,
    ]
    return "\n".join(lines) + "\n"
