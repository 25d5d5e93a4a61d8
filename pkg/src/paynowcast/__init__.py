"""Nowcasting quarterly GDP from UK payment-system data.

Ingest and clean raw payment tables, align them to quarters, derive
average-transaction-value features and regress GDP on them with OLS,
AR(1) feasible GLS or polynomial models, then diagnose and validate the
fits and emit a machine-readable report.
"""

__version__ = "0.1.0"

from .descriptive import boxplot_stats, correlation_matrix, select_predictor, summary_stats, vif
from .diagnostics import (
    DiagnosticsReport,
    build_diagnostics,
    durbin_watson,
    harvey_collier,
    influence_measures,
    jarque_bera,
    omnibus_normality,
    qq_points,
)
from .errors import PaynowcastError
from .ingest import (
    CleaningRule,
    PaymentDataset,
    PaymentType,
    TableSchema,
    apply_cleaning_rules,
    fetch_raw,
    parse_gdp_csv,
    parse_payment_table,
    read_raw,
)
from .linmodel import (
    GLSAR1Regression,
    OLSRegression,
    PolynomialRegression,
    RegressionFit,
    fit_gls_ar1,
    fit_ols,
    fit_polynomial,
    predict_with_interval,
)
from .pipeline import PipelineConfig, run_pipeline
from .series import Frame, Period, TimeSeries, decompose_additive, derive_avg_txn, merge_align, resample_quarterly
from .validate import SplitSpec, kfold_scores, out_of_sample_r2, split_indices, train_test_split

__all__ = [
    "CleaningRule",
    "DiagnosticsReport",
    "Frame",
    "GLSAR1Regression",
    "OLSRegression",
    "PaymentDataset",
    "PaymentType",
    "PaynowcastError",
    "Period",
    "PipelineConfig",
    "PolynomialRegression",
    "RegressionFit",
    "SplitSpec",
    "TableSchema",
    "TimeSeries",
    "apply_cleaning_rules",
    "boxplot_stats",
    "build_diagnostics",
    "correlation_matrix",
    "decompose_additive",
    "derive_avg_txn",
    "durbin_watson",
    "fetch_raw",
    "fit_gls_ar1",
    "fit_ols",
    "fit_polynomial",
    "harvey_collier",
    "influence_measures",
    "jarque_bera",
    "kfold_scores",
    "merge_align",
    "omnibus_normality",
    "out_of_sample_r2",
    "parse_gdp_csv",
    "parse_payment_table",
    "predict_with_interval",
    "qq_points",
    "read_raw",
    "resample_quarterly",
    "run_pipeline",
    "select_predictor",
    "split_indices",
    "summary_stats",
    "train_test_split",
    "vif",
]
