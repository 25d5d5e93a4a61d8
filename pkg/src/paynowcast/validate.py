"""Train/test splitting and k-fold out-of-sample scoring."""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from .errors import EmptySide, FoldTooSmall, InvalidParameter, ZeroVariance
from .linmodel import GLS_AR1, OLS, PolynomialExpansion, fit_gls_ar1, fit_ols
from .numerics.linalg import DesignMatrix, as_design

RANDOM = "random"
CHRONOLOGICAL = "chronological"


class EmptySideWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float = 0.33
    mode: str = RANDOM
    seed: int | None = None
    k: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.test_fraction < 1.0:
            raise InvalidParameter(f"test_fraction must lie in [0, 1), got {self.test_fraction}")
        if self.mode not in (RANDOM, CHRONOLOGICAL):
            raise InvalidParameter(f"unknown split mode {self.mode!r}")
        if self.mode == RANDOM and self.seed is None:
            raise InvalidParameter("random split mode requires an explicit seed")
        if self.k is not None and self.k < 2:
            raise InvalidParameter("k must be at least 2")

    def to_dict(self):
        return {"test_fraction": self.test_fraction, "mode": self.mode, "seed": self.seed, "k": self.k}


def train_size(n, test_fraction):
    """``round(n * (1 - test_fraction))`` with halves rounded up."""
    exact = Decimal(n) * (Decimal(1) - Decimal(str(test_fraction)))
    return int(exact.quantize(Decimal(1), rounding=ROUND_HALF_UP))


def split_indices(n, spec):
    """Sorted ``(train, test)`` row indices for ``n`` rows."""
    if n < 3:
        raise EmptySide(f"need at least 3 rows to split, got {n}")
    n_train = min(train_size(n, spec.test_fraction), n)
    if n_train == 0:
        raise EmptySide("training side would be empty")
    if spec.mode == RANDOM:
        order = np.random.default_rng(spec.seed).permutation(n)
    else:
        order = np.arange(n)
    train, test = np.sort(order[:n_train]), np.sort(order[n_train:])
    if test.size == 0:
        warnings.warn("test side is empty", EmptySideWarning, stacklevel=2)
    return train, test


def train_test_split(frame, spec):
    """Partition a :class:`Frame`; both sides keep chronological row order."""
    train, test = split_indices(len(frame), spec)
    return frame.take(train), frame.take(test)


def fold_indices(n, k, seed=None):
    """Contiguous folds whose sizes differ by at most one.

    With ``seed`` the rows are permuted first and the folds are contiguous
    blocks of the permutation.
    """
    if not 2 <= k <= n:
        raise InvalidParameter(f"k must lie in [2, n={n}], got {k}")
    order = np.arange(n) if seed is None else np.random.default_rng(seed).permutation(n)
    return [np.sort(f) for f in np.array_split(order, k)]


def out_of_sample_r2(y_true, y_pred):
    y_true = np.asarray(y_true, dtype=float)
    d = y_true - y_true.mean()
    sst = float(d @ d)
    if sst == 0.0:
        raise ZeroVariance("test fold target is constant")
    r = y_true - np.asarray(y_pred, dtype=float)
    return 1.0 - float(r @ r) / sst


def _fold_score(X, y, train, test, model, degree):
    if model == OLS:
        fit = fit_ols(X.take(train), y[train])
        pred = X.values[test] @ fit.beta
    elif model == GLS_AR1:
        fit = fit_gls_ar1(X.take(train), y[train])
        pred = X.values[test] @ fit.beta
    else:
        x = X.values[:, 1] if X.has_intercept else X.values[:, 0]
        basis = PolynomialExpansion(degree).fit(x[train])
        fit = fit_ols(basis.design(x[train]), y[train])
        pred = basis.transform(x[test]) @ fit.beta
    return out_of_sample_r2(y[test], pred)


def _model_name(model):
    m = str(model)
    if m.upper() == OLS:
        return OLS, None
    if m.upper() in (GLS_AR1, "GLS"):
        return GLS_AR1, None
    if m.lower().startswith("polynomial"):
        inner = m[m.find("(") + 1: m.find(")")] if "(" in m else ""
        return "Polynomial", int(inner) if inner else 2
    raise InvalidParameter(f"unknown model {model!r}")


def kfold_scores(X, y, k, model=OLS, seed=None, degree=None, n_jobs=1):
    """Out-of-sample R^2 for each of ``k`` folds, in fold order.

    Each fold is held out in turn; the model is fitted on the remaining rows
    and scored with ``1 - SSE_test / SST_test`` (SST about the fold's own
    mean).  Scores are never clamped and may be very negative.
    """
    X = as_design(X)
    y = np.asarray(y, dtype=float).ravel()
    name, default_degree = _model_name(model)
    degree = degree or default_degree or 2
    p = X.p if name != "Polynomial" else degree + 1
    folds = fold_indices(X.n, k, seed)
    for f in folds:
        if f.size <= p:
            raise FoldTooSmall(f"fold of {f.size} rows is not larger than p={p}")
    all_rows = np.arange(X.n)
    jobs = [(np.setdiff1d(all_rows, f), f) for f in folds]

    def run(job):
        return _fold_score(X, y, job[0], job[1], name, degree)

    if n_jobs and n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            return list(pool.map(run, jobs))
    return [run(j) for j in jobs]


def design_from_frame(frame, predictors, intercept=True):
    return DesignMatrix.from_predictors(frame.matrix(predictors), predictors, intercept=intercept)
