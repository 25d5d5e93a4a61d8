"""Descriptive statistics, boxplot summaries, Pearson correlation and VIF."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConstantColumn, RankDeficient, ShapeMismatch, TooFewPoints, ZeroVariance
from .numerics.linalg import DesignMatrix, solve_least_squares


def _sample(values):
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        raise TooFewPoints("empty sample")
    if not np.all(np.isfinite(x)):
        raise ValueError("sample contains non-finite values")
    return x


def quantile(values, q):
    """Linear interpolation at position ``(n - 1) * q`` of the sorted sample."""
    return float(np.quantile(_sample(values), q, method="linear"))


def central_moments(values):
    """Population skewness ``m3 / m2**1.5`` and non-excess kurtosis ``m4 / m2**2``."""
    x = _sample(values)
    d = x - x.mean()
    m2 = float(np.mean(d**2))
    if x.size < 2 or m2 <= np.finfo(float).tiny or m2 <= (np.finfo(float).eps * abs(x.mean())) ** 2:
        raise ZeroVariance("sample has zero variance")
    m3 = float(np.mean(d**3))
    m4 = float(np.mean(d**4))
    return m3 / m2**1.5, m4 / m2**2


@dataclass(frozen=True)
class SummaryStats:
    n: int
    mean: float
    sample_std: float | None
    min: float
    q1: float
    median: float
    q3: float
    max: float
    skewness: float | None
    kurtosis: float | None

    def to_dict(self):
        return dict(self.__dict__)


def summary_stats(values, strict=False):
    """Summary statistics for one sample.

    Skewness and kurtosis are ``None`` for zero-variance samples, or raise
    :class:`ZeroVariance` when ``strict`` is true.
    """
    x = _sample(values)
    q1, med, q3 = np.quantile(x, [0.25, 0.5, 0.75], method="linear")
    std = float(np.std(x, ddof=1)) if x.size >= 2 else None
    try:
        skew, kurt = central_moments(x)
    except ZeroVariance:
        if strict:
            raise
        skew = kurt = None
    return SummaryStats(
        n=int(x.size), mean=float(x.mean()), sample_std=std,
        min=float(x.min()), q1=float(q1), median=float(med), q3=float(q3), max=float(x.max()),
        skewness=skew, kurtosis=kurt,
    )


@dataclass(frozen=True)
class BoxplotStats:
    q1: float
    median: float
    q3: float
    whisker_low: float
    whisker_high: float
    outliers: tuple

    def to_dict(self):
        d = dict(self.__dict__)
        d["outliers"] = list(self.outliers)
        return d


def boxplot_stats(values):
    """Tukey boxplot: whiskers reach the most extreme points within 1.5 IQR."""
    x = np.sort(_sample(values))
    if x.size < 4:
        raise TooFewPoints(f"boxplot needs at least 4 points, got {x.size}")
    q1, med, q3 = np.quantile(x, [0.25, 0.5, 0.75], method="linear")
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = x[(x >= lo_fence) & (x <= hi_fence)]
    # whiskers never retract inside the box
    whisker_low = min(float(inside.min()), float(q1))
    whisker_high = max(float(inside.max()), float(q3))
    outliers = tuple(float(v) for v in x if v < whisker_low or v > whisker_high)
    return BoxplotStats(float(q1), float(med), float(q3), whisker_low, whisker_high, outliers)


@dataclass(frozen=True)
class CorrelationMatrix:
    names: tuple
    r: np.ndarray

    def __getitem__(self, pair):
        a, b = pair
        return float(self.r[self.names.index(a), self.names.index(b)])

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["", *self.names])
        for name, row in zip(self.names, self.r):
            w.writerow([name, *(repr(float(v)) for v in row)])
        return buf.getvalue()

    def to_dict(self):
        return {"names": list(self.names), "r": [[float(v) for v in row] for row in self.r]}


def pearson(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise ZeroVariance("correlation undefined for a constant vector")
    return float(np.clip((dx @ dy) / math.sqrt(sxx * syy), -1.0, 1.0))


def correlation_matrix(frame, names=None):
    """Pairwise Pearson coefficients of ``frame`` columns."""
    names = list(frame.names if names is None else names)
    if len(frame) < 2:
        raise TooFewPoints("correlation needs at least 2 rows")
    centered = {}
    for name in names:
        col = np.asarray(frame[name], dtype=float)
        d = col - col.mean()
        norm = math.sqrt(float(d @ d))
        if norm == 0.0 or np.ptp(col) == 0.0:
            raise ConstantColumn(name)
        centered[name] = d / norm
    k = len(names)
    r = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            r[i, j] = r[j, i] = float(np.clip(centered[names[i]] @ centered[names[j]], -1.0, 1.0))
    r.setflags(write=False)
    return CorrelationMatrix(tuple(names), r)


def select_predictor(corr, target, candidates=None):
    """Pick the candidate with the largest ``|r|`` against ``target``.

    Returns ``(name, r)``; the sign of ``r`` is reported, not discarded.
    """
    candidates = [n for n in (candidates or corr.names) if n != target]
    best = max(candidates, key=lambda n: abs(corr[n, target]))
    return best, corr[best, target]


def vif(frame, names=None):
    """Variance inflation factor of each predictor column.

    ``VIF_j = 1 / (1 - R^2_j)`` from regressing column j on the others with
    an intercept.  Perfectly collinear columns get ``inf``.
    """
    names = list(frame.names if names is None else names)
    if len(names) < 2:
        raise ShapeMismatch("VIF needs at least 2 predictor columns")
    X = frame.matrix(names)
    n = X.shape[0]
    if n <= len(names):
        raise TooFewPoints(f"VIF needs more rows ({n}) than columns ({len(names)})")
    out = {}
    for j, name in enumerate(names):
        yj = X[:, j]
        others = np.delete(X, j, axis=1)
        dy = yj - yj.mean()
        sst = float(dy @ dy)
        if sst == 0.0:
            raise ConstantColumn(name)
        try:
            sol = solve_least_squares(DesignMatrix.from_predictors(others), yj)
        except RankDeficient:
            # the other columns are themselves collinear: the span still
            # determines R^2, so drop to an independent subset
            sol = solve_least_squares(DesignMatrix.from_predictors(_independent_columns(others)), yj)
        r2 = 1.0 - sol.sse / sst
        out[name] = math.inf if 1.0 - r2 <= 1e-12 else 1.0 / (1.0 - r2)
    return out


def _independent_columns(X):
    keep = []
    for j in range(X.shape[1]):
        trial = np.column_stack([np.ones(X.shape[0]), X[:, keep + [j]]])
        if np.linalg.matrix_rank(trial) == trial.shape[1]:
            keep.append(j)
    return X[:, keep]
