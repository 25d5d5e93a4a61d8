"""Period-indexed series: alignment, quarterly resampling, derived features
and classical additive decomposition."""

from __future__ import annotations

import csv
import io
import logging
import math
import re
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .errors import (
    DuplicatePeriod,
    EmptyIntersection,
    FrequencyMismatch,
    SeriesTooShort,
    ShapeMismatch,
    UnparseableDate,
    ZeroVolume,
)

logger = logging.getLogger(__name__)


class Frequency(str, Enum):
    MONTHLY = "M"
    QUARTERLY = "Q"

    @property
    def per_year(self):
        return 12 if self is Frequency.MONTHLY else 4


_QUARTER_RE = re.compile(r"^(\d{4})\s*[-/ ]?\s*Q\s*([1-4])$", re.IGNORECASE)
_MONTH_RE = re.compile(r"^(\d{4})\s*[-/]\s*(\d{1,2})(?:\s*[-/]\s*\d{1,2})?$")


@dataclass(frozen=True, order=True)
class Period:
    """A calendar month (``sub`` in 1..12) or quarter (``sub`` in 1..4)."""

    year: int
    sub: int
    freq: Frequency = field(default=Frequency.MONTHLY, compare=True)

    def __post_init__(self):
        object.__setattr__(self, "freq", Frequency(self.freq))
        if not 1 <= self.sub <= self.freq.per_year:
            raise UnparseableDate(f"sub-period {self.sub} out of range for {self.freq.name.lower()}")

    @classmethod
    def month(cls, year, month):
        return cls(int(year), int(month), Frequency.MONTHLY)

    @classmethod
    def quarter(cls, year, quarter):
        return cls(int(year), int(quarter), Frequency.QUARTERLY)

    @classmethod
    def parse(cls, text):
        """Parse ``YYYY-MM`` or quarter forms such as ``YYYY-Qn`` / ``YYYY Qn``."""
        s = str(text).strip()
        m = _QUARTER_RE.match(s)
        if m:
            return cls.quarter(m.group(1), m.group(2))
        m = _MONTH_RE.match(s)
        if m and 1 <= int(m.group(2)) <= 12:
            return cls.month(m.group(1), m.group(2))
        raise UnparseableDate(f"cannot parse period {text!r}")

    @property
    def ordinal(self):
        return self.year * self.freq.per_year + (self.sub - 1)

    def to_quarter(self):
        if self.freq is Frequency.QUARTERLY:
            return self
        return Period.quarter(self.year, (self.sub - 1) // 3 + 1)

    def __str__(self):
        if self.freq is Frequency.QUARTERLY:
            return f"{self.year:04d}-Q{self.sub}"
        return f"{self.year:04d}-{self.sub:02d}"


def _frozen_array(values):
    arr = np.array(values, dtype=float, copy=True).ravel()
    arr.setflags(write=False)
    return arr


def _check_periods(periods, freq):
    for p in periods:
        if p.freq is not freq:
            raise FrequencyMismatch(f"period {p} does not have frequency {freq.name.lower()}")
    for a, b in zip(periods, periods[1:]):
        if b.ordinal == a.ordinal:
            raise DuplicatePeriod(f"duplicate period {b}")
        if b.ordinal < a.ordinal:
            raise ValueError(f"periods not strictly increasing at {a} -> {b}")


@dataclass(frozen=True)
class TimeSeries:
    periods: tuple
    values: np.ndarray
    frequency: Frequency = Frequency.MONTHLY
    name: str = ""

    def __post_init__(self):
        periods = tuple(self.periods)
        values = _frozen_array(self.values)
        if len(periods) != values.shape[0]:
            raise ShapeMismatch(f"{len(periods)} periods for {values.shape[0]} values")
        freq = Frequency(self.frequency)
        _check_periods(periods, freq)
        object.__setattr__(self, "periods", periods)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "frequency", freq)

    @classmethod
    def from_pairs(cls, pairs, frequency=None, name=""):
        """Build from ``(period, value)`` pairs; sorts by period."""
        pairs = [(p if isinstance(p, Period) else Period.parse(p), float(v)) for p, v in pairs]
        pairs.sort(key=lambda pv: pv[0].ordinal)
        if frequency is None:
            frequency = pairs[0][0].freq if pairs else Frequency.MONTHLY
        return cls(tuple(p for p, _ in pairs), [v for _, v in pairs], frequency, name)

    def __len__(self):
        return len(self.periods)

    def as_dict(self):
        return dict(zip(self.periods, self.values.tolist()))

    def rename(self, name):
        return TimeSeries(self.periods, self.values, self.frequency, name)

    def scale(self, factor):
        return TimeSeries(self.periods, self.values * factor, self.frequency, self.name)


@dataclass(frozen=True)
class Frame:
    """Named columns aligned on a strictly increasing period index."""

    index: tuple
    columns: dict

    def __post_init__(self):
        index = tuple(self.index)
        freq = index[0].freq if index else Frequency.QUARTERLY
        _check_periods(index, freq)
        cols = {}
        for name, col in dict(self.columns).items():
            arr = _frozen_array(col)
            if arr.shape[0] != len(index):
                raise ShapeMismatch(f"column {name!r} has {arr.shape[0]} rows, index has {len(index)}")
            cols[str(name)] = arr
        object.__setattr__(self, "index", index)
        object.__setattr__(self, "columns", cols)

    @property
    def names(self):
        return list(self.columns)

    @property
    def frequency(self):
        return self.index[0].freq if self.index else None

    def __len__(self):
        return len(self.index)

    def __getitem__(self, name):
        return self.columns[name]

    def series(self, name):
        return TimeSeries(self.index, self.columns[name], self.frequency or Frequency.QUARTERLY, name)

    def select(self, names):
        return Frame(self.index, {n: self.columns[n] for n in names})

    def take(self, rows):
        rows = np.sort(np.asarray(rows, dtype=int))
        return Frame(tuple(self.index[i] for i in rows), {n: c[rows] for n, c in self.columns.items()})

    def matrix(self, names=None):
        names = self.names if names is None else list(names)
        return np.column_stack([self.columns[n] for n in names]) if names else np.empty((len(self), 0))

    def with_column(self, name, values):
        cols = dict(self.columns)
        cols[name] = values
        return Frame(self.index, cols)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["period", *self.names])
        for i, p in enumerate(self.index):
            w.writerow([str(p), *(_fmt(self.columns[n][i]) for n in self.names)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0][:1] != ["period"]:
            raise ValueError("frame CSV must start with a 'period' header column")
        names = rows[0][1:]
        body = [r for r in rows[1:] if r]
        index = tuple(Period.parse(r[0]) for r in body)
        cols = {n: [_parse_float(r[j + 1]) for r in body] for j, n in enumerate(names)}
        return cls(index, cols)


def _fmt(v):
    v = float(v)
    return "" if math.isnan(v) else repr(v)


def _parse_float(s):
    return float("nan") if s.strip() == "" else float(s)


def merge_align(series):
    """Inner-join named series on their periods, keeping input column order."""
    if not series:
        raise EmptyIntersection("no series to merge")
    items = list(series.items())
    freqs = {s.frequency for _, s in items}
    if len(freqs) > 1:
        raise FrequencyMismatch(f"cannot merge series of mixed frequency: {sorted(f.value for f in freqs)}")
    common = set(items[0][1].periods)
    for _, s in items[1:]:
        common &= set(s.periods)
    if not common:
        raise EmptyIntersection("series share no common period")
    index = tuple(sorted(common, key=lambda p: p.ordinal))
    cols = {}
    for name, s in items:
        lookup = s.as_dict()
        cols[name] = [lookup[p] for p in index]
    return Frame(index, cols)


def resample_quarterly(s, aggregator="sum", log=None):
    """Aggregate a monthly series into calendar quarters.

    Quarters missing any of their three months are dropped; each drop is
    logged and, when ``log`` is a list, appended to it.
    """
    if s.frequency is not Frequency.MONTHLY:
        raise FrequencyMismatch("resample_quarterly expects a monthly series")
    agg = str(getattr(aggregator, "value", aggregator)).lower()
    if agg not in ("sum", "mean"):
        raise ValueError(f"unknown aggregator {aggregator!r}")
    groups = {}
    for p, v in zip(s.periods, s.values):
        groups.setdefault(p.to_quarter(), []).append(v)
    periods, values = [], []
    for q in sorted(groups, key=lambda p: p.ordinal):
        months = groups[q]
        if len(months) < 3:
            entry = {"series": s.name, "quarter": str(q), "months_present": len(months)}
            logger.warning("dropping incomplete quarter %s of %r (%d months)", q, s.name, len(months))
            if log is not None:
                log.append(entry)
            continue
        periods.append(q)
        values.append(math.fsum(months) if agg == "sum" else math.fsum(months) / 3.0)
    return TimeSeries(tuple(periods), values, Frequency.QUARTERLY, s.name)


def derive_avg_txn(value, volume, name=None):
    """Average transaction value, ``value / volume`` per period."""
    if value.periods != volume.periods:
        raise ShapeMismatch("value and volume series are not aligned")
    for p, v in zip(volume.periods, volume.values):
        if v <= 0:
            raise ZeroVolume(p)
    return TimeSeries(value.periods, value.values / volume.values, value.frequency, name or value.name)


@dataclass(frozen=True)
class DecompositionResult:
    observed: TimeSeries
    trend: TimeSeries
    seasonal: TimeSeries
    residual: TimeSeries
    period: int

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["period", "observed", "trend", "seasonal", "residual"])
        for i, p in enumerate(self.observed.periods):
            w.writerow([
                str(p),
                _fmt(self.observed.values[i]),
                _fmt(self.trend.values[i]),
                _fmt(self.seasonal.values[i]),
                _fmt(self.residual.values[i]),
            ])
        return buf.getvalue()


def centered_moving_average(values, period):
    """Centered MA; even periods use the 2 x period convention. Edges are NaN."""
    values = np.asarray(values, dtype=float)
    if period % 2:
        weights = np.full(period, 1.0 / period)
    else:
        weights = np.r_[0.5, np.ones(period - 1), 0.5] / period
    half = period // 2
    out = np.full(values.shape, np.nan)
    if values.size >= weights.size:
        out[half: values.size - half] = np.convolve(values, weights, mode="valid")
    return out


def _seasonal_figures(observed, trend, period):
    detrended = observed - trend
    phase_means = np.array([np.nanmean(detrended[j::period]) for j in range(period)])
    return phase_means - phase_means.mean()


def decompose_additive(s, period):
    """Classical additive decomposition ``observed = trend + seasonal + residual``."""
    period = int(period)
    if period < 2:
        raise ValueError("period must be at least 2")
    if len(s) < 2 * period:
        raise SeriesTooShort(f"need at least {2 * period} observations, got {len(s)}")
    observed = np.asarray(s.values, dtype=float)
    trend = centered_moving_average(observed, period)
    figures = _seasonal_figures(observed, trend, period)
    seasonal = np.resize(figures, observed.size)
    residual = observed - trend - seasonal

    def ts(v, suffix):
        return TimeSeries(s.periods, v, s.frequency, f"{s.name}:{suffix}" if s.name else suffix)

    return DecompositionResult(s, ts(trend, "trend"), ts(seasonal, "seasonal"), ts(residual, "residual"), period)


class ClassicalDecomposition(TransformerMixin, BaseEstimator):
    """Seasonal adjustment transformer backed by :func:`decompose_additive`.

    ``fit`` learns one seasonal figure per phase (position modulo
    ``period``); ``transform`` subtracts them, returning the seasonally
    adjusted series.  Phases are counted from the first fitted observation,
    so ``transform`` assumes its input starts on the same phase.
    """

    def __init__(self, period=4):
        self.period = period

    def fit(self, X, y=None):
        x = _as_1d(X)
        if x.size < 2 * self.period:
            raise SeriesTooShort(f"need at least {2 * self.period} observations, got {x.size}")
        trend = centered_moving_average(x, self.period)
        self.seasonal_ = _seasonal_figures(x, trend, self.period)
        self.trend_ = trend
        self.n_features_in_ = 1
        return self

    def transform(self, X):
        check_is_fitted(self, "seasonal_")
        x = _as_1d(X)
        return (x - np.resize(self.seasonal_, x.size))[:, None]


def _as_1d(X):
    x = np.asarray(X, dtype=float)
    if x.ndim == 2 and x.shape[1] == 1:
        x = x[:, 0]
    if x.ndim != 1:
        raise ShapeMismatch(f"expected a single series, got shape {x.shape}")
    return x
