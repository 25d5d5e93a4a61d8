import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from paynowcast.errors import (
    DuplicatePeriod,
    EmptyIntersection,
    FrequencyMismatch,
    SeriesTooShort,
    UnparseableDate,
    ZeroVolume,
)
from paynowcast.series import (
    ClassicalDecomposition,
    Frame,
    Frequency,
    Period,
    TimeSeries,
    decompose_additive,
    derive_avg_txn,
    merge_align,
    resample_quarterly,
)

M, Q = Frequency.MONTHLY, Frequency.QUARTERLY


def monthly(start_year, values, start_month=1, name="s"):
    periods = []
    y, m = start_year, start_month
    for _ in values:
        periods.append(Period.month(y, m))
        m += 1
        if m == 13:
            y, m = y + 1, 1
    return TimeSeries(tuple(periods), values, M, name)


def quarterly(start_year, values, name="q"):
    periods = [Period.quarter(start_year + i // 4, i % 4 + 1) for i in range(len(values))]
    return TimeSeries(tuple(periods), values, Q, name)


# -- periods -------------------------------------------------------------------

@pytest.mark.parametrize("text,expected", [
    ("1994-03", Period.month(1994, 3)),
    ("1994-Q2", Period.quarter(1994, 2)),
    ("1994 Q1 ", Period.quarter(1994, 1)),
    ("1994  Q4", Period.quarter(1994, 4)),
    ("2001/7", Period.month(2001, 7)),
])
def test_period_parse(text, expected):
    assert Period.parse(text) == expected


@pytest.mark.parametrize("text", ["1994-13", "1994-Q5", "Q1 1994", "abc", ""])
def test_period_parse_rejects(text):
    with pytest.raises(UnparseableDate):
        Period.parse(text)


def test_period_str_and_quarter():
    assert str(Period.month(1994, 3)) == "1994-03"
    assert str(Period.quarter(1994, 3)) == "1994-Q3"
    # Q(n) covers months 3n-2 .. 3n
    for m in range(1, 13):
        assert Period.month(2000, m).to_quarter() == Period.quarter(2000, (m + 2) // 3)


def test_timeseries_validation():
    with pytest.raises(DuplicatePeriod):
        TimeSeries((Period.month(1994, 1), Period.month(1994, 1)), [1, 2], M)
    with pytest.raises(ValueError):
        TimeSeries((Period.month(1994, 2), Period.month(1994, 1)), [1, 2], M)
    with pytest.raises(FrequencyMismatch):
        TimeSeries((Period.month(1994, 1), Period.quarter(1994, 2)), [1, 2], M)
    s = monthly(1994, [1.0, 2.0])
    with pytest.raises(ValueError):
        s.values[0] = 5.0


# -- merge_align -----------------------------------------------------------------

def test_merge_drops_pre_overlap():
    a = quarterly(1990, np.arange(124.0), "A")
    b = quarterly(1994, np.arange(108.0), "B")
    f = merge_align({"A": a, "B": b})
    assert f.index[0] == Period.quarter(1994, 1)
    assert len(f) == 108
    assert set(f.index) <= set(a.periods) and set(f.index) <= set(b.periods)
    assert f["A"][0] == 16.0 and f["B"][0] == 0.0


def test_merge_single_and_disjoint():
    a = quarterly(1994, [1.0, 2.0, 3.0], "A")
    f = merge_align({"A": a})
    assert f.index == a.periods and np.array_equal(f["A"], a.values)
    with pytest.raises(EmptyIntersection):
        merge_align({"A": a, "B": quarterly(2000, [1.0], "B")})
    with pytest.raises(FrequencyMismatch):
        merge_align({"A": a, "M": monthly(1994, [1.0])})


def test_frame_csv_round_trip():
    f = Frame((Period.quarter(1994, 1), Period.quarter(1994, 2)), {"x": [0.1, np.nan], "y": [1 / 3, 2e300]})
    g = Frame.from_csv(f.to_csv())
    assert g.index == f.index and g.names == f.names
    np.testing.assert_array_equal(g["y"], f["y"])
    assert np.isnan(g["x"][1])


# -- resampling ------------------------------------------------------------------

def test_resample_sum():
    q = resample_quarterly(monthly(1994, [1.0, 2.0, 3.0]), "sum")
    assert q.periods == (Period.quarter(1994, 1),) and q.values[0] == 6.0


def test_resample_drops_incomplete_quarter():
    log = []
    q = resample_quarterly(monthly(1994, [1.0, 2.0]), "sum", log=log)
    assert len(q) == 0
    assert log == [{"series": "s", "quarter": "1994-Q1", "months_present": 2}]


def test_resample_mean_constant():
    q = resample_quarterly(monthly(1994, [1.0] * 12), "mean")
    assert len(q) == 4 and np.all(q.values == 1.0)


def test_resample_rejects_quarterly():
    with pytest.raises(FrequencyMismatch):
        resample_quarterly(quarterly(1994, [1.0]))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 11), st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=40))
def test_resample_sum_preserves_totals(start_month, values):
    s = monthly(1994, values, start_month=start_month + 1)
    q = resample_quarterly(s, "sum")
    kept = {p for p in q.periods}
    expected = sum(v for p, v in zip(s.periods, s.values) if p.to_quarter() in kept)
    assert q.values.sum() == pytest.approx(expected, rel=1e-9, abs=1e-6)


# -- avg txn -------------------------------------------------------------------------

def test_avg_txn_examples():
    v = quarterly(1994, [100.0])
    n = quarterly(1994, [20.0])
    assert derive_avg_txn(v, n).values[0] == 5.0
    same = quarterly(1994, [3.0, 7.0, 11.0])
    assert np.all(derive_avg_txn(same, same).values == 1.0)


def test_avg_txn_hand_quarter():
    value = monthly(1994, [10.0, 20.0, 30.0])
    volume = monthly(1994, [2.0, 4.0, 4.0])
    avg = derive_avg_txn(resample_quarterly(value), resample_quarterly(volume))
    assert avg.values[0] == 6.0


def test_avg_txn_zero_volume():
    with pytest.raises(ZeroVolume) as exc:
        derive_avg_txn(quarterly(1994, [1.0, 2.0]), quarterly(1994, [1.0, 0.0]))
    assert exc.value.period == Period.quarter(1994, 2)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(1e-3, 1e6), min_size=1, max_size=12), st.floats(1e-3, 1e3))
def test_avg_txn_scale_consistent(vals, c):
    v = quarterly(1994, vals)
    n = quarterly(1994, [1.0 + i for i in range(len(vals))])
    np.testing.assert_allclose(derive_avg_txn(v.scale(c), n).values, c * derive_avg_txn(v, n).values, rtol=1e-15)


# -- decomposition -------------------------------------------------------------------

def brute_force_decomposition(x, period):
    """Step-by-step transcription: 2xMA for even periods, phase means, recentre."""
    n = len(x)
    trend = [None] * n
    h = period // 2
    for t in range(h, n - h):
        if period % 2 == 0:
            window = [0.5 * x[t - h]] + list(x[t - h + 1:t + h]) + [0.5 * x[t + h]]
        else:
            window = list(x[t - h:t + h + 1])
        trend[t] = sum(window) / period
    figs = []
    for j in range(period):
        d = [x[t] - trend[t] for t in range(j, n, period) if trend[t] is not None]
        figs.append(sum(d) / len(d))
    mean = sum(figs) / period
    figs = [f - mean for f in figs]
    return trend, [figs[t % period] for t in range(n)]


def test_decompose_constant():
    res = decompose_additive(quarterly(1994, [7.0] * 12), 4)
    interior = ~np.isnan(res.trend.values)
    assert np.allclose(res.trend.values[interior], 7.0)
    assert np.allclose(res.seasonal.values, 0.0)
    assert np.allclose(res.residual.values[interior], 0.0)


def test_decompose_ramp():
    res = decompose_additive(quarterly(1994, np.arange(16.0)), 4)
    interior = ~np.isnan(res.trend.values)
    np.testing.assert_allclose(res.trend.values[interior], np.arange(16.0)[interior], atol=1e-12)
    assert np.max(np.abs(res.seasonal.values)) <= 1e-9
    assert np.max(np.abs(res.residual.values[interior])) <= 1e-9


def test_decompose_pattern():
    res = decompose_additive(quarterly(1994, [2.0, 0.0, -2.0, 0.0] * 4), 4)
    interior = ~np.isnan(res.trend.values)
    np.testing.assert_allclose(res.trend.values[interior], 0.0, atol=1e-12)
    np.testing.assert_allclose(res.seasonal.values[:4], [2.0, 0.0, -2.0, 0.0], atol=1e-12)


@pytest.mark.parametrize("period", [3, 4, 12])
def test_decompose_matches_brute_force(rng, period):
    x = np.cumsum(rng.normal(size=5 * period)) + np.resize(rng.normal(size=period), 5 * period)
    s = monthly(1994, x) if period == 12 else quarterly(1994, x)
    res = decompose_additive(s, period)
    trend, seasonal = brute_force_decomposition(list(x), period)
    for t in range(len(x)):
        if trend[t] is None:
            assert np.isnan(res.trend.values[t])
        else:
            assert res.trend.values[t] == pytest.approx(trend[t], abs=1e-10)
    np.testing.assert_allclose(res.seasonal.values, seasonal, atol=1e-10)
    assert abs(res.seasonal.values[:period].sum()) <= 1e-9


def test_decompose_too_short():
    with pytest.raises(SeriesTooShort):
        decompose_additive(quarterly(1994, [1.0] * 7), 4)


def test_decomposition_csv_header():
    res = decompose_additive(quarterly(1994, np.arange(8.0)), 4)
    lines = res.to_csv().splitlines()
    assert lines[0] == "period,observed,trend,seasonal,residual"
    assert lines[1].startswith("1994-Q1,0.0,,")


def test_classical_decomposition_transformer():
    x = np.arange(16.0) + np.resize([1.0, -1.0, 2.0, -2.0], 16)
    t = ClassicalDecomposition(period=4).fit(x)
    np.testing.assert_allclose(t.seasonal_, [1.0, -1.0, 2.0, -2.0], atol=1e-12)
    np.testing.assert_allclose(t.transform(x)[:, 0], np.arange(16.0), atol=1e-12)
    assert t.get_params() == {"period": 4}
