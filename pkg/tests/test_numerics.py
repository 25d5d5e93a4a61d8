import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from paynowcast.errors import InsufficientObservations, InvalidParameter, RankDeficient, ShapeMismatch
from paynowcast.numerics import (
    ChiSquare,
    DesignMatrix,
    FisherF,
    Normal,
    StudentT,
    betainc,
    condition_number,
    gammainc_tails,
    solve_least_squares,
    tail_probability,
)

mpmath.mp.dps = 40


# -- oracles -----------------------------------------------------------------

def exact_normal_equations(X, y):
    """Solve X'X b = X'y in exact rational arithmetic."""
    n, p = X.shape
    A = [[sum(Fraction(X[k, i]) * Fraction(X[k, j]) for k in range(n)) for j in range(p)] for i in range(p)]
    b = [sum(Fraction(X[k, i]) * Fraction(y[k]) for k in range(n)) for i in range(p)]
    for c in range(p):
        piv = next(r for r in range(c, p) if A[r][c] != 0)
        A[c], A[piv] = A[piv], A[c]
        b[c], b[piv] = b[piv], b[c]
        for r in range(p):
            if r != c and A[r][c] != 0:
                f = A[r][c] / A[c][c]
                A[r] = [a - f * ac for a, ac in zip(A[r], A[c])]
                b[r] -= f * b[c]
    return np.array([float(b[i] / A[i][i]) for i in range(p)])


def quad_cdf(dist, x):
    """Lower tail by numerical integration of the density (mpmath)."""
    x = mpmath.mpf(x)
    if isinstance(dist, Normal):
        pdf = lambda t: mpmath.npdf(t)  # noqa: E731
        return mpmath.quad(pdf, [-mpmath.inf, 0, x]) if x > 0 else mpmath.quad(pdf, [-mpmath.inf, x])
    if isinstance(dist, StudentT):
        v = mpmath.mpf(dist.df)
        c = mpmath.gamma((v + 1) / 2) / (mpmath.sqrt(v * mpmath.pi) * mpmath.gamma(v / 2))
        pdf = lambda t: c * (1 + t * t / v) ** (-(v + 1) / 2)  # noqa: E731
        return mpmath.quad(pdf, [-mpmath.inf, 0, x]) if x > 0 else mpmath.quad(pdf, [-mpmath.inf, x])
    if isinstance(dist, ChiSquare):
        k = mpmath.mpf(dist.df)
        c = 1 / (2 ** (k / 2) * mpmath.gamma(k / 2))
        pdf = lambda t: c * t ** (k / 2 - 1) * mpmath.exp(-t / 2)  # noqa: E731
        return mpmath.quad(pdf, [0, min(x, k), x]) if x > k else mpmath.quad(pdf, [0, x])
    d1, d2 = mpmath.mpf(dist.df1), mpmath.mpf(dist.df2)
    c = (d1 / d2) ** (d1 / 2) / mpmath.beta(d1 / 2, d2 / 2)
    pdf = lambda t: c * t ** (d1 / 2 - 1) * (1 + d1 * t / d2) ** (-(d1 + d2) / 2)  # noqa: E731
    return mpmath.quad(pdf, [0, min(x, 1), x]) if x > 1 else mpmath.quad(pdf, [0, x])


TABULATED = (
    [(Normal(), x) for x in (-3.0, -1.5, -0.2, 0.0, 0.7, 1.0, 1.96, 2.5, 3.3, 4.0)]
    + [(StudentT(df), x) for df, x in [(1, -2.0), (1, 0.5), (2, 1.3), (3, -0.8), (5, 2.57), (10, -1.1),
                                        (20, 0.3), (50, 2.0086), (50, 23.544), (120, -1.98), (1000, 1.645),
                                        (7, 0.0)]]
    + [(ChiSquare(df), x) for df, x in [(1, 0.1), (1, 3.84), (2, 2.2), (2, 4.952), (3, 7.81), (4, 1.0),
                                         (5, 11.07), (10, 4.0), (10, 25.0), (30, 29.0), (50, 67.5),
                                         (2, 0.05), (7, 14.0)]]
    + [(FisherF(d1, d2), x) for d1, d2, x in [(1, 1, 0.5), (1, 50, 4.03), (1, 50, 0.2), (2, 10, 3.0),
                                              (3, 20, 1.2), (4, 30, 2.69), (5, 5, 0.5), (10, 10, 1.0),
                                              (1, 50, 12.0), (2, 49, 0.9), (6, 100, 2.2), (12, 40, 1.7),
                                              (3, 8, 4.07), (20, 20, 2.12), (1, 200, 6.76)]]
)


def test_fifty_tabulated_points():
    assert len(TABULATED) == 50


# -- least squares -------------------------------------------------------------

def test_ls_hand_example():
    X = DesignMatrix.from_predictors([1.0, 2.0, 3.0, 4.0])
    sol = solve_least_squares(X, [2.0, 4.0, 5.0, 8.0])
    np.testing.assert_allclose(sol.beta, [0.0, 1.9], atol=1e-12)
    assert sol.sse == pytest.approx(0.70, abs=1e-12)


def test_ls_exact_line():
    x = np.arange(6.0)
    sol = solve_least_squares(DesignMatrix.from_predictors(x), 3 * x + 1)
    np.testing.assert_allclose(sol.beta, [1.0, 3.0], atol=1e-12)
    assert sol.sse == pytest.approx(0.0, abs=1e-20)


def test_ls_errors():
    x = np.arange(5.0)
    with pytest.raises(RankDeficient):
        solve_least_squares(np.column_stack([np.ones(5), x, x]), x)
    with pytest.raises(InsufficientObservations):
        solve_least_squares(np.ones((1, 2)), [1.0])
    with pytest.raises(ShapeMismatch):
        solve_least_squares(np.ones((4, 2)), [1.0, 2.0])


def test_ls_matches_exact_normal_equations(rng):
    done = 0
    while done < 100:
        n = int(rng.integers(2, 21))
        p = int(rng.integers(1, min(4, n - 1) + 1))
        X = rng.uniform(-10, 10, size=(n, p))
        if np.linalg.matrix_rank(X) < p:
            continue
        y = rng.uniform(-10, 10, size=n)
        sol = solve_least_squares(X, y)
        exact = exact_normal_equations(X, y)
        np.testing.assert_allclose(sol.beta, exact, rtol=1e-8, atol=1e-8 * np.abs(exact).max())
        done += 1


@settings(max_examples=60, deadline=None)
@given(st.integers(3, 25), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_residuals_orthogonal_to_design(n, p, seed):
    r = np.random.default_rng(seed)
    p = min(p, n - 1)
    X = r.normal(size=(n, p))
    y = r.normal(size=n) * 10
    sol = solve_least_squares(X, y)
    assert np.max(np.abs(X.T @ sol.residuals)) <= 1e-8 * max(1.0, np.linalg.norm(y))


def test_hat_diagonals_and_inverse(rng):
    X = np.column_stack([np.ones(12), rng.normal(size=(12, 2))])
    sol = solve_least_squares(X, rng.normal(size=12))
    np.testing.assert_allclose(sol.xtx_inverse, np.linalg.inv(X.T @ X), rtol=1e-10)
    H = X @ np.linalg.inv(X.T @ X) @ X.T
    np.testing.assert_allclose(sol.hat_diagonals, np.diag(H), atol=1e-12)


# -- condition number ----------------------------------------------------------

def test_condition_number_examples(rng):
    Q, _ = np.linalg.qr(rng.normal(size=(8, 3)))
    assert condition_number(Q) == pytest.approx(1.0, abs=1e-12)
    A = np.zeros((4, 2))
    A[0, 0], A[1, 1] = 1.0, 1000.0
    assert condition_number(A) == pytest.approx(1000.0, rel=1e-12)
    x = rng.normal(size=6)
    assert condition_number(np.column_stack([x, x])) == math.inf


def test_condition_number_rotation_invariant(rng):
    X = rng.normal(size=(10, 3)) * [1, 10, 100]
    Q, _ = np.linalg.qr(rng.normal(size=(10, 10)))
    assert condition_number(Q @ X) == pytest.approx(condition_number(X), rel=1e-9)


# -- distributions -------------------------------------------------------------

def test_tail_examples():
    assert tail_probability(Normal(), 0.0, "lower") == pytest.approx(0.5, abs=1e-15)
    assert tail_probability(ChiSquare(2), 2.2) == pytest.approx(0.333, abs=5e-4)
    assert tail_probability(ChiSquare(2), 4.952) == pytest.approx(0.084, abs=5e-4)
    assert tail_probability(Normal(), 1.0, "lower") == pytest.approx(0.841345, abs=1e-6)
    # chi-square(2) upper tail is exp(-x/2) exactly
    for x in (0.3, 2.2, 4.952, 40.0):
        assert ChiSquare(2).sf(x) == pytest.approx(math.exp(-x / 2), rel=1e-12)


def test_two_sided_and_bad_side():
    t = StudentT(10)
    assert tail_probability(t, 2.0, "two_sided") == pytest.approx(2 * t.sf(2.0), rel=1e-14)
    assert tail_probability(t, -2.0, "two_sided") == pytest.approx(2 * t.sf(2.0), rel=1e-14)
    assert tail_probability(t, 0.0, "two_sided") == 1.0
    with pytest.raises(InvalidParameter):
        tail_probability(t, 1.0, "left")


@pytest.mark.parametrize("dist,x", TABULATED, ids=lambda v: repr(v))
def test_cdf_against_quadrature(dist, x):
    lower, upper = dist.tails(x)
    oracle = float(quad_cdf(dist, x))
    assert lower == pytest.approx(oracle, abs=1e-8)
    assert abs(lower + upper - 1.0) <= 1e-12


def test_t_approaches_normal():
    for x in (-2.0, 0.0, 2.0):
        assert abs(StudentT(1e6).cdf(x) - Normal().cdf(x)) < 1e-6


@pytest.mark.parametrize("dist", [Normal(), StudentT(3), StudentT(50), ChiSquare(2), ChiSquare(9), FisherF(1, 50),
                                  FisherF(4, 12)])
def test_ppf_inverts_cdf(dist):
    for q in (0.001, 0.025, 0.3, 0.5, 0.9, 0.975, 0.999):
        assert dist.cdf(dist.ppf(q)) == pytest.approx(q, abs=1e-11)


def test_known_quantiles():
    assert StudentT(50).ppf(0.975) == pytest.approx(2.008559, abs=1e-6)
    assert Normal().ppf(0.975) == pytest.approx(1.959964, abs=1e-6)


def test_special_functions_against_mpmath():
    for a, b, x in [(0.5, 0.5, 0.3), (2.0, 3.0, 0.6), (25.0, 0.5, 0.98), (100.0, 200.0, 0.33), (1.0, 1.0, 0.42)]:
        assert betainc(a, b, x) == pytest.approx(float(mpmath.betainc(a, b, 0, x, regularized=True)), abs=1e-12)
    for a, x in [(0.5, 0.1), (1.0, 2.0), (3.0, 2.5), (10.0, 14.0), (50.0, 40.0)]:
        lower, upper = gammainc_tails(a, x)
        assert lower == pytest.approx(float(mpmath.gammainc(a, 0, x, regularized=True)), abs=1e-12)
        assert lower + upper == pytest.approx(1.0, abs=1e-14)


def test_invalid_df():
    with pytest.raises(InvalidParameter):
        StudentT(0)
    with pytest.raises(InvalidParameter):
        FisherF(1, -3)


@settings(max_examples=100, deadline=None)
@given(st.floats(-50, 50), st.integers(1, 200))
def test_t_tails_sum_to_one(x, df):
    lower, upper = StudentT(df).tails(x)
    assert 0.0 <= lower <= 1.0 and 0.0 <= upper <= 1.0
    assert abs(lower + upper - 1.0) <= 1e-12
