"""Continuous distributions used for p-values and confidence bands.

CDFs are built on the regularized incomplete beta and gamma functions,
evaluated with modified Lentz continued fractions (and a power series for
the gamma function below ``x = a + 1``).

For every distribution, ``cdf`` and ``sf`` are derived from one directly
computed tail: whichever tail is smaller is evaluated, and the other is its
complement.  This keeps small tail probabilities accurate and makes
``cdf(x) + sf(x) == 1`` hold to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

from scipy.optimize import brentq

from ..errors import ConvergenceError, InvalidParameter

EPS = 1e-15
TINY = 1e-300
MAX_ITER = 300

_STD_NORMAL = NormalDist()


def _iteration_cap(*params):
    # CF convergence needs O(sqrt(max(a, b))) terms near the switch point, so
    # very large shape parameters (e.g. t with df ~ 1e6) get a larger budget.
    return MAX_ITER + int(8 * math.sqrt(max(params)))


def _betacf(a, b, x):
    """Continued fraction for I_x(a, b), valid for x < (a + 1) / (a + b + 2)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < TINY:
        d = TINY
    d = 1.0 / d
    h = d
    for m in range(1, _iteration_cap(a, b) + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < TINY:
            d = TINY
        c = 1.0 + aa / c
        if abs(c) < TINY:
            c = TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < TINY:
            d = TINY
        c = 1.0 + aa / c
        if abs(c) < TINY:
            c = TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            return h
    raise ConvergenceError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def _beta_front(a, b, x):
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    return math.exp(log_front)


def betainc_tails(a, b, x):
    """Return ``(I_x(a, b), 1 - I_x(a, b))`` with the smaller tail computed directly."""
    if a <= 0 or b <= 0:
        raise InvalidParameter(f"beta shape parameters must be positive, got a={a}, b={b}")
    if not 0.0 <= x <= 1.0:
        raise InvalidParameter(f"x must lie in [0, 1], got {x}")
    if x == 0.0:
        return 0.0, 1.0
    if x == 1.0:
        return 1.0, 0.0
    if x < (a + 1.0) / (a + b + 2.0):
        lower = _beta_front(a, b, x) * _betacf(a, b, x) / a
        upper = None
    else:
        upper = _beta_front(b, a, 1.0 - x) * _betacf(b, a, 1.0 - x) / b
        lower = None
    if lower is None:
        upper = min(max(upper, 0.0), 1.0)
        return 1.0 - upper, upper
    lower = min(max(lower, 0.0), 1.0)
    return lower, 1.0 - lower


def betainc(a, b, x):
    """Regularized incomplete beta function I_x(a, b)."""
    return betainc_tails(a, b, x)[0]


def _gamma_series(a, x):
    ap = a
    total = term = 1.0 / a
    for _ in range(_iteration_cap(a, x)):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * EPS:
            return total * math.exp(-x + a * math.log(x) - math.lgamma(a))
    raise ConvergenceError(f"incomplete gamma series did not converge (a={a}, x={x})")


def _gamma_cf(a, x):
    b = x + 1.0 - a
    c = 1.0 / TINY
    d = 1.0 / b
    h = d
    for i in range(1, _iteration_cap(a, x) + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < TINY:
            d = TINY
        c = b + an / c
        if abs(c) < TINY:
            c = TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h
    raise ConvergenceError(f"incomplete gamma continued fraction did not converge (a={a}, x={x})")


def gammainc_tails(a, x):
    """Return ``(P(a, x), Q(a, x))``, the regularized lower and upper incomplete gamma."""
    if a <= 0:
        raise InvalidParameter(f"gamma shape must be positive, got {a}")
    if x < 0:
        raise InvalidParameter(f"x must be non-negative, got {x}")
    if x == 0.0:
        return 0.0, 1.0
    if math.isinf(x):
        return 1.0, 0.0
    if x < a + 1.0:
        p = min(max(_gamma_series(a, x), 0.0), 1.0)
        return p, 1.0 - p
    q = min(max(_gamma_cf(a, x), 0.0), 1.0)
    return 1.0 - q, q


def _check_df(*dfs):
    for df in dfs:
        if not (math.isfinite(df) and df >= 1):
            raise InvalidParameter(f"degrees of freedom must be finite and >= 1, got {df}")


class _Continuous:
    def tails(self, x):
        raise NotImplementedError

    def cdf(self, x):
        return self.tails(x)[0]

    def sf(self, x):
        return self.tails(x)[1]

    def ppf(self, q):
        if not 0.0 < q < 1.0:
            if q == 0.0:
                return self._support[0]
            if q == 1.0:
                return self._support[1]
            raise InvalidParameter(f"probability must lie in [0, 1], got {q}")
        lo, hi = self._bracket()
        while self.cdf(lo) > q:
            lo = lo * 2.0 if lo < 0 else lo / 2.0
        while self.cdf(hi) < q:
            hi *= 2.0
        # compare on the smaller tail so extreme quantiles stay accurate
        if q > 0.5:
            return brentq(lambda v: (1.0 - q) - self.sf(v), lo, hi, xtol=1e-14, rtol=1e-15, maxiter=500)
        return brentq(lambda v: self.cdf(v) - q, lo, hi, xtol=1e-14, rtol=1e-15, maxiter=500)


@dataclass(frozen=True)
class Normal(_Continuous):
    mean: float = 0.0
    std: float = 1.0

    def tails(self, x):
        z = (x - self.mean) / self.std
        if z < 0:
            lower = 0.5 * math.erfc(-z / math.sqrt(2.0))
            return lower, 1.0 - lower
        upper = 0.5 * math.erfc(z / math.sqrt(2.0))
        return 1.0 - upper, upper

    def ppf(self, q):
        if q == 0.0:
            return -math.inf
        if q == 1.0:
            return math.inf
        if not 0.0 < q < 1.0:
            raise InvalidParameter(f"probability must lie in [0, 1], got {q}")
        return self.mean + self.std * _STD_NORMAL.inv_cdf(q)


@dataclass(frozen=True)
class StudentT(_Continuous):
    df: float

    _support = (-math.inf, math.inf)

    def __post_init__(self):
        _check_df(self.df)

    def tails(self, x):
        if math.isnan(x):
            raise InvalidParameter("x is NaN")
        if math.isinf(x):
            return (0.0, 1.0) if x < 0 else (1.0, 0.0)
        if x == 0.0:
            return 0.5, 0.5
        t2 = x * x
        # P(|T| > |x|) = I_{df/(df+x^2)}(df/2, 1/2)
        if t2 < self.df:
            small, big = betainc_tails(0.5, self.df / 2.0, t2 / (self.df + t2))
            tail = 0.5 * big
        else:
            small, _ = betainc_tails(self.df / 2.0, 0.5, self.df / (self.df + t2))
            tail = 0.5 * small
        if x < 0:
            return tail, 1.0 - tail
        return 1.0 - tail, tail

    def _bracket(self):
        return -10.0, 10.0


@dataclass(frozen=True)
class FisherF(_Continuous):
    df1: float
    df2: float

    _support = (0.0, math.inf)

    def __post_init__(self):
        _check_df(self.df1, self.df2)

    def tails(self, x):
        if x <= 0:
            return 0.0, 1.0
        if math.isinf(x):
            return 1.0, 0.0
        d1, d2 = self.df1, self.df2
        return betainc_tails(d1 / 2.0, d2 / 2.0, d1 * x / (d1 * x + d2))

    def _bracket(self):
        return 1e-8, 10.0


@dataclass(frozen=True)
class ChiSquare(_Continuous):
    df: float

    _support = (0.0, math.inf)

    def __post_init__(self):
        _check_df(self.df)

    def tails(self, x):
        if x <= 0:
            return 0.0, 1.0
        return gammainc_tails(self.df / 2.0, x / 2.0)

    def _bracket(self):
        return 1e-8, max(10.0, 2.0 * self.df)


def tail_probability(dist, x, side="upper"):
    """Probability of ``dist`` beyond ``x``.

    ``side`` is ``"lower"`` (P[X <= x]), ``"upper"`` (P[X > x]) or
    ``"two_sided"`` (``2 * min(lower, upper)`` clamped to [0, 1]).
    """
    lower, upper = dist.tails(float(x))
    if side == "lower":
        return lower
    if side == "upper":
        return upper
    if side == "two_sided":
        return min(1.0, 2.0 * min(lower, upper))
    raise InvalidParameter(f"unknown side {side!r}")
