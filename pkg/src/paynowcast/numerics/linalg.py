"""Least squares via Householder QR, and design-matrix conditioning."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from ..errors import InsufficientObservations, InvalidParameter, RankDeficient, ShapeMismatch


@dataclass(frozen=True)
class DesignMatrix:
    """An ``n x p`` regressor matrix with column names.

    When ``has_intercept`` is true, column 0 is all ones and is named
    ``const``.
    """

    values: np.ndarray
    names: tuple = ()
    has_intercept: bool = False

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise ShapeMismatch(f"design matrix must be 2-D, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise InvalidParameter("design matrix has non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        names = tuple(self.names) or tuple(f"x{j}" for j in range(values.shape[1]))
        if len(names) != values.shape[1]:
            raise ShapeMismatch(f"{len(names)} names for {values.shape[1]} columns")
        object.__setattr__(self, "names", names)
        if self.has_intercept and (values.shape[1] == 0 or not np.all(values[:, 0] == 1.0)):
            raise InvalidParameter("has_intercept requires column 0 to be all ones")

    @classmethod
    def from_predictors(cls, x, names=None, intercept=True):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        names = list(names) if names is not None else [f"x{j + 1}" for j in range(x.shape[1])]
        if intercept:
            x = np.column_stack([np.ones(x.shape[0]), x])
            names = ["const"] + names
        return cls(x, tuple(names), has_intercept=intercept)

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def p(self):
        return self.values.shape[1]

    @property
    def shape(self):
        return self.values.shape

    def take(self, rows):
        return DesignMatrix(self.values[np.asarray(rows)], self.names, self.has_intercept)

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


def as_design(X):
    """Coerce an array-like (or pass through a DesignMatrix)."""
    if isinstance(X, DesignMatrix):
        return X
    return DesignMatrix(np.asarray(X, dtype=float))


@dataclass(frozen=True)
class LeastSquaresSolution:
    beta: np.ndarray
    sse: float
    xtx_inverse: np.ndarray
    rank: int
    fitted: np.ndarray = field(repr=False)
    residuals: np.ndarray = field(repr=False)
    hat_diagonals: np.ndarray = field(repr=False)


def numerical_rank(X):
    s = np.linalg.svd(np.asarray(X, dtype=float), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    tol = s[0] * max(np.shape(X)) * np.finfo(float).eps
    return int(np.sum(s > tol))


def solve_least_squares(X, y):
    """Minimize ``||y - X beta||^2`` through a reduced QR factorization.

    ``(X'X)^-1`` is formed as ``R^-1 R^-T`` and the hat diagonals as the
    squared row norms of ``Q`` (``x_i^2 / x'x`` for a single column); the normal equations are never formed.
    Raises :class:`RankDeficient` rather than falling back to a pseudo-inverse.
    """
    X = as_design(X).values
    y = np.asarray(y, dtype=float).ravel()
    n, p = X.shape
    if y.shape[0] != n:
        raise ShapeMismatch(f"y has {y.shape[0]} rows, X has {n}")
    if n < p:
        raise InsufficientObservations(f"{n} observations for {p} parameters")
    if not np.all(np.isfinite(y)):
        raise InvalidParameter("y has non-finite entries")
    rank = numerical_rank(X)
    if rank < p:
        raise RankDeficient(rank, p)

    q, r = np.linalg.qr(X, mode="reduced")
    beta = solve_triangular(r, q.T @ y, lower=False)
    r_inv = solve_triangular(r, np.eye(p), lower=False)
    xtx_inverse = r_inv @ r_inv.T
    fitted = X @ beta
    residuals = y - fitted
    if p == 1:
        # closed form; a constant column gives exactly 1/n
        col = X[:, 0]
        hat = col * col / (col @ col)
    else:
        hat = np.einsum("ij,ij->i", q, q)
    return LeastSquaresSolution(
        beta=beta,
        sse=float(residuals @ residuals),
        xtx_inverse=xtx_inverse,
        rank=rank,
        fitted=fitted,
        residuals=residuals,
        hat_diagonals=hat,
    )


def condition_number(X):
    """Ratio of the extreme singular values of ``X``; ``inf`` when singular."""
    X = as_design(X).values
    if X.shape[1] < 1 or X.shape[0] < X.shape[1]:
        raise InvalidParameter(f"condition number needs n >= p >= 1, got shape {X.shape}")
    s = np.linalg.svd(X, compute_uv=False)
    if numerical_rank(X) < X.shape[1]:
        return float("inf")
    return float(s[0] / s[-1])
