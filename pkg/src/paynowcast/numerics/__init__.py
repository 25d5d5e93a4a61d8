from .distributions import (
    ChiSquare,
    FisherF,
    Normal,
    StudentT,
    betainc,
    gammainc_tails,
    tail_probability,
)
from .linalg import (
    DesignMatrix,
    LeastSquaresSolution,
    as_design,
    condition_number,
    numerical_rank,
    solve_least_squares,
)

__all__ = [
    "ChiSquare",
    "DesignMatrix",
    "FisherF",
    "LeastSquaresSolution",
    "Normal",
    "StudentT",
    "as_design",
    "betainc",
    "condition_number",
    "gammainc_tails",
    "numerical_rank",
    "solve_least_squares",
    "tail_probability",
]
