"""Self-contained LP solver with dual extraction."""

from .kkt import KktReport, check_kkt
from .model import (
    INF,
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED,
    IterationLimitError,
    LinearProgram,
    LpError,
    LpSolution,
    NumericalError,
    Row,
)
from .mps import write_mps
from .simplex import SolverOptions, solve

__all__ = [
    "INF",
    "INFEASIBLE",
    "OPTIMAL",
    "UNBOUNDED",
    "IterationLimitError",
    "KktReport",
    "LinearProgram",
    "LpError",
    "LpSolution",
    "NumericalError",
    "Row",
    "SolverOptions",
    "check_kkt",
    "solve",
    "write_mps",
]
