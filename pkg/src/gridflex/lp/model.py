"""Linear program container and solution record.

Rows are stored sparsely as ``(index, value)`` pairs with activity bounds,
so ``lower <= sum(a_j x_j) <= upper``; an equality row has ``lower == upper``.
Unbounded sides use ``math.inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import scipy.sparse as sp

INF = math.inf

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


class LpError(Exception):
    """Base class for solver failures that are not an LP status."""


class IterationLimitError(LpError):
    pass


class NumericalError(LpError):
    """Basis became singular and could not be refactored."""


@dataclass
class Row:
    coefficients: list[tuple[int, float]]
    lower: float = -INF
    upper: float = INF
    name: str = ""


@dataclass
class LinearProgram:
    """Minimize ``objective @ x`` subject to row and variable bounds."""

    num_vars: int = 0
    objective: list[float] = field(default_factory=list)
    var_bounds: list[tuple[float, float]] = field(default_factory=list)
    rows: list[Row] = field(default_factory=list)
    var_names: list[str] = field(default_factory=list)

    def add_var(self, cost: float = 0.0, lower: float = 0.0, upper: float = INF, name: str = "") -> int:
        self.objective.append(float(cost))
        self.var_bounds.append((float(lower), float(upper)))
        self.var_names.append(name or f"x{self.num_vars}")
        self.num_vars += 1
        return self.num_vars - 1

    def add_row(
        self,
        coefficients: list[tuple[int, float]],
        lower: float = -INF,
        upper: float = INF,
        name: str = "",
    ) -> int:
        self.rows.append(Row(list(coefficients), float(lower), float(upper), name or f"r{len(self.rows)}"))
        return len(self.rows) - 1

    @property
    def num_rows(self) -> int:
        return len(self.rows)

    def validate(self) -> list[str]:
        """Return human-readable problems; empty when the invariants hold."""
        problems = []
        if len(self.objective) != self.num_vars or len(self.var_bounds) != self.num_vars:
            problems.append("objective/var_bounds length does not match num_vars")
        for j, (c, (lo, up)) in enumerate(zip(self.objective, self.var_bounds)):
            if math.isnan(c) or math.isnan(lo) or math.isnan(up):
                problems.append(f"variable {j}: NaN in cost or bounds")
            elif lo > up:
                problems.append(f"variable {j}: lower {lo} > upper {up}")
        for r, row in enumerate(self.rows):
            if row.lower > row.upper:
                problems.append(f"row {r} ({row.name}): lower {row.lower} > upper {row.upper}")
            seen = set()
            for j, a in row.coefficients:
                if not 0 <= j < self.num_vars:
                    problems.append(f"row {r} ({row.name}): variable index {j} out of range")
                if j in seen:
                    problems.append(f"row {r} ({row.name}): duplicate index {j}")
                seen.add(j)
                if math.isnan(a):
                    problems.append(f"row {r} ({row.name}): NaN coefficient")
        return problems

    # dense/sparse views -------------------------------------------------

    def matrix(self) -> sp.csr_matrix:
        """Constraint matrix as CSR, shape ``(num_rows, num_vars)``."""
        data, ri, ci = [], [], []
        for r, row in enumerate(self.rows):
            for j, a in row.coefficients:
                ri.append(r)
                ci.append(j)
                data.append(a)
        return sp.csr_matrix((data, (ri, ci)), shape=(self.num_rows, self.num_vars), dtype=float)

    def cost_vector(self) -> np.ndarray:
        return np.asarray(self.objective, dtype=float)

    def bounds_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        b = np.asarray(self.var_bounds, dtype=float).reshape(self.num_vars, 2)
        return b[:, 0].copy(), b[:, 1].copy()

    def row_bounds_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([row.lower for row in self.rows], dtype=float)
        up = np.array([row.upper for row in self.rows], dtype=float)
        return lo, up

    def scaled_objective(self, factor: float) -> "LinearProgram":
        return LinearProgram(
            num_vars=self.num_vars,
            objective=[factor * c for c in self.objective],
            var_bounds=list(self.var_bounds),
            rows=[Row(list(r.coefficients), r.lower, r.upper, r.name) for r in self.rows],
            var_names=list(self.var_names),
        )


@dataclass
class LpSolution:
    status: str
    x: np.ndarray
    objective_value: float
    duals: np.ndarray
    reduced_costs: np.ndarray
    iteration_count: int
    # basis membership of structural variables and of row slacks, for diagnostics
    basic_vars: frozenset[int] = frozenset()
    basic_rows: frozenset[int] = frozenset()
    degenerate: bool = False
    diagnostics: dict[str, Any] = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL
