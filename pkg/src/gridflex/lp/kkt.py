"""Independent optimality check for an LP solution.

Everything here is recomputed from the LP data and the reported ``x`` and
row duals; no solver internals are consulted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import LinearProgram, LpSolution

_ZERO = 1e-12


@dataclass(frozen=True)
class KktReport:
    primal_residual: float
    dual_residual: float
    complementarity: float
    duality_gap: float

    def passes(self, tol: float = 1e-6) -> bool:
        return max(self.primal_residual, self.dual_residual, self.complementarity) <= tol


def _bound_gap(value, lo, up, mult):
    """Distance from the bound that a multiplier of this sign is attached to."""
    gap = np.zeros_like(value)
    pos = mult > _ZERO
    neg = mult < -_ZERO
    gap[pos] = np.where(np.isfinite(lo[pos]), value[pos] - lo[pos], 0.0)
    gap[neg] = np.where(np.isfinite(up[neg]), up[neg] - value[neg], 0.0)
    return gap


def _sign_violation(lo, up, mult):
    """A positive multiplier needs a finite lower bound, a negative one a finite upper."""
    v = np.zeros_like(mult)
    v = np.where(~np.isfinite(lo) & (mult > 0), mult, v)
    v = np.where(~np.isfinite(up) & (mult < 0), -mult, v)
    return v


def _dual_objective(value, lo, up, mult):
    bound = np.where(mult > 0, lo, np.where(mult < 0, up, value))
    bound = np.where(np.isfinite(bound), bound, value)
    return float(mult @ bound)


def check_kkt(lp: LinearProgram, sol: LpSolution, tolerances=None) -> KktReport:
    """Primal feasibility, stationarity/dual sign and complementarity residuals.

    ``tolerances`` is accepted for call-site symmetry with :func:`solve`; the
    report carries raw residuals and callers compare them to their own limit.
    """
    A = lp.matrix()
    c = lp.cost_vector()
    xlo, xup = lp.bounds_arrays()
    rlo, rup = lp.row_bounds_arrays()
    x = np.asarray(sol.x, dtype=float)
    y = np.asarray(sol.duals, dtype=float)
    act = A @ x

    primal = max(
        np.max(np.maximum(xlo - x, 0.0), initial=0.0),
        np.max(np.maximum(x - xup, 0.0), initial=0.0),
        np.max(np.maximum(rlo - act, 0.0), initial=0.0),
        np.max(np.maximum(act - rup, 0.0), initial=0.0),
    )

    z = c - A.T @ y
    dual = max(
        np.max(np.abs(z - np.asarray(sol.reduced_costs, dtype=float)), initial=0.0),
        np.max(_sign_violation(xlo, xup, z), initial=0.0),
        np.max(_sign_violation(rlo, rup, y), initial=0.0),
    )

    comp = max(
        np.max(np.abs(z * _bound_gap(x, xlo, xup, z)), initial=0.0),
        np.max(np.abs(y * _bound_gap(act, rlo, rup, y)), initial=0.0),
    )

    dual_obj = _dual_objective(act, rlo, rup, y) + _dual_objective(x, xlo, xup, z)
    gap = abs(float(c @ x) - dual_obj)
    return KktReport(float(primal), float(dual), float(comp), gap)
