"""Two-phase bounded-variable revised simplex.

Every row ``L <= a x <= U`` gets a slack ``s = a x`` carrying the row bounds,
so the working system is ``[A  -I  Art] z = 0`` with every column bounded.
Rows whose slack cannot start inside its bounds get a signed artificial
column; phase 1 minimizes the artificial sum, phase 2 the true objective.

Pricing is Dantzig (largest reduced cost magnitude) with a two-pass Harris
ratio test. If the objective fails to improve for ``stall_window``
consecutive iterations the phase switches to Bland's rule (smallest eligible
index enters, smallest index leaves on ratio ties), which cannot cycle.

The basis is held as a sparse LU of a reference basis plus a product-form
eta file, refactored every ``refactor_every`` pivots or when the primal
residual drifts.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .model import (
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED,
    IterationLimitError,
    LinearProgram,
    LpSolution,
    NumericalError,
)

logger = logging.getLogger(__name__)

BASIC, AT_LOWER, AT_UPPER, FREE = 0, 1, 2, 3


@dataclass(frozen=True)
class SolverOptions:
    feas_tol: float = 1e-7
    opt_tol: float = 1e-7
    max_iters: int | None = None  # default 50 * (rows + vars)
    refactor_every: int = 100
    residual_tol: float = 1e-9
    stall_window: int = 50
    pivot_tol: float = 1e-9


class _Factor:
    """LU of a reference basis with a product-form eta file on top."""

    def __init__(self, B: sp.csc_matrix):
        self.m = B.shape[0]
        self.etas: list[tuple[int, np.ndarray]] = []
        if self.m == 0:
            self.lu = None
            return
        try:
            self.lu = spla.splu(B.tocsc(), permc_spec="COLAMD")
        except RuntimeError as exc:
            raise NumericalError(f"singular basis: {exc}") from exc

    def ftran(self, a: np.ndarray) -> np.ndarray:
        if self.m == 0:
            return a.copy()
        v = self.lu.solve(a)
        for p, alpha in self.etas:
            vp = v[p] / alpha[p]
            v -= vp * alpha
            v[p] = vp
        return v

    def btran(self, c: np.ndarray) -> np.ndarray:
        if self.m == 0:
            return c.copy()
        w = c.astype(float, copy=True)
        for p, alpha in reversed(self.etas):
            wp = w[p]
            w[p] = (wp - (alpha @ w - alpha[p] * wp)) / alpha[p]
        return self.lu.solve(w, trans="T")

    def push(self, p: int, alpha: np.ndarray) -> None:
        self.etas.append((p, alpha.copy()))


class _Simplex:
    def __init__(self, lp: LinearProgram, opts: SolverOptions):
        self.opts = opts
        self.n = lp.num_vars
        self.m = lp.num_rows
        n, m = self.n, self.m
        A = lp.matrix().tocsc()
        self.c_true = lp.cost_vector()
        xlo, xup = lp.bounds_arrays()
        rlo, rup = lp.row_bounds_arrays()

        x0 = np.where(np.isfinite(xlo), xlo, np.where(np.isfinite(xup), xup, 0.0))
        act = A @ x0 if m else np.zeros(0)
        ftol = opts.feas_tol
        inside = (act >= rlo - ftol) & (act <= rup + ftol)
        s0 = np.clip(act, rlo, rup)

        art_rows = np.flatnonzero(~inside)
        sign = np.sign(s0[art_rows] - act[art_rows])
        self.n_art = len(art_rows)
        Art = sp.csc_matrix(
            (sign, (art_rows, np.arange(self.n_art))), shape=(m, self.n_art)
        )
        self.K = sp.hstack([A, -sp.identity(m, format="csc"), Art], format="csc")
        self.KT = self.K.T.tocsr()
        N = n + m + self.n_art
        self.N = N
        self.lo = np.concatenate([xlo, rlo, np.zeros(self.n_art)])
        self.up = np.concatenate([xup, rup, np.full(self.n_art, np.inf)])
        self.x = np.concatenate([x0, s0, np.abs(s0[art_rows] - act[art_rows])])
        self.art_rows = art_rows

        self.state = np.empty(N, dtype=np.int8)
        for j in range(N):
            self.state[j] = self._nonbasic_state(j)
        basis = np.arange(n, n + m)
        basis[art_rows] = n + m + np.arange(self.n_art)
        self.basis = basis
        self.state[basis] = BASIC
        self.iters = 0
        self.max_iters = opts.max_iters or 50 * (m + n)
        self.bland = False
        self._refactor()

    # basis bookkeeping -------------------------------------------------

    def _nonbasic_state(self, j: int) -> int:
        if np.isfinite(self.lo[j]) and self.x[j] <= self.lo[j]:
            return AT_LOWER
        if np.isfinite(self.up[j]) and self.x[j] >= self.up[j]:
            return AT_UPPER
        if np.isfinite(self.lo[j]):
            return AT_LOWER
        if np.isfinite(self.up[j]):
            return AT_UPPER
        return FREE

    def _refactor(self) -> None:
        self.factor = _Factor(self.K[:, self.basis])
        self._recompute_basics()

    def _recompute_basics(self) -> None:
        nonbasic = self.state != BASIC
        rhs = -(self.K[:, nonbasic] @ self.x[nonbasic]) if self.m else np.zeros(0)
        self.x[self.basis] = self.factor.ftran(rhs)

    def _column(self, j: int) -> np.ndarray:
        col = np.zeros(self.m)
        start, end = self.K.indptr[j], self.K.indptr[j + 1]
        col[self.K.indices[start:end]] = self.K.data[start:end]
        return col

    def _pivot(self, p: int, j: int, alpha: np.ndarray, leave_state: int) -> None:
        leaving = self.basis[p]
        self.state[leaving] = leave_state
        self.x[leaving] = self.lo[leaving] if leave_state == AT_LOWER else self.up[leaving]
        self.basis[p] = j
        self.state[j] = BASIC
        self.factor.push(p, alpha)
        if len(self.factor.etas) >= self.opts.refactor_every:
            self._refactor()

    def _check_residual(self) -> None:
        if self.m == 0:
            return
        r = self.K @ self.x
        scale = 1.0 + np.max(np.abs(self.x), initial=0.0)
        if np.max(np.abs(r)) > self.opts.residual_tol * scale:
            self._refactor()

    # main loop ---------------------------------------------------------

    def run_phase(self, cost: np.ndarray) -> str:
        """Iterate to optimality for ``cost``; return OPTIMAL or UNBOUNDED."""
        opts = self.opts
        fixed = self.lo == self.up
        best = np.inf
        stall = 0
        self.bland = False
        while True:
            y = self.factor.btran(cost[self.basis])
            d = cost - self.KT @ y if self.m else cost.copy()
            st = self.state
            can_inc = ((st == AT_LOWER) | (st == FREE)) & ~fixed & (d < -opts.opt_tol)
            can_dec = ((st == AT_UPPER) | (st == FREE)) & ~fixed & (d > opts.opt_tol)
            eligible = np.flatnonzero(can_inc | can_dec)
            if eligible.size == 0:
                self.y, self.d = y, d
                return OPTIMAL
            if self.iters >= self.max_iters:
                raise IterationLimitError(f"iteration limit {self.max_iters} reached")
            if self.bland:
                j = int(eligible[0])
            else:
                j = int(eligible[np.argmax(np.abs(d[eligible]))])
            delta = 1.0 if can_inc[j] else -1.0

            alpha = self.factor.ftran(self._column(j))
            theta, p, leave_state = self._ratio_test(alpha, delta)
            span = self.up[j] - self.lo[j]
            if not np.isfinite(theta) and not np.isfinite(span):
                self.ray = (j, delta, alpha)
                return UNBOUNDED

            self.iters += 1
            if span <= theta:
                # bound flip, basis unchanged
                self.x[self.basis] -= delta * span * alpha
                if delta > 0:
                    self.x[j], self.state[j] = self.up[j], AT_UPPER
                else:
                    self.x[j], self.state[j] = self.lo[j], AT_LOWER
            else:
                self.x[self.basis] -= delta * theta * alpha
                self.x[j] += delta * theta
                self._pivot(p, j, alpha, leave_state)

            if self.iters % 10 == 0:
                self._check_residual()
            obj = float(cost @ self.x)
            if obj < best - 1e-12 * (1.0 + abs(best if np.isfinite(best) else 0.0)):
                best, stall = obj, 0
            else:
                stall += 1
                if stall >= opts.stall_window and not self.bland:
                    logger.debug("stall detected after %d iterations; switching to Bland", self.iters)
                    self.bland = True

    def _ratio_test(self, alpha: np.ndarray, delta: float) -> tuple[float, int, int]:
        """Return (step, leaving position, leaving state); step inf if unblocked."""
        if self.m == 0:
            return np.inf, -1, AT_LOWER
        opts = self.opts
        xb = self.x[self.basis]
        lo = self.lo[self.basis]
        up = self.up[self.basis]
        da = delta * alpha
        dec = (da > opts.pivot_tol) & np.isfinite(lo)
        inc = (da < -opts.pivot_tol) & np.isfinite(up)
        if not dec.any() and not inc.any():
            return np.inf, -1, AT_LOWER

        ratio = np.full(self.m, np.inf)
        ratio[dec] = (xb[dec] - lo[dec]) / da[dec]
        ratio[inc] = (up[inc] - xb[inc]) / -da[inc]
        ratio = np.maximum(ratio, 0.0)

        if self.bland:
            tmin = ratio.min()
            ties = np.flatnonzero(ratio <= tmin + 1e-12 * (1.0 + tmin))
            p = int(ties[np.argmin(self.basis[ties])])
        else:
            relaxed = np.full(self.m, np.inf)
            relaxed[dec] = (xb[dec] - lo[dec] + opts.feas_tol) / da[dec]
            relaxed[inc] = (up[inc] - xb[inc] + opts.feas_tol) / -da[inc]
            tmax = relaxed.min()
            cand = np.flatnonzero(ratio <= tmax)
            p = int(cand[np.argmax(np.abs(alpha[cand]))])
        leave_state = AT_LOWER if dec[p] else AT_UPPER
        return float(ratio[p]), p, leave_state

    def drive_out_fixed(self) -> None:
        """Pivot fixed basic variables (artificials, equality slacks) out at zero step."""
        if self.m == 0:
            return
        fixed = self.lo == self.up
        nonbasic_free = (self.state != BASIC) & ~fixed
        for p in range(self.m):
            if not fixed[self.basis[p]]:
                continue
            e = np.zeros(self.m)
            e[p] = 1.0
            rho = self.factor.btran(e)
            row = self.KT @ rho
            row[~nonbasic_free] = 0.0
            j = int(np.argmax(np.abs(row)))
            if abs(row[j]) <= 1e-7:
                continue  # redundant row
            alpha = self.factor.ftran(self._column(j))
            self._pivot(p, j, alpha, AT_LOWER)
            nonbasic_free[j] = False
        self._recompute_basics()


def solve(lp: LinearProgram, options: SolverOptions | None = None) -> LpSolution:
    """Solve ``lp`` and return primal values, row duals and reduced costs.

    Row duals follow the sensitivity convention ``d objective / d rhs``: a
    binding lower row bound has a nonnegative dual, a binding upper bound a
    nonpositive one. Raises :class:`IterationLimitError` or
    :class:`NumericalError`; infeasibility and unboundedness are statuses.
    """
    opts = options or SolverOptions()
    problems = lp.validate()
    if problems:
        raise ValueError("invalid linear program: " + "; ".join(problems[:5]))
    sx = _Simplex(lp, opts)
    n, m = sx.n, sx.m

    diagnostics: dict = {"artificials": sx.n_art}
    if sx.n_art:
        c1 = np.zeros(sx.N)
        c1[n + m:] = 1.0
        sx.run_phase(c1)
        phase1 = float(c1 @ sx.x)
        diagnostics["phase1_objective"] = phase1
        diagnostics["phase1_iterations"] = sx.iters
        if phase1 > opts.feas_tol:
            art_vals = sx.x[n + m:]
            bad = [int(sx.art_rows[k]) for k in np.flatnonzero(art_vals > opts.feas_tol)]
            diagnostics["violated_rows"] = bad
            diagnostics["violated_row_names"] = [lp.rows[r].name for r in bad]
            return LpSolution(
                status=INFEASIBLE,
                x=sx.x[:n].copy(),
                objective_value=float("nan"),
                duals=np.full(m, np.nan),
                reduced_costs=np.full(n, np.nan),
                iteration_count=sx.iters,
                diagnostics=diagnostics,
            )
        sx.up[n + m:] = 0.0
        sx.x[n + m:] = 0.0
    sx.drive_out_fixed()

    c2 = np.concatenate([sx.c_true, np.zeros(m + sx.n_art)])
    status = sx.run_phase(c2)
    if status == UNBOUNDED:
        j, delta, alpha = sx.ray
        ray = np.zeros(sx.N)
        ray[j] = delta
        ray[sx.basis] = -delta * alpha
        diagnostics["ray"] = ray[:n]
        diagnostics["entering"] = j
        return LpSolution(
            status=UNBOUNDED,
            x=sx.x[:n].copy(),
            objective_value=-np.inf,
            duals=np.full(m, np.nan),
            reduced_costs=np.full(n, np.nan),
            iteration_count=sx.iters,
            diagnostics=diagnostics,
        )

    sx._recompute_basics()
    x = sx.x[:n].copy()
    basis_set = set(int(b) for b in sx.basis)
    xb = sx.x[sx.basis]
    lob, upb = sx.lo[sx.basis], sx.up[sx.basis]
    at_bound = (np.isfinite(lob) & (np.abs(xb - lob) <= opts.feas_tol)) | (
        np.isfinite(upb) & (np.abs(xb - upb) <= opts.feas_tol)
    )
    return LpSolution(
        status=OPTIMAL,
        x=x,
        objective_value=float(sx.c_true @ x),
        duals=sx.y.copy(),
        reduced_costs=sx.d[:n].copy(),
        iteration_count=sx.iters,
        basic_vars=frozenset(b for b in basis_set if b < n),
        basic_rows=frozenset(b - n for b in basis_set if n <= b < n + m),
        degenerate=bool(at_bound.any()),
        diagnostics=diagnostics,
    )
