from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
import pytest
from scipy.optimize import linprog

from gridflex.dispatch import build_lp
from gridflex.lp import (
    INF,
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED,
    IterationLimitError,
    LinearProgram,
    SolverOptions,
    check_kkt,
    solve,
    write_mps,
)
from oracles import fixture_scenarios, random_lp, vertex_enumeration


def test_single_lower_bound_row():
    lp = LinearProgram()
    x = lp.add_var(1.0, -INF, INF)
    lp.add_row([(x, 1.0)], 3.0, INF)
    sol = solve(lp)
    assert sol.status == OPTIMAL
    assert sol.x[0] == pytest.approx(3.0)
    assert sol.objective_value == pytest.approx(3.0)
    assert sol.duals[0] == pytest.approx(1.0)
    rep = check_kkt(lp, sol)
    assert rep.primal_residual == 0.0 and rep.dual_residual == 0.0 and rep.complementarity == 0.0


def test_box_with_knapsack_row():
    lp = LinearProgram()
    x = lp.add_var(-1.0, 0.0, 1.0)
    y = lp.add_var(-1.0, 0.0, 1.0)
    lp.add_row([(x, 1.0), (y, 1.0)], -INF, 1.0)
    sol = solve(lp)
    # vertices with x + y <= 1: (0,0) (1,0) (0,1)
    assert sol.objective_value == pytest.approx(-1.0)
    assert sol.x.sum() == pytest.approx(1.0)
    assert sol.duals[0] == pytest.approx(-1.0)
    assert vertex_enumeration(lp) == pytest.approx(-1.0)


def test_six_by_four_against_vertices():
    rng = np.random.default_rng(64)
    lp = LinearProgram()
    for _ in range(6):
        lp.add_var(float(rng.integers(-5, 6)), 0.0, float(rng.integers(1, 6)))
    for _ in range(4):
        coeffs = [(j, float(rng.integers(-3, 4))) for j in range(6)]
        lp.add_row(coeffs, -INF, float(rng.integers(2, 8)))
    sol = solve(lp)
    oracle = vertex_enumeration(lp)
    assert abs(sol.objective_value - oracle) <= 1e-8 * max(1.0, abs(oracle))


def test_infeasible_status():
    lp = LinearProgram()
    x = lp.add_var(0.0, 0.0, 1.0)
    lp.add_row([(x, 1.0)], 2.0, INF, name="needs_two")
    sol = solve(lp)
    assert sol.status == INFEASIBLE
    assert sol.diagnostics["phase1_objective"] > 1e-7
    assert sol.diagnostics["violated_row_names"] == ["needs_two"]


def test_unbounded_status_with_ray():
    lp = LinearProgram()
    x = lp.add_var(-1.0, 0.0, INF)
    y = lp.add_var(0.0, 0.0, INF)
    lp.add_row([(x, 1.0), (y, -1.0)], -INF, 1.0)
    sol = solve(lp)
    assert sol.status == UNBOUNDED
    ray = sol.diagnostics["ray"]
    # improving direction that stays feasible
    assert lp.cost_vector() @ ray < 0
    assert ray[0] - ray[1] <= 1e-12 and np.all(ray >= -1e-12)


def test_iteration_limit():
    rng = np.random.default_rng(5)
    lp = random_lp(rng, 8, 6)
    while solve(lp).iteration_count < 3:
        lp = random_lp(rng, 8, 6)
    with pytest.raises(IterationLimitError):
        solve(lp, SolverOptions(max_iters=1))


def test_invalid_lp_rejected():
    lp = LinearProgram()
    lp.add_var(0.0, 2.0, 1.0)
    with pytest.raises(ValueError, match="lower"):
        solve(lp)


def test_kkt_flags_perturbed_dual():
    lp = LinearProgram()
    x = lp.add_var(2.0, 0.0, 10.0)
    y = lp.add_var(3.0, 0.0, 10.0)
    lp.add_row([(x, 1.0), (y, 1.0)], 4.0, INF)
    lp.add_row([(x, 1.0)], -INF, 3.0)
    sol = solve(lp)
    assert check_kkt(lp, sol).passes(1e-9)
    bumped = replace(sol, duals=sol.duals + np.array([1e-3, 0.0]))
    assert check_kkt(lp, bumped).dual_residual == pytest.approx(1e-3, rel=1e-6)


def _strong_duality_gap(lp, sol):
    return check_kkt(lp, sol).duality_gap / (1.0 + abs(sol.objective_value))


def test_strong_duality_random():
    rng = np.random.default_rng(2024)
    checked = 0
    for _ in range(1000):
        lp = random_lp(rng, 12, 8)
        sol = solve(lp)
        if sol.status != OPTIMAL:
            continue
        assert _strong_duality_gap(lp, sol) <= 1e-6
        checked += 1
    assert checked > 500


def test_strong_duality_fixtures(fixture_name):
    case, scenarios = fixture_scenarios(fixture_name)
    for sc in scenarios:
        lp, _ = build_lp(case, sc)
        sol = solve(lp)
        assert sol.status == OPTIMAL
        assert _strong_duality_gap(lp, sol) <= 1e-6
        assert check_kkt(lp, sol).passes(1e-6)


def test_determinism():
    rng = np.random.default_rng(11)
    for _ in range(20):
        lp = random_lp(rng)
        a, b = solve(lp), solve(lp)
        assert a.status == b.status and a.iteration_count == b.iteration_count
        np.testing.assert_array_equal(a.x, b.x)
        if a.status == OPTIMAL:
            np.testing.assert_array_equal(a.duals, b.duals)


@pytest.mark.parametrize("factor", [0.5, 3.0, 1000.0])
def test_scaling_covariance(factor):
    rng = np.random.default_rng(99)
    seen = 0
    for _ in range(100):
        lp = random_lp(rng)
        a = solve(lp)
        if a.status != OPTIMAL:
            continue
        b = solve(lp.scaled_objective(factor))
        assert b.objective_value == pytest.approx(factor * a.objective_value, rel=1e-9, abs=1e-9)
        np.testing.assert_allclose(b.duals, factor * a.duals, rtol=1e-9, atol=1e-9)
        assert a.basic_vars == b.basic_vars
        seen += 1
    assert seen > 50


# ---------------------------------------------------------------------------
# MPS export cross-checked with an external solver


def read_mps(path):
    """Minimal fixed-format MPS reader (whitespace separated; no spaces in names)."""
    rows, kinds, obj_row = [], {}, None
    cols: dict[str, dict[str, float]] = {}
    rhs, rng_, bounds = {}, {}, {}
    section = None
    for raw in open(path, encoding="utf-8"):
        if not raw.strip():
            continue
        if not raw.startswith(" "):
            section = raw.split()[0]
            continue
        f = raw.split()
        if section == "ROWS":
            kinds[f[1]] = f[0]
            if f[0] == "N":
                obj_row = f[1]
            else:
                rows.append(f[1])
        elif section == "COLUMNS":
            for name, val in zip(f[1::2], f[2::2]):
                cols.setdefault(f[0], {})[name] = float(val)
        elif section == "RHS":
            for name, val in zip(f[1::2], f[2::2]):
                rhs[name] = float(val)
        elif section == "RANGES":
            for name, val in zip(f[1::2], f[2::2]):
                rng_[name] = float(val)
        elif section == "BOUNDS":
            lo, up = bounds.get(f[2], (0.0, math.inf))
            kind = f[0]
            val = float(f[3]) if len(f) > 3 else None
            if kind == "LO":
                lo = val
            elif kind == "UP":
                up = val
            elif kind == "FX":
                lo = up = val
            elif kind == "FR":
                lo, up = -math.inf, math.inf
            elif kind == "MI":
                lo = -math.inf
            bounds[f[2]] = (lo, up)
    names = list(cols)
    c = np.array([cols[n].get(obj_row, 0.0) for n in names])
    A = np.array([[cols[n].get(r, 0.0) for n in names] for r in rows]).reshape(len(rows), len(names))
    lo = np.full(len(rows), -math.inf)
    up = np.full(len(rows), math.inf)
    for i, r in enumerate(rows):
        b = rhs.get(r, 0.0)
        k = kinds[r]
        if k == "E":
            lo[i] = up[i] = b
        elif k == "L":
            up[i] = b
        elif k == "G":
            lo[i] = b
        if r in rng_:
            if k == "G":
                up[i] = b + abs(rng_[r])
            elif k == "L":
                lo[i] = b - abs(rng_[r])
    xb = [bounds.get(n, (0.0, math.inf)) for n in names]
    return c, A, lo, up, xb


def _linprog(c, A, lo, up, xb):
    ub_rows, ub_rhs, eq_rows, eq_rhs = [], [], [], []
    for i in range(A.shape[0]):
        if lo[i] == up[i]:
            eq_rows.append(A[i])
            eq_rhs.append(lo[i])
            continue
        if math.isfinite(up[i]):
            ub_rows.append(A[i])
            ub_rhs.append(up[i])
        if math.isfinite(lo[i]):
            ub_rows.append(-A[i])
            ub_rhs.append(-lo[i])
    res = linprog(
        c,
        A_ub=np.array(ub_rows) if ub_rows else None,
        b_ub=np.array(ub_rhs) if ub_rhs else None,
        A_eq=np.array(eq_rows) if eq_rows else None,
        b_eq=np.array(eq_rhs) if eq_rhs else None,
        bounds=[(None if not math.isfinite(a) else a, None if not math.isfinite(b) else b) for a, b in xb],
        method="highs",
    )
    return res


def test_mps_round_trip_random(tmp_path):
    rng = np.random.default_rng(7)
    for k in range(40):
        lp = random_lp(rng)
        path = tmp_path / f"r{k}.mps"
        write_mps(lp, path)
        ours = solve(lp)
        res = _linprog(*read_mps(path))
        if ours.status == OPTIMAL:
            assert res.status == 0
            assert res.fun == pytest.approx(ours.objective_value, rel=1e-9, abs=1e-9)
        else:
            assert res.status == 2


def test_mps_round_trip_dispatch(tmp_path):
    case, scenarios = fixture_scenarios("five_bus_congested")
    for sc in scenarios[:2]:
        lp, idx = build_lp(case, sc)
        write_mps(lp, tmp_path / "d.mps", name=sc.name)
        res = _linprog(*read_mps(tmp_path / "d.mps"))
        ours = solve(lp)
        # twelve-character numeric fields carry about seven significant digits
        assert res.fun == pytest.approx(ours.objective_value, rel=1e-6)
