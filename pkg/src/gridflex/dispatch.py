"""Multi-period DC-OPF economic dispatch with schedulable best-effort load.

Decision variables per interval ``t``:

    segment output  P^seg[g,s,t] in [0, cap_gs]     cost C_gs * dt
    generator total P[g,t]       = sum_s P^seg[g,s,t]
    line flow       F[l,t]       in [F_min, F_max]
                                 = -b_l * S_base * (theta_from - theta_to)
    bus angle       theta[i,t]   in [theta_min, theta_max], slack fixed at 0
    best effort     BE[d,t]      in [0, peak - LC - aux]   (flexible DCs only)

Ramp rows ``-R_down <= P[g,t] - P[g,t-1] <= R_up`` apply from the second
interval on; there is no initial-condition row. Each bus balance row reads
``gen + inflow - outflow - BE = load + LC + aux + fixed BE - must-run``
and each flexible data center has ``sum_t BE[d,t] * dt = E_d``.

The no-load cost of every dispatchable unit is a constant (no commitment
decisions) and is added after the solve. LMPs are balance-row duals
divided by ``dt``, so they are in $/MWh whatever the interval length.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .case import DispatchCase
from .lp import INFEASIBLE, OPTIMAL, LinearProgram, LpSolution, SolverOptions, solve
from .scenario import Scenario


class DispatchError(Exception):
    pass


class DispatchInfeasibleError(DispatchError):
    pass


class DispatchUnboundedError(DispatchError):
    pass


@dataclass
class VariableIndex:
    seg: dict[tuple[str, int, int], int] = field(default_factory=dict)  # (gen, segment, t)
    gen: dict[tuple[str, int], int] = field(default_factory=dict)
    flow: dict[tuple[str, int], int] = field(default_factory=dict)
    angle: dict[tuple[int, int], int] = field(default_factory=dict)
    be: dict[tuple[str, int], int] = field(default_factory=dict)
    balance_row: dict[tuple[int, int], int] = field(default_factory=dict)
    energy_row: dict[str, int] = field(default_factory=dict)
    no_load_offset: float = 0.0

    def all_vars(self) -> list[int]:
        return [*self.seg.values(), *self.gen.values(), *self.flow.values(), *self.angle.values(), *self.be.values()]


@dataclass
class DispatchSolution:
    scenario: str
    signature: tuple
    dt_hours: float
    flexible_dc_ids: list[str]
    generator_ids: list[str]
    line_ids: list[str]
    bus_ids: list[int]
    generation: np.ndarray  # (G, T) MW, must-run units included
    segment_generation: dict[str, np.ndarray]  # gen id -> (S, T) MW
    segment_status: dict[str, list[list[str]]]  # gen id -> [s][t] in {basic, lower, upper}
    flows: np.ndarray  # (L, T) MW
    angles: np.ndarray  # (B, T) rad
    be_schedule: dict[str, np.ndarray]  # dc id -> (T,) MW, fixed and flexible
    lmp: np.ndarray  # (B, T) $/MWh
    objective_cost: float
    lp_objective: float
    no_load_offset: float
    degenerate: bool
    iterations: int
    lp_solution: LpSolution | None = field(default=None, repr=False)


def case_signature(case: DispatchCase) -> tuple:
    return (
        case.name,
        case.horizon,
        case.dt_hours,
        tuple((dc.id, dc.be_energy_mwh) for dc in case.data_centers),
    )


def _check_scenario(case: DispatchCase, scenario: Scenario) -> None:
    ids = {dc.id for dc in case.data_centers}
    flex = set(scenario.flexible_dc_ids)
    if not flex <= ids:
        raise DispatchError(f"scenario {scenario.name!r}: unknown data centers {sorted(flex - ids)}")
    if set(scenario.fixed_be_profiles) != ids - flex:
        raise DispatchError(
            f"scenario {scenario.name!r}: fixed profiles must cover exactly the non-flexible data centers"
        )
    for dc_id, prof in scenario.fixed_be_profiles.items():
        if len(prof) != case.horizon:
            raise DispatchError(f"scenario {scenario.name!r}: fixed profile of {dc_id} has wrong length")


def build_lp(case: DispatchCase, scenario: Scenario) -> tuple[LinearProgram, VariableIndex]:
    _check_scenario(case, scenario)
    T, dt, S = case.horizon, case.dt_hours, case.s_base
    slack = case.slack_bus
    lp = LinearProgram()
    idx = VariableIndex()
    disp = [g for g in case.generators if g.dispatchable]
    flex = [dc for dc in case.data_centers if dc.id in scenario.flexible_dc_ids]

    for t in range(T):
        for g in disp:
            for s, seg in enumerate(g.segments):
                idx.seg[g.id, s, t] = lp.add_var(seg.cost_per_mwh * dt, 0.0, seg.cap_mw, f"Pseg[{g.id},{s},{t}]")
            idx.gen[g.id, t] = lp.add_var(0.0, -np.inf, np.inf, f"P[{g.id},{t}]")
        for ln in case.lines:
            idx.flow[ln.id, t] = lp.add_var(0.0, ln.flow_min, ln.flow_max, f"F[{ln.id},{t}]")
        for b in case.buses:
            lo, up = (0.0, 0.0) if b.id == slack else (b.angle_min, b.angle_max)
            idx.angle[b.id, t] = lp.add_var(0.0, lo, up, f"theta[{b.id},{t}]")
        for dc in flex:
            idx.be[dc.id, t] = lp.add_var(0.0, 0.0, max(dc.headroom(t), 0.0), f"BE[{dc.id},{t}]")

    for t in range(T):
        for g in disp:
            coeffs = [(idx.gen[g.id, t], 1.0)] + [(idx.seg[g.id, s, t], -1.0) for s in range(len(g.segments))]
            lp.add_row(coeffs, 0.0, 0.0, f"segsum[{g.id},{t}]")
    for t in range(1, T):
        for g in disp:
            now, prev = idx.gen[g.id, t], idx.gen[g.id, t - 1]
            lp.add_row([(now, 1.0), (prev, -1.0)], -np.inf, g.ramp_up, f"rampup[{g.id},{t}]")
            lp.add_row([(prev, 1.0), (now, -1.0)], -np.inf, g.ramp_down, f"rampdn[{g.id},{t}]")
    for t in range(T):
        for ln in case.lines:
            k = ln.susceptance * S
            lp.add_row(
                [(idx.flow[ln.id, t], 1.0), (idx.angle[ln.from_bus, t], k), (idx.angle[ln.to_bus, t], -k)],
                0.0,
                0.0,
                f"dcflow[{ln.id},{t}]",
            )

    dc_at = {dc.bus: dc for dc in case.data_centers}
    disp_at: dict[int, list] = {}
    must_run = np.zeros((len(case.buses) + 1, T))
    for g in case.generators:
        if g.dispatchable:
            disp_at.setdefault(g.bus, []).append(g)
        else:
            must_run[g.bus] += np.asarray(g.fixed_output, dtype=float)
    inflow: dict[int, list] = {}
    outflow: dict[int, list] = {}
    for ln in case.lines:
        inflow.setdefault(ln.to_bus, []).append(ln)
        outflow.setdefault(ln.from_bus, []).append(ln)

    for t in range(T):
        for b in case.buses:
            coeffs = [(idx.gen[g.id, t], 1.0) for g in disp_at.get(b.id, [])]
            coeffs += [(idx.flow[ln.id, t], 1.0) for ln in inflow.get(b.id, [])]
            coeffs += [(idx.flow[ln.id, t], -1.0) for ln in outflow.get(b.id, [])]
            rhs = b.base_load[t] - must_run[b.id, t]
            dc = dc_at.get(b.id)
            if dc is not None:
                rhs += dc.lc_profile[t] + dc.aux_profile[t]
                if dc.id in scenario.flexible_dc_ids:
                    coeffs.append((idx.be[dc.id, t], -1.0))
                else:
                    rhs += scenario.fixed_be_profiles[dc.id][t]
            idx.balance_row[b.id, t] = lp.add_row(coeffs, rhs, rhs, f"balance[{b.id},{t}]")

    for dc in flex:
        idx.energy_row[dc.id] = lp.add_row(
            [(idx.be[dc.id, t], dt) for t in range(T)], dc.be_energy_mwh, dc.be_energy_mwh, f"energy[{dc.id}]"
        )

    idx.no_load_offset = sum(g.no_load_cost for g in disp) * dt * T
    return lp, idx


_FAMILIES = {
    "segsum": "segment sum",
    "rampup": "ramp-up limit",
    "rampdn": "ramp-down limit",
    "dcflow": "DC power flow",
    "balance": "nodal power balance",
    "energy": "best-effort energy requirement",
}


def diagnose_infeasibility(case: DispatchCase, scenario: Scenario, lp_sol: LpSolution | None = None) -> str:
    """Name the first constraint family that cannot be met, when detectable."""
    T, dt = case.horizon, case.dt_hours
    for dc in case.data_centers:
        if dc.id in scenario.flexible_dc_ids:
            room = sum(max(dc.headroom(t), 0.0) for t in range(T)) * dt
            if dc.be_energy_mwh > room + 1e-9:
                return (
                    f"best-effort energy requirement of data center {dc.id} ({dc.be_energy_mwh} MWh) "
                    f"exceeds its peak-power headroom ({room} MWh)"
                )
    disp = [g for g in case.generators if g.dispatchable]
    cap = sum(g.capacity for g in disp)
    net, room = [], []
    for t in range(T):
        must = sum(g.fixed_output[t] for g in case.generators if not g.dispatchable)
        demand = sum(b.base_load[t] for b in case.buses)
        flex_room = 0.0
        for dc in case.data_centers:
            demand += dc.lc_profile[t] + dc.aux_profile[t]
            if dc.id not in scenario.flexible_dc_ids:
                demand += scenario.fixed_be_profiles[dc.id][t]
            else:
                flex_room += max(dc.headroom(t), 0.0)
        if demand > cap + must + 1e-9:
            return f"nodal power balance: demand {demand:.6g} MW exceeds available generation {cap + must:.6g} MW at t={t}"
        net.append(demand - must)
        room.append(flex_room)
    # system-wide ramp capability against the smallest possible swing in net demand
    up_cap = sum(g.ramp_up for g in disp)
    down_cap = sum(g.ramp_down for g in disp)
    for t in range(1, T):
        rise = net[t] - net[t - 1] - room[t - 1]
        fall = net[t - 1] - net[t] - room[t]
        if rise > up_cap + 1e-9:
            return f"ramp-up limit: net demand rises by at least {rise:.6g} MW at t={t}, total ramp-up is {up_cap:.6g} MW"
        if fall > down_cap + 1e-9:
            return f"ramp-down limit: net demand falls by at least {fall:.6g} MW at t={t}, total ramp-down is {down_cap:.6g} MW"
    if lp_sol is not None and lp_sol.diagnostics.get("violated_row_names"):
        name = lp_sol.diagnostics["violated_row_names"][0]
        family = _FAMILIES.get(name.split("[")[0], "unknown")
        return f"{family} constraint cannot be satisfied (first violated row {name})"
    return "infeasible (constraint family not identified)"


def solve_dispatch(case: DispatchCase, scenario: Scenario, options: SolverOptions | None = None) -> DispatchSolution:
    lp, idx = build_lp(case, scenario)
    sol = solve(lp, options)
    if sol.status == INFEASIBLE:
        raise DispatchInfeasibleError(f"scenario {scenario.name!r}: " + diagnose_infeasibility(case, scenario, sol))
    if sol.status != OPTIMAL:
        raise DispatchUnboundedError(f"scenario {scenario.name!r}: LP status {sol.status}")
    return _unpack(case, scenario, lp, idx, sol)


def _unpack(case, scenario, lp, idx, sol) -> DispatchSolution:
    T, dt = case.horizon, case.dt_hours
    x = sol.x
    gens = case.generators
    generation = np.zeros((len(gens), T))
    seg_gen: dict[str, np.ndarray] = {}
    seg_status: dict[str, list[list[str]]] = {}
    for k, g in enumerate(gens):
        if not g.dispatchable:
            generation[k] = g.fixed_output
            continue
        generation[k] = [x[idx.gen[g.id, t]] for t in range(T)]
        arr = np.zeros((len(g.segments), T))
        status = []
        for s, seg in enumerate(g.segments):
            row = []
            for t in range(T):
                j = idx.seg[g.id, s, t]
                arr[s, t] = x[j]
                if j in sol.basic_vars:
                    row.append("basic")
                elif x[j] >= seg.cap_mw - 1e-9 and seg.cap_mw > 0:
                    row.append("upper")
                else:
                    row.append("lower")
            status.append(row)
        seg_gen[g.id] = arr
        seg_status[g.id] = status

    flows = np.array([[x[idx.flow[ln.id, t]] for t in range(T)] for ln in case.lines]).reshape(len(case.lines), T)
    angles = np.array([[x[idx.angle[b.id, t]] for t in range(T)] for b in case.buses])
    lmp = np.array([[sol.duals[idx.balance_row[b.id, t]] / dt for t in range(T)] for b in case.buses])
    be = {}
    for dc in case.data_centers:
        if dc.id in scenario.flexible_dc_ids:
            be[dc.id] = np.array([x[idx.be[dc.id, t]] for t in range(T)])
        else:
            be[dc.id] = np.asarray(scenario.fixed_be_profiles[dc.id], dtype=float)
    return DispatchSolution(
        scenario=scenario.name,
        signature=case_signature(case),
        dt_hours=dt,
        flexible_dc_ids=sorted(scenario.flexible_dc_ids),
        generator_ids=[g.id for g in gens],
        line_ids=[ln.id for ln in case.lines],
        bus_ids=[b.id for b in case.buses],
        generation=generation,
        segment_generation=seg_gen,
        segment_status=seg_status,
        flows=flows,
        angles=angles,
        be_schedule=be,
        lmp=lmp,
        objective_cost=sol.objective_value + idx.no_load_offset,
        lp_objective=sol.objective_value,
        no_load_offset=idx.no_load_offset,
        degenerate=sol.degenerate,
        iterations=sol.iteration_count,
        lp_solution=sol,
    )


def be_shift_profile(sol_flexible: DispatchSolution, sol_fixed: DispatchSolution, dc_id: str) -> np.ndarray:
    """Per-interval MW change in best-effort load, flexible minus fixed."""
    if sol_flexible.signature != sol_fixed.signature:
        raise DispatchError("solutions come from different cases or load splits")
    return sol_flexible.be_schedule[dc_id] - sol_fixed.be_schedule[dc_id]
