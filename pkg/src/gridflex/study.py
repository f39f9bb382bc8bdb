"""End-to-end study: load, split, cluster, solve every scenario, report.

Output layout (intervals are numbered from 1 in every file)::

    out/
      case.json                 case as solved (after any load split)
      report.json, report.csv   StudyReport
      costs.csv ghg.csv tox.csv stressed.csv
      lmp_compare.csv dc_load_compare.csv system_profile.csv
      scenarios/<name>/{generation,segments,flows,angles,be_schedule,lmp}.csv
      scenarios/<name>/summary.json [model.mps]
"""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .case import CaseError, CaseValidationError, DispatchCase, load_case, save_case, validate_case
from .dispatch import DispatchSolution, build_lp, solve_dispatch
from .lp import SolverOptions, write_mps
from .metrics import HtpTable, StudyReport, build_report, load_htp
from .scenario import (
    Cluster,
    LoadSplitPolicy,
    Scenario,
    apply_load_split,
    cluster_by_capacity,
    five_case_scenarios,
    scenario_from_spec,
    uniform_be_profile,
)

logger = logging.getLogger(__name__)


class StudyError(Exception):
    """A study failed; ``scenario`` names the offending scenario when known."""

    def __init__(self, message: str, scenario: str | None = None, kind: str = "study"):
        self.scenario = scenario
        self.kind = kind
        super().__init__(message)

    def to_dict(self) -> dict[str, Any]:
        return {"error": self.kind, "scenario": self.scenario, "message": str(self)}


@dataclass
class StudyConfig:
    case_path: Path | None = None
    output_dir: Path | None = None
    scenarios: list[dict] | None = None  # None -> baseline + whole system + one per cluster
    load_split: LoadSplitPolicy | None = None
    cluster_k: int = 3
    baseline: str = "no_fs"
    compare: str = "fs_all"
    htp_table_path: Path | None = None
    solver: SolverOptions = field(default_factory=SolverOptions)
    parallel_scenarios: bool = False
    stress_threshold: float = 0.9
    lmp_bus: int | None = None
    dc_id: str | None = None
    export_lp: bool = False

    @classmethod
    def from_dict(cls, doc: dict, base_dir: Path | None = None) -> "StudyConfig":
        base_dir = base_dir or Path(".")
        doc = _lift_scenario_spec(doc)
        known = {
            "case_path", "output_dir", "scenarios", "load_split", "clusters", "baseline", "compare",
            "htp_table_path", "solver", "parallel_scenarios", "stress_threshold", "lmp_bus", "dc_id", "export_lp",
        }
        extra = set(doc) - known
        if extra:
            raise StudyError(f"unknown config keys {sorted(extra)}", kind="config")

        def path(key):
            v = doc.get(key)
            return None if v is None else (base_dir / v)

        split = doc.get("load_split")
        try:
            policy = LoadSplitPolicy(**split) if split is not None else None
            solver = SolverOptions(**doc.get("solver", {}))
        except TypeError as exc:
            raise StudyError(f"bad config: {exc}", kind="config") from None
        return cls(
            case_path=path("case_path"),
            output_dir=path("output_dir"),
            scenarios=doc.get("scenarios"),
            load_split=policy,
            cluster_k=int(doc.get("clusters", {}).get("k", 3)),
            baseline=doc.get("baseline", "no_fs"),
            compare=doc.get("compare", "fs_all"),
            htp_table_path=path("htp_table_path"),
            solver=solver,
            parallel_scenarios=bool(doc.get("parallel_scenarios", False)),
            stress_threshold=float(doc.get("stress_threshold", 0.9)),
            lmp_bus=doc.get("lmp_bus"),
            dc_id=doc.get("dc_id"),
            export_lp=bool(doc.get("export_lp", False)),
        )

    @classmethod
    def load(cls, path: str | Path) -> "StudyConfig":
        path = Path(path)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise StudyError(f"config file not found: {path}", kind="config") from None
        except json.JSONDecodeError as exc:
            raise StudyError(f"{path}: {exc}", kind="config") from None
        return cls.from_dict(doc, path.parent)


def _lift_scenario_spec(doc: dict) -> dict:
    """Fold ``scenario_spec`` (one scenario-file object or a list of them) into flat keys."""
    if "scenario_spec" not in doc:
        return doc
    doc = dict(doc)
    specs = doc.pop("scenario_spec")
    specs = [specs] if isinstance(specs, dict) else list(specs)
    for key in ("load_split", "clusters"):
        found = [s[key] for s in specs if key in s]
        if found and key not in doc:
            doc[key] = found[0]
    chosen = [{"name": s["name"], "flexible": s["flexible"]} for s in specs if "flexible" in s]
    if chosen and "scenarios" not in doc:
        doc["scenarios"] = chosen
    return doc


@dataclass
class StudyResult:
    case: DispatchCase
    clusters: list[Cluster]
    scenarios: list[Scenario]
    solutions: dict[str, DispatchSolution]
    report: StudyReport


def prepare_case(config: StudyConfig) -> DispatchCase:
    if config.case_path is None:
        raise StudyError("no case file given", kind="config")
    try:
        case = load_case(config.case_path, check=config.load_split is None)
        if config.load_split is not None:
            case = apply_load_split(case, config.load_split)
            violations = validate_case(case)
            if violations:
                raise CaseValidationError(violations)
    except CaseError as exc:
        raise StudyError(str(exc), kind="case") from exc
    except ValueError as exc:
        raise StudyError(str(exc), kind="config") from exc
    return case


def build_scenarios(case: DispatchCase, config: StudyConfig) -> tuple[list[Cluster], list[Scenario]]:
    n_dc = len(case.data_centers)
    k = min(config.cluster_k, n_dc)
    if k < config.cluster_k:
        logger.warning("case has %d data centers; using %d clusters instead of %d", n_dc, k, config.cluster_k)
    try:
        clusters = cluster_by_capacity(case, k) if k >= 1 else []
        if config.scenarios is None:
            scenarios = five_case_scenarios(case, clusters)
        else:
            scenarios = [scenario_from_spec(case, spec, clusters) for spec in config.scenarios]
    except ValueError as exc:
        raise StudyError(str(exc), kind="scenario") from exc
    names = [s.name for s in scenarios]
    if len(set(names)) != len(names):
        raise StudyError(f"duplicate scenario names {names}", kind="config")
    if config.baseline not in names:
        raise StudyError(f"baseline {config.baseline!r} is not among the scenarios {names}", kind="config")
    return clusters, scenarios


def _solve_one(args):
    case, scenario, options = args
    try:
        return solve_dispatch(case, scenario, options)
    except Exception as exc:  # surfaced with the scenario name by the caller
        return exc


def run_study(config: StudyConfig) -> StudyResult:
    """Solve all scenarios and write the report and figure data to ``output_dir``."""
    case = prepare_case(config)
    clusters, scenarios = build_scenarios(case, config)
    htp: HtpTable | None = None
    if config.htp_table_path is not None:
        try:
            htp = load_htp(config.htp_table_path)
        except (OSError, ValueError) as exc:
            raise StudyError(f"cannot read HTP table {config.htp_table_path}: {exc}", kind="config") from None

    jobs = [(case, sc, config.solver) for sc in scenarios]
    if config.parallel_scenarios and len(jobs) > 1:
        with ProcessPoolExecutor() as pool:
            outcomes = list(pool.map(_solve_one, jobs))
    else:
        outcomes = [_solve_one(j) for j in jobs]
    solutions: dict[str, DispatchSolution] = {}
    for sc, out in zip(scenarios, outcomes):
        if isinstance(out, Exception):
            raise StudyError(str(out), scenario=sc.name, kind="solver") from out
        solutions[sc.name] = out

    try:
        report = build_report(case, solutions, config.baseline, htp, clusters, config.stress_threshold)
    except ValueError as exc:
        raise StudyError(str(exc), kind="report") from exc
    result = StudyResult(case, clusters, scenarios, solutions, report)
    if config.output_dir is not None:
        write_outputs(result, config)
    return result


# ---------------------------------------------------------------------------
# files

def _write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def write_solution(case: DispatchCase, sol: DispatchSolution, folder: Path) -> None:
    folder.mkdir(parents=True, exist_ok=True)
    T = case.horizon
    _write_csv(
        folder / "generation.csv",
        ["generator", "t", "mw"],
        ((gid, t + 1, sol.generation[k, t]) for k, gid in enumerate(sol.generator_ids) for t in range(T)),
    )
    seg_rows = []
    for g in case.generators:
        if g.id not in sol.segment_generation:
            continue
        for s, seg in enumerate(g.segments):
            for t in range(T):
                seg_rows.append(
                    (g.id, s + 1, t + 1, sol.segment_generation[g.id][s, t], seg.cost_per_mwh,
                     sol.segment_status[g.id][s][t])
                )
    _write_csv(folder / "segments.csv", ["generator", "segment", "t", "mw", "cost_per_mwh", "status"], seg_rows)
    _write_csv(
        folder / "flows.csv",
        ["line", "t", "mw", "flow_min", "flow_max"],
        ((ln.id, t + 1, sol.flows[k, t], ln.flow_min, ln.flow_max) for k, ln in enumerate(case.lines) for t in range(T)),
    )
    _write_csv(
        folder / "angles.csv",
        ["bus", "t", "rad"],
        ((b, t + 1, sol.angles[k, t]) for k, b in enumerate(sol.bus_ids) for t in range(T)),
    )
    _write_csv(
        folder / "be_schedule.csv",
        ["data_center", "t", "mw", "flexible"],
        (
            (dc, t + 1, prof[t], int(dc in sol.flexible_dc_ids))
            for dc, prof in sol.be_schedule.items()
            for t in range(T)
        ),
    )
    _write_csv(
        folder / "lmp.csv",
        ["bus", "t", "lmp"],
        ((b, t + 1, sol.lmp[k, t]) for k, b in enumerate(sol.bus_ids) for t in range(T)),
    )
    summary = {
        "scenario": sol.scenario,
        "status": "optimal",
        "objective_cost": sol.objective_cost,
        "lp_objective": sol.lp_objective,
        "no_load_offset": sol.no_load_offset,
        "iterations": sol.iterations,
        "degenerate": sol.degenerate,
        "flexible_dc_ids": sol.flexible_dc_ids,
    }
    (folder / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")


def _largest_dc(case: DispatchCase):
    return max(case.data_centers, key=lambda d: (d.peak_mw, d.id)) if case.data_centers else None


def write_outputs(result: StudyResult, config: StudyConfig) -> None:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    case, sols, report = result.case, result.solutions, result.report
    T = case.horizon
    save_case(case, out / "case.json")
    (out / "report.json").write_text(report.to_json(), encoding="utf-8")
    (out / "report.csv").write_text(report.to_csv(), encoding="utf-8")

    for sc in result.scenarios:
        folder = out / "scenarios" / sc.name
        write_solution(case, sols[sc.name], folder)
        if config.export_lp:
            lp, _ = build_lp(case, sc)
            write_mps(lp, folder / "model.mps", name=sc.name)

    names = [s.name for s in report.scenarios]
    _write_csv(out / "costs.csv", ["scenario", "objective_cost"], ((s.name, s.objective_cost) for s in report.scenarios))
    _write_csv(out / "ghg.csv", ["scenario", "ghg_lbs"], ((s.name, s.ghg_lbs) for s in report.scenarios))
    _write_csv(
        out / "tox.csv", ["scenario", "tox_lbs_toluene_eq"], ((s.name, s.tox_lbs_toluene_eq) for s in report.scenarios)
    )
    stressed_rows = [[t + 1, *(s.stressed_per_interval[t] for s in report.scenarios)] for t in range(T)]
    stressed_rows.append(["total", *(s.stressed_line_total for s in report.scenarios)])
    _write_csv(out / "stressed.csv", ["t", *names], stressed_rows)

    base = sols[config.baseline]
    flex = sols.get(config.compare)
    big = _largest_dc(case)
    dc = case.data_center(config.dc_id) if config.dc_id else big
    bus = config.lmp_bus or (dc.bus if dc else case.slack_bus)
    if flex is not None:
        _write_csv(
            out / "lmp_compare.csv",
            ["t", "bus", f"lmp_{config.baseline}", f"lmp_{config.compare}"],
            ((t + 1, bus, base.lmp[bus - 1, t], flex.lmp[bus - 1, t]) for t in range(T)),
        )
        if dc is not None:
            _write_csv(
                out / "dc_load_compare.csv",
                ["t", "data_center", "lc_mw", "aux_mw", f"be_{config.baseline}", f"be_{config.compare}",
                 f"total_{config.baseline}", f"total_{config.compare}"],
                (
                    (
                        t + 1, dc.id, dc.lc_profile[t], dc.aux_profile[t],
                        base.be_schedule[dc.id][t], flex.be_schedule[dc.id][t],
                        dc.lc_profile[t] + dc.aux_profile[t] + base.be_schedule[dc.id][t],
                        dc.lc_profile[t] + dc.aux_profile[t] + flex.be_schedule[dc.id][t],
                    )
                    for t in range(T)
                ),
            )
    non_dc = [sum(b.base_load[t] for b in case.buses) for t in range(T)]
    renewable = [sum(g.fixed_output[t] for g in case.generators if not g.dispatchable) for t in range(T)]
    _write_csv(
        out / "system_profile.csv",
        ["t", "non_dc_load_mw", "non_dispatchable_generation_mw"],
        ((t + 1, float(non_dc[t]), float(renewable[t])) for t in range(T)),
    )


# ---------------------------------------------------------------------------
# diagnostics

def _read_csv(path: Path) -> list[dict[str, str]]:
    with path.open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def explain_lmp(output_dir: str | Path, bus: int, t: int, scenario: str | None = None, tol: float = 1e-6) -> dict:
    """Describe how the price at ``bus`` in interval ``t`` (1-based) was formed."""
    out = Path(output_dir)
    report_path = out / "report.json"
    if not report_path.exists():
        raise StudyError(f"no study results in {out} (run `study run` first)", kind="explain")
    report = json.loads(report_path.read_text(encoding="utf-8"))
    scenario = scenario or report["baseline"]
    names = [s["name"] for s in report["scenarios"]]
    if scenario not in names:
        raise StudyError(f"unknown scenario {scenario!r}; have {names}", kind="explain")
    case = load_case(out / "case.json", check=False)
    if not any(b.id == bus for b in case.buses):
        raise StudyError(f"unknown bus {bus}", kind="explain")
    if not 1 <= t <= case.horizon:
        raise StudyError(f"interval {t} outside 1..{case.horizon}", kind="explain")

    folder = out / "scenarios" / scenario
    lmps = {int(r["bus"]): float(r["lmp"]) for r in _read_csv(folder / "lmp.csv") if int(r["t"]) == t}
    price = lmps[bus]
    lo, hi = min(lmps.values()), max(lmps.values())

    flows = [r for r in _read_csv(folder / "flows.csv") if int(r["t"]) == t]
    lines = {ln.id: ln for ln in case.lines}
    binding = []
    incident = []
    for r in flows:
        ln = lines[r["line"]]
        f = float(r["mw"])
        at_limit = (ln.flow_max > 0 and f >= ln.flow_max - tol) or (ln.flow_min < 0 and f <= ln.flow_min + tol)
        entry = {"line": ln.id, "from_bus": ln.from_bus, "to_bus": ln.to_bus, "mw": f,
                 "flow_min": ln.flow_min, "flow_max": ln.flow_max, "binding": at_limit}
        if at_limit:
            binding.append(entry)
        if bus in (ln.from_bus, ln.to_bus):
            incident.append(entry)

    marginal = [
        {"generator": r["generator"], "segment": int(r["segment"]), "mw": float(r["mw"]),
         "cost_per_mwh": float(r["cost_per_mwh"]), "status": r["status"]}
        for r in _read_csv(folder / "segments.csv")
        if int(r["t"]) == t and r["status"] == "basic"
    ]
    info = {
        "scenario": scenario,
        "bus": bus,
        "t": t,
        "lmp": price,
        "lmp_min": lo,
        "lmp_max": hi,
        "uniform_prices": hi - lo <= tol,
        "incident_lines": incident,
        "incident_binding": [e["line"] for e in incident if e["binding"]],
        "binding_lines": [e["line"] for e in binding],
        "marginal_segments": marginal,
    }
    dc = next((d for d in case.data_centers if d.bus == bus), None)
    if dc is not None:
        be = {r["data_center"]: r for r in _read_csv(folder / "be_schedule.csv") if int(r["t"]) == t}
        level = uniform_be_profile(dc, case.horizon, case.dt_hours)[t - 1]
        mw = float(be[dc.id]["mw"])
        info["data_center"] = {
            "id": dc.id,
            "flexible": be[dc.id]["flexible"] == "1",
            "be_mw": mw,
            "uniform_be_mw": level,
            "above_uniform": mw > level + tol,
        }
    return info
