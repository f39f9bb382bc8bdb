"""Congestion, line stress and emission totals, and the comparative report."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .case import DispatchCase, Generator, Line
from .dispatch import DispatchSolution
from .scenario import Cluster


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class HtpTable:
    """Toluene-equivalent human toxicity factors, lbs toluene per lbs pollutant."""

    factors: Mapping[str, float]

    def __post_init__(self):
        bad = {p: f for p, f in self.factors.items() if not f > 0}
        if bad:
            raise MetricsError(f"HTP factors must be > 0: {bad}")

    def __getitem__(self, pollutant: str) -> float:
        return self.factors[pollutant]


def load_htp(path: str | Path) -> HtpTable:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    factors = doc.get("factors", doc) if isinstance(doc, dict) else None
    if not isinstance(factors, dict):
        raise MetricsError(f"{path}: expected an object mapping pollutant -> factor")
    return HtpTable({str(k): float(v) for k, v in factors.items()})


def congestion_metric(lmp: np.ndarray, buses: Iterable[int] | None = None) -> float:
    """Time-average of the population variance of LMPs across ``buses``.

    ``lmp`` is indexed ``[bus_id - 1, t]``; ``None`` means every bus.
    """
    lmp = np.asarray(lmp, dtype=float)
    rows = np.arange(lmp.shape[0]) if buses is None else np.asarray([b - 1 for b in buses], dtype=int)
    if rows.size == 0:
        raise MetricsError("congestion metric needs a non-empty bus subset")
    return float(np.mean(np.var(lmp[rows], axis=0)))


@dataclass(frozen=True)
class StressResult:
    total: int
    per_interval: np.ndarray  # (T,)
    flags: np.ndarray  # (L, T) bool


def stressed_lines(flows: np.ndarray, lines: Sequence[Line], threshold: float = 0.9, tol: float = 1e-6) -> StressResult:
    """Count (line, interval) pairs loaded to ``threshold`` of a rating or beyond.

    Both directions count. ``tol`` (MW) absorbs solver round-off at the
    boundary; a zero rating on one side is treated as no rating there.
    """
    if not 0.0 < threshold <= 1.0:
        raise MetricsError(f"threshold {threshold} outside (0, 1]")
    flows = np.asarray(flows, dtype=float)
    if flows.ndim == 1:
        flows = flows[None, :]
    if flows.shape[0] != len(lines):
        raise MetricsError(f"flows have {flows.shape[0]} rows for {len(lines)} lines")
    fmax = np.array([ln.flow_max for ln in lines], dtype=float)[:, None]
    fmin = np.array([ln.flow_min for ln in lines], dtype=float)[:, None]
    up = (fmax > 0) & (flows >= threshold * fmax - tol)
    down = (fmin < 0) & (flows <= threshold * fmin + tol)
    flags = up | down
    per_t = flags.sum(axis=0)
    return StressResult(int(flags.sum()), per_t, flags)


def _energy(sol: DispatchSolution) -> dict[str, np.ndarray]:
    return {gid: sol.generation[k] * sol.dt_hours for k, gid in enumerate(sol.generator_ids)}


def ghg_total(sol: DispatchSolution, generators: Iterable[Generator]) -> float:
    """Total CO2-equivalent emissions in lbs."""
    rates = {g.id: g.ghg_rate for g in generators}
    total = 0.0
    for gid, mwh in sorted(_energy(sol).items()):
        rate = rates.get(gid)
        if rate is None:
            if np.any(mwh != 0):
                raise MetricsError(f"generator {gid} has output but no GHG rate")
            continue
        total += float(np.sum(mwh)) * rate
    return total


def toxic_rate(g: Generator, htp: HtpTable | None) -> float | None:
    """Toluene-equivalent lbs/MWh, from per-pollutant rates when the unit has them."""
    if not g.pollutant_rates:
        return g.tox_rate
    if htp is None:
        raise MetricsError(f"generator {g.id} carries pollutant rates but no HTP table was given")
    rate = 0.0
    for pollutant, r in g.pollutant_rates:
        if pollutant not in htp.factors:
            raise MetricsError(f"no HTP factor for pollutant {pollutant!r} (generator {g.id})")
        rate += r * htp[pollutant]
    return rate


def tox_total(sol: DispatchSolution, generators: Iterable[Generator], htp: HtpTable | None = None) -> float:
    """Total toxic emissions in lbs toluene-equivalent."""
    gens = {g.id: g for g in generators}
    total = 0.0
    for gid, mwh in sorted(_energy(sol).items()):
        rate = toxic_rate(gens[gid], htp) if gid in gens else None
        if rate is None:
            if np.any(mwh != 0):
                raise MetricsError(f"generator {gid} has output but no toxic rate")
            continue
        total += float(np.sum(mwh)) * rate
    return total


# ---------------------------------------------------------------------------
# report

METRICS = ("objective_cost", "gamma", "stressed_line_total", "ghg_lbs", "tox_lbs_toluene_eq")


@dataclass
class ScenarioMetrics:
    name: str
    flexible_dc_ids: list[str]
    objective_cost: float
    gamma: float
    stressed_line_total: int
    stressed_per_interval: list[int]
    ghg_lbs: float
    tox_lbs_toluene_eq: float
    degenerate: bool = False
    deltas: dict[str, float] = field(default_factory=dict)


@dataclass
class ClusterRow:
    id: int
    bus_range: tuple[int, int]
    dc_ids: list[str]
    total_capacity_mw: float
    gamma: float


@dataclass
class StudyReport:
    case_name: str
    baseline: str
    stress_threshold: float
    scenarios: list[ScenarioMetrics]
    clusters: list[ClusterRow] = field(default_factory=list)

    def scenario(self, name: str) -> ScenarioMetrics:
        for s in self.scenarios:
            if s.name == name:
                return s
        raise KeyError(name)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scenario", "metric", "value", "delta_vs_baseline"])
        for s in self.scenarios:
            for m in METRICS:
                w.writerow([s.name, m, repr(getattr(s, m)), repr(s.deltas[m])])
        return buf.getvalue()


def build_report(
    case: DispatchCase,
    solutions: Mapping[str, DispatchSolution] | Sequence[tuple[object, DispatchSolution]],
    baseline: str,
    htp: HtpTable | None = None,
    clusters: Sequence[Cluster] = (),
    threshold: float = 0.9,
) -> StudyReport:
    """Assemble per-scenario metrics with deltas against ``baseline``.

    Cluster congestion metrics are evaluated on the baseline dispatch.
    """
    if not isinstance(solutions, Mapping):
        solutions = {sol.scenario: sol for _, sol in solutions}
    if baseline not in solutions:
        raise MetricsError(f"baseline scenario {baseline!r} not among {list(solutions)}")
    sigs = {sol.signature for sol in solutions.values()}
    if len(sigs) > 1:
        raise MetricsError("scenario solutions come from different cases or load splits")

    rows = []
    for name, sol in solutions.items():
        stress = stressed_lines(sol.flows, case.lines, threshold)
        rows.append(
            ScenarioMetrics(
                name=name,
                flexible_dc_ids=list(sol.flexible_dc_ids),
                objective_cost=sol.objective_cost,
                gamma=congestion_metric(sol.lmp),
                stressed_line_total=stress.total,
                stressed_per_interval=[int(v) for v in stress.per_interval],
                ghg_lbs=ghg_total(sol, case.generators),
                tox_lbs_toluene_eq=tox_total(sol, case.generators, htp),
                degenerate=sol.degenerate,
            )
        )
    base = next(r for r in rows if r.name == baseline)
    for r in rows:
        r.deltas = {m: getattr(r, m) - getattr(base, m) for m in METRICS}

    base_lmp = solutions[baseline].lmp
    cluster_rows = [
        ClusterRow(
            id=c.id,
            bus_range=tuple(c.bus_range),
            dc_ids=list(c.dc_ids),
            total_capacity_mw=c.total_capacity_mw,
            gamma=congestion_metric(base_lmp, range(c.bus_range[0], c.bus_range[1] + 1)),
        )
        for c in clusters
    ]
    return StudyReport(case.name, baseline, threshold, rows, cluster_rows)
