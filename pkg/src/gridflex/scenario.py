"""Data-center load splits, uniform best-effort baselines, clusters, scenarios.

Load split: a fixed share of each data center's draw is servers, and each
data center draws one latency-critical fraction of its server power,
uniformly on ``[mean - halfwidth, mean + halfwidth]`` and constant over the
day. Draws come from numpy's PCG64 generator seeded with ``rng_seed``, one
``uniform`` per data center in id order, so a split is reproducible
anywhere numpy's PCG64 stream is.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import Iterable, Mapping

import numpy as np

from .case import DataCenter, DispatchCase


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class LoadSplitPolicy:
    server_fraction: float = 0.60
    lc_fraction_mean: float = 0.30
    lc_fraction_halfwidth: float = 0.10
    rng_seed: int = 0
    # average draw as a fraction of peak; 1.0 leaves no peak headroom for shifting
    utilization: float = 1.0

    def check(self) -> None:
        if not 0.0 <= self.server_fraction <= 1.0:
            raise ScenarioError(f"server_fraction {self.server_fraction} outside [0, 1]")
        lo = self.lc_fraction_mean - self.lc_fraction_halfwidth
        hi = self.lc_fraction_mean + self.lc_fraction_halfwidth
        if self.lc_fraction_halfwidth < 0 or lo < 0.0 or hi > 1.0:
            raise ScenarioError(f"lc fraction range [{lo}, {hi}] must lie in [0, 1]")
        if not 0.0 < self.utilization <= 1.0:
            raise ScenarioError(f"utilization {self.utilization} outside (0, 1]")


def draw_lc_fractions(case: DispatchCase, policy: LoadSplitPolicy) -> dict[str, float]:
    policy.check()
    rng = np.random.Generator(np.random.PCG64(policy.rng_seed))
    lo = policy.lc_fraction_mean - policy.lc_fraction_halfwidth
    hi = policy.lc_fraction_mean + policy.lc_fraction_halfwidth
    out = {}
    for dc in sorted(case.data_centers, key=_id_key):
        out[dc.id] = float(rng.uniform(lo, hi))
    return out


def _id_key(dc: DataCenter):
    # numeric ids sort numerically, everything else lexically after them
    return (0, int(dc.id), "") if dc.id.isdigit() else (1, 0, dc.id)


def apply_load_split(case: DispatchCase, policy: LoadSplitPolicy) -> DispatchCase:
    """Fill each data center's LC/aux profiles and daily best-effort energy."""
    fractions = draw_lc_fractions(case, policy)
    T, dt = case.horizon, case.dt_hours
    s = policy.server_fraction
    dcs = []
    for dc in case.data_centers:
        lc = fractions[dc.id]
        base = policy.utilization * dc.peak_mw
        dcs.append(
            replace(
                dc,
                lc_profile=(lc * s * base,) * T,
                aux_profile=((1.0 - s) * base,) * T,
                be_energy_mwh=(1.0 - lc) * s * base * T * dt,
            )
        )
    return case.with_data_centers(dcs)


def uniform_be_profile(dc: DataCenter, horizon: int, dt_hours: float) -> tuple[float, ...]:
    level = dc.be_energy_mwh / (horizon * dt_hours)
    return (level,) * horizon


# ---------------------------------------------------------------------------
# clusters

@dataclass(frozen=True)
class Cluster:
    id: int
    bus_range: tuple[int, int]  # inclusive
    dc_ids: tuple[str, ...]
    total_capacity_mw: float


def cluster_by_capacity(case: DispatchCase, k: int) -> list[Cluster]:
    """Split the bus-id axis into ``k`` contiguous ranges of balanced DC capacity.

    Every contiguous partition of the data centers (in bus order) is
    considered and the one minimizing the largest deviation from the mean
    cluster capacity wins; ties go to the lexicographically first cut list.
    Range boundaries sit just after the last data-center bus of each
    cluster, with the final range running to the last bus.
    """
    dcs = sorted(case.data_centers, key=lambda d: (d.bus, d.id))
    n = len(dcs)
    if k < 1:
        raise ScenarioError("cluster count must be >= 1")
    if k > n:
        raise ScenarioError(f"cluster count {k} exceeds data-center count {n}")
    caps = [d.peak_mw for d in dcs]
    prefix = np.concatenate([[0.0], np.cumsum(caps)])
    target = prefix[-1] / k

    best_cuts, best_dev = None, math.inf
    for cuts in combinations(range(1, n), k - 1):
        edges = (0, *cuts, n)
        dev = max(abs(prefix[b] - prefix[a] - target) for a, b in zip(edges, edges[1:]))
        if dev < best_dev - 1e-12:
            best_cuts, best_dev = cuts, dev
    edges = (0, *best_cuts, n)

    n_bus = len(case.buses)
    clusters = []
    start = 1
    for c, (a, b) in enumerate(zip(edges, edges[1:]), start=1):
        members = dcs[a:b]
        end = n_bus if b == n else members[-1].bus
        clusters.append(
            Cluster(
                id=c,
                bus_range=(start, end),
                dc_ids=tuple(d.id for d in members),
                total_capacity_mw=float(sum(d.peak_mw for d in members)),
            )
        )
        start = end + 1
    return clusters


# ---------------------------------------------------------------------------
# scenarios

@dataclass(frozen=True)
class Scenario:
    name: str
    flexible_dc_ids: frozenset[str]
    fixed_be_profiles: Mapping[str, tuple[float, ...]] = field(default_factory=dict)


def make_scenario(case: DispatchCase, flexible_dc_ids: Iterable[str], name: str) -> Scenario:
    flexible = frozenset(flexible_dc_ids)
    known = {dc.id for dc in case.data_centers}
    unknown = sorted(flexible - known)
    if unknown:
        raise ScenarioError(f"unknown data-center id(s) {unknown} in scenario {name!r}")
    fixed = {
        dc.id: uniform_be_profile(dc, case.horizon, case.dt_hours)
        for dc in case.data_centers
        if dc.id not in flexible
    }
    return Scenario(name=name, flexible_dc_ids=flexible, fixed_be_profiles=fixed)


def scenario_from_spec(case: DispatchCase, spec: Mapping, clusters: list[Cluster] | None = None) -> Scenario:
    """Resolve a scenario config entry.

    ``flexible`` is ``"all"``, ``"none"``, ``{"cluster": k}`` (1-based) or a
    list of data-center ids.
    """
    name = spec.get("name")
    if not name:
        raise ScenarioError("scenario needs a name")
    flex = spec.get("flexible", "none")
    if flex == "all":
        ids: Iterable[str] = [dc.id for dc in case.data_centers]
    elif flex == "none":
        ids = []
    elif isinstance(flex, Mapping) and "cluster" in flex:
        if not clusters:
            raise ScenarioError(f"scenario {name!r} refers to a cluster but no clusters were built")
        k = int(flex["cluster"])
        if not 1 <= k <= len(clusters):
            raise ScenarioError(f"scenario {name!r}: cluster {k} not in 1..{len(clusters)}")
        ids = clusters[k - 1].dc_ids
    elif isinstance(flex, list):
        ids = [str(i) for i in flex]
    else:
        raise ScenarioError(f"scenario {name!r}: unrecognised 'flexible' value {flex!r}")
    return make_scenario(case, ids, name)


def five_case_scenarios(case: DispatchCase, clusters: list[Cluster]) -> list[Scenario]:
    """Fixed baseline, whole-system flexibility, then one scenario per cluster."""
    out = [
        make_scenario(case, [], "no_fs"),
        make_scenario(case, [dc.id for dc in case.data_centers], "fs_all"),
    ]
    out += [make_scenario(case, c.dc_ids, f"fs_cluster{c.id}") for c in clusters]
    return out
