"""Grid and data-center data model, case-file I/O and invariant checks.

Case files are UTF-8 JSON tagged ``"version": "gridflex_case_v1"``. Units
follow power-system convention: MW, MWh, $/MWh, $/h, lbs/MWh, radians,
hours. Line susceptance is per-unit on ``s_base_mva``.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Any, Iterable

import jsonschema

CASE_VERSION = "gridflex_case_v1"


class CaseError(Exception):
    pass


class CaseParseError(CaseError):
    pass


class CaseSchemaError(CaseError):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class CaseValidationError(CaseError):
    def __init__(self, violations: list["Violation"]):
        self.violations = violations
        lines = "\n".join(f"  {v}" for v in violations[:20])
        super().__init__(f"{len(violations)} case invariant violation(s):\n{lines}")


@dataclass(frozen=True)
class Bus:
    id: int
    base_load: tuple[float, ...]
    angle_min: float = -math.pi / 4
    angle_max: float = math.pi / 4
    is_slack: bool = False


@dataclass(frozen=True)
class CostSegment:
    cap_mw: float
    cost_per_mwh: float


@dataclass(frozen=True)
class Generator:
    id: str
    bus: int
    segments: tuple[CostSegment, ...] = ()
    no_load_cost: float = 0.0
    ramp_up: float = math.inf
    ramp_down: float = math.inf
    dispatchable: bool = True
    fixed_output: tuple[float, ...] = ()
    ghg_rate: float | None = 0.0  # lbs CO2-eq / MWh
    tox_rate: float | None = 0.0  # lbs toluene-eq / MWh
    # lbs / MWh per pollutant; when present, combined with an HTP table
    pollutant_rates: tuple[tuple[str, float], ...] = ()

    @property
    def capacity(self) -> float:
        return sum(s.cap_mw for s in self.segments)


@dataclass(frozen=True)
class Line:
    id: str
    from_bus: int
    to_bus: int
    susceptance: float  # per unit; F = -b * S_base * (theta_from - theta_to)
    flow_min: float
    flow_max: float


@dataclass(frozen=True)
class DataCenter:
    id: str
    bus: int
    peak_mw: float
    lc_profile: tuple[float, ...] = ()
    aux_profile: tuple[float, ...] = ()
    be_energy_mwh: float = 0.0

    def headroom(self, t: int) -> float:
        """Upper limit on best-effort power at interval ``t``."""
        return self.peak_mw - self.lc_profile[t] - self.aux_profile[t]


@dataclass(frozen=True)
class DispatchCase:
    name: str
    s_base: float
    dt_hours: float
    horizon: int
    buses: tuple[Bus, ...]
    generators: tuple[Generator, ...]
    lines: tuple[Line, ...]
    data_centers: tuple[DataCenter, ...] = ()

    @property
    def slack_bus(self) -> int:
        for b in self.buses:
            if b.is_slack:
                return b.id
        return self.buses[0].id

    def data_center(self, dc_id: str) -> DataCenter:
        for dc in self.data_centers:
            if dc.id == dc_id:
                return dc
        raise KeyError(dc_id)

    def with_data_centers(self, dcs: Iterable[DataCenter]) -> "DispatchCase":
        return replace(self, data_centers=tuple(dcs))


# ---------------------------------------------------------------------------
# validation

@dataclass(frozen=True)
class Violation:
    code: str
    entity: str
    message: str

    def __str__(self) -> str:
        return f"[{self.code}] {self.entity}: {self.message}"


# one code per invariant
VIOLATION_CODES = (
    "CASE_HORIZON", "CASE_DT", "CASE_SBASE", "CASE_NO_BUSES", "BUS_IDS", "SLACK_COUNT",
    "BUS_ANGLE_RANGE", "SLACK_ANGLE", "BUS_LOAD_LENGTH", "BUS_LOAD_NEGATIVE",
    "SEG_CAP_NEGATIVE", "SEG_NONCONVEX", "GEN_BUS_UNKNOWN", "GEN_RAMP_NEGATIVE",
    "GEN_NO_LOAD_NEGATIVE", "GEN_EMISSION_NEGATIVE", "GEN_NO_SEGMENTS", "GEN_FIXED_OUTPUT",
    "LINE_FLOW_RANGE", "LINE_SELF_LOOP", "LINE_BUS_UNKNOWN",
    "DC_PEAK", "DC_BUS_UNKNOWN", "DC_DUPLICATE_BUS", "DC_PROFILE_LENGTH", "DC_PROFILE_NEGATIVE",
    "DC_PEAK_EXCEEDED", "DC_ENERGY_RANGE", "DUPLICATE_ID", "NETWORK_DISCONNECTED",
)


def _bad(x: float) -> bool:
    return isinstance(x, float) and math.isnan(x)


def validate_case(case: DispatchCase) -> list[Violation]:
    """Return every invariant violation; an empty list means the case is valid."""
    out: list[Violation] = []

    def add(code: str, entity: str, msg: str) -> None:
        out.append(Violation(code, entity, msg))

    T = case.horizon
    if not (isinstance(T, int) and T >= 1):
        add("CASE_HORIZON", "case", f"horizon must be >= 1, got {T}")
        T = None
    if not case.dt_hours > 0:
        add("CASE_DT", "case", f"dt_hours must be > 0, got {case.dt_hours}")
    if not case.s_base > 0:
        add("CASE_SBASE", "case", f"s_base must be > 0, got {case.s_base}")
    if not case.buses:
        add("CASE_NO_BUSES", "case", "case has no buses")

    ids = [b.id for b in case.buses]
    if ids != list(range(1, len(ids) + 1)):
        add("BUS_IDS", "buses", "bus ids must be 1..|B| in order")
    bus_ids = set(ids)
    slacks = [b.id for b in case.buses if b.is_slack]
    if len(slacks) != 1:
        add("SLACK_COUNT", "buses", f"exactly one slack bus required, found {len(slacks)}")

    for b in case.buses:
        ent = f"bus {b.id}"
        if not (b.angle_min <= 0.0 <= b.angle_max):
            add("BUS_ANGLE_RANGE", ent, f"need angle_min <= 0 <= angle_max, got [{b.angle_min}, {b.angle_max}]")
        if b.is_slack and (b.angle_min != 0.0 or b.angle_max != 0.0):
            add("SLACK_ANGLE", ent, "slack bus angle bounds must both be 0")
        if T is not None and len(b.base_load) != T:
            add("BUS_LOAD_LENGTH", ent, f"base_load has {len(b.base_load)} entries, horizon is {T}")
        if any(v < 0 or _bad(v) for v in b.base_load):
            add("BUS_LOAD_NEGATIVE", ent, "base_load entries must be >= 0")

    for g in case.generators:
        ent = f"generator {g.id}"
        if g.bus not in bus_ids:
            add("GEN_BUS_UNKNOWN", ent, f"bus {g.bus} does not exist")
        if any(s.cap_mw < 0 for s in g.segments):
            add("SEG_CAP_NEGATIVE", ent, "segment cap_mw must be >= 0")
        costs = [s.cost_per_mwh for s in g.segments]
        if any(b < a for a, b in zip(costs, costs[1:])):
            add("SEG_NONCONVEX", ent, f"segment costs must be nondecreasing, got {costs}")
        if g.ramp_up < 0 or g.ramp_down < 0:
            add("GEN_RAMP_NEGATIVE", ent, "ramp limits must be >= 0")
        if g.no_load_cost < 0:
            add("GEN_NO_LOAD_NEGATIVE", ent, "no_load_cost must be >= 0")
        rates = [r for r in (g.ghg_rate, g.tox_rate) if r is not None] + [r for _, r in g.pollutant_rates]
        if any(r < 0 for r in rates):
            add("GEN_EMISSION_NEGATIVE", ent, "emission rates must be >= 0")
        if g.dispatchable and not g.segments:
            add("GEN_NO_SEGMENTS", ent, "dispatchable generator needs at least one cost segment")
        if not g.dispatchable and (
            (T is not None and len(g.fixed_output) != T) or any(v < 0 for v in g.fixed_output)
        ):
            add("GEN_FIXED_OUTPUT", ent, "fixed_output must have one entry >= 0 per interval")

    for ln in case.lines:
        ent = f"line {ln.id}"
        if not (ln.flow_min <= 0.0 <= ln.flow_max):
            add("LINE_FLOW_RANGE", ent, f"need flow_min <= 0 <= flow_max, got [{ln.flow_min}, {ln.flow_max}]")
        if ln.from_bus == ln.to_bus:
            add("LINE_SELF_LOOP", ent, "from_bus equals to_bus")
        if ln.from_bus not in bus_ids or ln.to_bus not in bus_ids:
            add("LINE_BUS_UNKNOWN", ent, f"endpoint bus missing ({ln.from_bus}, {ln.to_bus})")

    dc_buses = Counter(dc.bus for dc in case.data_centers)
    for bus, n in sorted(dc_buses.items()):
        if n > 1:
            add("DC_DUPLICATE_BUS", f"bus {bus}", f"{n} data centers on one bus")
    for dc in case.data_centers:
        ent = f"data center {dc.id}"
        if dc.bus not in bus_ids:
            add("DC_BUS_UNKNOWN", ent, f"bus {dc.bus} does not exist")
        if not dc.peak_mw > 0:
            add("DC_PEAK", ent, f"peak_mw must be > 0, got {dc.peak_mw}")
        lengths_ok = T is not None and len(dc.lc_profile) == T and len(dc.aux_profile) == T
        if not lengths_ok:
            add("DC_PROFILE_LENGTH", ent, f"lc/aux profiles must have {T} entries")
        if any(v < 0 for v in dc.lc_profile + dc.aux_profile):
            add("DC_PROFILE_NEGATIVE", ent, "lc/aux entries must be >= 0")
        if lengths_ok:
            over = [t for t in range(T) if dc.lc_profile[t] + dc.aux_profile[t] > dc.peak_mw]
            if over:
                add(
                    "DC_PEAK_EXCEEDED",
                    ent,
                    f"lc + aux exceeds peak_mw at t={over}; peak limit infeasible even with zero best-effort load",
                )
            room = sum(max(dc.headroom(t), 0.0) for t in range(T)) * case.dt_hours
            if dc.be_energy_mwh < 0 or dc.be_energy_mwh > room * (1 + 1e-12) + 1e-9:
                add(
                    "DC_ENERGY_RANGE",
                    ent,
                    f"be_energy_mwh {dc.be_energy_mwh} outside [0, {room}] (daily headroom)",
                )
        elif dc.be_energy_mwh < 0:
            add("DC_ENERGY_RANGE", ent, "be_energy_mwh must be >= 0")

    for kind, items in (("generator", case.generators), ("line", case.lines), ("data center", case.data_centers)):
        for ident, n in Counter(x.id for x in items).items():
            if n > 1:
                add("DUPLICATE_ID", f"{kind} {ident}", f"id used {n} times")

    if len(bus_ids) > 1 and not _connected(case, bus_ids):
        add("NETWORK_DISCONNECTED", "lines", "network is not connected")
    return out


def _connected(case: DispatchCase, bus_ids: set[int]) -> bool:
    adj: dict[int, list[int]] = {b: [] for b in bus_ids}
    for ln in case.lines:
        if ln.from_bus in adj and ln.to_bus in adj:
            adj[ln.from_bus].append(ln.to_bus)
            adj[ln.to_bus].append(ln.from_bus)
    start = next(iter(sorted(bus_ids)))
    seen = {start}
    stack = [start]
    while stack:
        for nb in adj[stack.pop()]:
            if nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return seen == bus_ids


# ---------------------------------------------------------------------------
# JSON I/O

_NUM = {"type": "number"}
_NUMS = {"type": "array", "items": _NUM}
_ID = {"type": ["string", "integer"]}

CASE_SCHEMA: dict[str, Any] = {
    "type": "object",
    "additionalProperties": False,
    "required": ["version", "name", "s_base_mva", "dt_hours", "horizon", "buses", "generators", "lines", "data_centers"],
    "properties": {
        "version": {"const": CASE_VERSION},
        "name": {"type": "string"},
        "s_base_mva": _NUM,
        "dt_hours": _NUM,
        "horizon": {"type": "integer"},
        "buses": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["id", "base_load"],
                "properties": {
                    "id": {"type": "integer"},
                    "angle_min": _NUM,
                    "angle_max": _NUM,
                    "is_slack": {"type": "boolean"},
                    "base_load": _NUMS,
                },
            },
        },
        "generators": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["id", "bus"],
                "properties": {
                    "id": _ID,
                    "bus": {"type": "integer"},
                    "no_load_cost": _NUM,
                    "segments": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "additionalProperties": False,
                            "required": ["cap_mw", "cost_per_mwh"],
                            "properties": {"cap_mw": _NUM, "cost_per_mwh": _NUM},
                        },
                    },
                    "ramp_up": {"type": ["number", "null"]},
                    "ramp_down": {"type": ["number", "null"]},
                    "dispatchable": {"type": "boolean"},
                    "fixed_output": _NUMS,
                    "ghg_rate": {"type": ["number", "null"]},
                    "tox_rate": {"type": ["number", "null"]},
                    "pollutant_rates": {"type": "object", "additionalProperties": _NUM},
                },
            },
        },
        "lines": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["id", "from_bus", "to_bus", "susceptance", "flow_min", "flow_max"],
                "properties": {
                    "id": _ID,
                    "from_bus": {"type": "integer"},
                    "to_bus": {"type": "integer"},
                    "susceptance": _NUM,
                    "flow_min": _NUM,
                    "flow_max": _NUM,
                },
            },
        },
        "data_centers": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["id", "bus", "peak_mw"],
                "properties": {
                    "id": _ID,
                    "bus": {"type": "integer"},
                    "peak_mw": _NUM,
                    "lc_profile": _NUMS,
                    "aux_profile": _NUMS,
                    "be_energy_mwh": _NUM,
                },
            },
        },
    },
}

_VALIDATOR = jsonschema.Draft202012Validator(CASE_SCHEMA)


def _json_path(parts: Iterable[Any]) -> str:
    out = ""
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out


def _floats(xs) -> tuple[float, ...]:
    return tuple(float(v) for v in xs)


def _ramp(v) -> float:
    return math.inf if v is None else float(v)


def case_from_dict(doc: Any) -> DispatchCase:
    """Build a case from a parsed JSON document (schema-checked)."""
    errors = sorted(_VALIDATOR.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise CaseSchemaError(_json_path(e.absolute_path), e.message)

    raw_ids = [b["id"] for b in doc["buses"]]
    dupes = sorted(i for i, n in Counter(raw_ids).items() if n > 1)
    if dupes:
        k = raw_ids.index(dupes[0], raw_ids.index(dupes[0]) + 1)
        raise CaseSchemaError(f"buses[{k}].id", f"duplicate bus id {dupes[0]}")
    # renumber sparse ids to 1..|B|, preserving file order
    remap = {old: new for new, old in enumerate(raw_ids, start=1)}

    def bus_ref(where: str, old: int) -> int:
        if old not in remap:
            raise CaseSchemaError(where, f"unknown bus id {old}")
        return remap[old]

    any_slack = any(b.get("is_slack", False) for b in doc["buses"])
    buses = []
    for k, b in enumerate(doc["buses"]):
        slack = b.get("is_slack", False) or (not any_slack and k == 0)
        default = 0.0 if slack else math.pi / 4
        buses.append(
            Bus(
                id=remap[b["id"]],
                base_load=_floats(b["base_load"]),
                angle_min=float(b.get("angle_min", -default)),
                angle_max=float(b.get("angle_max", default)),
                is_slack=slack,
            )
        )

    gens = []
    for k, g in enumerate(doc["generators"]):
        gens.append(
            Generator(
                id=str(g["id"]),
                bus=bus_ref(f"generators[{k}].bus", g["bus"]),
                segments=tuple(CostSegment(float(s["cap_mw"]), float(s["cost_per_mwh"])) for s in g.get("segments", [])),
                no_load_cost=float(g.get("no_load_cost", 0.0)),
                ramp_up=_ramp(g.get("ramp_up")),
                ramp_down=_ramp(g.get("ramp_down")),
                dispatchable=g.get("dispatchable", True),
                fixed_output=_floats(g.get("fixed_output", [])),
                ghg_rate=None if g.get("ghg_rate", 0.0) is None else float(g.get("ghg_rate", 0.0)),
                tox_rate=None if g.get("tox_rate", 0.0) is None else float(g.get("tox_rate", 0.0)),
                pollutant_rates=tuple(sorted((p, float(r)) for p, r in g.get("pollutant_rates", {}).items())),
            )
        )

    lines = [
        Line(
            id=str(ln["id"]),
            from_bus=bus_ref(f"lines[{k}].from_bus", ln["from_bus"]),
            to_bus=bus_ref(f"lines[{k}].to_bus", ln["to_bus"]),
            susceptance=float(ln["susceptance"]),
            flow_min=float(ln["flow_min"]),
            flow_max=float(ln["flow_max"]),
        )
        for k, ln in enumerate(doc["lines"])
    ]
    dcs = [
        DataCenter(
            id=str(d["id"]),
            bus=bus_ref(f"data_centers[{k}].bus", d["bus"]),
            peak_mw=float(d["peak_mw"]),
            lc_profile=_floats(d.get("lc_profile", [])),
            aux_profile=_floats(d.get("aux_profile", [])),
            be_energy_mwh=float(d.get("be_energy_mwh", 0.0)),
        )
        for k, d in enumerate(doc["data_centers"])
    ]
    return DispatchCase(
        name=doc["name"],
        s_base=float(doc["s_base_mva"]),
        dt_hours=float(doc["dt_hours"]),
        horizon=int(doc["horizon"]),
        buses=tuple(buses),
        generators=tuple(gens),
        lines=tuple(lines),
        data_centers=tuple(dcs),
    )


def case_to_dict(case: DispatchCase) -> dict[str, Any]:
    def ramp(v: float):
        return None if math.isinf(v) else v

    return {
        "version": CASE_VERSION,
        "name": case.name,
        "s_base_mva": case.s_base,
        "dt_hours": case.dt_hours,
        "horizon": case.horizon,
        "buses": [
            {
                "id": b.id,
                "angle_min": b.angle_min,
                "angle_max": b.angle_max,
                "is_slack": b.is_slack,
                "base_load": list(b.base_load),
            }
            for b in case.buses
        ],
        "generators": [
            {
                "id": g.id,
                "bus": g.bus,
                "no_load_cost": g.no_load_cost,
                "segments": [asdict(s) for s in g.segments],
                "ramp_up": ramp(g.ramp_up),
                "ramp_down": ramp(g.ramp_down),
                "dispatchable": g.dispatchable,
                "fixed_output": list(g.fixed_output),
                "ghg_rate": g.ghg_rate,
                "tox_rate": g.tox_rate,
                **({"pollutant_rates": dict(g.pollutant_rates)} if g.pollutant_rates else {}),
            }
            for g in case.generators
        ],
        "lines": [asdict(ln) for ln in case.lines],
        "data_centers": [
            {
                "id": d.id,
                "bus": d.bus,
                "peak_mw": d.peak_mw,
                "lc_profile": list(d.lc_profile),
                "aux_profile": list(d.aux_profile),
                "be_energy_mwh": d.be_energy_mwh,
            }
            for d in case.data_centers
        ],
    }


def load_case(path: str | Path, *, check: bool = True) -> DispatchCase:
    """Read a case file.

    With ``check`` (the default) the loaded case must also pass
    :func:`validate_case`; pass ``check=False`` to load placeholder data
    centers whose profiles are filled in later by a load split.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise CaseError(f"case file not found: {path}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CaseParseError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    case = case_from_dict(doc)
    if check:
        violations = validate_case(case)
        if violations:
            raise CaseValidationError(violations)
    return case


def dumps_case(case: DispatchCase) -> str:
    return json.dumps(case_to_dict(case), indent=1, allow_nan=False) + "\n"


def save_case(case: DispatchCase, path: str | Path) -> None:
    # json writes floats with repr(), which round-trips exactly
    Path(path).write_text(dumps_case(case), encoding="utf-8")
