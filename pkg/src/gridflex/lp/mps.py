"""Fixed-format MPS export, for cross-checking with external solvers."""

from __future__ import annotations

import math
import re
from pathlib import Path

from .model import LinearProgram


def _name(prefix: str, i: int, name: str) -> str:
    # fixed MPS fields are 8 chars wide, no spaces
    clean = re.sub(r"\s+", "_", name)
    return clean if 0 < len(clean) <= 8 else f"{prefix}{i}"


def _num(v: float) -> str:
    s = f"{v:.12g}"
    return s if len(s) <= 12 else f"{v:.6e}"


def write_mps(lp: LinearProgram, path: str | Path, name: str = "GRIDFLEX") -> None:
    """Write ``lp`` in fixed-format MPS.

    Row names longer than eight characters are replaced by ``R<index>`` and
    column names by ``C<index>``.
    """
    rnames = [_name("R", i, r.name) for i, r in enumerate(lp.rows)]
    cnames = [_name("C", j, lp.var_names[j] if j < len(lp.var_names) else "") for j in range(lp.num_vars)]
    if len(set(rnames)) != len(rnames):
        rnames = [f"R{i}" for i in range(lp.num_rows)]
    if len(set(cnames)) != len(cnames):
        cnames = [f"C{j}" for j in range(lp.num_vars)]

    def field(a: str, b: str = "", c: str = "", d: str = "") -> str:
        line = f" {a:<2} {b:<8}  {c:<8}  {d:>12}"
        return line.rstrip()

    lines = [f"NAME          {name[:8]}", "ROWS", field("N", "COST")]
    for rn, row in zip(rnames, lp.rows):
        if row.lower == row.upper:
            kind = "E"
        elif math.isfinite(row.lower) and not math.isfinite(row.upper):
            kind = "G"
        elif math.isfinite(row.upper) and not math.isfinite(row.lower):
            kind = "L"
        elif math.isfinite(row.lower):
            kind = "G"  # ranged; RANGES section supplies the upper side
        else:
            kind = "N"
        lines.append(field(kind, rn))

    cols: list[list[tuple[str, float]]] = [[] for _ in range(lp.num_vars)]
    for rn, row in zip(rnames, lp.rows):
        for j, a in row.coefficients:
            cols[j].append((rn, a))
    lines.append("COLUMNS")
    for j, cn in enumerate(cnames):
        entries = []
        if lp.objective[j] != 0.0:
            entries.append(("COST", lp.objective[j]))
        entries.extend(e for e in cols[j] if e[1] != 0.0)
        if not entries:
            entries.append(("COST", 0.0))
        for rn, a in entries:
            lines.append(f"    {cn:<8}  {rn:<8}  {_num(a):>12}")

    lines.append("RHS")
    ranges = []
    for rn, row in zip(rnames, lp.rows):
        lo, up = row.lower, row.upper
        if lo == up or (math.isfinite(lo) and not math.isfinite(up)):
            rhs = lo
        elif math.isfinite(up) and not math.isfinite(lo):
            rhs = up
        elif math.isfinite(lo):
            rhs = lo
            ranges.append((rn, up - lo))
        else:
            continue
        if rhs != 0.0:
            lines.append(f"    {'RHS':<8}  {rn:<8}  {_num(rhs):>12}")
    if ranges:
        lines.append("RANGES")
        for rn, r in ranges:
            lines.append(f"    {'RNG':<8}  {rn:<8}  {_num(r):>12}")

    lines.append("BOUNDS")
    for cn, (lo, up) in zip(cnames, lp.var_bounds):
        if lo == up:
            lines.append(f" FX {'BND':<8}  {cn:<8}  {_num(lo):>12}")
            continue
        if not math.isfinite(lo) and not math.isfinite(up):
            lines.append(f" FR {'BND':<8}  {cn:<8}")
            continue
        if not math.isfinite(lo):
            lines.append(f" MI {'BND':<8}  {cn:<8}")
        elif lo != 0.0:
            lines.append(f" LO {'BND':<8}  {cn:<8}  {_num(lo):>12}")
        if math.isfinite(up):
            lines.append(f" UP {'BND':<8}  {cn:<8}  {_num(up):>12}")
    lines.append("ENDATA")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
