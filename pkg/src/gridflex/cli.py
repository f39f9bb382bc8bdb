"""``study`` command line: run, explain-lmp, validate."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .case import CaseError, load_case, validate_case
from .study import StudyConfig, StudyError, explain_lmp, run_study

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _error(payload: dict) -> int:
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    return EXIT_FAIL


def cmd_run(args) -> int:
    try:
        config = StudyConfig.load(args.config) if args.config else StudyConfig()
    except StudyError as exc:
        return _error(exc.to_dict())
    config.case_path = Path(args.case)
    config.output_dir = Path(args.out)
    if args.parallel:
        config.parallel_scenarios = True
    if args.export_lp:
        config.export_lp = True
    try:
        result = run_study(config)
    except StudyError as exc:
        payload = exc.to_dict()
        if exc.kind == "case" or "not found" in str(exc):
            payload["path"] = str(config.case_path)
        return _error(payload)
    for s in result.report.scenarios:
        print(
            f"{s.name:<16} cost={s.objective_cost:.2f} gamma={s.gamma:.6g} "
            f"stressed={s.stressed_line_total} ghg_lbs={s.ghg_lbs:.6g} tox_lbs={s.tox_lbs_toluene_eq:.6g}"
        )
    return EXIT_OK


def cmd_explain(args) -> int:
    try:
        info = explain_lmp(args.out, args.bus, args.t, args.scenario)
    except StudyError as exc:
        return _error(exc.to_dict())
    print(json.dumps(info, indent=2))
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        case = load_case(args.case, check=False)
    except CaseError as exc:
        return _error({"error": "case", "path": str(args.case), "message": str(exc)})
    violations = validate_case(case)
    for v in violations:
        print(v)
    if violations:
        return EXIT_FAIL
    print(f"{case.name}: OK ({len(case.buses)} buses, {len(case.lines)} lines, "
          f"{len(case.generators)} generators, {len(case.data_centers)} data centers)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="study", description="Flexible data-center dispatch studies")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="solve every scenario and write the report")
    run.add_argument("--case", required=True)
    run.add_argument("--config")
    run.add_argument("--out", required=True)
    run.add_argument("--parallel", action="store_true")
    run.add_argument("--export-lp", action="store_true", help="also write each scenario LP as fixed-format MPS")
    run.set_defaults(func=cmd_run)

    ex = sub.add_parser("explain-lmp", help="explain one LMP from a finished run")
    ex.add_argument("--out", required=True)
    ex.add_argument("--bus", type=int, required=True)
    ex.add_argument("--t", type=int, required=True, help="interval, numbered from 1")
    ex.add_argument("--scenario")
    ex.set_defaults(func=cmd_explain)

    val = sub.add_parser("validate", help="check a case file")
    val.add_argument("--case", required=True)
    val.set_defaults(func=cmd_validate)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
