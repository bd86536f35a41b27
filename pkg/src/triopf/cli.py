"""Command-line surface.

Subcommands: validate a case file, run one scenario, sweep the attack
budget, or dump a stage model as text for external cross-checking.
Exit codes: 0 success, 1 infeasibility or validation failure, 2 usage.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .caseio import CaseFormatError, CaseSchemaError, load_case
from .lpcore import dump_lp
from .netmodel import CaseValidationError
from .orchestrator import ScenarioConfig, run_scenario
from .results import write_results
from .stage1 import build_dispatch_lp, solve_base_opf
from .stage2 import assess_worst_attack, build_attack_lp
from .stage3 import build_mitigation_milp

_MODES = {"full": "full_horizon", "rolling": "rolling"}


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="triopf",
        description="Tri-level robust OPF for radial feeders: "
                    "dispatch, worst-case DG attack, storage mitigation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse and validate a case file")
    p.add_argument("case", help="path to the case file")

    p = sub.add_parser("run", help="run one scenario and write results")
    p.add_argument("case")
    p.add_argument("--k", type=float, default=3.0, help="per-hour attack budget (default 3)")
    p.add_argument("--mode", choices=sorted(_MODES), default="full",
                   help="full: one solve over all hours; rolling: hour by hour")
    p.add_argument("--binary-attack", action="store_true",
                   help="restrict attack fractions to 0/1")
    p.add_argument("--hard-limits", action="store_true",
                   help="forbid any violation in the mitigation stage")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("sweep", help="run scenarios for k = 0..k-max")
    p.add_argument("case")
    p.add_argument("--k-max", type=int, default=3)
    p.add_argument("--mode", choices=sorted(_MODES), default="full")
    p.add_argument("--out", required=True)

    p = sub.add_parser("dump-lp", help="write a stage model in plain text")
    p.add_argument("case")
    p.add_argument("--stage", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--k", type=float, default=3.0)
    p.add_argument("--binary-attack", action="store_true")
    p.add_argument("--hard-limits", action="store_true")
    p.add_argument("--out", required=True, help="output file ('-' for stdout)")
    return parser


def _load(path):
    try:
        return load_case(path)
    except FileNotFoundError:
        print("error: case file not found: %s" % path, file=sys.stderr)
    except CaseFormatError as err:
        print("error: malformed case file\n  %s" % err, file=sys.stderr)
    except CaseSchemaError as err:
        print("error: case schema violation\n  %s" % err, file=sys.stderr)
    except CaseValidationError as err:
        print("error: case validation failed\n%s" % err, file=sys.stderr)
    return None


def _cmd_validate(args) -> int:
    case = _load(args.case)
    if case is None:
        return 1
    print("%s: valid (%d nodes, %d lines, %d generators, %d storage units, %d hours)"
          % (args.case, case.n_nodes, case.n_lines, len(case.generators),
             len(case.storage), case.horizon_hours))
    return 0


def _cmd_run(args) -> int:
    case = _load(args.case)
    if case is None:
        return 1
    config = ScenarioConfig(
        k=args.k,
        mode=_MODES[args.mode],
        binary_attack=args.binary_attack,
        hard_limits=args.hard_limits,
    )
    result = run_scenario(case, config)
    write_results(result, args.out)
    if not result.completed:
        print("%s infeasible: %s" % (result.failed_stage, result.error), file=sys.stderr)
        print("partial results written to %s" % args.out, file=sys.stderr)
        return 1
    m = result.mitigation
    print("completed; results in %s" % args.out)
    print("worst mitigated margins: line %.6g pu, node %.6g pu"
          % (m.violations.worst_line_margin, m.violations.worst_node_margin))
    return 0


def _cmd_sweep(args) -> int:
    case = _load(args.case)
    if case is None:
        return 1
    if args.k_max < 0:
        print("error: --k-max must be non-negative", file=sys.stderr)
        return 2
    status = 0
    for k in range(args.k_max + 1):
        config = ScenarioConfig(k=float(k), mode=_MODES[args.mode])
        result = run_scenario(case, config)
        out = Path(args.out) / ("k%d" % k)
        write_results(result, out)
        if result.completed:
            print("k=%d: attack objective %.4f, mitigated worst margin %.6g"
                  % (k, result.attack.objective_value,
                     max(result.mitigation.violations.worst_line_margin,
                         result.mitigation.violations.worst_node_margin)))
        else:
            status = 1
            print("k=%d: %s infeasible: %s" % (k, result.failed_stage, result.error),
                  file=sys.stderr)
    return status


def _cmd_dump(args) -> int:
    case = _load(args.case)
    if case is None:
        return 1
    if args.stage == 1:
        lp, *_ = build_dispatch_lp(case)
    else:
        dispatch = solve_base_opf(case)
        if args.stage == 2:
            lp, _ = build_attack_lp(case, dispatch, args.k, args.binary_attack)
        else:
            attack = assess_worst_attack(case, dispatch, args.k,
                                         binary_attack=args.binary_attack)
            lp, _ = build_mitigation_milp(case, dispatch, attack,
                                          hard_limits=args.hard_limits)
    if args.out == "-":
        dump_lp(lp, sys.stdout)
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            dump_lp(lp, fh)
        print("wrote %s" % args.out)
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handler = {
        "validate": _cmd_validate,
        "run": _cmd_run,
        "sweep": _cmd_sweep,
        "dump-lp": _cmd_dump,
    }[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
