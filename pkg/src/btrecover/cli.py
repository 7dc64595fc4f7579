"""Command line entry point: ``btrecover <command> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness
from .advisor import ADVISOR_NAMES, make_advisor
from .bt import serialize
from .diff import to_dot
from .errors import BTRecoverError
from .library import builtin_completions, dump_library, load_completions, load_library
from .monitor import GOAL_REACHED, ExecutionReport, MonitorConfig, execute_with_monitoring
from .planner import Goal, PlannerConfig, plan
from .refs import split_refs
from .registry import SkillTemplate
from .scenarios import BUILTIN_SCENARIOS, load_scenario
from .sim import snapshot


def _write(path: str | None, text: str) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")


def _goal(texts: list[str]) -> Goal:
    parts = [p for t in texts for p in split_refs(t) if p]
    return Goal.parse(*parts)


def cmd_plan(args) -> int:
    registry = load_library(args.library)
    goal = _goal(args.goal)
    goal.validate(registry)
    result = plan(goal, registry, PlannerConfig(max_depth=args.max_depth))
    for w in result.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(result.tree.pretty())
    _write(args.out, serialize(result.tree))
    _write(args.dot, to_dot(result.tree))
    return 0


def _interactive_completions(template: SkillTemplate) -> dict[str, str]:
    defaults = builtin_completions().get(template.name, {})
    out = {}
    print(f"template {template.name} has open holes:")
    for hole in template.holes():
        default = defaults.get(hole.name, "")
        answer = input(f"  {hole.name} ({hole.description}) [{default}]: ").strip()
        out[hole.name] = answer or default
    return out


def _print_run(report: ExecutionReport) -> None:
    print(f"scenario {report.scenario} with advisor {report.advisor}: {report.outcome} after {report.ticks_used} ticks")
    if report.pre_check is not None:
        print(f"  pre-execution check: {report.pre_check.prediction}"
              + (f" ({report.pre_check.cause})" if report.pre_check.cause else ""))
    for f in report.failures:
        print(f"  failure at tick {f.tick_index}: {f.skill} left {', '.join(map(str, f.violated_postconditions))} false")
    for i, rec in enumerate(report.recoveries, 1):
        print(f"  recovery {i}: {rec.verdict.missing_condition.ref} via {rec.verdict.recovery.skill if rec.verdict.recovery else 'no skill'}")
        for r in rec.rejected:
            print(f"    rejected {r.proposal}: {r.reason}")
        for m in rec.registry_mutations:
            print(f"    {m}")
    for e in report.errors:
        print(f"  note: {e}")
    if report.final_tree is not None:
        print(report.final_tree.pretty())


def cmd_run(args) -> int:
    scenario = load_scenario(args.scenario)
    if args.interactive:
        completions = _interactive_completions
    elif args.completions:
        completions = load_completions(args.completions)
    else:
        completions = None
    config = MonitorConfig(
        feasibility_gate=not args.no_feasibility_gate,
        max_recoveries=args.max_recoveries,
        completions=completions,
        image_refs=tuple(args.image),
    )
    advisor = make_advisor(args.advisor)
    if args.advisor == "llm":
        advisor.detail = "blind" if args.blind else "full"
    report = execute_with_monitoring(scenario, advisor, config)
    _print_run(report)
    if args.report:
        _write(args.report, json.dumps(report.to_dict(), indent=2) + "\n")
    if args.dot_diff and report.recoveries:
        _write(args.dot_diff, to_dot(report.final_tree, report.recoveries[-1].changeset, name=scenario.name))
    if args.save_library:
        _write(args.save_library, dump_library(report.registry))
    return 0 if report.outcome == GOAL_REACHED else 1


def cmd_sim_show(args) -> int:
    scenario = load_scenario(args.scenario)
    print(snapshot(scenario.initial, "blind" if args.blind else "full", scenario.task).text, end="")
    return 0


def _emit(summary, fmt: str) -> None:
    print(harness.emit_report(summary, fmt), end="")


def cmd_trials(args) -> int:
    records = harness.run_trials(args.scenario, args.advisor_mode, not args.no_gate, args.n, args.seed)
    if args.records:
        _write(args.records, json.dumps([r.__dict__ for r in records], indent=2) + "\n")
    _emit(harness.summarize(records), args.format)
    return 0


def cmd_ablate(args) -> int:
    names = args.scenario or list(BUILTIN_SCENARIOS)
    _emit(harness.merge(*(harness.ablate(n, args.n, args.seed) for n in names)), args.format)
    return 0


def cmd_report(args) -> int:
    summary = harness.merge(*(harness.ablate(n, args.n, args.seed) for n in BUILTIN_SCENARIOS))
    _emit(summary, args.format)
    checks = harness.check_thresholds(summary)
    failed = [c for c in checks if not c.ok]
    for c in failed:
        scenario, mode, gate = c.cell
        print(f"threshold missed: {scenario} {mode} gate={'on' if gate else 'off'} "
              f"expected {c.expected} got {c.actual}", file=sys.stderr)
    return 0 if not failed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="btrecover", description="Behavior-tree failure recovery with advisor feedback")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="backchain a behavior tree for a goal")
    p.add_argument("--library", help="library YAML (default: built-in)")
    p.add_argument("--goal", action="append", required=True, help="goal condition, e.g. 'inserted(peg,hole1)'")
    p.add_argument("--max-depth", type=int, default=PlannerConfig().max_depth)
    p.add_argument("--out", help="write the BT document here")
    p.add_argument("--dot", help="write a Graphviz rendering here")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("run", help="execute a scenario with monitoring and recovery")
    p.add_argument("--scenario", required=True, help=f"built-in name ({', '.join(BUILTIN_SCENARIOS)}) or a YAML file")
    p.add_argument("--advisor", choices=ADVISOR_NAMES, default="mock")
    p.add_argument("--no-feasibility-gate", action="store_true")
    p.add_argument("--completions", help="YAML mapping template holes to values")
    p.add_argument("--interactive", action="store_true", help="ask for template holes on stdin")
    p.add_argument("--max-recoveries", type=int, default=MonitorConfig().max_recoveries)
    p.add_argument("--image", action="append", default=[], help="image file passed to the llm advisor")
    p.add_argument("--blind", action="store_true", help="send the llm advisor object ids only")
    p.add_argument("--report", help="write the execution report as JSON")
    p.add_argument("--dot-diff", help="write the recovered BT with changes highlighted")
    p.add_argument("--save-library", help="write the mutated library as YAML")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sim", help="simulator utilities")
    simsub = p.add_subparsers(dest="sim_command", required=True)
    s = simsub.add_parser("show", help="print a scenario's initial scene")
    s.add_argument("scenario")
    s.add_argument("--blind", action="store_true")
    s.set_defaults(func=cmd_sim_show)

    p = sub.add_parser("trials", help="run a trial battery")
    p.add_argument("--scenario", required=True)
    p.add_argument("--advisor-mode", choices=harness.ADVISOR_MODES, default="full")
    p.add_argument("--no-gate", action="store_true")
    p.add_argument("-n", "--n", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--records", help="write the per-trial records as JSON")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.set_defaults(func=cmd_trials)

    p = sub.add_parser("ablate", help="full/blind advisor x gate on/off")
    p.add_argument("--scenario", action="append", help="repeatable; default all built-in scenarios")
    p.add_argument("-n", "--n", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("report", help="ablate everything; exit 0 iff every expected cell is met")
    p.add_argument("-n", "--n", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BTRecoverError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
