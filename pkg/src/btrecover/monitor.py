"""Execution with failure detection, advisor consultation and BT regeneration.

A skill has failed when any of its declared postconditions is false right after
it ran. The advisor is then asked why; its answer becomes a new precondition
on the failed skill (plus, if needed, a recovery skill that achieves it), the
tree is replanned, and ticking restarts from the current world.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

from .advisor.protocol import (
    Advisor,
    AdvisorQuery,
    AdvisorVerdict,
    RecoveryProposal,
    validate_verdict,
)
from .bt import BTNode, NodeKind, NodeStatus, TickTrace, serialize, tick
from .diff import ChangeSet
from .errors import (
    AdvisorUnavailable,
    BTRecoverError,
    InfeasibleRecovery,
    InvalidVerdict,
    NothingToRecover,
    UnknownReference,
)
from .library import builtin_completions
from .planner import Goal, PlannerConfig, PlanResult, plan, replan_after_update
from .refs import Ref, is_variable, normalize_name
from .registry import Registry, SkillSpec, SkillTemplate, check_feasibility, instantiate_template
from .scenarios import Scenario
from .sim import SkillOutcome, apply_skill, snapshot
from .world import WorldState

GOAL_REACHED = "GoalReached"
FAILED_UNRECOVERED = "FailedUnrecovered"
TICK_BUDGET_EXHAUSTED = "TickBudgetExhausted"

Completions = Mapping[str, Mapping[str, str]] | Callable[[SkillTemplate], Mapping[str, str]]


@dataclass
class MonitorConfig:
    max_recoveries: int = 3
    feasibility_gate: bool = True
    pre_check: bool = True
    proceed_without_advisor: bool = True
    tick_budget: int = PlannerConfig().tick_budget_hint
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    completions: Completions | None = None
    image_refs: tuple[str, ...] = ()

    def completions_for(self, template: SkillTemplate) -> Mapping[str, str]:
        source = self.completions if self.completions is not None else builtin_completions()
        if callable(source):
            return source(template)
        return source.get(template.name, {})


@dataclass
class FailureReport:
    skill: Ref
    violated_postconditions: list[Ref]
    world_at_failure: WorldState
    tick_index: int = 0
    outcome: SkillOutcome | None = None

    def summary(self) -> dict:
        out = {
            "skill": str(self.skill),
            "violated_postconditions": [str(r) for r in self.violated_postconditions],
            "tick_index": self.tick_index,
        }
        if self.outcome is not None:
            out["effects_fired"] = self.outcome.fired
        return out


@dataclass
class Rejection:
    proposal: str
    reason: str


@dataclass
class RecoveryRecord:
    verdict: AdvisorVerdict
    rejected: list[Rejection]
    registry_mutations: list[str]
    changeset: ChangeSet
    tree_before: BTNode
    tree_after: BTNode

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.to_dict(),
            "rejected": [{"proposal": r.proposal, "reason": r.reason} for r in self.rejected],
            "registry_mutations": list(self.registry_mutations),
            "changeset": self.changeset.to_dict(),
        }


@dataclass
class ExecutionReport:
    scenario: str
    advisor: str
    outcome: str = FAILED_UNRECOVERED
    ticks_used: int = 0
    failures: list[FailureReport] = field(default_factory=list)
    recoveries: list[RecoveryRecord] = field(default_factory=list)
    final_world: WorldState | None = None
    pre_check: AdvisorVerdict | None = None
    consultations: list[tuple[str, AdvisorVerdict]] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)
    initial_tree: BTNode | None = None
    final_tree: BTNode | None = None
    traces: list[TickTrace] = field(default_factory=list)
    registry: Registry | None = None

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "advisor": self.advisor,
            "outcome": self.outcome,
            "ticks_used": self.ticks_used,
            "failures": [f.summary() for f in self.failures],
            "recoveries": [r.to_dict() for r in self.recoveries],
            "final_world": self.final_world.to_dict() if self.final_world else None,
            "pre_check": self.pre_check.to_dict() if self.pre_check else None,
            "consultations": [{"phase": p, "verdict": v.to_dict()} for p, v in self.consultations],
            "errors": list(self.errors),
            "registry_version": self.registry.version if self.registry else None,
        }


def detect_failure(
    skill: SkillSpec, args, world_after: WorldState, registry: Registry, tick_index: int = 0,
    outcome: SkillOutcome | None = None,
) -> FailureReport | None:
    violated = [
        ref for ref in skill.ground(skill.postconditions, args)
        if not registry.evaluate(ref, world_after)
    ]
    if not violated:
        return None
    return FailureReport(Ref(skill.name, tuple(args)), violated, world_after, tick_index, outcome)


class SimExecutor:
    """Runs skill leaves in the simulator and checks their postconditions.

    After the first detected failure every further skill leaf in the same tick
    returns FAILURE without acting, so the monitor sees the world as it was at
    the failure.
    """

    def __init__(self, registry: Registry):
        self.registry = registry
        self.tick_index = 0
        self.failure: FailureReport | None = None
        self.outcomes: list[SkillOutcome] = []

    def start_tick(self, tick_index: int) -> None:
        self.tick_index = tick_index
        self.failure = None

    def check(self, ref: Ref, world: WorldState) -> bool:
        return self.registry.evaluate(ref, world)

    def execute(self, ref: Ref, world: WorldState) -> tuple[NodeStatus, WorldState]:
        skill = self.registry.skill(ref.name)
        if self.failure is not None:
            return NodeStatus.FAILURE, world
        new_world, outcome = apply_skill(world, skill, ref.args)
        self.outcomes.append(outcome)
        self.failure = detect_failure(skill, outcome.args, new_world, self.registry, self.tick_index, outcome)
        if self.failure is not None or not outcome.fired:
            return NodeStatus.FAILURE, new_world
        return NodeStatus.SUCCESS, new_world


def build_query(
    tree: BTNode,
    world: WorldState,
    registry: Registry,
    *,
    task: str = "",
    detail: str = "full",
    failure: FailureReport | None = None,
    feedback: str | None = None,
    image_refs: tuple[str, ...] = (),
) -> AdvisorQuery:
    return AdvisorQuery(
        scene=snapshot(world, detail, task),
        bt_document=serialize(tree),
        skill_summary=registry.skill_summary(),
        condition_summary=registry.condition_summary(),
        failure=failure.summary() if failure else None,
        feasibility_feedback=feedback,
        image_refs=tuple(image_refs),
    )


def pre_execution_check(
    bt: BTNode, world: WorldState, registry: Registry, advisor: Advisor,
    task: str = "", image_refs: tuple[str, ...] = (),
) -> AdvisorVerdict:
    query = build_query(bt, world, registry, task=task, detail=advisor.detail, image_refs=image_refs)
    return validate_verdict(advisor.advise(query))


# ---------------------------------------------------------------------------
# recovery


def _call_args(skill: SkillSpec, proposal: RecoveryProposal) -> tuple[str, ...]:
    if len(proposal.args) != len(skill.params):
        raise InvalidVerdict(
            f"{proposal}: {skill.name} takes {len(skill.params)} arguments, got {len(proposal.args)}"
        )
    return tuple(a if a is not None else f"?{p.name}" for a, p in zip(proposal.args, skill.params))


def _proposed_skill(proposal: RecoveryProposal, registry: Registry, config: MonitorConfig) -> SkillSpec:
    if proposal.kind == "template":
        if proposal.template is None:
            raise InvalidVerdict(f"{proposal}: template recovery without a template")
        return instantiate_template(proposal.template, config.completions_for(proposal.template))
    try:
        return registry.skill(proposal.skill)
    except UnknownReference:
        raise InvalidVerdict(f"{proposal}: no such skill in the library") from None


def _lift_onto_params(ref: Ref, params: list[str], call_args: tuple[str, ...]) -> Ref:
    """Rewrite constant args of ``ref`` as the parameters they are bound to in a call."""
    lifted = []
    for arg in ref.args:
        matches = [p for p, a in zip(params, call_args) if a == arg and not is_variable(a)]
        lifted.append(matches[0] if matches else arg)
    return Ref(ref.name, tuple(lifted))


def _skill_call(tree: BTNode, skill_name: str) -> tuple[str, ...] | None:
    for node in tree.walk():
        if node.kind is NodeKind.SKILL and node.ref.name == skill_name:
            return node.ref.args
    return None


def recover(
    verdict: AdvisorVerdict,
    registry: Registry,
    goal: Goal,
    config: MonitorConfig | None = None,
    *,
    world: WorldState,
    previous: PlanResult,
    failure: FailureReport | None = None,
    requery: Callable[[str], AdvisorVerdict] | None = None,
) -> tuple[PlanResult, RecoveryRecord]:
    """Apply an advisor verdict to the registry and regenerate the tree.

    Mutations, in order: register the missing condition if new, prepend it to
    the failed skill's preconditions, then make the recovery skill an achiever
    of it (attach a postcondition to an existing skill, or instantiate and
    register a template).
    """
    config = config or MonitorConfig()
    rejected: list[Rejection] = []
    verdict = validate_verdict(verdict)
    recovery_skill: SkillSpec | None = None
    for attempt in range(2):
        if not verdict.will_fail or verdict.missing_condition is None:
            raise NothingToRecover("advisor found nothing to recover")
        proposal = verdict.recovery
        if proposal is None:
            break
        recovery_skill = _proposed_skill(proposal, registry, config)
        if not config.feasibility_gate:
            break
        result = check_feasibility(recovery_skill, _call_args(recovery_skill, proposal), world)
        if result.feasible:
            break
        rejected.append(Rejection(str(proposal), result.reason))
        if attempt == 0 and requery is not None:
            verdict = validate_verdict(requery(f"{proposal} rejected: {result.reason}"))
            continue
        raise InfeasibleRecovery(f"{proposal} is infeasible: {result.reason}")

    start_version = registry.version
    missing = verdict.missing_condition
    name = normalize_name(missing.name)
    if not registry.has_condition(name):
        if missing.definition is None:
            raise InvalidVerdict(f"condition {name!r} is unknown and the verdict gives no definition")
        registry.register_condition(missing.definition.to_condition(name))
    condition = Ref(name, missing.args)

    try:
        target = registry.skill(missing.attach_to_skill)
    except UnknownReference:
        raise InvalidVerdict(f"cannot attach {condition} to unknown skill {missing.attach_to_skill!r}") from None
    call = failure.skill.args if failure and failure.skill.name == target.name else _skill_call(previous.tree, target.name)
    pre = _lift_onto_params(condition, target.param_names(), tuple(call or ()))
    # new preconditions go first: clearing an obstruction must happen before the gripper is busy
    registry.add_precondition(target.name, pre, position=0)

    proposal = verdict.recovery
    if proposal is not None and recovery_skill is not None:
        args = _call_args(recovery_skill, proposal)
        post = _lift_onto_params(condition, recovery_skill.param_names(), args)
        if proposal.kind == "template":
            if registry.has_skill(recovery_skill.name):
                registry.add_postcondition(recovery_skill.name, post)
            else:
                registry.register_skill(recovery_skill)
        elif all(s.name != recovery_skill.name for s in registry.skills_achieving(condition)):
            registry.add_postcondition(recovery_skill.name, post)

    mutations = [str(m) for m in registry.log if m.version > start_version]
    new_plan, changes = replan_after_update(goal, registry, config.planner, previous)
    record = RecoveryRecord(verdict, rejected, mutations, changes, previous.tree, new_plan.tree)
    return new_plan, record


# ---------------------------------------------------------------------------
# the monitored execution loop


def goal_satisfied(goal: Goal, registry: Registry, world: WorldState) -> bool:
    return all(registry.evaluate(c, world) for c in goal.conditions)


def execute_with_monitoring(
    scenario: Scenario,
    advisor: Advisor,
    config: MonitorConfig | None = None,
    registry: Registry | None = None,
) -> ExecutionReport:
    """Plan, tick, and on each detected failure consult ``advisor`` and replan.

    ``registry`` is mutated in place by recoveries; it defaults to a fresh
    registry for the scenario and is returned on the report either way.
    """
    config = config or MonitorConfig()
    registry = registry if registry is not None else scenario.build_registry()
    report = ExecutionReport(scenario.name, getattr(advisor, "name", type(advisor).__name__), registry=registry)
    goal = scenario.goal
    current = plan(goal, registry, config.planner)
    report.initial_tree = current.tree
    report.errors.extend(current.warnings)
    world = scenario.initial

    def consult(failure: FailureReport | None, feedback: str | None, phase: str) -> AdvisorVerdict:
        query = build_query(
            current.tree, world, registry, task=scenario.task, detail=advisor.detail,
            failure=failure, feedback=feedback, image_refs=config.image_refs,
        )
        verdict = validate_verdict(advisor.advise(query))
        report.consultations.append((phase, verdict))
        return verdict

    if config.pre_check:
        try:
            report.pre_check = consult(None, None, "pre_execution")
        except AdvisorUnavailable as exc:
            report.errors.append(f"pre-execution check: {exc}")
            if not config.proceed_without_advisor:
                report.final_world, report.final_tree = world, current.tree
                return report

    executor = SimExecutor(registry)
    tick_index = 0
    report.outcome = TICK_BUDGET_EXHAUSTED
    while report.ticks_used < config.tick_budget:
        executor.start_tick(tick_index)
        status, trace = tick(current.tree, world, executor, tick_index)
        report.traces.append(trace)
        report.ticks_used += 1
        tick_index += 1
        world = trace.world

        failure = executor.failure
        if failure is not None:
            report.failures.append(failure)
            if len(report.recoveries) >= config.max_recoveries:
                report.errors.append(f"recovery limit of {config.max_recoveries} reached")
                report.outcome = FAILED_UNRECOVERED
                break
            try:
                verdict = consult(failure, None, "failure")
                current, record = recover(
                    verdict, registry, goal, config,
                    world=world, previous=current, failure=failure,
                    requery=lambda feedback: consult(failure, feedback, "requery"),
                )
            except BTRecoverError as exc:
                report.errors.append(f"{type(exc).__name__}: {exc}")
                report.outcome = FAILED_UNRECOVERED
                break
            report.recoveries.append(record)
            tick_index = 0
            continue

        if status is NodeStatus.SUCCESS:
            report.outcome = GOAL_REACHED if goal_satisfied(goal, registry, world) else FAILED_UNRECOVERED
            break
        if status is NodeStatus.FAILURE:
            report.errors.append("tree failed without a detectable skill failure")
            report.outcome = FAILED_UNRECOVERED
            break

    report.final_world = world
    report.final_tree = current.tree
    return report


__all__ = [
    "ExecutionReport",
    "FailureReport",
    "MonitorConfig",
    "RecoveryRecord",
    "SimExecutor",
    "build_query",
    "detect_failure",
    "execute_with_monitoring",
    "pre_execution_check",
    "recover",
]
