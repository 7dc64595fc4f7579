"""Backchaining planner that turns goal conditions into a behavior tree.

Each condition C expands to ``Fallback(C?, Sequence(pre_1, ..., pre_n, skill!))``
where ``skill`` is the first registered achiever of C and every precondition is
expanded the same way, one level deeper. Node ids are built from the path of
node labels, so a subtree keeps its id when siblings are added next to it.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .bt import BTNode, NodeKind
from .diff import ChangeSet, diff
from .errors import InvalidGoal, SchemaError, StaleRegistry, UnknownReference
from .refs import Ref, parse_ref
from .registry import Registry


@dataclass(frozen=True)
class Goal:
    conditions: tuple[Ref, ...]

    def __post_init__(self):
        if not self.conditions:
            raise SchemaError("a goal needs at least one condition")

    @classmethod
    def parse(cls, *texts: str) -> "Goal":
        return cls(tuple(parse_ref(t) for t in texts))

    def validate(self, registry: Registry) -> None:
        for c in self.conditions:
            try:
                cond = registry.condition(c.name)
            except UnknownReference:
                raise InvalidGoal(f"goal condition {c.name!r} is not registered") from None
            if len(cond.params) != len(c.args):
                raise InvalidGoal(f"{c}: {c.name} takes {len(cond.params)} arguments")

    def __str__(self) -> str:
        return ", ".join(str(c) for c in self.conditions)


@dataclass(frozen=True)
class PlannerConfig:
    max_depth: int = 8
    tick_budget_hint: int = 50

    def __post_init__(self):
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.tick_budget_hint < 1:
            raise ValueError("tick_budget_hint must be >= 1")


@dataclass
class PlanResult:
    tree: BTNode
    goal: Goal
    registry_version: int
    warnings: list[str] = field(default_factory=list)


def _label(kind: NodeKind, ref: Ref | None = None) -> str:
    return {
        NodeKind.SEQUENCE: "seq",
        NodeKind.FALLBACK: f"fb[{ref}]",
        NodeKind.CONDITION: f"cond[{ref}]",
        NodeKind.SKILL: f"skill[{ref}]",
    }[kind]


def _with_ids(kind: NodeKind, ref: Ref | None, parent_id: str, taken: Counter) -> str:
    label = _label(kind, ref)
    taken[label] += 1
    if taken[label] > 1:
        label = f"{label}#{taken[label]}"
    return f"{parent_id}/{label}" if parent_id else label


def plan(goal: Goal, registry: Registry, config: PlannerConfig | None = None) -> PlanResult:
    config = config or PlannerConfig()
    goal.validate(registry)
    warnings: list[str] = []

    def leaf(ref: Ref, parent_id: str, taken: Counter) -> BTNode:
        return BTNode.condition(ref, _with_ids(NodeKind.CONDITION, ref, parent_id, taken))

    def expand(cond: Ref, depth: int, path: tuple[Ref, ...], parent_id: str, taken: Counter) -> BTNode:
        try:
            registry.condition(cond.name)
        except UnknownReference:
            raise InvalidGoal(f"condition {cond.name!r} is not registered") from None
        achievers = [] if cond in path else registry.achievers(cond)
        if not achievers:
            return leaf(cond, parent_id, taken)
        if depth == 0:
            warnings.append(f"DepthExhaustedWarning: {cond} has an achiever but max_depth was reached")
            return leaf(cond, parent_id, taken)
        skill, call = achievers[0]
        fb_id = _with_ids(NodeKind.FALLBACK, cond, parent_id, taken)
        fb_taken: Counter = Counter()
        check = leaf(cond, fb_id, fb_taken)
        seq_id = _with_ids(NodeKind.SEQUENCE, None, fb_id, fb_taken)
        seq_taken: Counter = Counter()
        binding = {p: a for p, a in zip(skill.param_names(), call.args)}
        for p in skill.param_names():
            binding.setdefault(p, f"?{p}")
        children = [
            expand(pre.substitute(binding), depth - 1, (*path, cond), seq_id, seq_taken)
            for pre in skill.preconditions
        ]
        children.append(BTNode.skill(call, _with_ids(NodeKind.SKILL, call, seq_id, seq_taken)))
        seq = BTNode(NodeKind.SEQUENCE, seq_id, tuple(children))
        return BTNode(NodeKind.FALLBACK, fb_id, (check, seq))

    if len(goal.conditions) == 1:
        tree = expand(goal.conditions[0], config.max_depth, (), "", Counter())
    else:
        root_id = "seq"
        taken: Counter = Counter()
        kids = tuple(expand(c, config.max_depth, (), root_id, taken) for c in goal.conditions)
        tree = BTNode(NodeKind.SEQUENCE, root_id, kids)
    return PlanResult(tree, goal, registry.version, warnings)


def replan_after_update(
    goal: Goal,
    registry: Registry,
    config: PlannerConfig | None,
    previous: PlanResult,
) -> tuple[PlanResult, ChangeSet]:
    if registry.version <= previous.registry_version:
        raise StaleRegistry(
            f"registry is still at version {registry.version}; nothing changed since the last plan"
        )
    new = plan(goal, registry, config)
    return new, diff(previous.tree, new.tree)

