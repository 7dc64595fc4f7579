"""Deterministic rule-table advisors standing in for a vision-language model.

``full`` mode reads object properties and facts from the scene. ``blind`` mode
only sees the behavior tree and object ids, so it falls back on a fixed guess
per task family: for peg tasks it assumes something sits in the hole and can
be picked out. When told its previous suggestion was infeasible it switches to
pushing.
"""

from __future__ import annotations

from ..bt import NodeKind, deserialize
from ..library import template_from_dict
from ..refs import Ref, parse_ref
from ..registry import GRASP_AFFORDANCE
from .protocol import (
    WILL_FAIL,
    WILL_SUCCEED_VERDICT,
    AdvisorQuery,
    AdvisorVerdict,
    ConditionDefinition,
    MissingCondition,
    RecoveryProposal,
)

# Definitions the mock attaches when it proposes a condition the registry lacks.
KNOWN_DEFINITIONS = {
    "hole_free": ConditionDefinition(("h: hole",), "in(_,?h)", True),
    "front_clear": ConditionDefinition(("h: hole",), "blocking(_,?h)", True),
    "top_clear": ConditionDefinition(("x: object",), "on(_,?x)", True),
    "handle_turned": ConditionDefinition(("d: door",), "handle_turned(?d)", False),
}

PUSH_TEMPLATE = {
    "name": "push",
    "params": [
        {"name": "x", "type": {"hole": "target", "description": "type of the object to push"}, "resolve": "h"},
        "h: object",
    ],
    "preconditions": [],
    "postconditions": [{"hole": "post", "description": "condition achieved once the object is pushed away"}],
    "effect_hole": "displace the object away from h without grasping it",
    "feasibility": "push(x)",
    "provenance": "advisor",
}


def _tree_conditions(bt_document: str) -> list[Ref]:
    tree = deserialize(bt_document)
    return [n.ref for n in tree.walk() if n.kind is NodeKind.CONDITION]


def _achiever(query: AdvisorQuery, postcondition: str, default: str) -> str:
    for s in query.skill_summary:
        if any(parse_ref(p).name == postcondition for p in s["postconditions"]):
            return s["name"]
    return default


def _missing(query: AdvisorQuery, ref: Ref, attach_to: str) -> MissingCondition:
    known = {c["name"] for c in query.condition_summary}
    definition = None if ref.name in known else KNOWN_DEFINITIONS.get(ref.name)
    return MissingCondition(ref.name, ref.args, attach_to, definition)


def _rejected_grasp(query: AdvisorQuery) -> bool:
    return bool(query.feasibility_feedback) and GRASP_AFFORDANCE in query.feasibility_feedback


def _push(obj: str | None, hole: str) -> RecoveryProposal:
    return RecoveryProposal("template", "push", (obj, hole), template_from_dict(PUSH_TEMPLATE, "push"))


def _full(query: AdvisorQuery) -> AdvisorVerdict:
    scene = query.scene
    objects = {o.id: o for o in scene.objects}
    facts = [parse_ref(f) for f in scene.facts]
    conditions = _tree_conditions(query.bt_document)
    present = set(conditions)
    insert_skill = _achiever(query, "inserted", "insert")

    for f in facts:
        if f.name not in ("in", "blocking") or objects[f.args[1]].kind != "hole":
            continue
        obj, hole = f.args
        cond = Ref("hole_free" if f.name == "in" else "front_clear", (hole,))
        if cond in present:
            continue
        info = objects[obj]
        if info.size_class == "small" and info.graspable and not _rejected_grasp(query):
            recovery = RecoveryProposal("existing", "remove_obstacle", (obj, hole))
        else:
            recovery = _push(obj, hole)
        where = "inside" if f.name == "in" else "in front of"
        return AdvisorVerdict(
            WILL_FAIL, f"{obj} is {where} {hole}; insertion cannot complete",
            _missing(query, cond, insert_skill), recovery,
        )

    for g in conditions:
        if g.name == "lifted":
            (target,) = g.args
            on_top = [f.args[0] for f in facts if f.name == "on" and f.args[1] == target]
            cond = Ref("top_clear", (target,))
            if on_top and cond not in present:
                return AdvisorVerdict(
                    WILL_FAIL, f"{on_top[0]} is stacked on {target}",
                    _missing(query, cond, _achiever(query, "lifted", "lift")),
                    RecoveryProposal("existing", "remove_obstacle", (on_top[0], target)),
                )
        if g.name == "open":
            (door,) = g.args
            cond = Ref("handle_turned", (door,))
            if cond not in facts and cond not in present:
                return AdvisorVerdict(
                    WILL_FAIL, f"the handle of {door} has not been turned",
                    _missing(query, cond, _achiever(query, "open", "open_door")),
                    RecoveryProposal("existing", _achiever(query, "handle_turned", "turn_handle"), (door,)),
                )
    return WILL_SUCCEED_VERDICT


def _blind(query: AdvisorQuery) -> AdvisorVerdict:
    for g in _tree_conditions(query.bt_document):
        if g.name == "inserted":
            hole = g.args[1]
            attach = _achiever(query, "inserted", "insert")
            if _rejected_grasp(query):
                return AdvisorVerdict(
                    WILL_FAIL, f"an object too large to grasp obstructs {hole}",
                    _missing(query, Ref("front_clear", (hole,)), attach), _push(None, hole),
                )
            return AdvisorVerdict(
                WILL_FAIL, f"something is probably inside {hole}",
                _missing(query, Ref("hole_free", (hole,)), attach),
                RecoveryProposal("existing", "remove_obstacle", (None, hole)),
            )
        if g.name == "lifted":
            (target,) = g.args
            return AdvisorVerdict(
                WILL_FAIL, f"something is probably on top of {target}",
                _missing(query, Ref("top_clear", (target,)), _achiever(query, "lifted", "lift")),
                RecoveryProposal("existing", "remove_obstacle", (None, target)),
            )
        if g.name == "open":
            (door,) = g.args
            return AdvisorVerdict(
                WILL_FAIL, f"the handle of {door} probably needs turning",
                _missing(query, Ref("handle_turned", (door,)), _achiever(query, "open", "open_door")),
                RecoveryProposal("existing", _achiever(query, "handle_turned", "turn_handle"), (door,)),
            )
    return WILL_SUCCEED_VERDICT


def mock_advise(query: AdvisorQuery, mode: str = "full") -> AdvisorVerdict:
    if mode not in ("full", "blind"):
        raise ValueError(f"unknown mock mode {mode!r}")
    if mode == "full" and query.scene.facts is not None:
        return _full(query)
    return _blind(query)


def null_advise(query: AdvisorQuery) -> AdvisorVerdict:
    return WILL_SUCCEED_VERDICT


class MockAdvisor:
    def __init__(self, mode: str = "full"):
        if mode not in ("full", "blind"):
            raise ValueError(f"unknown mock mode {mode!r}")
        self.mode = mode
        self.detail = mode
        self.name = "mock" if mode == "full" else "mock-blind"

    def advise(self, query: AdvisorQuery) -> AdvisorVerdict:
        return mock_advise(query, self.mode)


class NullAdvisor:
    name = "null"
    detail = "blind"

    def advise(self, query: AdvisorQuery) -> AdvisorVerdict:
        return null_advise(query)
