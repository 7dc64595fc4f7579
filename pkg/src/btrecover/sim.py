"""Deterministic symbolic simulator: ground-truth skill effects and scene snapshots.

The effect rules below are the world's physics. They deliberately ignore a
skill's declared preconditions, which is how a library that is missing a
precondition ends up with failures it cannot explain on its own.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .errors import UnknownEffect, UnknownObject
from .refs import is_variable
from .registry import SkillSpec, resolve_args
from .world import LOCATING_PREDICATES, Fact, ObjectInfo, WorldState, format_fact

Effect = Callable[[WorldState, tuple[str, ...]], tuple[list[Fact], list[Fact], str | None]]


def _locating(world: WorldState, obj: str) -> list[Fact]:
    return [f for f in world.facts if f[0] in (*LOCATING_PREDICATES, "at") and f[1] == obj]


def _grasp_blocker(world: WorldState, obj: str) -> str | None:
    info = world.objects[obj]
    if world.held_by(world.gripper()) is not None:
        return "gripper occupied"
    if info.size_class != "small" or not info.graspable:
        return "exceeds gripper affordance"
    return None


def _move_to(world, args):
    (target,) = args[:1]
    g = world.gripper()
    return [("at", g, target)], world.match("at", (g, None)), None


def _pick(world, args):
    (obj,) = args[:1]
    reason = _grasp_blocker(world, obj)
    if reason:
        return [], [], reason
    return [("holding", world.gripper(), obj)], _locating(world, obj), None


def _place(world, args):
    obj, dest = args[:2]
    g = world.gripper()
    if not world.holds("holding", g, obj):
        return [], [], "not holding object"
    return [("at", obj, dest)], [("holding", g, obj)], None


def _insert(world, args):
    peg, hole = args[:2]
    g = world.gripper()
    if not world.holds("holding", g, peg):
        return [], [], "not holding peg"
    if world.match("in", (None, hole)):
        return [], [], "occupied"
    if world.match("blocking", (None, hole)):
        return [], [], "blocked"
    return [("inserted", peg, hole)], [("holding", g, peg)], None


def _release(world, args):
    # the held object is set down out of the way
    return [], world.match("holding", (world.gripper(), None)), None


def _lift(world, args):
    (obj,) = args[:1]
    if not world.holds("holding", world.gripper(), obj):
        return [], [], "not holding object"
    if world.match("on", (None, obj)):
        return [], [], "object on top"
    return [("lifted", obj)], [], None


def _turn_handle(world, args):
    (door,) = args[:1]
    return [("handle_turned", door)], [], None


def _open_door(world, args):
    (door,) = args[:1]
    if not world.holds("handle_turned", door):
        return [], [], "handle not turned"
    return [("open", door)], [], None


def _remove_obstacle(world, args):
    obj, location = args[:2]
    if obj not in world.occupants(location):
        return [], [], "object not at location"
    reason = _grasp_blocker(world, obj)
    if reason:
        return [], [], reason
    # pick then place away: the gripper ends empty
    removed = [f for f in world.facts if f[0] in LOCATING_PREDICATES and f[1] == obj]
    return [("removed", obj)], removed, None


def _push(world, args):
    obj = args[0]
    if not world.objects[obj].movable:
        return [], [], "object is not movable"
    # pushed "away": blocking/in facts are simply retracted
    return [], [f for f in world.facts if f[0] in ("blocking", "in") and f[1] == obj], None


EFFECTS: dict[str, Effect] = {
    "move_to": _move_to,
    "pick": _pick,
    "place": _place,
    "insert": _insert,
    "lift": _lift,
    "release": _release,
    "turn_handle": _turn_handle,
    "open_door": _open_door,
    "remove_obstacle": _remove_obstacle,
    "push": _push,
}

# Minimum positional arity of each effect.
EFFECT_ARITY = {
    "move_to": 1, "pick": 1, "place": 2, "insert": 2, "lift": 1, "release": 0,
    "turn_handle": 1, "open_door": 1, "remove_obstacle": 2, "push": 1,
}

# Predicates each effect may add or retract; anything else is frame.
EFFECT_FRAME = {
    "move_to": {"at"},
    "pick": {"holding", "at", "in", "blocking", "on"},
    "place": {"holding", "at"},
    "insert": {"inserted", "holding"},
    "lift": {"lifted"},
    "release": {"holding"},
    "turn_handle": {"handle_turned"},
    "open_door": {"open"},
    "remove_obstacle": {"removed", "in", "blocking", "on"},
    "push": {"in", "blocking"},
}


@dataclass(frozen=True)
class SkillOutcome:
    skill: str
    args: tuple[str, ...]
    fired: bool
    reason: str | None = None
    added: tuple[Fact, ...] = ()
    removed: tuple[Fact, ...] = ()

    @property
    def effects_blocked(self) -> bool:
        return not self.fired

    def __str__(self) -> str:
        call = f"{self.skill}({','.join(self.args)})"
        return f"{call}: fired" if self.fired else f"{call}: effects_blocked({self.reason!r})"


def apply_skill(world: WorldState, skill: SkillSpec, args) -> tuple[WorldState, SkillOutcome]:
    if skill.effect not in EFFECTS:
        raise UnknownEffect(f"effect {skill.effect!r} is not known to the simulator")
    args = resolve_args(skill, args, world)
    unresolved = [a for a in args if is_variable(a)]
    for a in args:
        if not is_variable(a) and a not in world.objects:
            raise UnknownObject(f"{a!r} is not an object in this world")
    if unresolved or len(args) < EFFECT_ARITY[skill.effect]:
        outcome = SkillOutcome(skill.name, args, False, "no object to act on")
        return world.evolve(), outcome
    add, remove, reason = EFFECTS[skill.effect](world, args)
    if reason is not None:
        return world.evolve(), SkillOutcome(skill.name, args, False, reason)
    new = world.evolve(add=add, remove=remove)
    added = tuple(sorted(new.facts - world.facts))
    removed = tuple(sorted(world.facts - new.facts))
    return new, SkillOutcome(skill.name, args, True, None, added, removed)


# ---------------------------------------------------------------------------
# scene snapshots


@dataclass(frozen=True)
class SceneDescription:
    """Text stand-in for camera images.

    ``blind`` scenes keep only the task name and object ids.
    """

    task: str
    detail: str
    object_ids: tuple[str, ...]
    objects: tuple[ObjectInfo, ...] | None = None
    facts: tuple[str, ...] | None = None

    @property
    def text(self) -> str:
        lines = [f"task: {self.task}", f"view: {self.detail}"]
        if self.objects is None:
            lines.append("objects: " + ", ".join(self.object_ids))
            return "\n".join(lines) + "\n"
        lines.append("objects:")
        for o in self.objects:
            lines.append(
                f"  - {o.id}: kind={o.kind} size_class={o.size_class} "
                f"graspable={str(o.graspable).lower()} movable={str(o.movable).lower()}"
            )
        lines.append("facts:")
        lines += [f"  - {f}" for f in self.facts] or ["  (none)"]
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        out: dict = {"task": self.task, "detail": self.detail, "object_ids": list(self.object_ids)}
        if self.objects is not None:
            out["objects"] = {o.id: o.to_dict() for o in self.objects}
            out["facts"] = list(self.facts)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SceneDescription":
        objects = data.get("objects")
        return cls(
            task=data["task"],
            detail=data["detail"],
            object_ids=tuple(data["object_ids"]),
            objects=None if objects is None else tuple(ObjectInfo(k, **v) for k, v in objects.items()),
            facts=None if objects is None else tuple(data.get("facts") or ()),
        )


def snapshot(world: WorldState, detail: str = "full", task: str = "") -> SceneDescription:
    if detail not in ("full", "blind"):
        raise ValueError(f"unknown snapshot detail {detail!r}")
    ids = tuple(sorted(world.objects))
    if detail == "blind":
        return SceneDescription(task, detail, ids)
    return SceneDescription(
        task, detail, ids,
        tuple(world.objects[i] for i in ids),
        tuple(format_fact(f) for f in sorted(world.facts)),
    )
