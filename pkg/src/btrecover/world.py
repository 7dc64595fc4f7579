"""Closed-world symbolic state: typed objects plus a set of ground facts."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

from .errors import WorldInvariantError

OBJECT_KINDS = ("peg", "hole", "cube", "door", "handle", "obstacle", "gripper")
SIZE_CLASSES = ("small", "large")

# predicates that place an object at (in, in front of, on top of) a location
LOCATING_PREDICATES = ("in", "blocking", "on")

Fact = tuple[str, ...]


@dataclass(frozen=True)
class ObjectInfo:
    id: str
    kind: str
    size_class: str = "small"
    graspable: bool = False
    movable: bool = False

    def __post_init__(self):
        if self.kind not in OBJECT_KINDS:
            raise WorldInvariantError(f"{self.id}: unknown kind {self.kind!r}")
        if self.size_class not in SIZE_CLASSES:
            raise WorldInvariantError(f"{self.id}: unknown size_class {self.size_class!r}")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "size_class": self.size_class,
            "graspable": self.graspable,
            "movable": self.movable,
        }


def format_fact(fact: Fact) -> str:
    return f"{fact[0]}({','.join(fact[1:])})"


@dataclass(frozen=True)
class WorldState:
    objects: Mapping[str, ObjectInfo]
    facts: frozenset = field(default_factory=frozenset)
    step: int = 0

    def __post_init__(self):
        object.__setattr__(self, "facts", frozenset(tuple(f) for f in self.facts))
        self.validate()

    def validate(self) -> None:
        for fact in self.facts:
            for arg in fact[1:]:
                if arg not in self.objects:
                    raise WorldInvariantError(f"{format_fact(fact)} names unknown object {arg!r}")
        for gripper in {f[1] for f in self.facts if f[0] == "holding"}:
            held = [f for f in self.facts if f[0] == "holding" and f[1] == gripper]
            if len(held) > 1:
                raise WorldInvariantError(f"{gripper} holds more than one object")
        for fact in self.facts:
            if fact[0] == "inserted":
                peg, hole = fact[1], fact[2]
                if any(f[0] == "in" and f[2] == hole and f[1] != peg for f in self.facts):
                    raise WorldInvariantError(f"{hole} holds {peg} and another object")

    def holds(self, *fact: str) -> bool:
        return tuple(fact) in self.facts

    def match(self, predicate: str, pattern: tuple[str | None, ...]) -> list[Fact]:
        """Facts of ``predicate`` whose args equal ``pattern``; ``None`` matches anything."""
        return sorted(
            f for f in self.facts
            if f[0] == predicate and len(f) == len(pattern) + 1
            and all(p is None or p == a for p, a in zip(pattern, f[1:]))
        )

    def occupants(self, location: str) -> list[str]:
        """Objects in, blocking, or stacked on ``location``, sorted by id."""
        return sorted({f[1] for f in self.facts if f[0] in LOCATING_PREDICATES and f[2] == location})

    def gripper(self) -> str:
        for oid in sorted(self.objects):
            if self.objects[oid].kind == "gripper":
                return oid
        raise WorldInvariantError("world has no gripper")

    def held_by(self, gripper: str) -> str | None:
        held = self.match("holding", (gripper, None))
        return held[0][2] if held else None

    def evolve(self, add: Iterable[Fact] = (), remove: Iterable[Fact] = ()) -> "WorldState":
        facts = (set(self.facts) - set(remove)) | set(add)
        return replace(self, facts=frozenset(facts), step=self.step + 1)

    def with_facts(self, *facts: Fact) -> "WorldState":
        return replace(self, facts=self.facts | {tuple(f) for f in facts})

    def to_dict(self) -> dict:
        return {
            "objects": {oid: self.objects[oid].to_dict() for oid in sorted(self.objects)},
            "facts": [format_fact(f) for f in sorted(self.facts)],
            "step": self.step,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "WorldState":
        from .refs import parse_ref

        objects = {oid: ObjectInfo(oid, **props) for oid, props in (data.get("objects") or {}).items()}
        facts = []
        for text in data.get("facts") or []:
            ref = parse_ref(text)
            facts.append((ref.name, *ref.args))
        return cls(objects, frozenset(facts), int(data.get("step", 0)))
