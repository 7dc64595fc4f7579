"""Conditions, skills, skill templates and the mutable registry that holds them."""

from __future__ import annotations

import copy
import re
import threading
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

from .errors import (
    ArityMismatch,
    DanglingConditionReference,
    DuplicateName,
    InvalidSkill,
    ParseError,
    UnfilledHole,
    UnknownEffect,
    UnknownObject,
    UnknownReference,
)
from .refs import Ref, is_variable, parse_ref
from .world import WorldState

WILDCARD = "_"

_PARAM_RE = re.compile(r"^\s*(\w+)\s*(?::\s*(\w+))?\s*(?:=\s*occupant_of\(\s*(\w+)\s*\))?\s*$")


@dataclass(frozen=True)
class Param:
    """A typed parameter slot.

    ``resolve`` names another parameter holding a location. When the slot is
    still unbound at execution time it is filled with the object that occupies
    that location (``in``, ``blocking`` or ``on`` it).
    """

    name: str
    type: "str | Hole" = "object"
    resolve: str | None = None

    def __str__(self) -> str:
        text = f"{self.name}: {self.type if isinstance(self.type, str) else f'HOLE({self.type.name})'}"
        return text + (f" = occupant_of({self.resolve})" if self.resolve else "")


def parse_param(text: str) -> Param:
    m = _PARAM_RE.match(text)
    if not m:
        raise ParseError(f"bad parameter {text!r}")
    return Param(m.group(1), m.group(2) or "object", m.group(3))


def types_compatible(a: str, b: str) -> bool:
    return a == b or "object" in (a, b)


@dataclass(frozen=True)
class Condition:
    """A (possibly negated) single-predicate pattern over the world.

    ``pattern`` terms are ``?param`` references, ``_`` wildcards or constant
    object ids. A negated condition holds iff no fact matches the pattern.
    """

    name: str
    params: tuple[Param, ...]
    predicate: str
    pattern: tuple[str, ...]
    negated: bool = False

    def negate(self) -> "Condition":
        name = self.name[4:] if self.name.startswith("not_") else f"not_{self.name}"
        return replace(self, name=name, negated=not self.negated)

    def pattern_text(self) -> str:
        body = f"{self.predicate}({','.join(self.pattern)})"
        return f"not {body}" if self.negated else body


def evaluate_condition(c: Condition, args: Iterable[str], world: WorldState) -> bool:
    args = tuple(args)
    if len(args) != len(c.params):
        raise ArityMismatch(f"{c.name} takes {len(c.params)} arguments, got {len(args)}")
    binding = {p.name: a for p, a in zip(c.params, args)}
    terms: list[str | None] = []
    for term in c.pattern:
        if term == WILDCARD:
            terms.append(None)
        elif term.startswith("?"):
            value = binding[term[1:]]
            # an unbound argument behaves like a wildcard so evaluation stays total
            terms.append(None if is_variable(value) else value)
        else:
            terms.append(term)
    found = bool(world.match(c.predicate, tuple(terms)))
    return found != c.negated


@dataclass(frozen=True)
class FeasibilityRule:
    family: str  # "grasp" or "push"
    target: str  # parameter naming the object acted on

    def __str__(self) -> str:
        return f"{self.family}({self.target})"


@dataclass(frozen=True)
class FeasibilityResult:
    feasible: bool
    reason: str = ""

    def __bool__(self) -> bool:
        return self.feasible

    def __str__(self) -> str:
        return "Feasible" if self.feasible else f"Infeasible({self.reason!r})"


FEASIBLE = FeasibilityResult(True)
GRASP_AFFORDANCE = "exceeds gripper affordance"
NOT_MOVABLE = "object is not movable"
NO_TARGET = "no object to act on"


@dataclass(frozen=True)
class SkillSpec:
    name: str
    params: tuple[Param, ...]
    preconditions: tuple[Ref, ...]
    postconditions: tuple[Ref, ...]
    effect: str
    feasibility: FeasibilityRule | None = None
    provenance: str = "builtin"

    def param_names(self) -> list[str]:
        return [p.name for p in self.params]

    def bind(self, args: Iterable[str]) -> dict[str, str]:
        args = tuple(args)
        if len(args) != len(self.params):
            raise ArityMismatch(f"{self.name} takes {len(self.params)} arguments, got {len(args)}")
        return {p.name: a for p, a in zip(self.params, args)}

    def ground(self, refs: Iterable[Ref], args: Iterable[str]) -> list[Ref]:
        binding = self.bind(args)
        return [r.substitute(binding) for r in refs]


def resolve_args(skill: SkillSpec, args: Iterable[str], world: WorldState) -> tuple[str, ...]:
    """Fill unbound resolvable parameters from what occupies their location."""
    out = list(args)
    if len(out) != len(skill.params):
        raise ArityMismatch(f"{skill.name} takes {len(skill.params)} arguments, got {len(out)}")
    names = skill.param_names()
    for i, param in enumerate(skill.params):
        if param.resolve and is_variable(out[i]):
            location = out[names.index(param.resolve)]
            found = [] if is_variable(location) else world.occupants(location)
            if found:
                out[i] = found[0]
    return tuple(out)


def check_feasibility(skill: SkillSpec, args: Iterable[str], world: WorldState) -> FeasibilityResult:
    args = resolve_args(skill, args, world)
    for a in args:
        if not is_variable(a) and a not in world.objects:
            raise UnknownObject(f"{a!r} is not an object in this world")
    rule = skill.feasibility
    if rule is None:
        return FEASIBLE
    target = args[skill.param_names().index(rule.target)]
    if is_variable(target):
        return FeasibilityResult(False, NO_TARGET)
    obj = world.objects[target]
    if rule.family == "grasp":
        if obj.size_class == "small" and obj.graspable:
            return FEASIBLE
        return FeasibilityResult(False, GRASP_AFFORDANCE)
    if rule.family == "push":
        return FEASIBLE if obj.movable else FeasibilityResult(False, NOT_MOVABLE)
    return FEASIBLE


# ---------------------------------------------------------------------------
# templates


@dataclass(frozen=True)
class Hole:
    name: str
    description: str = ""

    def __str__(self) -> str:
        return f"HOLE({self.name})"


EFFECT_HOLE = "effect"


@dataclass(frozen=True)
class SkillTemplate:
    name: str
    params: tuple[Param, ...]
    precondition_schema: tuple["Ref | Hole", ...]
    postcondition_schema: tuple["Ref | Hole", ...]
    effect_hole: str
    feasibility: FeasibilityRule | None = None
    provenance: str = "builtin"

    def holes(self) -> list[Hole]:
        found = [p.type for p in self.params if isinstance(p.type, Hole)]
        found += [h for h in self.precondition_schema if isinstance(h, Hole)]
        found += [h for h in self.postcondition_schema if isinstance(h, Hole)]
        return found + [Hole(EFFECT_HOLE, self.effect_hole)]

    def hole_names(self) -> list[str]:
        return [h.name for h in self.holes()]


def instantiate_template(
    t: SkillTemplate,
    completions: Mapping[str, str] | None,
    known_effects: Iterable[str] | None = None,
) -> SkillSpec:
    """Fill every hole of ``t`` and return a registrable skill.

    Condition holes accept a reference such as ``front_clear(h)``; the value
    ``none`` drops the slot. The ``effect`` hole must name a simulator effect.
    """
    completions = dict(completions or {})
    missing = [name for name in t.hole_names() if not str(completions.get(name) or "").strip()]
    if missing:
        raise UnfilledHole(missing)
    if known_effects is None:
        from .sim import EFFECTS

        known_effects = EFFECTS
    effect = completions[EFFECT_HOLE].strip()
    if effect not in set(known_effects):
        raise UnknownEffect(f"effect {effect!r} is not known to the simulator")

    def fill(schema):
        out = []
        for entry in schema:
            if isinstance(entry, Hole):
                value = completions[entry.name].strip()
                if value.lower() == "none":
                    continue
                out.append(parse_ref(value))
            else:
                out.append(entry)
        return tuple(out)

    params = tuple(
        replace(p, type=completions[p.type.name].strip()) if isinstance(p.type, Hole) else p
        for p in t.params
    )
    return SkillSpec(
        name=t.name,
        params=params,
        preconditions=fill(t.precondition_schema),
        postconditions=fill(t.postcondition_schema),
        effect=effect,
        feasibility=t.feasibility,
        provenance=t.provenance,
    )


# ---------------------------------------------------------------------------
# registry


@dataclass
class Mutation:
    version: int
    kind: str  # new_condition | new_skill | new_template | precondition | postcondition | overwrite
    detail: str

    def __str__(self) -> str:
        return f"v{self.version} {self.kind}: {self.detail}"


@dataclass
class Registry:
    """Mutable knowledge base. Every mutation bumps ``version``."""

    _conditions: dict[str, Condition] = field(default_factory=dict)
    _skills: dict[str, SkillSpec] = field(default_factory=dict)
    _templates: dict[str, SkillTemplate] = field(default_factory=dict)
    version: int = 0
    log: list[Mutation] = field(default_factory=list)

    def __post_init__(self):
        self._lock = threading.RLock()

    def _bump(self, kind: str, detail: str) -> None:
        self.version += 1
        self.log.append(Mutation(self.version, kind, detail))

    # lookups -----------------------------------------------------------
    def has_condition(self, name: str) -> bool:
        return name in self._conditions

    def has_skill(self, name: str) -> bool:
        return name in self._skills

    def condition(self, name: str) -> Condition:
        try:
            return self._conditions[name]
        except KeyError:
            raise UnknownReference(f"condition {name!r} is not registered") from None

    def skill(self, name: str) -> SkillSpec:
        try:
            return self._skills[name]
        except KeyError:
            raise UnknownReference(f"skill {name!r} is not registered") from None

    def template(self, name: str) -> SkillTemplate:
        try:
            return self._templates[name]
        except KeyError:
            raise UnknownReference(f"template {name!r} is not registered") from None

    def conditions(self) -> list[Condition]:
        return list(self._conditions.values())

    def skills(self) -> list[SkillSpec]:
        return list(self._skills.values())

    def templates(self) -> list[SkillTemplate]:
        return list(self._templates.values())

    # validation --------------------------------------------------------
    def _check_ref(self, owner: str, ref: Ref, params: dict[str, Param]) -> None:
        if ref.name not in self._conditions:
            raise DanglingConditionReference(f"{owner} references unregistered condition {ref.name!r}")
        cond = self._conditions[ref.name]
        if len(ref.args) != len(cond.params):
            raise ArityMismatch(f"{owner}: {ref} has arity {len(ref.args)}, {cond.name} takes {len(cond.params)}")
        for arg, slot in zip(ref.args, cond.params):
            p = params.get(arg)
            if p is not None and isinstance(p.type, str) and not types_compatible(p.type, slot.type):
                raise InvalidSkill(f"{owner}: parameter {arg} of type {p.type} used as {slot.type} in {ref}")

    def _validate_skill(self, s: SkillSpec) -> None:
        params = {p.name: p for p in s.params}
        if len(params) != len(s.params):
            raise InvalidSkill(f"{s.name}: duplicate parameter names")
        if not s.postconditions:
            raise InvalidSkill(f"{s.name}: a skill needs at least one postcondition")
        for p in s.params:
            if p.resolve and p.resolve not in params:
                raise InvalidSkill(f"{s.name}: {p.name} resolves from unknown parameter {p.resolve!r}")
        if s.feasibility and s.feasibility.target not in params:
            raise InvalidSkill(f"{s.name}: feasibility target {s.feasibility.target!r} is not a parameter")
        for ref in (*s.preconditions, *s.postconditions):
            self._check_ref(s.name, ref, params)

    def _validate_condition(self, c: Condition) -> None:
        names = {p.name for p in c.params}
        for term in c.pattern:
            if term.startswith("?") and term[1:] not in names:
                raise InvalidSkill(f"condition {c.name}: pattern uses unknown parameter {term}")

    # mutations ---------------------------------------------------------
    def register_condition(self, c: Condition, overwrite: bool = False) -> None:
        with self._lock:
            if c.name in self._conditions and not overwrite:
                raise DuplicateName(f"condition {c.name!r} already registered")
            self._validate_condition(c)
            kind = "overwrite" if c.name in self._conditions else "new_condition"
            self._conditions[c.name] = c
            self._bump(kind, f"condition {c.name}")

    def register_skill(self, s: SkillSpec, overwrite: bool = False) -> None:
        with self._lock:
            if s.name in self._skills and not overwrite:
                raise DuplicateName(f"skill {s.name!r} already registered")
            self._validate_skill(s)
            kind = "overwrite" if s.name in self._skills else "new_skill"
            self._skills[s.name] = s
            self._bump(kind, f"skill {s.name}")

    def register_template(self, t: SkillTemplate, overwrite: bool = False) -> None:
        with self._lock:
            if t.name in self._templates and not overwrite:
                raise DuplicateName(f"template {t.name!r} already registered")
            names = t.hole_names()
            if len(set(names)) != len(names):
                raise InvalidSkill(f"template {t.name}: hole names must be unique")
            self._templates[t.name] = t
            self._bump("new_template", f"template {t.name}")

    def add_precondition(self, skill_name: str, ref: Ref, position: int = 0) -> bool:
        """Attach ``ref`` (over the skill's parameter names) as a precondition.

        Returns False, without bumping the version, if it is already there.
        """
        with self._lock:
            s = self.skill(skill_name)
            if ref in s.preconditions:
                return False
            pre = list(s.preconditions)
            pre.insert(position if position >= 0 else len(pre) + 1 + position, ref)
            updated = replace(s, preconditions=tuple(pre))
            self._validate_skill(updated)
            self._skills[skill_name] = updated
            self._bump("precondition", f"{ref} -> {skill_name}")
            return True

    def add_postcondition(self, skill_name: str, ref: Ref) -> bool:
        with self._lock:
            s = self.skill(skill_name)
            if ref in s.postconditions:
                return False
            updated = replace(s, postconditions=(*s.postconditions, ref))
            self._validate_skill(updated)
            self._skills[skill_name] = updated
            self._bump("postcondition", f"{ref} -> {skill_name}")
            return True

    # queries -----------------------------------------------------------
    def evaluate(self, ref: Ref, world: WorldState) -> bool:
        return evaluate_condition(self.condition(ref.name), ref.args, world)

    def achievers(self, goal: Ref) -> list[tuple[SkillSpec, Ref]]:
        """Skills with a postcondition unifying with ``goal``, plus the bound skill call.

        Variables in ``goal`` (``?x``) match anything and bind nothing. A skill
        whose binding leaves a non-resolvable parameter open is skipped.
        """
        out = []
        for s in self._skills.values():
            call = _unify(s, goal)
            if call is not None:
                out.append((s, call))
        return out

    def skills_achieving(self, goal: Ref) -> list[SkillSpec]:
        return [s for s, _ in self.achievers(goal)]

    def copy(self) -> "Registry":
        with self._lock:
            return Registry(
                dict(self._conditions), dict(self._skills), dict(self._templates),
                self.version, copy.copy(self.log),
            )

    # summaries for advisor queries --------------------------------------
    def skill_summary(self) -> list[dict]:
        return [
            {
                "name": s.name,
                "params": [str(p) for p in s.params],
                "preconditions": [str(r) for r in s.preconditions],
                "postconditions": [str(r) for r in s.postconditions],
            }
            for s in self._skills.values()
        ]

    def condition_summary(self) -> list[dict]:
        return [
            {"name": c.name, "params": [str(p) for p in c.params], "meaning": c.pattern_text()}
            for c in self._conditions.values()
        ]


def _unify(s: SkillSpec, goal: Ref) -> Ref | None:
    names = s.param_names()
    for post in s.postconditions:
        if post.name != goal.name or len(post.args) != len(goal.args):
            continue
        binding: dict[str, str] = {}
        ok = True
        for term, value in zip(post.args, goal.args):
            if is_variable(value):
                continue
            if term in names:
                if binding.setdefault(term, value) != value:
                    ok = False
                    break
            elif term != value:
                ok = False
                break
        if not ok:
            continue
        args = []
        for p in s.params:
            if p.name in binding:
                args.append(binding[p.name])
            elif p.resolve or any(is_variable(v) for v in goal.args):
                args.append(f"?{p.name}")
            else:
                break
        else:
            return Ref(s.name, tuple(args))
    return None
