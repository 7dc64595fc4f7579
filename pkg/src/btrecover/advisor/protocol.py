"""Query and verdict types exchanged between the monitor and an advisor.

Verdicts travel as JSON documents validated against ``verdict.schema.json``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Protocol

import jsonschema
import jsonschema.exceptions
import jsonschema.validators

from ..errors import BTRecoverError, MalformedResponse
from ..library import data_path, template_from_dict, template_to_dict
from ..refs import Ref, canonical_name, parse_ref
from ..registry import Condition, SkillTemplate, parse_param
from ..sim import SceneDescription

WILL_SUCCEED = "will_succeed"
WILL_FAIL = "will_fail"


@dataclass(frozen=True)
class ConditionDefinition:
    """How to evaluate a condition the registry does not know yet."""

    params: tuple[str, ...]
    fact: str
    negated: bool = False

    def to_condition(self, name: str) -> Condition:
        fact = parse_ref(self.fact)
        return Condition(name, tuple(parse_param(p) for p in self.params), fact.name, fact.args, self.negated)

    def to_dict(self) -> dict:
        return {"params": list(self.params), "fact": self.fact, "negated": self.negated}


@dataclass(frozen=True)
class MissingCondition:
    name: str
    args: tuple[str, ...]
    attach_to_skill: str
    definition: ConditionDefinition | None = None

    @property
    def ref(self) -> Ref:
        return Ref(self.name, self.args)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "args": list(self.args),
            "attach_to_skill": self.attach_to_skill,
            "definition": self.definition.to_dict() if self.definition else None,
        }


@dataclass(frozen=True)
class RecoveryProposal:
    kind: str  # "existing" | "template"
    skill: str
    args: tuple[str | None, ...] = ()
    template: SkillTemplate | None = None

    def __str__(self) -> str:
        args = ",".join(a if a is not None else "?" for a in self.args)
        return f"{self.kind}:{self.skill}({args})"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "skill": self.skill,
            "args": list(self.args),
            "template": template_to_dict(self.template) if self.template else None,
        }


@dataclass(frozen=True)
class AdvisorVerdict:
    prediction: str
    cause: str | None = None
    missing_condition: MissingCondition | None = None
    recovery: RecoveryProposal | None = None

    @property
    def will_fail(self) -> bool:
        return self.prediction == WILL_FAIL

    def to_dict(self) -> dict:
        return {
            "prediction": self.prediction,
            "cause": self.cause,
            "missing_condition": self.missing_condition.to_dict() if self.missing_condition else None,
            "recovery": self.recovery.to_dict() if self.recovery else None,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


WILL_SUCCEED_VERDICT = AdvisorVerdict(WILL_SUCCEED)


@dataclass
class AdvisorQuery:
    scene: SceneDescription
    bt_document: str
    skill_summary: list[dict]
    condition_summary: list[dict]
    failure: dict | None = None
    feasibility_feedback: str | None = None
    image_refs: tuple[str, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "scene": self.scene.to_dict(),
            "image_refs": list(self.image_refs),
            "bt_document": self.bt_document,
            "skill_summary": self.skill_summary,
            "condition_summary": self.condition_summary,
            "failure": self.failure,
            "feasibility_feedback": self.feasibility_feedback,
        }


class Advisor(Protocol):
    name: str
    detail: str  # scene detail the advisor should receive: "full" or "blind"

    def advise(self, query: AdvisorQuery) -> AdvisorVerdict: ...


# ---------------------------------------------------------------------------
# wire format


@lru_cache(maxsize=1)
def verdict_schema() -> dict:
    return json.loads(data_path("verdict.schema.json").read_text(encoding="utf-8"))


@lru_cache(maxsize=1)
def _validator():
    schema = verdict_schema()
    cls = jsonschema.validators.validator_for(schema)
    cls.check_schema(schema)
    return cls(schema)


def validate_verdict_dict(data: Any) -> None:
    error = jsonschema.exceptions.best_match(_validator().iter_errors(data))
    if error is not None:
        path = "/".join(str(p) for p in error.absolute_path) or "$"
        raise MalformedResponse(f"{path}: {error.message}")


def validate_verdict(v: AdvisorVerdict) -> AdvisorVerdict:
    """Boundary check applied to every verdict, whatever produced it."""
    validate_verdict_dict(v.to_dict())
    return v


def verdict_from_dict(data: Any, canonicalize: bool = False) -> AdvisorVerdict:
    validate_verdict_dict(data)
    mc = data.get("missing_condition")
    rec = data.get("recovery")
    missing = None
    if mc:
        d = mc.get("definition")
        try:
            definition = ConditionDefinition(tuple(d["params"]), d["fact"], d["negated"]) if d else None
            if definition:
                definition.to_condition("probe")
        except BTRecoverError as exc:
            raise MalformedResponse(f"missing_condition/definition: {exc}") from None
        name = canonical_name(mc["name"]) if canonicalize else mc["name"]
        missing = MissingCondition(name, tuple(mc["args"]), mc["attach_to_skill"], definition)
    recovery = None
    if rec:
        template = None
        if rec.get("template"):
            try:
                template = template_from_dict(rec["template"], "recovery.template")
            except BTRecoverError as exc:
                raise MalformedResponse(str(exc)) from None
        recovery = RecoveryProposal(rec["kind"], rec["skill"], tuple(rec["args"]), template)
    return AdvisorVerdict(data["prediction"], data.get("cause"), missing, recovery)


_FENCE_RE = re.compile(r"```(?:json)?\s*(.*?)```", re.S)


def parse_verdict(text: str, canonicalize: bool = True) -> AdvisorVerdict:
    """Parse a model reply. Accepts bare JSON or JSON inside a fenced block."""
    m = _FENCE_RE.search(text)
    body = m.group(1) if m else text
    try:
        data = json.loads(body)
    except json.JSONDecodeError as exc:
        raise MalformedResponse(f"not JSON: {exc.msg} at line {exc.lineno} column {exc.colno}") from None
    return verdict_from_dict(data, canonicalize=canonicalize)
