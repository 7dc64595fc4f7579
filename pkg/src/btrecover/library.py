"""Skill-library files: load and dump conditions, skills and templates as YAML."""

from __future__ import annotations

from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any

import yaml

from .errors import BTRecoverError, ParseError, SchemaError
from .refs import Ref, parse_ref
from .registry import (
    Condition,
    FeasibilityRule,
    Hole,
    Param,
    Registry,
    SkillSpec,
    SkillTemplate,
    parse_param,
)

LIBRARY_FORMAT = "btrecover.library/1"


def data_path(*parts: str) -> Path:
    return Path(str(resources.files("btrecover").joinpath("data", *parts)))


def builtin_library_path() -> Path:
    return data_path("library.yaml")


def read_yaml(text: str, source: str = "<string>") -> Any:
    try:
        return yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        where = f"{source} line {mark.line + 1} column {mark.column + 1}" if mark else source
        raise ParseError(str(exc.problem), where) from None
    except yaml.YAMLError as exc:
        raise ParseError(str(exc), source) from None


# ---------------------------------------------------------------------------
# element parsers


def _param(obj: Any, where: str) -> Param:
    if isinstance(obj, str):
        try:
            return parse_param(obj)
        except ParseError as exc:
            raise SchemaError(str(exc), where) from None
    if isinstance(obj, dict) and isinstance(obj.get("name"), str):
        ptype = obj.get("type", "object")
        if isinstance(ptype, dict):
            ptype = Hole(ptype["hole"], ptype.get("description", ""))
        return Param(obj["name"], ptype, obj.get("resolve"))
    raise SchemaError("parameter must be 'name: type' or a mapping with 'name'", where)


def _ref(obj: Any, where: str) -> Ref:
    if not isinstance(obj, str):
        raise SchemaError("expected a reference like name(a,b)", where)
    try:
        return parse_ref(obj)
    except ParseError as exc:
        raise SchemaError(str(exc), where) from None


def _schema_entry(obj: Any, where: str) -> Ref | Hole:
    if isinstance(obj, dict) and "hole" in obj:
        return Hole(obj["hole"], obj.get("description", ""))
    return _ref(obj, where)


def _feasibility(obj: Any, where: str) -> FeasibilityRule | None:
    if obj is None:
        return None
    ref = _ref(obj, where)
    if ref.name not in ("grasp", "push") or len(ref.args) != 1:
        raise SchemaError("feasibility must be grasp(<param>) or push(<param>)", where)
    return FeasibilityRule(ref.name, ref.args[0])


def _list(obj: Any, where: str) -> list:
    if obj is None:
        return []
    if not isinstance(obj, list):
        raise SchemaError("expected a list", where)
    return obj


def condition_from_dict(obj: dict, where: str = "condition") -> Condition:
    if not isinstance(obj, dict) or "name" not in obj or "fact" not in obj:
        raise SchemaError("condition needs 'name' and 'fact'", where)
    fact = _ref(obj["fact"], f"{where}.fact")
    return Condition(
        name=obj["name"],
        params=tuple(_param(p, f"{where}.params[{i}]") for i, p in enumerate(_list(obj.get("params"), where))),
        predicate=fact.name,
        pattern=fact.args,
        negated=bool(obj.get("negated", False)),
    )


def condition_to_dict(c: Condition) -> dict:
    out: dict[str, Any] = {"name": c.name, "params": [str(p) for p in c.params]}
    out["fact"] = f"{c.predicate}({','.join(c.pattern)})"
    if c.negated:
        out["negated"] = True
    return out


def skill_from_dict(obj: dict, where: str = "skill") -> SkillSpec:
    if not isinstance(obj, dict) or "name" not in obj:
        raise SchemaError("skill needs a 'name'", where)
    return SkillSpec(
        name=obj["name"],
        params=tuple(_param(p, f"{where}.params[{i}]") for i, p in enumerate(_list(obj.get("params"), where))),
        preconditions=tuple(_ref(r, f"{where}.preconditions") for r in _list(obj.get("preconditions"), where)),
        postconditions=tuple(_ref(r, f"{where}.postconditions") for r in _list(obj.get("postconditions"), where)),
        effect=obj.get("effect", obj["name"]),
        feasibility=_feasibility(obj.get("feasibility"), f"{where}.feasibility"),
        provenance=obj.get("provenance", "builtin"),
    )


def skill_to_dict(s: SkillSpec) -> dict:
    out: dict[str, Any] = {
        "name": s.name,
        "params": [str(p) for p in s.params],
        "preconditions": [str(r) for r in s.preconditions],
        "postconditions": [str(r) for r in s.postconditions],
        "effect": s.effect,
    }
    if s.feasibility:
        out["feasibility"] = str(s.feasibility)
    if s.provenance != "builtin":
        out["provenance"] = s.provenance
    return out


def template_from_dict(obj: dict, where: str = "template") -> SkillTemplate:
    if not isinstance(obj, dict) or "name" not in obj:
        raise SchemaError("template needs a 'name'", where)
    return SkillTemplate(
        name=obj["name"],
        params=tuple(_param(p, f"{where}.params[{i}]") for i, p in enumerate(_list(obj.get("params"), where))),
        precondition_schema=tuple(_schema_entry(e, f"{where}.preconditions") for e in _list(obj.get("preconditions"), where)),
        postcondition_schema=tuple(_schema_entry(e, f"{where}.postconditions") for e in _list(obj.get("postconditions"), where)),
        effect_hole=obj.get("effect_hole", ""),
        feasibility=_feasibility(obj.get("feasibility"), f"{where}.feasibility"),
        provenance=obj.get("provenance", "builtin"),
    )


def _param_to_obj(p: Param) -> Any:
    if isinstance(p.type, Hole):
        out: dict[str, Any] = {"name": p.name, "type": {"hole": p.type.name, "description": p.type.description}}
        if p.resolve:
            out["resolve"] = p.resolve
        return out
    return str(p)


def _entry_to_obj(e: Ref | Hole) -> Any:
    if isinstance(e, Hole):
        return {"hole": e.name, "description": e.description}
    return str(e)


def template_to_dict(t: SkillTemplate) -> dict:
    out: dict[str, Any] = {
        "name": t.name,
        "params": [_param_to_obj(p) for p in t.params],
        "preconditions": [_entry_to_obj(e) for e in t.precondition_schema],
        "postconditions": [_entry_to_obj(e) for e in t.postcondition_schema],
        "effect_hole": t.effect_hole,
    }
    if t.feasibility:
        out["feasibility"] = str(t.feasibility)
    out["provenance"] = t.provenance
    return out


# ---------------------------------------------------------------------------
# whole documents


def registry_from_dict(data: Any, registry: Registry | None = None, source: str = "library") -> Registry:
    if not isinstance(data, dict):
        raise SchemaError("library document must be a mapping", source)
    fmt = data.get("format", LIBRARY_FORMAT)
    if fmt != LIBRARY_FORMAT:
        raise SchemaError(f"unsupported format {fmt!r}", f"{source}.format")
    registry = registry if registry is not None else Registry()
    for section, build, register in (
        ("conditions", condition_from_dict, registry.register_condition),
        ("skills", skill_from_dict, registry.register_skill),
        ("templates", template_from_dict, registry.register_template),
    ):
        for i, obj in enumerate(_list(data.get(section), f"{source}.{section}")):
            where = f"{source}.{section}[{i}]"
            try:
                register(build(obj, where))
            except (SchemaError, ParseError):
                raise
            except BTRecoverError as exc:
                exc.args = (f"{where}: {exc}",)
                raise
    return registry


@lru_cache(maxsize=1)
def _builtin_library() -> Registry:
    path = builtin_library_path()
    return registry_from_dict(read_yaml(path.read_text(encoding="utf-8"), str(path)), source=path.name)


def load_library(path: str | Path | None = None) -> Registry:
    """Parse a library file; without ``path``, a fresh copy of the built-in one."""
    if not path:
        return _builtin_library().copy()
    path = Path(path)
    return registry_from_dict(read_yaml(path.read_text(encoding="utf-8"), str(path)), source=path.name)


def dump_library(registry: Registry) -> str:
    data = {
        "format": LIBRARY_FORMAT,
        "conditions": [condition_to_dict(c) for c in registry.conditions()],
        "skills": [skill_to_dict(s) for s in registry.skills()],
        "templates": [template_to_dict(t) for t in registry.templates()],
    }
    return yaml.safe_dump(data, sort_keys=False, width=100)


def load_completions(path: str | Path) -> dict[str, dict[str, str]]:
    """Completions file: ``{template_name: {hole_name: value}}``."""
    path = Path(path)
    data = read_yaml(path.read_text(encoding="utf-8"), str(path)) or {}
    if not isinstance(data, dict) or not all(isinstance(v, dict) for v in data.values()):
        raise SchemaError("completions must map template names to hole mappings", path.name)
    return {name: {k: str(v) for k, v in holes.items()} for name, holes in data.items()}


@lru_cache(maxsize=1)
def _builtin_completions() -> dict[str, dict[str, str]]:
    return load_completions(data_path("completions.yaml"))


def builtin_completions() -> dict[str, dict[str, str]]:
    return {name: dict(holes) for name, holes in _builtin_completions().items()}
