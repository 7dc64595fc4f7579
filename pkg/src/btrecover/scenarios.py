"""Scenario files: initial world, goal, library overrides and reference answers."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import SchemaError, UnknownScenario
from .library import data_path, load_library, read_yaml, skill_from_dict
from .planner import Goal
from .refs import Ref, parse_ref
from .registry import Registry
from .world import WorldState

SCENARIO_FORMAT = "btrecover.scenario/1"
BUILTIN_SCENARIOS = ("peg_small", "peg_large", "lift_stacked", "door_handle")


@dataclass(frozen=True)
class Reference:
    """The answer a correct advisor is expected to give for a scenario."""

    condition: Ref
    recovery: str


@dataclass
class Scenario:
    name: str
    task: str
    initial: WorldState
    goal: Goal
    library_overrides: dict = field(default_factory=dict)
    reference: Reference | None = None
    description: str = ""

    def build_registry(self, base: Registry | None = None) -> Registry:
        """Fresh registry: ``base`` (default: the built-in library) plus overrides."""
        registry = base.copy() if base is not None else load_library()
        for i, obj in enumerate(self.library_overrides.get("skills") or []):
            registry.register_skill(skill_from_dict(obj, f"library_overrides.skills[{i}]"), overwrite=True)
        return registry


def scenario_from_dict(data: dict, source: str = "scenario") -> Scenario:
    if not isinstance(data, dict):
        raise SchemaError("scenario document must be a mapping", source)
    if data.get("format", SCENARIO_FORMAT) != SCENARIO_FORMAT:
        raise SchemaError(f"unsupported format {data.get('format')!r}", f"{source}.format")
    for key in ("name", "objects", "goal"):
        if key not in data:
            raise SchemaError(f"missing '{key}'", source)
    initial = WorldState.from_dict({"objects": data["objects"], "facts": data.get("facts") or []})
    ref = data.get("reference")
    reference = Reference(parse_ref(ref["condition"]), ref["recovery"]) if ref else None
    return Scenario(
        name=data["name"],
        task=data.get("task", data["name"]),
        initial=initial,
        goal=Goal.parse(*data["goal"]),
        library_overrides=data.get("library_overrides") or {},
        reference=reference,
        description=data.get("description", ""),
    )


def load_scenario(name_or_path: str | Path) -> Scenario:
    text = str(name_or_path)
    if text in BUILTIN_SCENARIOS:
        path = data_path("scenarios", f"{text}.yaml")
    else:
        path = Path(text)
        if path.suffix not in (".yaml", ".yml") or not path.exists():
            raise UnknownScenario(f"unknown scenario {text!r}; built-ins are {', '.join(BUILTIN_SCENARIOS)}")
    return scenario_from_dict(read_yaml(path.read_text(encoding="utf-8"), str(path)), path.name)
