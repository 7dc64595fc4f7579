"""Named references such as ``inserted(peg,hole1)`` and their text syntax.

Arguments are plain strings. A leading ``?`` marks a variable that is not yet
bound to an object id.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ParseError

_REF_RE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*(?:\((.*)\))?\s*$", re.S)

# Free-text names an external model may use for conditions this library knows.
SYNONYMS = {
    "hole_is_free": "hole_free",
    "hole_clear": "hole_free",
    "hole_is_clear": "hole_free",
    "hole_empty": "hole_free",
    "not_any_obstacle_at_hole": "hole_free",
    "no_obstacle_in_hole": "hole_free",
    "no_obstacle_at_hole": "hole_free",
    "front_of_hole_clear": "front_clear",
    "hole_front_clear": "front_clear",
    "no_obstacle_in_front_of_hole": "front_clear",
    "nothing_on_top": "top_clear",
    "top_is_clear": "top_clear",
    "clear_top": "top_clear",
    "nothing_stacked_on_top": "top_clear",
    "handle_is_turned": "handle_turned",
    "turn_handle_first": "handle_turned",
}


@dataclass(frozen=True)
class Ref:
    name: str
    args: tuple[str, ...] = ()

    def __str__(self) -> str:
        return f"{self.name}({','.join(self.args)})"

    def substitute(self, binding: dict[str, str]) -> "Ref":
        return Ref(self.name, tuple(binding.get(a, a) for a in self.args))

    def to_dict(self) -> dict:
        return {"name": self.name, "args": list(self.args)}


def is_variable(arg: str | None) -> bool:
    return arg is None or arg.startswith("?")


def parse_ref(text: str) -> Ref:
    m = _REF_RE.match(text)
    if not m:
        raise ParseError(f"not a reference: {text!r}")
    name, inner = m.group(1), m.group(2)
    if inner is None or not inner.strip():
        return Ref(name)
    args = tuple(a.strip() for a in inner.split(","))
    if any(not a for a in args):
        raise ParseError(f"empty argument in {text!r}")
    return Ref(name, args)


def split_refs(text: str) -> list[str]:
    """Split ``a(x,y),b(z)`` on top-level commas only."""
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    if "".join(cur).strip():
        parts.append("".join(cur).strip())
    return parts


def normalize_name(text: str) -> str:
    """Lower-snake-case a free-text name: ``"Hole Free"`` -> ``hole_free``."""
    text = re.sub(r"([a-z0-9])([A-Z])", r"\1_\2", text.strip())
    return re.sub(r"[^a-z0-9]+", "_", text.lower()).strip("_")


def canonical_name(text: str) -> str:
    name = normalize_name(text)
    return SYNONYMS.get(name, name)
