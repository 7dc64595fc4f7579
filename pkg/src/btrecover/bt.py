"""Behavior tree data model, reactive tick semantics and the JSON document format.

Trees are immutable. Control nodes are memoryless: every tick restarts at the
root, so a Sequence re-checks conditions that already held on earlier ticks.

The world passed to :func:`tick` is opaque here. Condition leaves are resolved
through ``executor.check`` and skill leaves through ``executor.execute``, which
returns the skill status together with the successor world.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Any, Iterator, Protocol

from .errors import MalformedTree, ParseError, SchemaError
from .refs import Ref

DOCUMENT_FORMAT = "btrecover.bt/1"


class NodeStatus(enum.Enum):
    SUCCESS = "SUCCESS"
    FAILURE = "FAILURE"
    RUNNING = "RUNNING"


class NodeKind(str, enum.Enum):
    SEQUENCE = "Sequence"
    FALLBACK = "Fallback"
    CONDITION = "Condition"
    SKILL = "Skill"

    @property
    def is_control(self) -> bool:
        return self in (NodeKind.SEQUENCE, NodeKind.FALLBACK)


@dataclass(frozen=True)
class BTNode:
    kind: NodeKind
    node_id: str = ""
    children: tuple["BTNode", ...] = ()
    ref: Ref | None = None

    def __post_init__(self):
        if self.kind.is_control:
            if self.ref is not None:
                raise MalformedTree(f"control node {self.node_id!r} cannot carry a reference")
        else:
            if self.children:
                raise MalformedTree(f"leaf {self.node_id!r} cannot have children")
            if self.ref is None:
                raise MalformedTree(f"leaf {self.node_id!r} needs a {self.kind.value.lower()} reference")

    @classmethod
    def sequence(cls, *children: "BTNode", node_id: str = "") -> "BTNode":
        return cls(NodeKind.SEQUENCE, node_id, tuple(children))

    @classmethod
    def fallback(cls, *children: "BTNode", node_id: str = "") -> "BTNode":
        return cls(NodeKind.FALLBACK, node_id, tuple(children))

    @classmethod
    def condition(cls, ref: Ref, node_id: str = "") -> "BTNode":
        return cls(NodeKind.CONDITION, node_id, (), ref)

    @classmethod
    def skill(cls, ref: Ref, node_id: str = "") -> "BTNode":
        return cls(NodeKind.SKILL, node_id, (), ref)

    def walk(self) -> Iterator["BTNode"]:
        """Pre-order traversal."""
        yield self
        for child in self.children:
            yield from child.walk()

    def edges(self) -> Iterator[tuple[str, str]]:
        for child in self.children:
            yield self.node_id, child.node_id
            yield from child.edges()

    def find(self, node_id: str) -> "BTNode | None":
        return next((n for n in self.walk() if n.node_id == node_id), None)

    def label(self) -> str:
        if self.kind is NodeKind.SEQUENCE:
            return "->"
        if self.kind is NodeKind.FALLBACK:
            return "?"
        suffix = "?" if self.kind is NodeKind.CONDITION else "!"
        return f"{self.ref}{suffix}"

    def pretty(self, indent: int = 0) -> str:
        pad = "  " * indent
        if self.kind.is_control:
            lines = [f"{pad}{self.kind.value}"]
            lines += [c.pretty(indent + 1) for c in self.children]
            return "\n".join(lines)
        return pad + self.label()


def number_nodes(tree: BTNode, prefix: str = "0") -> BTNode:
    """Give every node without an id a positional id such as ``0.1.0``."""
    children = tuple(number_nodes(c, f"{prefix}.{i}") for i, c in enumerate(tree.children))
    return BTNode(tree.kind, tree.node_id or prefix, children, tree.ref)


def validate_tree(tree: BTNode) -> None:
    seen: set[str] = set()
    for node in tree.walk():
        if not node.node_id:
            raise MalformedTree("node without node_id")
        if node.node_id in seen:
            raise MalformedTree(f"duplicate node_id {node.node_id!r}")
        seen.add(node.node_id)
        if node.kind.is_control and not node.children:
            raise MalformedTree(f"control node {node.node_id!r} has no children")


# ---------------------------------------------------------------------------
# ticking


class Executor(Protocol):
    def check(self, ref: Ref, world: Any) -> bool: ...

    def execute(self, ref: Ref, world: Any) -> tuple[NodeStatus, Any]: ...


@dataclass
class TickTrace:
    tick_index: int
    entries: list[tuple[str, NodeStatus]] = field(default_factory=list)
    world: Any = None

    @property
    def last(self) -> tuple[str, NodeStatus]:
        return self.entries[-1]


def tick(tree: BTNode, world: Any, executor: Executor, tick_index: int = 0) -> tuple[NodeStatus, TickTrace]:
    """Propagate one tick from the root and return the root status.

    ``trace.world`` holds the world after any skills that ran during the tick.
    """
    trace = TickTrace(tick_index)
    state = {"world": world}

    def visit(node: BTNode) -> NodeStatus:
        slot = len(trace.entries)
        trace.entries.append((node.node_id, NodeStatus.FAILURE))
        if node.kind is NodeKind.CONDITION:
            status = NodeStatus.SUCCESS if executor.check(node.ref, state["world"]) else NodeStatus.FAILURE
        elif node.kind is NodeKind.SKILL:
            status, state["world"] = executor.execute(node.ref, state["world"])
        else:
            if not node.children:
                raise MalformedTree(f"control node {node.node_id!r} has no children")
            # Sequence stops on the first non-success, Fallback on the first non-failure
            passthrough = NodeStatus.SUCCESS if node.kind is NodeKind.SEQUENCE else NodeStatus.FAILURE
            status = passthrough
            for child in node.children:
                status = visit(child)
                if status is not passthrough:
                    break
        trace.entries[slot] = (node.node_id, status)
        return status

    status = visit(tree)
    trace.world = state["world"]
    return status, trace


# ---------------------------------------------------------------------------
# document format


def node_to_dict(node: BTNode) -> dict:
    out: dict[str, Any] = {"kind": node.kind.value, "node_id": node.node_id}
    if node.kind.is_control:
        out["children"] = [node_to_dict(c) for c in node.children]
    elif node.kind is NodeKind.CONDITION:
        out["condition"] = node.ref.to_dict()
    else:
        out["skill"] = node.ref.to_dict()
    return out


def serialize(tree: BTNode) -> str:
    return json.dumps({"format": DOCUMENT_FORMAT, "root": node_to_dict(tree)}, indent=2) + "\n"


def _ref_from(obj: Any, where: str) -> Ref:
    if not isinstance(obj, dict) or not isinstance(obj.get("name"), str):
        raise SchemaError("reference needs a string 'name'", where)
    args = obj.get("args", [])
    if not isinstance(args, list) or not all(isinstance(a, str) for a in args):
        raise SchemaError("'args' must be a list of strings", where)
    extra = set(obj) - {"name", "args"}
    if extra:
        raise SchemaError(f"unexpected fields {sorted(extra)}", where)
    return Ref(obj["name"], tuple(args))


def node_from_dict(obj: Any, where: str = "root") -> BTNode:
    if not isinstance(obj, dict):
        raise SchemaError("node must be an object", where)
    raw_kind = obj.get("kind")
    try:
        kind = NodeKind(raw_kind)
    except ValueError:
        raise SchemaError(f"unknown node kind {raw_kind!r}", where) from None
    node_id = obj.get("node_id")
    if not isinstance(node_id, str) or not node_id:
        raise SchemaError("'node_id' must be a non-empty string", where)
    if kind.is_control:
        allowed = {"kind", "node_id", "children"}
        children = obj.get("children")
        if not isinstance(children, list):
            raise SchemaError("control node needs a 'children' list", where)
        kids = tuple(node_from_dict(c, f"{where}.children[{i}]") for i, c in enumerate(children))
        ref = None
    else:
        key = "condition" if kind is NodeKind.CONDITION else "skill"
        allowed = {"kind", "node_id", key}
        if key not in obj:
            raise SchemaError(f"{kind.value} leaf needs '{key}'", where)
        kids, ref = (), _ref_from(obj[key], f"{where}.{key}")
    extra = set(obj) - allowed
    if extra:
        raise SchemaError(f"unexpected fields {sorted(extra)}", where)
    return BTNode(kind, node_id, kids, ref)


def deserialize(document: str) -> BTNode:
    try:
        data = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"line {exc.lineno} column {exc.colno}") from None
    if not isinstance(data, dict) or "root" not in data:
        raise SchemaError("document must be an object with a 'root' node", "$")
    fmt = data.get("format", DOCUMENT_FORMAT)
    if fmt != DOCUMENT_FORMAT:
        raise SchemaError(f"unsupported format {fmt!r}", "format")
    tree = node_from_dict(data["root"])
    seen: set[str] = set()
    for node in tree.walk():
        if node.node_id in seen:
            raise SchemaError(f"duplicate node_id {node.node_id!r}", "root")
        seen.add(node.node_id)
    return tree
