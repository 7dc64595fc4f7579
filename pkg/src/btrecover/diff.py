"""Structural tree diff keyed on node ids, and Graphviz DOT rendering."""

from __future__ import annotations

from dataclasses import dataclass, field

from .bt import BTNode, NodeKind


@dataclass
class ChangeSet:
    inserted_nodes: list[str] = field(default_factory=list)
    removed_nodes: list[str] = field(default_factory=list)
    moved_nodes: list[str] = field(default_factory=list)
    modified_nodes: list[str] = field(default_factory=list)
    inserted_edges: list[tuple[str, str]] = field(default_factory=list)
    removed_edges: list[tuple[str, str]] = field(default_factory=list)

    def is_empty(self) -> bool:
        return not any(
            (self.inserted_nodes, self.removed_nodes, self.moved_nodes,
             self.modified_nodes, self.inserted_edges, self.removed_edges)
        )

    def inserted_roots(self, new: BTNode) -> list[BTNode]:
        """Top-most inserted nodes, i.e. the roots of inserted subtrees."""
        inserted = set(self.inserted_nodes)
        parents = _parents(new)
        return [
            n for n in new.walk()
            if n.node_id in inserted and parents.get(n.node_id) not in inserted
        ]

    def to_dict(self) -> dict:
        return {
            "inserted_nodes": list(self.inserted_nodes),
            "removed_nodes": list(self.removed_nodes),
            "moved_nodes": list(self.moved_nodes),
            "modified_nodes": list(self.modified_nodes),
            "inserted_edges": [list(e) for e in self.inserted_edges],
            "removed_edges": [list(e) for e in self.removed_edges],
        }


def _parents(tree: BTNode) -> dict[str, str | None]:
    out: dict[str, str | None] = {tree.node_id: None}
    for parent, child in tree.edges():
        out[child] = parent
    return out


def _index(tree: BTNode) -> dict[str, BTNode]:
    return {n.node_id: n for n in tree.walk()}


def diff(old: BTNode, new: BTNode) -> ChangeSet:
    old_nodes, new_nodes = _index(old), _index(new)
    old_parent, new_parent = _parents(old), _parents(new)
    cs = ChangeSet()
    cs.inserted_nodes = [i for i in new_nodes if i not in old_nodes]
    cs.removed_nodes = [i for i in old_nodes if i not in new_nodes]
    common = [i for i in new_nodes if i in old_nodes]
    for nid in common:
        a, b = old_nodes[nid], new_nodes[nid]
        if a.kind is not b.kind or a.ref != b.ref:
            cs.modified_nodes.append(nid)
        if old_parent[nid] != new_parent[nid]:
            cs.moved_nodes.append(nid)
    # a reorder among surviving siblings also counts as a move
    for nid in common:
        a, b = old_nodes[nid], new_nodes[nid]
        kept_old = [c.node_id for c in a.children if c.node_id in new_nodes and new_parent[c.node_id] == nid]
        kept_new = [c.node_id for c in b.children if c.node_id in kept_old]
        for x, y in zip(kept_old, kept_new):
            if x != y and y not in cs.moved_nodes:
                cs.moved_nodes.append(y)
    old_edges, new_edges = list(old.edges()), list(new.edges())
    old_set, new_set = set(old_edges), set(new_edges)
    cs.inserted_edges = [e for e in new_edges if e not in old_set]
    cs.removed_edges = [e for e in old_edges if e not in new_set]
    return cs


_SHAPES = {
    NodeKind.SEQUENCE: "box",
    NodeKind.FALLBACK: "box",
    NodeKind.CONDITION: "ellipse",
    NodeKind.SKILL: "box",
}


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(tree: BTNode, highlight: ChangeSet | None = None, name: str = "bt") -> str:
    """Render ``tree`` as a DOT digraph; changed nodes and edges are drawn red."""
    red_edges = set(highlight.inserted_edges) if highlight else set()
    red_nodes = set(highlight.inserted_nodes) | set(highlight.modified_nodes) if highlight else set()
    lines = [f"digraph {name if name.isidentifier() else _quote(name)} {{", "  node [fontname=Helvetica];"]
    for node in tree.walk():
        attrs = [f"label={_quote(node.label())}", f"shape={_SHAPES[node.kind]}"]
        if node.kind is NodeKind.SKILL:
            attrs.append("style=rounded")
        if node.node_id in red_nodes:
            attrs.append("color=red")
        lines.append(f"  {_quote(node.node_id)} [{', '.join(attrs)}];")
    for parent, child in tree.edges():
        attr = " [color=red, penwidth=2]" if (parent, child) in red_edges else ""
        lines.append(f"  {_quote(parent)} -> {_quote(child)}{attr};")
    lines.append("}")
    return "\n".join(lines) + "\n"
