import re

from btrecover.bt import BTNode, NodeKind, deserialize, number_nodes
from btrecover.diff import diff, to_dot
from btrecover.refs import Ref
from conftest import GOLDEN


def leaf(name, node_id):
    return BTNode.condition(Ref(name), node_id)


def test_self_diff_is_empty():
    tree = deserialize((GOLDEN / "peg_small_initial.json").read_text())
    assert diff(tree, tree).is_empty()


def test_insert_remove_move_modify():
    old = BTNode.sequence(leaf("a", "a"), leaf("b", "b"), BTNode.fallback(leaf("c", "c"), node_id="f"), node_id="r")
    new = BTNode.sequence(leaf("b", "b"), leaf("a", "a"), BTNode.skill(Ref("z"), "c"), leaf("d", "d"), node_id="r")
    cs = diff(old, new)
    assert cs.inserted_nodes == ["d"]
    assert cs.removed_nodes == ["f"]
    assert sorted(cs.moved_nodes) == ["a", "b", "c"]
    assert cs.modified_nodes == ["c"]
    assert ("r", "d") in cs.inserted_edges and ("r", "c") in cs.inserted_edges
    assert ("f", "c") in cs.removed_edges and ("r", "f") in cs.removed_edges


def test_inserted_roots_of_nested_insertion():
    old = BTNode.sequence(leaf("a", "a"), node_id="r")
    new = BTNode.sequence(BTNode.fallback(leaf("x", "x"), leaf("y", "y"), node_id="f"), leaf("a", "a"), node_id="r")
    cs = diff(old, new)
    assert [n.node_id for n in cs.inserted_roots(new)] == ["f"]


def test_dot_counts_nodes_and_edges():
    tree = number_nodes(BTNode.sequence(BTNode.condition(Ref("c")), BTNode.skill(Ref("s"))))
    text = to_dot(tree)
    assert text.startswith("digraph bt {")
    assert len(re.findall(r"^  \"[^\"]+\" \[", text, re.M)) == 3
    assert len(re.findall(r'^  "[^"]+" -> ', text, re.M)) == 2


def test_dot_highlights_changes_in_red(recovered_peg_small):
    report = recovered_peg_small
    cs = report.recoveries[0].changeset
    text = to_dot(report.final_tree, cs)
    red_edges = [ln for ln in text.splitlines() if re.match(r'  "[^"]+" -> ', ln) and "color=red" in ln]
    assert len(red_edges) == len(cs.inserted_edges) > 0
    assert all("hole_free" in ln for ln in red_edges)
    assert 'digraph "peg-small"' in to_dot(report.final_tree, name="peg-small")


def test_diff_modified_kind():
    old = BTNode.sequence(leaf("a", "a"), node_id="r")
    new = BTNode(NodeKind.FALLBACK, "r", (leaf("a", "a"),))
    assert diff(old, new).modified_nodes == ["r"]
