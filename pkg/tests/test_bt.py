import json

import pytest

from btrecover.bt import (
    BTNode,
    NodeKind,
    NodeStatus,
    deserialize,
    number_nodes,
    serialize,
    tick,
    validate_tree,
)
from btrecover.errors import MalformedTree, ParseError, SchemaError, UnknownReference
from btrecover.monitor import SimExecutor
from btrecover.planner import plan
from btrecover.refs import Ref
from strategies import StubExecutor

EX = StubExecutor()
WORLD = {"c0": True, "c1": False, "c2": True, "c3": False,
         "s0": NodeStatus.SUCCESS, "s1": NodeStatus.FAILURE, "s2": NodeStatus.RUNNING, "s3": NodeStatus.SUCCESS}


def cond(name):
    return BTNode.condition(Ref(name))


def skill(name):
    return BTNode.skill(Ref(name))


def run(tree):
    return tick(number_nodes(tree), WORLD, EX)


def test_sequence_of_true_conditions_succeeds():
    assert run(BTNode.sequence(cond("c0"), cond("c2")))[0] is NodeStatus.SUCCESS


def test_fallback_returns_first_non_failure():
    assert run(BTNode.fallback(cond("c1"), skill("s2")))[0] is NodeStatus.RUNNING


def test_sequence_stops_at_running_child():
    status, trace = run(BTNode.sequence(skill("s2"), skill("s0")))
    assert status is NodeStatus.RUNNING
    assert [s for _, s in trace.entries] == [NodeStatus.RUNNING, NodeStatus.RUNNING]


def test_fallback_fails_when_all_children_fail():
    status, trace = run(BTNode.fallback(cond("c1"), skill("s1"), cond("c3")))
    assert status is NodeStatus.FAILURE
    assert len(trace.entries) == 4


def test_trace_is_preorder_with_root_first():
    tree = number_nodes(BTNode.sequence(BTNode.fallback(cond("c1"), skill("s0")), cond("c0")))
    _, trace = tick(tree, WORLD, EX, tick_index=7)
    assert trace.tick_index == 7
    assert [i for i, _ in trace.entries] == ["0", "0.0", "0.0.0", "0.0.1", "0.1"]


def test_empty_control_node_is_malformed():
    empty = BTNode(NodeKind.SEQUENCE, "root", ())
    with pytest.raises(MalformedTree):
        tick(empty, WORLD, EX)
    with pytest.raises(MalformedTree):
        validate_tree(empty)


def test_leaf_invariants_enforced():
    with pytest.raises(MalformedTree):
        BTNode(NodeKind.CONDITION, "x", (cond("c0"),), Ref("c0"))
    with pytest.raises(MalformedTree):
        BTNode(NodeKind.SKILL, "x")
    with pytest.raises(MalformedTree):
        BTNode(NodeKind.SEQUENCE, "x", (cond("c0"),), Ref("c0"))


def test_duplicate_ids_rejected():
    tree = BTNode.sequence(BTNode.condition(Ref("a"), "n"), BTNode.condition(Ref("b"), "n"), node_id="r")
    with pytest.raises(MalformedTree):
        validate_tree(tree)


def test_unknown_reference_surfaces_from_executor(peg_small):
    registry = peg_small.build_registry()
    tree = BTNode.condition(Ref("no_such_condition", ("hole1",)), "x")
    with pytest.raises(UnknownReference):
        tick(tree, peg_small.initial, SimExecutor(registry))


def test_initial_peg_tree_fails_at_insert(peg_small):
    registry = peg_small.build_registry()
    tree = plan(peg_small.goal, registry).tree
    status, trace = tick(tree, peg_small.initial, SimExecutor(registry))
    assert status is NodeStatus.FAILURE
    assert trace.last == ("fb[inserted(peg,hole1)]/seq/skill[insert(peg,hole1)]", NodeStatus.FAILURE)
    assert trace.world.holds("holding", "gripper", "peg")


def test_single_condition_round_trips():
    leaf = BTNode.condition(Ref("hole_free", ("hole1",)), "c")
    assert deserialize(serialize(leaf)) == leaf


def test_document_fields():
    doc = json.loads(serialize(number_nodes(BTNode.sequence(cond("c0"), skill("s0")))))
    assert doc["format"] == "btrecover.bt/1"
    root = doc["root"]
    assert root["kind"] == "Sequence" and root["node_id"] == "0"
    assert root["children"][0] == {"kind": "Condition", "node_id": "0.0", "condition": {"name": "c0", "args": []}}
    assert root["children"][1]["skill"] == {"name": "s0", "args": []}


def test_parallel_kind_is_schema_error():
    doc = json.dumps({"root": {"kind": "Parallel", "node_id": "p", "children": []}})
    with pytest.raises(SchemaError):
        deserialize(doc)


def test_schema_error_carries_path():
    doc = json.dumps({"root": {"kind": "Sequence", "node_id": "r", "children": [
        {"kind": "Condition", "node_id": "a", "condition": {"name": "x"}},
        {"kind": "Skill", "node_id": "b"},
    ]}})
    with pytest.raises(SchemaError) as info:
        deserialize(doc)
    assert info.value.location == "root.children[1]"


def test_extra_field_and_duplicate_id_rejected():
    extra = {"root": {"kind": "Condition", "node_id": "a", "condition": {"name": "x"}, "colour": "red"}}
    with pytest.raises(SchemaError):
        deserialize(json.dumps(extra))
    dup = {"root": {"kind": "Sequence", "node_id": "a", "children": [
        {"kind": "Condition", "node_id": "a", "condition": {"name": "x"}}]}}
    with pytest.raises(SchemaError):
        deserialize(json.dumps(dup))


def test_parse_error_has_line_and_column():
    with pytest.raises(ParseError) as info:
        deserialize('{\n  "root": [1,,2]\n}')
    assert info.value.location == "line 2 column 14"


def test_pretty_and_labels():
    tree = number_nodes(BTNode.fallback(BTNode.condition(Ref("open", ("door1",))), BTNode.skill(Ref("open_door", ("door1",)))))
    assert tree.pretty().splitlines() == ["Fallback", "  open(door1)?", "  open_door(door1)!"]
    assert [n.label() for n in tree.walk()] == ["?", "open(door1)?", "open_door(door1)!"]
