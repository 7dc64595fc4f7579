import pytest

from btrecover.bt import NodeKind
from btrecover.errors import InvalidGoal, SchemaError, StaleRegistry
from btrecover.library import load_library
from btrecover.planner import Goal, PlannerConfig, plan, replan_after_update
from btrecover.refs import Ref
from btrecover.registry import Condition, Param
from btrecover.scenarios import BUILTIN_SCENARIOS, load_scenario

HOLE_FREE = Condition("hole_free", (Param("h", "hole"),), "in", ("_", "?h"), negated=True)
PEG_GOAL = Goal.parse("inserted(peg,hole1)")


def shape(node):
    if node.kind is NodeKind.CONDITION:
        return f"{node.ref}?"
    if node.kind is NodeKind.SKILL:
        return f"{node.ref}!"
    name = "Seq" if node.kind is NodeKind.SEQUENCE else "Fb"
    return f"{name}({', '.join(shape(c) for c in node.children)})"


def test_initial_peg_tree_shape():
    tree = plan(PEG_GOAL, load_library()).tree
    assert shape(tree) == (
        "Fb(inserted(peg,hole1)?, Seq("
        "Fb(holding(peg)?, Seq("
        "Fb(gripper_free()?, Seq(release()!)), "
        "Fb(near(peg)?, Seq(move_to(peg)!)), pick(peg)!)), "
        "insert(peg,hole1)!))"
    )
    assert tree.node_id == "fb[inserted(peg,hole1)]"
    assert tree.children[1].children[-1].node_id == "fb[inserted(peg,hole1)]/seq/skill[insert(peg,hole1)]"


def test_condition_without_achiever_is_a_leaf():
    r = load_library()
    r.register_condition(HOLE_FREE)
    tree = plan(Goal.parse("hole_free(hole1)"), r).tree
    assert tree.kind is NodeKind.CONDITION and tree.ref == Ref("hole_free", ("hole1",))


def test_multiple_goals_share_a_sequence_root():
    tree = plan(Goal.parse("near(peg)", "open(door1)"), load_library()).tree
    assert tree.kind is NodeKind.SEQUENCE and tree.node_id == "seq"
    assert [c.node_id for c in tree.children] == ["seq/fb[near(peg)]", "seq/fb[open(door1)]"]


def test_invalid_goals():
    with pytest.raises(InvalidGoal):
        plan(Goal.parse("hole_free(hole1)"), load_library())
    with pytest.raises(InvalidGoal):
        plan(Goal.parse("inserted(peg)"), load_library())
    with pytest.raises(SchemaError):
        Goal(())
    with pytest.raises(ValueError):
        PlannerConfig(max_depth=0)


def test_depth_limit_records_warning():
    result = plan(PEG_GOAL, load_library(), PlannerConfig(max_depth=1))
    assert shape(result.tree) == "Fb(inserted(peg,hole1)?, Seq(holding(peg)?, insert(peg,hole1)!))"
    assert result.warnings and result.warnings[0].startswith("DepthExhaustedWarning: holding(peg)")
    assert plan(PEG_GOAL, load_library()).warnings == []


def test_cycle_guard():
    r = load_library()
    # pick now needs holding(x) itself: the inner occurrence must stay a leaf
    r.add_precondition("pick", Ref("holding", ("x",)))
    tree = plan(Goal.parse("holding(peg)"), r).tree
    seq = tree.children[1]
    assert seq.children[0].kind is NodeKind.CONDITION and seq.children[0].ref == Ref("holding", ("peg",))


def test_adding_hole_free_inserts_one_subtree():
    r = load_library()
    before = plan(PEG_GOAL, r)
    r.register_condition(HOLE_FREE)
    r.add_precondition("insert", Ref("hole_free", ("h",)))
    r.add_postcondition("remove_obstacle", Ref("hole_free", ("h",)))
    after, cs = replan_after_update(PEG_GOAL, r, None, before)
    [root] = cs.inserted_roots(after.tree)
    assert shape(root) == "Fb(hole_free(hole1)?, Seq(Fb(gripper_free()?, Seq(release()!)), remove_obstacle(?x,hole1)!))"
    assert not cs.removed_nodes and not cs.modified_nodes
    assert after.registry_version == before.registry_version + 3


def test_door_replan_inserts_handle_subtree():
    sc = load_scenario("door_handle")
    r = sc.build_registry()
    before = plan(sc.goal, r)
    assert shape(before.tree) == "Fb(open(door1)?, Seq(open_door(door1)!))"
    r.add_precondition("open_door", Ref("handle_turned", ("d",)))
    after, cs = replan_after_update(sc.goal, r, None, before)
    assert [shape(n) for n in cs.inserted_roots(after.tree)] == ["Fb(handle_turned(door1)?, Seq(turn_handle(door1)!))"]


def test_stale_registry():
    r = load_library()
    before = plan(PEG_GOAL, r)
    with pytest.raises(StaleRegistry):
        replan_after_update(PEG_GOAL, r, None, before)


@pytest.mark.parametrize("name", BUILTIN_SCENARIOS)
def test_planning_is_deterministic_and_preconditions_precede_skills(name):
    sc = load_scenario(name)
    r = sc.build_registry()
    a, b = plan(sc.goal, r), plan(sc.goal, r)
    assert a.tree == b.tree
    for node in a.tree.walk():
        if node.kind is not NodeKind.SEQUENCE or node.children[-1].kind is not NodeKind.SKILL:
            continue
        skill = r.skill(node.children[-1].ref.name)
        guards = [c.ref if c.kind is NodeKind.CONDITION else c.children[0].ref for c in node.children[:-1]]
        assert [g.name for g in guards] == [p.name for p in skill.preconditions]
