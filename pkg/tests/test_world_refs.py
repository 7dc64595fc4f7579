import pytest

from btrecover.errors import ParseError, WorldInvariantError
from btrecover.refs import Ref, canonical_name, is_variable, normalize_name, parse_ref, split_refs
from btrecover.world import ObjectInfo, WorldState


def objs(*specs):
    return {oid: ObjectInfo(oid, kind) for oid, kind in specs}


BASE = objs(("gripper", "gripper"), ("peg", "peg"), ("hole1", "hole"), ("obs", "obstacle"))


def test_parse_ref_forms():
    assert parse_ref("inserted(peg, hole1)") == Ref("inserted", ("peg", "hole1"))
    assert parse_ref("gripper_free") == Ref("gripper_free")
    assert parse_ref("gripper_free()") == Ref("gripper_free")
    assert str(Ref("a", ("x", "y"))) == "a(x,y)"
    with pytest.raises(ParseError):
        parse_ref("bad(x,,y)")
    with pytest.raises(ParseError):
        parse_ref("1abc")


def test_split_refs_respects_parentheses():
    assert split_refs("inserted(peg,hole1), open(door1)") == ["inserted(peg,hole1)", "open(door1)"]


def test_variables():
    assert is_variable("?x") and is_variable(None)
    assert not is_variable("peg")


def test_name_normalization_and_synonyms():
    assert normalize_name("Hole is free") == "hole_is_free"
    assert normalize_name("  Front-Clear ") == "front_clear"
    assert canonical_name("Hole is free") == "hole_free"
    assert canonical_name("Not any obstacle at hole") == "hole_free"
    assert canonical_name("hole clear") == "hole_free"
    assert canonical_name("lifted") == "lifted"


def test_closed_world_and_match():
    w = WorldState(BASE, {("in", "obs", "hole1")})
    assert w.holds("in", "obs", "hole1")
    assert not w.holds("in", "peg", "hole1")
    assert w.match("in", (None, "hole1")) == [("in", "obs", "hole1")]
    assert w.occupants("hole1") == ["obs"]
    assert w.gripper() == "gripper"
    assert w.held_by("gripper") is None


def test_invariants():
    with pytest.raises(WorldInvariantError):
        WorldState(BASE, {("in", "ghost", "hole1")})
    with pytest.raises(WorldInvariantError):
        WorldState(BASE, {("holding", "gripper", "peg"), ("holding", "gripper", "obs")})
    with pytest.raises(WorldInvariantError):
        WorldState(BASE, {("inserted", "peg", "hole1"), ("in", "obs", "hole1")})
    with pytest.raises(WorldInvariantError):
        ObjectInfo("x", "spaceship")
    with pytest.raises(WorldInvariantError):
        ObjectInfo("x", "cube", size_class="huge")


def test_evolve_bumps_step_and_round_trips():
    w = WorldState(BASE, {("in", "obs", "hole1")})
    w2 = w.evolve(add=[("holding", "gripper", "peg")], remove=[("in", "obs", "hole1")])
    assert w2.step == 1 and w.step == 0
    assert w2.facts == frozenset({("holding", "gripper", "peg")})
    assert WorldState.from_dict(w2.to_dict()) == w2
