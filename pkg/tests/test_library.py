import pytest

from btrecover.errors import ParseError, SchemaError, UnknownScenario
from btrecover.library import (
    builtin_completions,
    dump_library,
    load_completions,
    load_library,
    registry_from_dict,
    read_yaml,
)
from btrecover.refs import Ref
from btrecover.scenarios import BUILTIN_SCENARIOS, load_scenario
from conftest import FIXTURES


def test_builtin_library_contents():
    r = load_library()
    names = [s.name for s in r.skills()]
    for skill in ("pick", "place", "insert", "lift", "move_to", "open_door", "turn_handle", "remove_obstacle"):
        assert skill in names
    assert [t.name for t in r.templates()] == ["push"]
    for absent in ("hole_free", "front_clear", "top_clear"):
        assert not r.has_condition(absent)


def test_load_library_returns_fresh_copies():
    a, b = load_library(), load_library()
    a.add_precondition("insert", Ref("near", ("p",)))
    assert b.skill("insert").preconditions == (Ref("holding", ("p",)),)


def test_dump_and_reload_round_trip(tmp_path):
    r = load_library()
    path = tmp_path / "lib.yaml"
    path.write_text(dump_library(r))
    again = load_library(path)
    assert again.skills() == r.skills()
    assert again.conditions() == r.conditions()
    assert again.templates() == r.templates()


def test_yaml_errors_have_locations():
    with pytest.raises(ParseError) as info:
        read_yaml("a: [1, 2\nb: 3\n", "x.yaml")
    assert "line" in info.value.location
    with pytest.raises(SchemaError):
        registry_from_dict({"format": "something/else"})
    with pytest.raises(SchemaError):
        registry_from_dict({"conditions": [{"name": "x"}]})


def test_completions(tmp_path):
    assert builtin_completions() == {"push": {"target": "object", "post": "front_clear(h)", "effect": "push"}}
    path = tmp_path / "c.yaml"
    path.write_text("push: {target: obstacle, post: front_clear(h), effect: push}\n")
    assert load_completions(path)["push"]["target"] == "obstacle"
    path.write_text("- not a mapping\n")
    with pytest.raises(SchemaError):
        load_completions(path)


def test_builtin_scenarios_match_descriptions():
    small = load_scenario("peg_small").initial
    assert small.holds("in", "obstacle_s", "hole1")
    assert small.objects["obstacle_s"].size_class == "small" and small.objects["obstacle_s"].graspable
    large = load_scenario("peg_large").initial
    assert large.holds("blocking", "obstacle_l", "hole1")
    assert large.objects["obstacle_l"].graspable is False and large.objects["obstacle_l"].size_class == "large"
    assert load_scenario("lift_stacked").initial.holds("on", "cube_extra", "cube_target")
    door = load_scenario("door_handle")
    assert not door.initial.holds("handle_turned", "door1")
    assert door.build_registry().skill("open_door").preconditions == ()
    assert load_library().skill("open_door").preconditions == (Ref("handle_turned", ("d",)),)


def test_every_builtin_goal_is_registered():
    for name in BUILTIN_SCENARIOS:
        sc = load_scenario(name)
        sc.goal.validate(sc.build_registry())


def test_scenario_from_path_and_unknown():
    sc = load_scenario(FIXTURES / "scenarios" / "peg_clear.yaml")
    assert sc.name == "peg_clear" and sc.reference is None
    with pytest.raises(UnknownScenario):
        load_scenario("peg_medium")
