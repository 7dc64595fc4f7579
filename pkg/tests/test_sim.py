import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from btrecover.errors import UnknownEffect, UnknownObject
from btrecover.library import builtin_completions
from btrecover.registry import SkillSpec, instantiate_template
from btrecover.scenarios import BUILTIN_SCENARIOS, load_scenario
from btrecover.sim import EFFECT_FRAME, apply_skill, snapshot


def setup(name):
    sc = load_scenario(name)
    reg = sc.build_registry()
    return sc, reg


def push_skill(reg):
    return instantiate_template(reg.template("push"), builtin_completions()["push"])


def test_insert_into_occupied_hole_is_blocked():
    sc, reg = setup("peg_small")
    w = sc.initial
    w, _ = apply_skill(w, reg.skill("move_to"), ("peg",))
    w, _ = apply_skill(w, reg.skill("pick"), ("peg",))
    after, outcome = apply_skill(w, reg.skill("insert"), ("peg", "hole1"))
    assert outcome.effects_blocked and outcome.reason == "occupied"
    assert after.facts == w.facts and after.step == w.step + 1


def test_turn_handle_then_open():
    sc, reg = setup("door_handle")
    w, o1 = apply_skill(sc.initial, reg.skill("open_door"), ("door1",))
    assert o1.reason == "handle not turned"
    w, _ = apply_skill(w, reg.skill("turn_handle"), ("door1",))
    w, o2 = apply_skill(w, reg.skill("open_door"), ("door1",))
    assert o2.fired and w.holds("open", "door1")


def test_push_clears_front_of_hole():
    sc, reg = setup("peg_large")
    w, outcome = apply_skill(sc.initial, push_skill(reg), ("?x", "hole1"))
    assert outcome.fired and outcome.args == ("obstacle_l", "hole1")
    assert not w.holds("blocking", "obstacle_l", "hole1")


def test_grasp_rules():
    sc, reg = setup("peg_large")
    _, o = apply_skill(sc.initial, reg.skill("remove_obstacle"), ("?x", "hole1"))
    assert o.reason == "exceeds gripper affordance"
    sc, reg = setup("peg_small")
    w, o = apply_skill(sc.initial, reg.skill("pick"), ("peg",))
    assert o.fired
    _, o = apply_skill(w, reg.skill("remove_obstacle"), ("?x", "hole1"))
    assert o.reason == "gripper occupied"
    w, _ = apply_skill(w, reg.skill("release"), ())
    w, o = apply_skill(w, reg.skill("remove_obstacle"), ("?x", "hole1"))
    assert o.fired and w.holds("removed", "obstacle_s") and not w.occupants("hole1")


def test_lift_with_cube_on_top_is_blocked():
    sc, reg = setup("lift_stacked")
    w, _ = apply_skill(sc.initial, reg.skill("pick"), ("cube_target",))
    _, o = apply_skill(w, reg.skill("lift"), ("cube_target",))
    assert o.reason == "object on top"


def test_unresolvable_target_is_blocked_not_error():
    sc, reg = setup("door_handle")
    _, o = apply_skill(sc.initial, reg.skill("remove_obstacle"), ("?x", "door1"))
    assert o.reason == "no object to act on"


def test_errors():
    sc, reg = setup("peg_small")
    with pytest.raises(UnknownObject):
        apply_skill(sc.initial, reg.skill("pick"), ("ghost",))
    teleport = SkillSpec("teleport", (), (), (), "teleport")
    with pytest.raises(UnknownEffect):
        apply_skill(sc.initial, teleport, ())


def test_snapshots():
    w = load_scenario("peg_large").initial
    full = snapshot(w, "full", "peg_in_hole")
    assert "obstacle_l: kind=obstacle size_class=large" in full.text
    assert "blocking(obstacle_l,hole1)" in full.text
    blind = snapshot(w, "blind", "peg_in_hole")
    assert "size_class" not in blind.text and "blocking" not in blind.text
    assert "obstacle_l" in blind.text
    assert snapshot(w, "full") == snapshot(w, "full")
    assert type(full).from_dict(full.to_dict()) == full
    assert type(blind).from_dict(blind.to_dict()) == blind


def _calls(reg, world):
    ids = sorted(world.objects)
    skills = [s for s in reg.skills()] + [push_skill(reg)]
    return st.lists(
        st.sampled_from(skills).flatmap(
            lambda s: st.tuples(st.just(s), st.tuples(*[st.sampled_from(ids + ["?v"]) for _ in s.params]))
        ),
        max_size=8,
    )


@pytest.mark.parametrize("name", BUILTIN_SCENARIOS)
def test_random_skill_sequences_keep_invariants_and_frame(name):
    sc, reg = setup(name)

    @settings(max_examples=60, deadline=None)
    @given(_calls(reg, sc.initial))
    def run(calls):
        w = sc.initial
        for skill, args in calls:
            again = apply_skill(w, skill, args)
            nxt, outcome = apply_skill(w, skill, args)
            assert again == (nxt, outcome)
            nxt.validate()
            assert nxt.step == w.step + 1
            changed = {f[0] for f in nxt.facts ^ w.facts}
            assert changed <= EFFECT_FRAME[skill.effect]
            assert set(outcome.added) == nxt.facts - w.facts
            assert set(outcome.removed) == w.facts - nxt.facts
            if outcome.effects_blocked:
                assert nxt.facts == w.facts
            w = nxt

    run()
