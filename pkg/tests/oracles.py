"""Brute-force reference answers, independent of the planner and the BT engine."""

from collections import deque
from itertools import product

from btrecover.refs import Ref
from btrecover.sim import apply_skill


def ground_calls(registry, world):
    """Every skill instance over the world's objects."""
    ids = sorted(world.objects)
    calls = []
    for skill in registry.skills():
        for args in product(ids, repeat=len(skill.params)):
            calls.append((skill, args))
    return calls


def bfs_plan(registry, world, goal, max_len=6):
    """Shortest skill sequence (as Refs) whose execution satisfies every goal ref.

    Only steps whose effects fire are expanded; states are deduplicated on
    their fact set. Returns None if nothing within ``max_len`` works.
    """
    def done(w):
        return all(registry.evaluate(g, w) for g in goal)

    if done(world):
        return []
    calls = ground_calls(registry, world)
    seen = {world.facts}
    queue = deque([(world, [])])
    while queue:
        w, path = queue.popleft()
        if len(path) >= max_len:
            continue
        for skill, args in calls:
            nxt, outcome = apply_skill(w, skill, args)
            if not outcome.fired or nxt.facts in seen:
                continue
            step = path + [Ref(skill.name, tuple(args))]
            if done(nxt):
                return step
            seen.add(nxt.facts)
            queue.append((nxt, step))
    return None
