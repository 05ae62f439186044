from __future__ import annotations

import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mapfaa.state import (ActionCache, IndividualState, Interval, PriorityState, TimestampQueue, default_priorities,
                          intervals_overlap, occupancy_of)

# bracket truth table for two intervals meeting at t = 5
TOUCHING = [
    (Interval(2, 5, True, False), Interval(5, 8, True, True), False),   # [2,5) vs [5,8]
    (Interval(2, 5, True, True), Interval(5, 8, True, True), True),     # [2,5] vs [5,8]
    (Interval(2, 5, True, True), Interval(5, 8, False, True), False),   # [2,5] vs (5,8]
    (Interval(2, 5, False, True), Interval(5, 8, True, False), True),   # (2,5] vs [5,8)
    (Interval(2, 5, True, False), Interval(5, 8, False, True), False),  # [2,5) vs (5,8]
]


@pytest.mark.parametrize("a,b,expected", TOUCHING)
def test_touching_truth_table(a, b, expected):
    assert intervals_overlap(a, b) is expected
    assert intervals_overlap(b, a) is expected


def _member(iv: Interval, x: float) -> bool:
    lo_ok = iv.lo <= x if iv.lo_closed else iv.lo < x
    hi_ok = x <= iv.hi if iv.hi_closed else x < iv.hi
    return lo_ok and hi_ok


intervals = st.builds(lambda lo, span, a, b: Interval(lo, lo + span, a, b),
                      st.integers(0, 12), st.integers(0, 6), st.booleans(), st.booleans())


@given(intervals, intervals)
def test_overlap_matches_half_tick_sampling(a, b):
    sampled = any(_member(a, x / 2) and _member(b, x / 2) for x in range(0, 40))
    assert intervals_overlap(a, b) == sampled


def test_occupancy_semantics():
    move = IndividualState(1, 2, 3, 5)
    assert occupancy_of(move) == [(1, Interval(3, 5, True, False)), (2, Interval(3, 5, False, True))]
    wait = IndividualState(4, 4, 0, 2)
    assert occupancy_of(wait) == [(4, Interval(0, 2, True, True))]
    assert wait.is_wait and not move.is_wait


def test_default_priorities_distinct_and_seeded():
    p = default_priorities(7, 3)
    assert sorted(p) == [k / 8 for k in range(1, 8)]
    assert p == default_priorities(7, 3)
    assert p != default_priorities(7, 4)


class NaivePriorities:
    """Priorities updated exactly as described: goal agents reset, others +1."""

    def __init__(self, eps0, at_goal):
        self.eps0 = list(eps0)
        self.eps = list(eps0)
        self.at_goal = list(at_goal)

    def update(self):
        for i in range(len(self.eps)):
            self.eps[i] = self.eps0[i] if self.at_goal[i] else self.eps[i] + 1


@given(st.integers(2, 6), st.integers(0, 10_000))
def test_lazy_priorities_match_naive(n, seed):
    rng = random.Random(seed)
    eps0 = default_priorities(n, seed)
    at_goal = [rng.random() < 0.3 for _ in range(n)]
    lazy, naive = PriorityState(eps0, at_goal), NaivePriorities(eps0, at_goal)
    for _ in range(30):
        lazy.update()
        naive.update()
        assert lazy.values() == pytest.approx(naive.eps)
        expected_top = max(range(n), key=lambda i: naive.eps[i])
        assert lazy.top() == expected_top
        for i in range(n):
            if rng.random() < 0.3:
                flag = not naive.at_goal[i]
                naive.at_goal[i] = flag
                lazy.set_at_goal(i, flag)


def test_priority_validation():
    with pytest.raises(ValueError):
        PriorityState([0.5, 0.5], [False, False])
    with pytest.raises(ValueError):
        PriorityState([1.5], [False])


def test_timestamp_queue():
    q = TimestampQueue([3, 1, 3])
    q.add(5)
    q.add(1)
    assert len(q) == 3 and 5 in q
    assert [q.pop(), q.pop()] == [1, 3]
    with pytest.raises(ValueError):
        q.add(2)
    q.add(3)
    assert q.pop() == 3 and q.pop() == 5 and not q


@given(st.lists(st.integers(0, 50), min_size=1, max_size=40))
def test_timestamp_queue_pops_strictly_increase(ts):
    q = TimestampQueue()
    for t in ts:
        q.add(t)
    popped = [q.pop() for _ in range(len(q))]
    assert popped == sorted(set(ts))


def test_action_cache():
    c = ActionCache()
    st_ = IndividualState(1, 2, 4, 6)
    c.put(0, st_)
    with pytest.raises(AssertionError):
        c.put(0, st_)
    assert c.take(0, 3) is None and 0 in c
    assert c.take(0, 4) == st_ and len(c) == 0
