"""Planner working set: individual states, priorities, timestamp queue, cache.

Occupancy follows the duration-conflict model.  A move ``p -> v`` over
``(t_p, t_v)`` holds ``p`` on ``[t_p, t_v)`` and ``v`` on ``(t_p, t_v]``; a
wait holds its vertex on the closed interval ``[t_p, t_v]``.
"""

from __future__ import annotations

import heapq
import random
from typing import NamedTuple, Sequence


class IndividualState(NamedTuple):
    p: int   # departure vertex
    v: int   # arrival vertex
    tp: int  # departure time (ticks)
    tv: int  # arrival time (ticks)

    @property
    def is_wait(self) -> bool:
        return self.p == self.v


class Interval(NamedTuple):
    """Time interval with explicit bracket kinds."""

    lo: int
    hi: int
    lo_closed: bool = True
    hi_closed: bool = True

    def doubled(self) -> tuple[int, int]:
        """Closed integer interval in half-tick space.

        Mapping ``t -> 2t`` and an open bound ``a`` to ``2a +/- 1`` turns every
        interval with tick endpoints into a closed one; two such intervals
        intersect iff their doubled forms do.
        """
        return (2 * self.lo if self.lo_closed else 2 * self.lo + 1,
                2 * self.hi if self.hi_closed else 2 * self.hi - 1)

    def contains(self, t2: int) -> bool:
        """Membership of the half-tick point ``t2`` (time ``t2 / 2``)."""
        lo, hi = self.doubled()
        return lo <= t2 <= hi

    def __str__(self):
        return f"{'[' if self.lo_closed else '('}{self.lo},{self.hi}{']' if self.hi_closed else ')'}"


def occupancy_of(state: IndividualState) -> list[tuple[int, Interval]]:
    """Vertices held by one action and when."""
    p, v, tp, tv = state
    if p == v:
        return [(v, Interval(tp, tv, True, True))]
    return [(p, Interval(tp, tv, True, False)), (v, Interval(tp, tv, False, True))]


def intervals_overlap(a: Interval, b: Interval) -> bool:
    alo, ahi = a.doubled()
    blo, bhi = b.doubled()
    return max(alo, blo) <= min(ahi, bhi)


# --------------------------------------------------------------------------
# priorities


def default_priorities(n: int, seed: int) -> tuple[float, ...]:
    """Distinct initial priorities ``(n - rank) / (n + 1)`` from a seeded shuffle."""
    order = list(range(n))
    random.Random(seed).shuffle(order)
    eps0 = [0.0] * n
    for rank, agent in enumerate(order):
        eps0[agent] = (n - rank) / (n + 1)
    return tuple(eps0)


class PriorityState:
    """Current priorities ``eps0[i] + bonus[i]`` kept exact as ``(bonus, eps0)``.

    The integer bonus is reset to zero for agents at their goal and grows by
    one per update otherwise.  Bonuses are stored lazily: an agent away from
    its goal has ``bonus = updates - last_reset``.
    """

    def __init__(self, eps0: Sequence[float], at_goal: Sequence[bool]):
        if len(set(eps0)) != len(eps0):
            raise ValueError("initial priorities must be pairwise distinct")
        if any(not 0.0 <= e <= 1.0 for e in eps0):
            raise ValueError("initial priorities must lie in [0, 1]")
        self.eps0 = tuple(eps0)
        self.updates = 0
        self.last_reset = [0] * len(eps0)
        self.at_goal = list(at_goal)
        # max-heap over agents away from their goal: (last_reset, -eps0, agent)
        self._heap = [(0, -e, i) for i, e in enumerate(self.eps0) if not self.at_goal[i]]
        heapq.heapify(self._heap)

    def update(self) -> None:
        """One priority update (agents at goal reset, all others +1)."""
        self.updates += 1

    def set_at_goal(self, agent: int, at_goal: bool) -> None:
        """Record the agent's goal status as of the most recent joint state."""
        if at_goal == self.at_goal[agent]:
            return
        self.at_goal[agent] = at_goal
        if not at_goal:
            # the agent was reset at the latest update and starts growing again
            self.last_reset[agent] = self.updates
            heapq.heappush(self._heap, (self.updates, -self.eps0[agent], agent))

    def bonus(self, agent: int) -> int:
        if self.at_goal[agent]:
            return 0
        return self.updates - self.last_reset[agent]

    def value(self, agent: int) -> float:
        return self.eps0[agent] + self.bonus(agent)

    def key(self, agent: int) -> tuple[int, float]:
        """Sort key equal in order to the real priority value."""
        return (self.bonus(agent), self.eps0[agent])

    def top(self) -> int | None:
        """Agent with the strictly largest priority."""
        heap = self._heap
        while heap:
            lr, neg, agent = heap[0]
            if self.at_goal[agent] or self.last_reset[agent] != lr:
                heapq.heappop(heap)
                continue
            return agent
        if not self.eps0:
            return None
        # every agent is at its goal: all bonuses are zero
        return max(range(len(self.eps0)), key=self.eps0.__getitem__)

    def values(self) -> list[float]:
        return [self.value(i) for i in range(len(self.eps0))]


# --------------------------------------------------------------------------
# timestamp queue and action cache


class TimestampQueue:
    """Set of distinct timestamps with min-extraction."""

    def __init__(self, items: Sequence[int] = ()):
        self._heap = sorted(set(items))
        self._members = set(self._heap)
        self.last_popped: int | None = None

    def add(self, t: int) -> None:
        if t in self._members:
            return
        if self.last_popped is not None and t < self.last_popped:
            raise ValueError(f"timestamp {t} precedes the last planning time {self.last_popped}")
        self._members.add(t)
        heapq.heappush(self._heap, t)

    def pop(self) -> int:
        t = heapq.heappop(self._heap)
        self._members.discard(t)
        self.last_popped = t
        return t

    def top(self) -> int:
        return self._heap[0]

    def __len__(self):
        return len(self._heap)

    def __bool__(self):
        return bool(self._heap)

    def __contains__(self, t):
        return t in self._members


class ActionCache:
    """Pending future moves, at most one per agent."""

    def __init__(self):
        self._pending: dict[int, IndividualState] = {}

    def put(self, agent: int, state: IndividualState) -> None:
        assert agent not in self._pending, f"agent {agent} already has a pending action"
        self._pending[agent] = state

    def take(self, agent: int, t: int) -> IndividualState | None:
        """Remove and return the agent's pending action starting at ``t``."""
        st = self._pending.get(agent)
        if st is None or st.tp != t:
            return None
        del self._pending[agent]
        return st

    def peek(self, agent: int) -> IndividualState | None:
        return self._pending.get(agent)

    def __len__(self):
        return len(self._pending)

    def __contains__(self, agent):
        return agent in self._pending
