"""Swap detection for LSRP-SWAP.

Detection is purely topological: it simulates a corridor of pull operations
and never looks at durations.  The timing of an actual swap is handled by the
planner through ``wait_and_move``.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Sequence

from .timegraph import Graph

if TYPE_CHECKING:  # pragma: no cover
    from .planner import PlannerContext


class SwapProbe:
    """Positions of the pulling and the pulled agent during a simulation."""

    __slots__ = ("puller", "pulled")

    def __init__(self, puller: int, pulled: int):
        assert puller != pulled
        self.puller = puller
        self.pulled = pulled

    def advance(self, nxt: int) -> None:
        self.pulled, self.puller = self.puller, nxt
        assert self.puller != self.pulled


def swap_check(graph: Graph, puller_at: int, pulled_at: int,
               puller_dist: Sequence[int], pulled_goal: int) -> bool:
    """Whether pulling alone fails to exchange the two agents.

    The puller keeps stepping to its only free neighbour while the pulled
    agent follows into the vacated vertex.  Returns

    * False as soon as the puller has two or more ways out (a branch lets the
      agents pass each other),
    * True at a dead end, or when the walk closes a cycle,
    * when the pulled agent stands on its own goal: True iff the puller's
      preferred vertex (nearest to the puller's goal, staying allowed) is the
      pulled agent's vertex.
    """
    nbrs = graph.neighbors
    probe = SwapProbe(puller_at, pulled_at)
    for _ in range(graph.num_vertices + 1):
        around = nbrs[probe.puller]
        n = len(around)
        nxt = -1
        for u in around:
            if u == probe.pulled:
                n -= 1
            else:
                nxt = u
        if n >= 2:
            return False
        if n <= 0:
            return True
        if probe.pulled == pulled_goal:
            pref = min((probe.puller, *around), key=lambda u: (puller_dist[u], u))
            return pref == probe.pulled
        probe.advance(nxt)
        if probe.puller == pulled_at:
            return True
    return True


def occupant(ctx: "PlannerContext", v: int) -> int | None:
    """The agent planning now whose current vertex is ``v`` and that has no next state yet."""
    return ctx.occupant.get(v)


def swap_required_possible(ctx: "PlannerContext", i: int, v: int) -> int | None:
    """Partner agent ``i`` should swap with before heading to ``v``, if any.

    ``v`` is the candidate nearest to ``i``'s goal.  The first test looks at
    the agent standing on ``v``; the second looks at unplanned neighbours of
    ``i``, imagining ``i`` already at ``v`` and the neighbour behind it; such
    a neighbour only counts when ``v`` is closer to its own goal than ``vi``.
    """
    cur = ctx.cur
    vi = cur[i].v
    if v == vi:
        return None
    graph, dist, goals = ctx.graph, ctx.dist, ctx.goals
    j = occupant(ctx, v)
    if j is not None and j != i:
        vj = cur[j].v
        if (swap_check(graph, vj, vi, dist[j], goals[i])
                and not swap_check(graph, vi, vj, dist[i], goals[j])):
            return j
    for u in graph.neighbors[vi]:
        k = occupant(ctx, u)
        if k is None or k == i or cur[k].v == v:
            continue
        if dist[k][v] >= dist[k][vi]:
            continue  # k gains nothing by following i, so i leaving vi already frees its way
        if (swap_check(graph, v, vi, dist[i], goals[k])
                and not swap_check(graph, vi, v, dist[k], goals[i])):
            return k
    return None
