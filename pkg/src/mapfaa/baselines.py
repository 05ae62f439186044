"""Reference planners.

* ``oracle_solve``: optimal best-first search over joint states for tiny
  instances.  Only agents holding the smallest timestamp are expanded, so
  the branching factor stays finite.  Waits last one time step, the gcd of
  all durations: every event time is a multiple of it, so chained waits can
  end at any event another agent could produce.
* ``sipp_plan`` / ``prioritized_solve``: safe-interval path planning with
  occupancy checked at both ends of every traversal, run agent by agent in
  priority order.  Planned agents rest at their goals forever.
"""

from __future__ import annotations

import heapq
import itertools
import math
import time
from dataclasses import dataclass
from typing import Iterable, Sequence

from .planner import FAILURE, SOLVED, TIMEOUT, PathEntry, Solution, TimedPath
from .state import IndividualState, default_priorities, intervals_overlap, occupancy_of
from .timegraph import INF, Instance
from .validator import path_occupancy

# hard caps of the joint-space oracle
ORACLE_MAX_AGENTS = 3
ORACLE_MAX_VERTICES = 64
ORACLE_MAX_EXPANSIONS = 2_000_000


class OracleCapExceeded(ValueError):
    """Instance too large for exhaustive joint-space search."""


# --------------------------------------------------------------------------
# safe intervals


class SafeIntervalTable:
    """Free time windows per vertex, as closed intervals in half-tick space.

    Obstacle occupancy is added as closed half-tick intervals ``(lo2, hi2)``;
    ``hi2 == INF`` blocks forever.  Safe intervals are the complement within
    ``[0, INF]``.
    """

    def __init__(self, num_vertices: int):
        self._blocked: list[list[tuple[int, int]]] = [[] for _ in range(num_vertices)]
        self._safe: dict[int, list[tuple[int, int]]] = {}

    def block(self, v: int, lo2: int, hi2: int) -> None:
        self._blocked[v].append((lo2, hi2))
        self._safe.pop(v, None)

    def block_path(self, path: Sequence[PathEntry]) -> None:
        for v, lo2, hi2 in path_occupancy(path):
            self.block(v, lo2, hi2)

    def safe(self, v: int) -> list[tuple[int, int]]:
        out = self._safe.get(v)
        if out is not None:
            return out
        out = []
        start = 0
        for lo2, hi2 in sorted(self._blocked[v]):
            if lo2 > start:
                out.append((start, lo2 - 1))
            start = max(start, hi2 + 1)
            if start >= INF:
                break
        if start < INF:
            out.append((start, INF))
        self._safe[v] = out
        return out


def sipp_plan(agent: int, instance: Instance, table: SafeIntervalTable) -> TimedPath | None:
    """Earliest-arrival path for one agent that stays inside the safe intervals."""
    graph = instance.graph
    start, goal = instance.starts[agent], instance.goals[agent]
    dur = instance.durations
    h = instance.dist(agent)
    first = table.safe(start)
    if not first or first[0][0] != 0:
        return None
    # node: (vertex, interval index); value: earliest arrival tick
    best = {(start, 0): 0}
    parent: dict[tuple[int, int], tuple[tuple[int, int], int] | None] = {(start, 0): None}
    counter = itertools.count()
    heap = [(h[start], 0, next(counter), start, 0)]
    while heap:
        _f, arrive, _, u, idx = heapq.heappop(heap)
        if best.get((u, idx)) != arrive:
            continue
        slo, shi = table.safe(u)[idx]
        if u == goal and shi >= INF:
            return _sipp_path(parent, (u, idx), best)
        for w in graph.neighbors[u]:
            d = dur(agent, u, w)
            for jdx, (jlo, jhi) in enumerate(table.safe(w)):
                if jhi < 2 * arrive:
                    continue
                t0 = max(arrive, -((1 - jlo) // 2))  # ceil((jlo - 1) / 2)
                if 2 * t0 + 2 * d - 1 > shi:
                    break  # later intervals need even later departures
                if 2 * t0 + 2 * d > jhi:
                    continue
                t1 = t0 + d
                key = (w, jdx)
                if t1 < best.get(key, INF):
                    best[key] = t1
                    parent[key] = ((u, idx), t0)
                    heapq.heappush(heap, (t1 + h[w], t1, next(counter), w, jdx))
    return None


def _sipp_path(parent, node, best) -> TimedPath:
    rev = []
    depart = best[node]
    while node is not None:
        link = parent[node]
        rev.append(PathEntry(node[0], best[node], depart))
        if link is None:
            break
        node, depart = link
    rev.reverse()
    return rev


def prioritized_solve(instance: Instance, order: Sequence[int] | None = None,
                      seed: int = 0, time_limit: float = 30.0) -> Solution:
    """Plan agents one by one (highest priority first) with ``sipp_plan``."""
    instance.check_reachable()
    n = instance.n_agents
    if order is None:
        eps0 = instance.priorities or default_priorities(n, seed)
        order = sorted(range(n), key=lambda i: -eps0[i])
    t_start = time.perf_counter()
    table = SafeIntervalTable(instance.graph.num_vertices)
    paths: list[TimedPath | None] = [None] * n
    status = SOLVED
    for i in order:
        if time.perf_counter() - t_start > time_limit:
            status = TIMEOUT
            break
        path = sipp_plan(i, instance, table)
        if path is None:
            status = FAILURE
            break
        paths[i] = path
        table.block_path(path)
    wall_ms = (time.perf_counter() - t_start) * 1000.0
    if status != SOLVED:
        paths = [p or [PathEntry(instance.starts[i], 0, 0)] for i, p in enumerate(paths)]
    return Solution(list(paths), status, "sipp-prio", iterations=n, wall_ms=wall_ms)


# --------------------------------------------------------------------------
# optimal joint-space oracle


@dataclass(frozen=True)
class OracleLimits:
    max_agents: int = ORACLE_MAX_AGENTS
    max_vertices: int = ORACLE_MAX_VERTICES
    max_expansions: int = ORACLE_MAX_EXPANSIONS


# per-agent record inside a joint state:
# (p, v, tp, tv, last_arrival, finished)
_Agent = tuple[int, int, int, int, int, bool]


def _lower_bound(rec: _Agent, goal: int, dist: Sequence[int]) -> int:
    _p, v, _tp, tv, last_arrival, finished = rec
    if finished or v == goal:
        return last_arrival
    return tv + dist[v]


def _conflicts(action: IndividualState, others: Iterable[IndividualState]) -> bool:
    mine = occupancy_of(action)
    for other in others:
        for v, iv in occupancy_of(other):
            for w, jv in mine:
                if v == w and intervals_overlap(iv, jv):
                    return True
    return False


def oracle_solve(instance: Instance, limits: OracleLimits | None = None) -> Solution | None:
    """Minimum sum-of-costs solution, or None when the expansion budget runs out.

    Raises ``OracleCapExceeded`` for instances beyond the hard caps.
    """
    limits = limits or OracleLimits()
    n = instance.n_agents
    if n > limits.max_agents or instance.graph.num_vertices > limits.max_vertices:
        raise OracleCapExceeded(
            f"oracle handles at most {limits.max_agents} agents on {limits.max_vertices} vertices"
            f" (got {n} on {instance.graph.num_vertices})")
    instance.check_reachable()
    t_start = time.perf_counter()
    graph, goals, dur = instance.graph, instance.goals, instance.durations
    dists = [instance.dist(i) for i in range(n)]
    step = math.gcd(*dur.per_agent, *(dur.table or {}).values())

    root = tuple((s, s, 0, 0, 0, False) for s in instance.starts)
    counter = itertools.count()
    f0 = sum(_lower_bound(r, goals[i], dists[i]) for i, r in enumerate(root))
    heap = [(f0, next(counter), root)]
    parent: dict[tuple, tuple | None] = {root: None}
    closed: set[tuple] = set()
    expansions = 0
    while heap:
        f, _, node = heapq.heappop(heap)
        if node in closed:
            continue
        closed.add(node)
        if all(rec[5] for rec in node):
            paths = _oracle_paths(node, parent, n)
            wall_ms = (time.perf_counter() - t_start) * 1000.0
            return Solution(paths, SOLVED, "oracle", iterations=expansions, wall_ms=wall_ms)
        expansions += 1
        if expansions > limits.max_expansions:
            return None
        live = [i for i in range(n) if not node[i][5]]
        i = min(live, key=lambda a: (node[a][3], a))
        _p, v, _tp, t, last_arrival, _ = node[i]
        others = [IndividualState(*node[j][:4]) for j in range(n) if j != i]
        succ: list[_Agent] = []
        if v == goals[i]:
            succ.append((v, v, t, INF, last_arrival, True))
        for w in graph.neighbors[v]:
            t1 = t + dur(i, v, w)
            succ.append((v, w, t, t1, t1, False))
        if any(not node[j][5] for j in range(n) if j != i):
            # waiting only pays off while someone else can still move
            succ.append((v, v, t, t + step, last_arrival, False))
        for rec in succ:
            action = IndividualState(*rec[:4])
            if _conflicts(action, others):
                continue
            child = node[:i] + (rec,) + node[i + 1:]
            if child in closed:
                continue
            fc = sum(_lower_bound(r, goals[a], dists[a]) for a, r in enumerate(child))
            if child not in parent:
                parent[child] = node
            heapq.heappush(heap, (fc, next(counter), child))
    return None


def _oracle_paths(node, parent, n) -> list[TimedPath]:
    chains: list[list[tuple]] = [[] for _ in range(n)]
    chain_nodes = []
    while node is not None:
        chain_nodes.append(node)
        node = parent[node]
    for node in reversed(chain_nodes):
        for i, rec in enumerate(node):
            if not chains[i] or chains[i][-1] != rec:
                chains[i].append(rec)
    paths = []
    for chain in chains:
        entries = [[chain[0][1], 0, 0]]
        for p, v, tp, tv, _la, finished in chain[1:]:
            if finished:
                break
            if p == v:
                entries[-1][2] = tv
            else:
                entries[-1][2] = tp
                entries.append([v, tv, tv])
        entries[-1][2] = entries[-1][1]
        paths.append([PathEntry(*e) for e in entries])
    return paths
