"""LSRP: loosely synchronized rule-based planning.

The main loop pops the earliest pending timestamp, collects the agents whose
current action ends there and gives each of them a next action: a cached
move if one was scheduled, otherwise a recursive asynchronous push in the
style of PIBT.  A pushed agent's arrival time tells the pusher how long it
must wait before following; that delayed move is cached until its start.
"""

from __future__ import annotations

import json
import random
import sys
import time
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from .state import ActionCache, IndividualState, PriorityState, TimestampQueue, default_priorities
from .swap import swap_required_possible
from .timegraph import (FormatError, Graph, Instance, diameter, eccentricity, ticks_to_units, to_ticks,
                        vertex_from_json, vertex_to_json)

SOLVED = "solved"
TIMEOUT = "timeout"
ITERATION_CAP = "iteration-cap"
FAILURE = "failure"
STATUSES = (SOLVED, TIMEOUT, ITERATION_CAP, FAILURE)
TIE_BREAKS = ("random", "id")


class PathEntry(NamedTuple):
    v: int
    arrive: int
    depart: int


TimedPath = list  # list[PathEntry]


@dataclass
class Solution:
    paths: list[TimedPath]
    status: str
    planner: str = "lsrp"
    iterations: int = 0
    wall_ms: float = 0.0
    fallback_waits: int = 0
    final_time: int | None = None  # last planning timestamp (solved runs)

    @property
    def solved(self) -> bool:
        return self.status == SOLVED

    def goal_arrivals(self) -> list[int]:
        return [p[-1].arrive for p in self.paths]

    @property
    def soc(self) -> int:
        return sum(self.goal_arrivals())

    @property
    def makespan(self) -> int:
        return max(self.goal_arrivals(), default=0)


@dataclass
class PlannerConfig:
    swap_enabled: bool = False
    time_limit: float = 30.0  # seconds of wall clock
    iteration_cap: int | None = None  # None: 10 * diam * N^2
    priority_seed: int = 0
    priorities: Sequence[float] | None = None  # explicit initial priorities
    tie_break: str = "random"  # order among equally distant candidates: "random" or "id"
    validate: bool = True

    def __post_init__(self):
        if self.tie_break not in TIE_BREAKS:
            raise ValueError(f"tie_break must be one of {TIE_BREAKS}")
        if self.time_limit <= 0:
            raise ValueError("time_limit must be positive")
        if self.iteration_cap is not None and self.iteration_cap <= 0:
            raise ValueError("iteration_cap must be positive")


def default_iteration_cap(instance: Instance) -> int:
    """``10 * diam(G) * N^2`` with diam bounded cheaply for large maps."""
    g = instance.graph
    if g.num_vertices <= 400:
        diam = diameter(g)
    else:
        diam = 2 * eccentricity(g, instance.starts[0] if instance.starts else 0) + 1
    n = max(instance.n_agents, 1)
    return 10 * diam * n * n


class PlannerContext:
    """Mutable state of one planner run (``s_prev``, ``s_next``, cache, ...)."""

    def __init__(self, instance: Instance, eps0: Sequence[float], swap: bool,
                 tie_break: str = "random", seed: int = 0):
        self.instance = instance
        self.graph = instance.graph
        self.goals = instance.goals
        self.dur = instance.durations
        self.dist = [instance.dist(i) for i in range(instance.n_agents)]
        n = instance.n_agents
        self.n = n
        self.swap = swap
        self.cur = [IndividualState(s, s, 0, 0) for s in instance.starts]
        self.nxt: list[IndividualState | None] = [None] * n
        self.history: list[list[IndividualState]] = [[st] for st in self.cur]
        self.occupant: dict[int, int] = {}
        self.block = [0] * self.graph.num_vertices
        for s in instance.starts:
            self.block[s] += 2
        self.cache = ActionCache()
        self.prio = PriorityState(eps0, [s == g for s, g in zip(instance.starts, instance.goals)])
        self.n_at_goal = sum(self.prio.at_goal)
        self.queue = TimestampQueue([0])
        self.bucket: dict[int, list[int]] = {0: list(range(n))}
        self.curr: list[int] = []
        self.t = 0
        self.t_next = 0
        self.fallback_waits = 0
        self.depth = 0
        self.tie_break = tie_break
        self.rng = random.Random(seed)

    # -- occupancy ---------------------------------------------------------

    def occupied(self, v: int, i: int, ban: Sequence[int], bp: bool) -> bool:
        """Vertex ``v`` is unavailable to agent ``i`` at the current timestamp."""
        if v in ban or self.block[v]:
            return True
        return bp and v == self.cur[i].v

    def commit(self, i: int, st: IndividualState) -> None:
        assert self.nxt[i] is None, f"agent {i} planned twice"
        self.nxt[i] = st
        if self.occupant.get(self.cur[i].v) == i:
            del self.occupant[self.cur[i].v]
        self.block[st.p] += 1
        self.block[st.v] += 1

    def wait_and_move(self, i: int, v: int, t_wait: int) -> int:
        """Wait at the current vertex until ``t_wait``, then cache the move to ``v``."""
        vi = self.cur[i].v
        t = self.t
        assert t_wait >= t
        t_move = t_wait + self.dur(i, vi, v)
        if t_wait == t:
            self.commit(i, IndividualState(vi, v, t, t_move))
        else:
            self.commit(i, IndividualState(vi, vi, t, t_wait))
            self.cache.put(i, IndividualState(vi, v, t_wait, t_move))
        return t_move

    # -- push --------------------------------------------------------------

    def candidates(self, i: int) -> list[int]:
        vi = self.cur[i].v
        dist = self.dist[i]
        cand = [vi, *self.graph.neighbors[vi]]
        if self.tie_break == "random":
            # equal-distance candidates in seeded random order; a fixed order
            # lets two agents shove each other along a wall forever
            self.rng.shuffle(cand)
            cand.sort(key=dist.__getitem__)
        else:
            cand.sort(key=lambda u: (dist[u], u))
        return cand

    def asy_push(self, i: int, ban: list[int], bp: bool) -> int | None:
        """Plan agent ``i``; return its arrival time, or None if it cannot move."""
        self.depth += 1
        assert self.depth <= self.n, "push recursion deeper than the number of agents"
        try:
            return self._asy_push(i, ban, bp)
        finally:
            self.depth -= 1

    def _asy_push(self, i: int, ban: list[int], bp: bool) -> int | None:
        vi = self.cur[i].v
        cand = self.candidates(i)
        partner = None
        if self.swap:
            partner = swap_required_possible(self, i, cand[0])
            if partner is not None:
                cand.reverse()
        if self.prio.top() == i and len(cand) > 1:
            cand.remove(vi)
            cand.insert(1, vi)
        first = cand[0]
        t = self.t
        for v in cand:
            if self.occupied(v, i, ban, bp):
                continue
            k = self.occupant.get(v)
            if k is not None and k != i:
                t_wait = self.asy_push(k, ban + [vi], True)
                if t_wait is None:
                    continue
                t_move = self.wait_and_move(i, v, t_wait)
                if partner is not None and not bp and v == first and self.nxt[partner] is None:
                    self.wait_and_move(partner, vi, t_move)
                return t_move
            if v == vi:
                self.commit(i, IndividualState(vi, vi, t, self.t_next))
                return self.t_next
            t_move = t + self.dur(i, vi, v)
            self.commit(i, IndividualState(vi, v, t, t_move))
            if partner is not None and not bp and v == first and self.nxt[partner] is None:
                self.wait_and_move(partner, vi, t_move)
            return t_move
        return None

    # -- main loop pieces --------------------------------------------------

    def extract_agents(self, t_min: int) -> list[int]:
        return self.bucket.pop(t_min, [])

    def compute_t_next(self, t_min: int) -> int:
        if self.queue:
            return self.queue.top()
        return t_min + self.dur.min_duration()

    def begin_iteration(self) -> None:
        self.prio.update()
        t = self.queue.pop()
        self.t = t
        self.curr = curr = self.extract_agents(t)
        self.t_next = self.compute_t_next(t)
        for a in curr:
            st = self.cur[a]
            self.block[st.p] -= 1
            self.block[st.v] -= 1
            self.occupant[st.v] = a
        for a in curr:
            cached = self.cache.take(a, t)
            if cached is not None:
                self.commit(a, cached)

    def plan_current(self) -> None:
        key = self.prio.key
        for a in sorted(self.curr, key=key, reverse=True):
            if self.nxt[a] is None:
                self.asy_push(a, [], False)
                if self.nxt[a] is None:
                    vi = self.cur[a].v
                    assert not self.block[vi]
                    self.commit(a, IndividualState(vi, vi, self.t, self.t_next))
                    self.fallback_waits += 1

    def end_iteration(self) -> None:
        prio = self.prio
        goals = self.goals
        for a in self.curr:
            st = self.nxt[a]
            assert st is not None, f"agent {a} left unplanned at t={self.t}"
            assert st.tp == self.t and st.tv > self.t
            self.nxt[a] = None
            self.cur[a] = st
            self.history[a].append(st)
            self.bucket.setdefault(st.tv, []).append(a)
            self.queue.add(st.tv)
            at_goal = st.v == goals[a]
            if at_goal != prio.at_goal[a]:
                self.n_at_goal += 1 if at_goal else -1
                prio.set_at_goal(a, at_goal)
        assert not self.occupant, "unplanned agents remain"
        self.curr = []

    def all_at_goal(self) -> bool:
        return self.n_at_goal == self.n


def post_process(history: Sequence[Sequence[IndividualState]], trim: bool = True) -> list[TimedPath]:
    """Turn each agent's chain of individual states into a timed path.

    Consecutive waits merge into one entry; the final entry is trimmed to
    the last arrival.
    """
    paths = []
    for chain in history:
        first = chain[0]
        entries = [[first.p, first.tp, first.tp]]
        for prev, st in zip(chain, chain[1:]):
            assert st.tp == prev.tv and st.p == prev.v, "broken action chain"
        for st in chain:
            last = entries[-1]
            if st.p == st.v:
                last[2] = st.tv
            else:
                last[2] = st.tp
                entries.append([st.v, st.tv, st.tv])
        if trim:
            entries[-1][2] = entries[-1][1]
        paths.append([PathEntry(*e) for e in entries])
    return paths


def lsrp_solve(instance: Instance, config: PlannerConfig | None = None) -> Solution:
    """Run LSRP (or LSRP-SWAP when ``config.swap_enabled``)."""
    config = config or PlannerConfig()
    instance.check_reachable()
    n = instance.n_agents
    if config.priorities is not None:
        eps0 = tuple(config.priorities)
    elif instance.priorities is not None:
        eps0 = instance.priorities
    else:
        eps0 = default_priorities(n, config.priority_seed)
    cap = config.iteration_cap or default_iteration_cap(instance)
    name = "lsrp-swap" if config.swap_enabled else "lsrp"
    if n == 0:
        return Solution([], SOLVED, name, final_time=0)

    limit = max(sys.getrecursionlimit(), 4 * n + 200)
    if limit > sys.getrecursionlimit():
        sys.setrecursionlimit(limit)

    ctx = PlannerContext(instance, eps0, config.swap_enabled, config.tie_break, config.priority_seed)
    start = time.perf_counter()
    deadline = start + config.time_limit
    iterations = 0
    status = FAILURE
    while ctx.queue:
        if ctx.all_at_goal():
            status = SOLVED
            break
        if iterations >= cap:
            status = ITERATION_CAP
            break
        if (iterations & 63) == 0 and time.perf_counter() > deadline:
            status = TIMEOUT
            break
        iterations += 1
        ctx.begin_iteration()
        ctx.plan_current()
        ctx.end_iteration()
    else:
        if ctx.all_at_goal():
            status = SOLVED
    wall_ms = (time.perf_counter() - start) * 1000.0
    paths = post_process(ctx.history)
    final_time = ctx.queue.top() if status == SOLVED and ctx.queue else None
    sol = Solution(paths, status, name, iterations, wall_ms, ctx.fallback_waits, final_time)
    if status == SOLVED and config.validate:
        from .validator import validate

        report = validate(sol, instance)
        if not report.ok:
            raise RuntimeError(f"planner produced an invalid solution: {report.violations[:3]}")
    return sol


# --------------------------------------------------------------------------
# solution files

SOLUTION_SCHEMA = "mapfaa-solution/1"


def solution_to_dict(sol: Solution, graph: Graph, timing: bool = True) -> dict:
    """JSON-ready form; times in units rounded to 3 decimals.

    ``timing=False`` drops the wall-clock field so that repeated runs
    serialize identically.
    """
    metrics = {
        "soc": ticks_to_units(sol.soc),
        "makespan": ticks_to_units(sol.makespan),
        "iterations": sol.iterations,
        "fallback_waits": sol.fallback_waits,
    }
    if timing:
        metrics["wall_ms"] = round(sol.wall_ms, 3)
    return {
        "schema": SOLUTION_SCHEMA,
        "planner": sol.planner,
        "status": sol.status,
        "paths": [[{"v": vertex_to_json(graph, e.v), "arrive": ticks_to_units(e.arrive),
                    "depart": ticks_to_units(e.depart)} for e in path] for path in sol.paths],
        "metrics": metrics,
    }


def solution_from_dict(data: dict, graph: Graph) -> Solution:
    if data.get("schema", SOLUTION_SCHEMA) != SOLUTION_SCHEMA:
        raise FormatError(f"unsupported solution schema {data.get('schema')!r}")
    try:
        status = data["status"]
        if status not in STATUSES:
            raise FormatError(f"unknown status {status!r}")
        paths = [[PathEntry(vertex_from_json(graph, e["v"]), to_ticks(e["arrive"]), to_ticks(e["depart"]))
                  for e in path] for path in data["paths"]]
        m = data.get("metrics", {})
        return Solution(paths, status, data.get("planner", "unknown"), int(m.get("iterations", 0)),
                        float(m.get("wall_ms", 0.0)), int(m.get("fallback_waits", 0)))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"malformed solution: {exc}") from exc


def dumps_solution(sol: Solution, graph: Graph, timing: bool = True) -> str:
    return json.dumps(solution_to_dict(sol, graph, timing), indent=1) + "\n"
