"""Planner-blind verification of timed paths under the duration-conflict model.

Each path entry ``(v, arrive, depart)`` keeps the agent on ``v`` from the
instant it starts moving in (exclusive) until the instant it finishes moving
out (exclusive).  The first entry is held from time 0 inclusive and the last
one forever, since agents rest at their goals once done.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .state import Interval
from .timegraph import INF, Instance

DURATION_CONFLICT = "duration-conflict"
DISCONTINUITY = "discontinuity"
WRONG_DURATION = "wrong-duration"
WRONG_ENDPOINT = "wrong-endpoint"


@dataclass(frozen=True)
class Violation:
    kind: str
    agents: tuple[int, ...]
    vertex: int | None
    interval: Interval | None

    def describe(self) -> str:
        span = "" if self.interval is None else f" during {self.interval}"
        where = "" if self.vertex is None else f" at vertex {self.vertex}"
        return f"{self.kind}: agents {list(self.agents)}{where}{span}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)
    soc: int = 0
    makespan: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def metrics(self) -> dict[str, int]:
        return {"soc": self.soc, "makespan": self.makespan}


def metrics(paths: Sequence[Sequence]) -> tuple[int, int]:
    """Sum of costs and makespan over final goal arrivals."""
    arrivals = [p[-1][1] for p in paths if p]
    return sum(arrivals), max(arrivals, default=0)


def _undouble(lo2: int, hi2: int) -> Interval:
    hi_open = hi2 >= INF
    return Interval(lo2 // 2 if lo2 % 2 == 0 else (lo2 - 1) // 2,
                    INF if hi_open else (hi2 + 1) // 2,
                    lo2 % 2 == 0, not hi_open and hi2 % 2 == 0)


def path_occupancy(path: Sequence) -> list[tuple[int, int, int]]:
    """``(vertex, lo2, hi2)`` closed intervals in half-tick space, one per entry."""
    out = []
    last = len(path) - 1
    for k, (v, _arrive, _depart) in enumerate(path):
        lo2 = 0 if k == 0 else 2 * path[k - 1][2] + 1
        hi2 = INF if k == last else 2 * path[k + 1][1] - 1
        out.append((v, lo2, hi2))
    return out


def _structure(i: int, path: Sequence, instance: Instance, out: list[Violation]) -> None:
    graph = instance.graph
    if not path:
        out.append(Violation(DISCONTINUITY, (i,), None, None))
        return
    v0, a0, _ = path[0]
    if v0 != instance.starts[i] or a0 != 0:
        out.append(Violation(WRONG_ENDPOINT, (i,), v0, Interval(a0, a0)))
    vz, az, _ = path[-1]
    if vz != instance.goals[i]:
        out.append(Violation(WRONG_ENDPOINT, (i,), vz, Interval(az, az)))
    for k, (v, arrive, depart) in enumerate(path):
        if depart < arrive:
            out.append(Violation(DISCONTINUITY, (i,), v, Interval(arrive, depart)))
        if k + 1 < len(path):
            w, arrive2, _ = path[k + 1]
            if v == w:
                if arrive2 != depart:
                    out.append(Violation(DISCONTINUITY, (i,), v, Interval(depart, arrive2)))
            elif not graph.has_edge(v, w):
                out.append(Violation(DISCONTINUITY, (i,), w, Interval(depart, arrive2)))
            elif arrive2 - depart != instance.durations(i, v, w):
                out.append(Violation(WRONG_DURATION, (i,), w, Interval(depart, arrive2)))


def validate(solution, instance: Instance) -> ValidationReport:
    """Check a solution (object with ``paths`` or a bare list of paths)."""
    paths = getattr(solution, "paths", solution)
    if not isinstance(paths, (list, tuple)):
        raise ValueError("malformed solution: paths must be a list")
    if len(paths) != instance.n_agents:
        raise ValueError(f"malformed solution: {len(paths)} paths for {instance.n_agents} agents")
    for p in paths:
        for e in p:
            if len(e) != 3 or not all(isinstance(x, int) for x in e):
                raise ValueError(f"malformed path entry {e!r}")

    violations: list[Violation] = []
    per_vertex: dict[int, list[tuple[int, int, int]]] = {}
    for i, path in enumerate(paths):
        _structure(i, path, instance, violations)
        for v, lo2, hi2 in path_occupancy(path):
            per_vertex.setdefault(v, []).append((lo2, hi2, i))

    for v in sorted(per_vertex):
        spans = sorted(per_vertex[v])
        active: list[tuple[int, int, int]] = []
        for lo2, hi2, i in spans:
            active = [s for s in active if s[1] >= lo2]
            for alo, ahi, j in active:
                if j != i:
                    a, b = sorted((i, j))
                    violations.append(Violation(DURATION_CONFLICT, (a, b), v, _undouble(lo2, min(hi2, ahi))))
            active.append((lo2, hi2, i))

    soc, makespan = metrics(paths)
    return ValidationReport(violations, soc, makespan)
