"""Exact time arithmetic, graphs, benchmark parsing and distance tables.

Times are integer ticks; one time unit is ``TICKS_PER_UNIT`` ticks.  Every
planner in this package compares timestamps with ``==``, so no floats are
allowed anywhere inside the planning loop.
"""

from __future__ import annotations

import heapq
import json
import random
from collections import deque
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from typing import Iterable, Sequence

TICKS_PER_UNIT = 1000
INF = 1 << 62  # unreachable sentinel in distance tables

PASSABLE = frozenset(".G")
BLOCKED = frozenset("@TO")

DEFAULT_DURATION_CHOICES = (1.0, 2.0, 3.0, 4.0, 5.0)


class FormatError(ValueError):
    """Raised for malformed map, scenario or instance files."""


# --------------------------------------------------------------------------
# time


def to_ticks(value: str | int | float | Decimal) -> int:
    """Convert a time given in units (``"2.5"``, ``3``) to integer ticks.

    Raises ``ValueError`` when the value is negative or finer than one tick.
    """
    try:
        dec = Decimal(str(value)) * TICKS_PER_UNIT
    except InvalidOperation as exc:
        raise ValueError(f"not a time value: {value!r}") from exc
    if dec != dec.to_integral_value():
        raise ValueError(f"{value!r} is finer than 1/{TICKS_PER_UNIT} of a unit")
    ticks = int(dec)
    if ticks < 0:
        raise ValueError(f"negative time: {value!r}")
    return ticks


def format_ticks(ticks: int) -> str:
    """``5000 -> "5.000"``."""
    q, r = divmod(ticks, TICKS_PER_UNIT)
    return f"{q}.{r:03d}"


def ticks_to_units(ticks: int) -> float:
    return round(ticks / TICKS_PER_UNIT, 3)


# --------------------------------------------------------------------------
# graph


@dataclass(frozen=True)
class Graph:
    """Undirected graph over dense vertex ids ``0..n-1``.

    ``neighbors[v]`` is sorted ascending; waits are implicit and self-loops
    are never stored.  Grid graphs additionally keep ``width``, ``height`` and
    the id <-> cell tables; edge-list graphs may carry vertex ``names``.
    """

    neighbors: tuple[tuple[int, ...], ...]
    width: int | None = None
    height: int | None = None
    cells: tuple[tuple[int, int], ...] | None = None  # id -> (row, col)
    names: tuple[str, ...] | None = None
    _cell_index: dict = field(default=None, repr=False, compare=False)
    _name_index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.cells is not None:
            object.__setattr__(self, "_cell_index", {c: i for i, c in enumerate(self.cells)})
        if self.names is not None:
            object.__setattr__(self, "_name_index", {s: i for i, s in enumerate(self.names)})

    @property
    def num_vertices(self) -> int:
        return len(self.neighbors)

    @property
    def num_edges(self) -> int:
        return sum(len(n) for n in self.neighbors) // 2

    def edges(self) -> Iterable[tuple[int, int]]:
        for u, nbrs in enumerate(self.neighbors):
            for v in nbrs:
                if u < v:
                    yield u, v

    def has_edge(self, u: int, v: int) -> bool:
        nbrs = self.neighbors[u]
        # neighbour lists are tiny; bisect is not worth it
        return v in nbrs

    def vertex_at(self, row: int, col: int) -> int:
        """Vertex id of grid cell ``(row, col)``; ``KeyError`` if blocked."""
        if self._cell_index is None:
            raise TypeError("graph has no grid metadata")
        return self._cell_index[(row, col)]

    def cell_of(self, v: int) -> tuple[int, int]:
        if self.cells is None:
            raise TypeError("graph has no grid metadata")
        return self.cells[v]

    def vertex_named(self, name: str) -> int:
        if self._name_index is None:
            raise TypeError("graph has no vertex names")
        return self._name_index[name]

    def label(self, v: int) -> str:
        if self.names is not None:
            return self.names[v]
        if self.cells is not None:
            r, c = self.cells[v]
            return f"({r},{c})"
        return str(v)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]], names: Sequence[str] | None = None) -> "Graph":
        adj: list[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            if u == v:
                continue
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) out of range")
            adj[u].add(v)
            adj[v].add(u)
        return cls(tuple(tuple(sorted(a)) for a in adj), names=tuple(names) if names is not None else None)

    @classmethod
    def from_named_edges(cls, names: Sequence[str], edges: Iterable[tuple[str, str]]) -> "Graph":
        index = {s: i for i, s in enumerate(names)}
        if len(index) != len(names):
            raise ValueError("duplicate vertex names")
        return cls.from_edges(len(names), ((index[a], index[b]) for a, b in edges), names)

    @classmethod
    def from_grid(cls, passable: Sequence[Sequence[bool]]) -> "Graph":
        """4-connected graph over the passable cells, ids in row-major order."""
        height = len(passable)
        width = len(passable[0]) if height else 0
        cells = [(r, c) for r in range(height) for c in range(width) if passable[r][c]]
        if not cells:
            raise FormatError("map has no passable cells")
        index = {cell: i for i, cell in enumerate(cells)}
        nbrs = []
        for r, c in cells:
            adj = []
            for dr, dc in ((-1, 0), (0, -1), (0, 1), (1, 0)):
                j = index.get((r + dr, c + dc))
                if j is not None:
                    adj.append(j)
            nbrs.append(tuple(sorted(adj)))
        return cls(tuple(nbrs), width=width, height=height, cells=tuple(cells))

    def passable_mask(self) -> list[list[bool]]:
        if self.cells is None:
            raise TypeError("graph has no grid metadata")
        mask = [[False] * self.width for _ in range(self.height)]
        for r, c in self.cells:
            mask[r][c] = True
        return mask


def open_grid(width: int, height: int) -> Graph:
    return Graph.from_grid([[True] * width for _ in range(height)])


# --------------------------------------------------------------------------
# MovingAI formats


def parse_map(text: str) -> Graph:
    """Parse a MovingAI ``.map`` file into a 4-connected grid graph."""
    lines = text.splitlines()
    header: dict[str, str] = {}
    i = 0
    while i < len(lines):
        line = lines[i].strip()
        i += 1
        if not line:
            continue
        if line == "map":
            break
        key, _, value = line.partition(" ")
        header[key] = value.strip()
    else:
        raise FormatError("missing 'map' line")
    try:
        height = int(header["height"])
        width = int(header["width"])
    except (KeyError, ValueError) as exc:
        raise FormatError(f"bad map header: {header}") from exc
    if "type" not in header:
        raise FormatError("missing 'type' line")
    rows = [ln.rstrip("\r\n") for ln in lines[i:]]
    while rows and not rows[-1].strip():
        rows.pop()
    if len(rows) != height:
        raise FormatError(f"expected {height} rows, got {len(rows)}")
    mask = []
    for r, row in enumerate(rows):
        row = row.replace(" ", "")
        if len(row) != width:
            raise FormatError(f"row {r} has length {len(row)}, expected {width}")
        bits = []
        for ch in row:
            if ch in PASSABLE:
                bits.append(True)
            elif ch in BLOCKED:
                bits.append(False)
            else:
                raise FormatError(f"unknown map character {ch!r} in row {r}")
        mask.append(bits)
    return Graph.from_grid(mask)


def render_map(graph: Graph) -> str:
    mask = graph.passable_mask()
    body = "\n".join("".join("." if b else "@" for b in row) for row in mask)
    return f"type octile\nheight {graph.height}\nwidth {graph.width}\nmap\n{body}\n"


def parse_scen(text: str, n: int, graph: Graph) -> tuple[list[int], list[int]]:
    """First ``n`` rows of a MovingAI ``.scen`` file as (starts, goals).

    Columns are ``bucket map width height start_x start_y goal_x goal_y
    optimal``; x is the column and y the row of the cell.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("version"):
            continue
        parts = line.split("\t") if "\t" in line else line.split()
        if len(parts) < 9:
            raise FormatError(f"short scen row: {line!r}")
        rows.append(parts)
    if n > len(rows):
        raise FormatError(f"requested {n} agents but scenario has {len(rows)} rows")
    starts, goals = [], []
    for parts in rows[:n]:
        sx, sy, gx, gy = (int(p) for p in parts[4:8])
        try:
            starts.append(graph.vertex_at(sy, sx))
            goals.append(graph.vertex_at(gy, gx))
        except KeyError as exc:
            raise FormatError(f"scenario cell {exc.args[0]} is blocked or outside the map") from exc
    return starts, goals


def render_scen(graph: Graph, starts: Sequence[int], goals: Sequence[int], map_name: str = "map.map") -> str:
    out = ["version 1"]
    for s, g in zip(starts, goals):
        sr, sc = graph.cell_of(s)
        gr, gc = graph.cell_of(g)
        out.append(f"0\t{map_name}\t{graph.width}\t{graph.height}\t{sc}\t{sr}\t{gc}\t{gr}\t0")
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------
# durations and instances


@dataclass(frozen=True)
class DurationModel:
    """Per-agent edge durations in ticks.

    ``per_agent[i]`` is agent i's constant edge duration.  ``table`` optionally
    overrides single directed traversals ``(agent, from, to)``; table entries
    need not be symmetric.
    """

    per_agent: tuple[int, ...]
    table: dict[tuple[int, int, int], int] | None = None

    def __post_init__(self):
        if any(d <= 0 for d in self.per_agent):
            raise ValueError("edge durations must be positive")
        if self.table and any(d <= 0 for d in self.table.values()):
            raise ValueError("edge durations must be positive")

    @property
    def uniform(self) -> bool:
        return not self.table

    def __call__(self, agent: int, u: int, v: int) -> int:
        if self.table:
            d = self.table.get((agent, u, v))
            if d is not None:
                return d
        return self.per_agent[agent]

    def max_duration(self) -> int:
        m = max(self.per_agent)
        if self.table:
            m = max(m, max(self.table.values()))
        return m

    def min_duration(self) -> int:
        m = min(self.per_agent)
        if self.table:
            m = min(m, min(self.table.values()))
        return m

    @classmethod
    def constant(cls, n_agents: int, ticks: int) -> "DurationModel":
        return cls((ticks,) * n_agents)

    @classmethod
    def sampled(cls, n_agents: int, seed: int, choices: Sequence[float] = DEFAULT_DURATION_CHOICES) -> "DurationModel":
        rng = random.Random(seed)
        ticks = [to_ticks(c) for c in choices]
        return cls(tuple(rng.choice(ticks) for _ in range(n_agents)))


@dataclass(frozen=True)
class Instance:
    graph: Graph
    starts: tuple[int, ...]
    goals: tuple[int, ...]
    durations: DurationModel
    priorities: tuple[float, ...] | None = None  # optional explicit initial priorities
    name: str = ""
    _dist_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.starts)
        if n == 0 and len(self.goals) == 0:
            pass
        if len(self.goals) != n:
            raise ValueError("starts and goals differ in length")
        if len(self.durations.per_agent) != n:
            raise ValueError("duration model does not match the number of agents")
        nv = self.graph.num_vertices
        for v in (*self.starts, *self.goals):
            if not 0 <= v < nv:
                raise ValueError(f"vertex {v} out of range")
        if len(set(self.starts)) != n:
            raise ValueError("start vertices are not pairwise distinct")
        if len(set(self.goals)) != n:
            raise ValueError("goal vertices are not pairwise distinct")
        if self.priorities is not None:
            if len(self.priorities) != n or len(set(self.priorities)) != n:
                raise ValueError("explicit priorities must be one distinct value per agent")

    @property
    def n_agents(self) -> int:
        return len(self.starts)

    def with_durations(self, durations: DurationModel) -> "Instance":
        return Instance(self.graph, self.starts, self.goals, durations, self.priorities, self.name)

    def with_priorities(self, priorities: Sequence[float] | None) -> "Instance":
        pri = tuple(priorities) if priorities is not None else None
        return Instance(self.graph, self.starts, self.goals, self.durations, pri, self.name)

    def subset(self, n: int) -> "Instance":
        pri = self.priorities[:n] if self.priorities else None
        dm = DurationModel(self.durations.per_agent[:n],
                           {k: d for k, d in (self.durations.table or {}).items() if k[0] < n} or None)
        return Instance(self.graph, self.starts[:n], self.goals[:n], dm, pri, self.name)

    def dist(self, agent: int) -> list[int]:
        """Memoised distance table of ``agent`` towards its goal."""
        if self.durations.uniform:
            key = (self.goals[agent], self.durations.per_agent[agent])
        else:
            key = ("agent", agent)
        table = self._dist_cache.get(key)
        if table is None:
            table = dist_table(self, agent)
            self._dist_cache[key] = table
        return table

    def check_reachable(self) -> None:
        for i in range(self.n_agents):
            if self.dist(i)[self.starts[i]] >= INF:
                raise ValueError(f"goal of agent {i} is unreachable from its start")


# --------------------------------------------------------------------------
# distances and structure


def bfs_hops(graph: Graph, source: int) -> list[int]:
    dist = [INF] * graph.num_vertices
    dist[source] = 0
    queue = deque([source])
    nbrs = graph.neighbors
    while queue:
        u = queue.popleft()
        du = dist[u] + 1
        for w in nbrs[u]:
            if dist[w] == INF:
                dist[w] = du
                queue.append(w)
    return dist


def dist_table(instance: Instance, agent: int) -> list[int]:
    """Shortest arrival cost (ticks) from every vertex to the agent's goal.

    Runs over reversed edges with the agent's own durations, so
    ``dist[u] = min_v D(agent, u, v) + dist[v]``.  Unreachable vertices get
    ``INF``.
    """
    graph = instance.graph
    goal = instance.goals[agent]
    dm = instance.durations
    if dm.uniform:
        d = dm.per_agent[agent]
        return [h if h == INF else h * d for h in bfs_hops(graph, goal)]
    dist = [INF] * graph.num_vertices
    dist[goal] = 0
    heap = [(0, goal)]
    while heap:
        dv, v = heapq.heappop(heap)
        if dv > dist[v]:
            continue
        for u in graph.neighbors[v]:
            nd = dv + dm(agent, u, v)
            if nd < dist[u]:
                dist[u] = nd
                heapq.heappush(heap, (nd, u))
    return dist


def eccentricity(graph: Graph, v: int) -> int:
    return max(h for h in bfs_hops(graph, v) if h < INF)


def diameter(graph: Graph) -> int:
    """Longest shortest path, counted in vertices (a single vertex has 1).

    All-pairs BFS; meant for test-scale graphs.  On a disconnected graph the
    value is the maximum over components.
    """
    best = 0
    for v in range(graph.num_vertices):
        best = max(best, eccentricity(graph, v))
    return best + 1


def is_connected(graph: Graph) -> bool:
    return graph.num_vertices == 0 or INF not in bfs_hops(graph, 0)


def _reaches(nbrs, src: int, dst: int, blocked: list[bool]) -> bool:
    """Whether ``dst`` is reachable from ``src`` without touching blocked vertices."""
    seen = {src}
    todo = [src]
    while todo:
        x = todo.pop()
        if x == dst:
            return True
        for y in nbrs[x]:
            if y not in seen and not blocked[y]:
                seen.add(y)
                todo.append(y)
    return False


def is_c_graph(graph: Graph, n: int, budget: int = 2_000_000) -> bool | None:
    """True iff every edge lies on a simple cycle with at least ``n + 1`` vertices.

    The search is a depth-first enumeration of simple paths, pruned to
    branches that can still reach the edge's other end.  It may still be
    exponential; once ``budget`` DFS steps are spent the answer is ``None``
    (unknown) rather than a guess.
    """
    need = max(n + 1, 3)
    if need > graph.num_vertices:
        return False
    steps = 0
    nbrs = graph.neighbors
    for u, v in graph.edges():
        # a cycle through (u, v) is a simple v -> u path avoiding that edge
        on_path = [False] * graph.num_vertices
        on_path[v] = True
        stack = [(v, iter(nbrs[v]))]
        found = False
        while stack:
            steps += 1
            if steps > budget:
                return None
            x, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                on_path[x] = False
                stack.pop()
                continue
            if nxt == u:
                if x != v and len(stack) + 1 >= need:
                    found = True
                    break
                continue
            if not on_path[nxt] and _reaches(nbrs, nxt, u, on_path):
                on_path[nxt] = True
                stack.append((nxt, iter(nbrs[nxt])))
        if not found:
            return False
    return True


# --------------------------------------------------------------------------
# native instance files


INSTANCE_SCHEMA = "mapfaa-instance/1"


def vertex_to_json(graph: Graph, v: int):
    """``[row, col]`` on grids, the vertex name on edge-list graphs."""
    if graph.cells is not None:
        return list(graph.cells[v])
    return graph.names[v] if graph.names is not None else str(v)


def vertex_from_json(graph: Graph, x) -> int:
    if graph.cells is not None:
        return graph.vertex_at(int(x[0]), int(x[1]))
    return graph.vertex_named(str(x))


def instance_to_dict(inst: Instance, durations_as: str = "values") -> dict:
    g = inst.graph
    if g.cells is not None:
        mask = g.passable_mask()
        graph = {"kind": "grid", "rows": ["".join("." if b else "@" for b in row) for row in mask]}
    else:
        names = list(g.names) if g.names is not None else [str(i) for i in range(g.num_vertices)]
        graph = {"kind": "edges", "vertices": names,
                 "edges": [[names[u], names[v]] for u, v in g.edges()]}

    def loc(v):
        return vertex_to_json(g, v)
    dm = inst.durations
    durations: dict = {"mode": "uniform", "values": [ticks_to_units(t) for t in dm.per_agent]}
    if dm.table:
        durations["mode"] = "table"
        durations["entries"] = [[a, loc(u), loc(v), ticks_to_units(d)]
                                for (a, u, v), d in sorted(dm.table.items())]
    out = {
        "schema": INSTANCE_SCHEMA,
        "name": inst.name,
        "graph": graph,
        "starts": [loc(v) for v in inst.starts],
        "goals": [loc(v) for v in inst.goals],
        "durations": durations,
    }
    if inst.priorities is not None:
        out["priorities"] = list(inst.priorities)
    return out


def instance_from_dict(data: dict) -> Instance:
    schema = data.get("schema", INSTANCE_SCHEMA)
    if schema != INSTANCE_SCHEMA:
        raise FormatError(f"unsupported instance schema {schema!r}")
    try:
        gspec = data["graph"]
        kind = gspec["kind"]
        if kind == "grid":
            mask = []
            for row in gspec["rows"]:
                bits = []
                for ch in row:
                    if ch in PASSABLE:
                        bits.append(True)
                    elif ch in BLOCKED:
                        bits.append(False)
                    else:
                        raise FormatError(f"unknown map character {ch!r}")
                mask.append(bits)
            if len({len(r) for r in mask}) > 1:
                raise FormatError("grid rows differ in length")
            graph = Graph.from_grid(mask)
        elif kind == "edges":
            names = [str(s) for s in gspec["vertices"]]
            graph = Graph.from_named_edges(names, [(str(a), str(b)) for a, b in gspec["edges"]])
        else:
            raise FormatError(f"unknown graph kind {kind!r}")

        def locate(x):
            return vertex_from_json(graph, x)

        starts = tuple(locate(x) for x in data["starts"])
        goals = tuple(locate(x) for x in data["goals"])
        n = len(starts)
        dspec = data.get("durations", {"mode": "uniform", "values": [1.0] * n})
        if "values" in dspec:
            per_agent = tuple(to_ticks(x) for x in dspec["values"])
        elif "seed" in dspec:
            choices = dspec.get("choices", DEFAULT_DURATION_CHOICES)
            per_agent = DurationModel.sampled(n, int(dspec["seed"]), choices).per_agent
        else:
            raise FormatError("durations need 'values' or 'seed'")
        table = None
        if dspec.get("mode", "uniform") == "table":
            table = {}
            for a, u, v, d in dspec.get("entries", []):
                table[(int(a), locate(u), locate(v))] = to_ticks(d)
        durations = DurationModel(per_agent, table or None)
        pri = data.get("priorities")
        return Instance(graph, starts, goals, durations,
                        tuple(float(p) for p in pri) if pri is not None else None,
                        name=str(data.get("name", "")))
    except KeyError as exc:
        raise FormatError(f"instance is missing {exc.args[0]!r} or refers to an unknown vertex") from exc


def load_instance(path: str) -> Instance:
    with open(path) as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: {exc}") from exc
    return instance_from_dict(data)


def dump_instance(inst: Instance, path: str) -> None:
    with open(path, "w") as f:
        json.dump(instance_to_dict(inst), f, indent=1)
        f.write("\n")


def instance_from_movingai(map_text: str, scen_text: str, n: int, durations: DurationModel | None = None,
                           name: str = "") -> Instance:
    graph = parse_map(map_text)
    starts, goals = parse_scen(scen_text, n, graph)
    if durations is None:
        durations = DurationModel.constant(n, TICKS_PER_UNIT)
    return Instance(graph, tuple(starts), tuple(goals), durations, name=name)


def random_instance(graph: Graph, n: int, seed: int,
                    choices: Sequence[float] | None = DEFAULT_DURATION_CHOICES, name: str = "") -> Instance:
    """Distinct random starts and goals in one connected graph.

    ``choices=None`` gives every agent duration 1.0.
    """
    if n > graph.num_vertices:
        raise ValueError(f"{n} agents do not fit on {graph.num_vertices} vertices")
    if not is_connected(graph):
        raise ValueError("random instances need a connected graph")
    rng = random.Random(seed)
    starts = rng.sample(range(graph.num_vertices), n)
    goals = rng.sample(range(graph.num_vertices), n)
    if choices is None:
        durations = DurationModel.constant(n, TICKS_PER_UNIT)
    else:
        durations = DurationModel.sampled(n, rng.randrange(1 << 30), choices)
    return Instance(graph, tuple(starts), tuple(goals), durations, name=name)
