"""Command-line harness: ``mapfaa {gen,solve,validate,bench}``."""

from __future__ import annotations

import argparse
import csv
import json
import os
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

from .baselines import OracleCapExceeded, oracle_solve, prioritized_solve
from .planner import (FAILURE, ITERATION_CAP, SOLVED, TIMEOUT, PlannerConfig, Solution, dumps_solution,
                      lsrp_solve, solution_from_dict)
from .timegraph import (DEFAULT_DURATION_CHOICES, DurationModel, FormatError, Graph, Instance, dump_instance,
                        format_ticks, instance_from_movingai, instance_to_dict, load_instance, open_grid,
                        parse_map, parse_scen, random_instance, to_ticks)
from .validator import validate

PLANNERS = ("lsrp", "lsrp-swap", "sipp-prio", "oracle")
SEED_ENV = "MAPFAA_SEED"
BENCH_SCHEMA = "mapfaa-bench/1"

EXIT_OK, EXIT_INPUT, EXIT_LIMIT, EXIT_FAILURE = 0, 1, 2, 3


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV, "0")
    try:
        return int(raw)
    except ValueError:
        raise SystemExit(f"{SEED_ENV} must be an integer, got {raw!r}")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _read(path: str) -> str:
    with open(path) as f:
        return f.read()


def load_graph(spec: str) -> Graph:
    """A MovingAI map path, or ``open:WxH`` for an obstacle-free grid."""
    if spec.startswith("open:"):
        w, _, h = spec[5:].partition("x")
        return open_grid(int(w), int(h or w))
    return parse_map(_read(spec))


def durations_from_args(args, n: int, seed: int) -> DurationModel:
    if getattr(args, "durations", None):
        vals = args.durations
        if len(vals) == 1:
            vals = vals * n
        if len(vals) != n:
            raise FormatError(f"{len(vals)} durations given for {n} agents")
        return DurationModel(tuple(to_ticks(v) for v in vals))
    return DurationModel.sampled(n, seed, args.choices)


# --------------------------------------------------------------------------
# planners


def run_planner(instance: Instance, planner: str, seed: int, timeout: float,
                iteration_cap: int | None = None, tie_break: str = "random") -> Solution:
    """Dispatch by planner name; ``OracleCapExceeded`` propagates."""
    if planner in ("lsrp", "lsrp-swap"):
        cfg = PlannerConfig(swap_enabled=planner == "lsrp-swap", time_limit=timeout,
                            iteration_cap=iteration_cap, priority_seed=seed, tie_break=tie_break)
        return lsrp_solve(instance, cfg)
    if planner == "sipp-prio":
        return prioritized_solve(instance, seed=seed, time_limit=timeout)
    if planner == "oracle":
        sol = oracle_solve(instance)
        if sol is None:
            return Solution([[] for _ in range(instance.n_agents)], FAILURE, "oracle")
        return sol
    raise ValueError(f"unknown planner {planner!r}")


def exit_code(status: str) -> int:
    if status == SOLVED:
        return EXIT_OK
    if status in (TIMEOUT, ITERATION_CAP):
        return EXIT_LIMIT
    return EXIT_FAILURE


def metrics_line(sol: Solution) -> str:
    parts = [f"planner={sol.planner}", f"status={sol.status}"]
    if sol.solved:
        parts += [f"soc={format_ticks(sol.soc)}", f"makespan={format_ticks(sol.makespan)}"]
    parts += [f"iterations={sol.iterations}", f"wall_ms={sol.wall_ms:.1f}"]
    return " ".join(parts)


def timeline(sol: Solution, graph: Graph) -> str:
    lines = []
    for i, path in enumerate(sol.paths):
        steps = " -> ".join(f"{graph.label(e.v)}@[{format_ticks(e.arrive)},{format_ticks(e.depart)}]" for e in path)
        lines.append(f"agent {i}: {steps}")
    return "\n".join(lines)


# --------------------------------------------------------------------------
# subcommands


def _instance_from_args(args) -> Instance:
    if args.instance:
        inst = load_instance(args.instance)
    else:
        if not (args.map and args.scen and args.n):
            raise FormatError("give --instance, or --map with --scen and -n")
        graph_text, scen_text = _read(args.map), _read(args.scen)
        durations = durations_from_args(args, args.n, args.seed)
        inst = instance_from_movingai(graph_text, scen_text, args.n, durations,
                                      name=os.path.basename(args.scen))
    if args.n and args.instance:
        if args.n > inst.n_agents:
            raise FormatError(f"instance has only {inst.n_agents} agents")
        inst = inst.subset(args.n)
    if args.priorities:
        inst = inst.with_priorities(args.priorities)
    return inst


def cmd_solve(args) -> int:
    try:
        inst = _instance_from_args(args)
        sol = run_planner(inst, args.planner, args.seed, args.timeout, args.iteration_cap, args.tie_break)
    except (OSError, FormatError, OracleCapExceeded, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    text = dumps_solution(sol, inst.graph, timing=not args.no_timing)
    if args.output == "-":
        sys.stdout.write(text)
    else:
        with open(args.output, "w") as f:
            f.write(text)
    if args.timeline:
        print(timeline(sol, inst.graph))
    print(metrics_line(sol), file=sys.stderr if args.output == "-" else sys.stdout)
    return exit_code(sol.status)


def cmd_validate(args) -> int:
    try:
        inst = load_instance(args.instance)
        with open(args.solution) as f:
            sol = solution_from_dict(json.load(f), inst.graph)
        if args.n:
            inst = inst.subset(args.n)
        report = validate(sol, inst)
    except (OSError, FormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if sol.status != SOLVED:
        print(f"note: solution status is {sol.status}; checking the partial paths anyway")
    for v in report.violations:
        print(v.describe())
    verdict = "ok" if report.ok else f"{len(report.violations)} violation(s)"
    print(f"{verdict} soc={format_ticks(report.soc)} makespan={format_ticks(report.makespan)}")
    return EXIT_OK if report.ok else EXIT_INPUT


def cmd_gen(args) -> int:
    try:
        if args.scen:
            graph = load_graph(args.map)
            starts, goals = parse_scen(_read(args.scen), args.n, graph)
            inst = Instance(graph, tuple(starts), tuple(goals), durations_from_args(args, args.n, args.seed),
                            name=os.path.basename(args.scen))
        else:
            graph = load_graph(args.map)
            inst = random_instance(graph, args.n, args.seed, name=f"{os.path.basename(args.map)}-{args.seed}")
            inst = inst.with_durations(durations_from_args(args, args.n, args.seed))
        inst.check_reachable()
    except (OSError, FormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.output == "-":
        json.dump(instance_to_dict(inst), sys.stdout, indent=1)
        sys.stdout.write("\n")
    else:
        dump_instance(inst, args.output)
    return EXIT_OK


# --------------------------------------------------------------------------
# bench


@dataclass
class BenchRecord:
    instance_id: str
    map: str
    n_agents: int
    planner: str
    seed: int
    durations: str
    status: str
    soc: float | None
    makespan: float | None
    wall_ms: float
    iterations: int

    @property
    def solved(self) -> bool:
        return self.status == SOLVED


CSV_FIELDS = ["schema", *BenchRecord.__dataclass_fields__]


@dataclass(frozen=True)
class BenchJob:
    map_spec: str
    n: int
    rep: int
    seed: int
    planner: str
    timeout: float
    sync_duration: float | None
    choices: tuple[float, ...]


def _bench_instance(job: BenchJob) -> Instance:
    graph = load_graph(job.map_spec)
    inst = random_instance(graph, job.n, job.seed, job.choices)
    if job.sync_duration is not None:
        inst = inst.with_durations(DurationModel.constant(job.n, to_ticks(job.sync_duration)))
    return inst


def run_job(job: BenchJob) -> BenchRecord:
    inst = _bench_instance(job)
    tag = "hetero" if job.sync_duration is None else f"sync-{job.sync_duration:g}"
    iid = f"{os.path.basename(job.map_spec)}/n{job.n}/r{job.rep}"
    try:
        sol = run_planner(inst, job.planner, job.seed, job.timeout)
        status = sol.status
        if sol.solved and not validate(sol, inst).ok:
            status = FAILURE
    except OracleCapExceeded:
        return BenchRecord(iid, job.map_spec, job.n, job.planner, job.seed, tag, "failure", None, None, 0.0, 0)
    ok = status == SOLVED
    return BenchRecord(iid, job.map_spec, job.n, job.planner, job.seed, tag, status,
                       sol.soc / 1000 if ok else None, sol.makespan / 1000 if ok else None,
                       round(sol.wall_ms, 3), sol.iterations)


def bench_jobs(maps: Sequence[str], sizes: Sequence[int], reps: int, seed_base: int,
               planners: Sequence[str], timeout: float, sync: float | None,
               choices: Sequence[float] = DEFAULT_DURATION_CHOICES) -> list[BenchJob]:
    jobs = []
    for m in maps:
        for n in sizes:
            for rep in range(reps):
                for p in planners:
                    for s in ([None, sync] if sync is not None else [None]):
                        jobs.append(BenchJob(m, n, rep, seed_base + rep, p, timeout, s, tuple(choices)))
    return jobs


def _median(xs: list[float]) -> float | None:
    return statistics.median(xs) if xs else None


def summarize(records: Iterable[BenchRecord]) -> str:
    """Success-rate table plus ratio tables over instances solved by both planners."""
    records = list(records)
    out = ["## success rate", "", "| map | N | durations | planner | solved | runs | median wall ms |",
           "|---|---|---|---|---|---|---|"]
    groups: dict[tuple, list[BenchRecord]] = {}
    for r in records:
        groups.setdefault((r.map, r.n_agents, r.durations, r.planner), []).append(r)
    for key in sorted(groups):
        rs = groups[key]
        solved = [r for r in rs if r.solved]
        med = _median([r.wall_ms for r in solved])
        out.append(f"| {key[0]} | {key[1]} | {key[2]} | {key[3]} | {len(solved)} | {len(rs)} | "
                   f"{'-' if med is None else f'{med:.1f}'} |")

    by_id = {(r.instance_id, r.durations, r.planner): r for r in records}
    planners = sorted({r.planner for r in records})
    if "sipp-prio" in planners:
        out += ["", "## ratio to sipp-prio (co-solved instances)", "",
                "| planner | durations | co-solved | median SoC ratio | median makespan ratio |",
                "|---|---|---|---|---|"]
        for p in planners:
            if p == "sipp-prio":
                continue
            for dur in sorted({r.durations for r in records}):
                soc, mk = [], []
                for (iid, d, q), r in by_id.items():
                    if q != p or d != dur:
                        continue
                    b = by_id.get((iid, d, "sipp-prio"))
                    if r.solved and b is not None and b.solved and b.soc and b.makespan:
                        soc.append(r.soc / b.soc)
                        mk.append(r.makespan / b.makespan)
                if soc:
                    out.append(f"| {p} | {dur} | {len(soc)} | {_median(soc):.3f} | {_median(mk):.3f} |")
    syncs = sorted({r.durations for r in records if r.durations != "hetero"})
    for sync in syncs:
        out += ["", f"## makespan hetero / {sync} (co-solved instances)", "",
                "| planner | co-solved | median makespan ratio |", "|---|---|---|"]
        for p in planners:
            ratios = []
            for (iid, d, q), r in by_id.items():
                if q != p or d != "hetero":
                    continue
                s = by_id.get((iid, sync, p))
                if r.solved and s is not None and s.solved and s.makespan:
                    ratios.append(r.makespan / s.makespan)
            if ratios:
                out.append(f"| {p} | {len(ratios)} | {_median(ratios):.3f} |")
    return "\n".join(out) + "\n"


def cmd_bench(args) -> int:
    for m in args.maps:
        try:
            load_graph(m)
        except (OSError, FormatError, ValueError) as exc:
            print(f"error: map {m}: {exc}", file=sys.stderr)
            return EXIT_INPUT
    jobs = bench_jobs(args.maps, args.agents, args.reps, args.seed, args.planners, args.timeout,
                      args.sync_duration, args.choices)
    records: list[BenchRecord] = []
    with open(args.output, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=CSV_FIELDS)
        writer.writeheader()

        def emit(rec: BenchRecord) -> None:
            records.append(rec)
            writer.writerow({"schema": BENCH_SCHEMA, **asdict(rec)})
            f.flush()

        if args.workers <= 1:
            for job in jobs:
                emit(run_job(job))
        else:
            with ProcessPoolExecutor(max_workers=args.workers) as pool:
                # results arrive in submission order; this process is the only writer
                for rec in pool.map(run_job, jobs, chunksize=1):
                    emit(rec)
    text = summarize(records)
    if args.summary:
        with open(args.summary, "w") as f:
            f.write(text)
    print(text, end="")
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    seed = default_seed()
    ap = argparse.ArgumentParser(prog="mapfaa", description="Multi-agent path finding with asynchronous actions.")
    sub = ap.add_subparsers(dest="command", required=True)

    def durations_opts(p):
        p.add_argument("--durations", type=_floats, help="per-agent durations (one value applies to all)")
        p.add_argument("--choices", type=_floats, default=list(DEFAULT_DURATION_CHOICES),
                       help="values sampled from when --durations is absent (default 1,2,3,4,5)")

    s = sub.add_parser("solve", help="plan one instance")
    s.add_argument("--instance", help="native instance JSON")
    s.add_argument("--map", help="MovingAI .map (with --scen)")
    s.add_argument("--scen", help="MovingAI .scen")
    s.add_argument("-n", type=int, help="number of agents (first n rows or agents)")
    durations_opts(s)
    s.add_argument("--planner", choices=PLANNERS, default="lsrp-swap")
    s.add_argument("--seed", type=int, default=seed, help=f"priority and tie-break seed (env {SEED_ENV})")
    s.add_argument("--timeout", type=float, default=30.0, help="seconds")
    s.add_argument("--iteration-cap", type=int, default=None)
    s.add_argument("--tie-break", choices=("random", "id"), default="random")
    s.add_argument("--priorities", type=_floats, help="explicit initial priorities, one per agent")
    s.add_argument("-o", "--output", default="solution.json", help="solution file, '-' for stdout")
    s.add_argument("--timeline", action="store_true", help="print every agent's timed path")
    s.add_argument("--no-timing", action="store_true", help="omit wall-clock time from the solution file")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("validate", help="check a solution file")
    v.add_argument("--instance", required=True)
    v.add_argument("--solution", required=True)
    v.add_argument("-n", type=int, help="use the first n agents of the instance")
    v.set_defaults(func=cmd_validate)

    g = sub.add_parser("gen", help="write a native instance file")
    g.add_argument("--map", required=True, help="MovingAI .map or open:WxH")
    g.add_argument("--scen", help="take starts and goals from a .scen (random placement otherwise)")
    g.add_argument("-n", type=int, required=True)
    g.add_argument("--seed", type=int, default=seed)
    durations_opts(g)
    g.add_argument("-o", "--output", default="-")
    g.set_defaults(func=cmd_gen)

    b = sub.add_parser("bench", help="batch runs with CSV output and summary tables")
    b.add_argument("--maps", nargs="+", default=["open:16x16"], help="map files or open:WxH")
    b.add_argument("--agents", type=_ints, default=[10, 25, 50, 100])
    b.add_argument("--reps", type=int, default=25)
    b.add_argument("--seed", type=int, default=seed, help="seed of the first repetition")
    b.add_argument("--planners", type=lambda t: [p for p in t.split(",") if p], default=["lsrp", "lsrp-swap", "sipp-prio"])
    b.add_argument("--timeout", type=float, default=30.0)
    b.add_argument("--sync-duration", type=float, default=None,
                   help="also run every instance with this single duration for all agents")
    b.add_argument("--choices", type=_floats, default=list(DEFAULT_DURATION_CHOICES))
    b.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    b.add_argument("-o", "--output", default="bench.csv")
    b.add_argument("--summary", help="also write the summary tables to this file")
    b.set_defaults(func=cmd_bench)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "planners", None):
        bad = [p for p in args.planners if p not in PLANNERS]
        if bad:
            print(f"error: unknown planner(s) {', '.join(bad)}", file=sys.stderr)
            return EXIT_INPUT
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
