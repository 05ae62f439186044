from __future__ import annotations

import csv
import json
import os

import pytest

from mapfaa.cli import BENCH_SCHEMA, CSV_FIELDS, build_parser, main, summarize, BenchRecord
from mapfaa.timegraph import open_grid, random_instance, render_map, render_scen

from conftest import INSTANCES

TOY = os.path.join(INSTANCES, "toy_five_vertex.json")
TREE = os.path.join(INSTANCES, "tree_swap.json")


def test_solve_toy_prints_timeline(tmp_path, capsys):
    out = tmp_path / "s.json"
    code = main(["solve", "--instance", TOY, "--planner", "lsrp", "--priorities", "0.99,0.66,0.33",
                 "--timeline", "-o", str(out)])
    text = capsys.readouterr().out
    assert code == 0
    assert "agent 2: B@[0.000,0.000] -> C@[3.000,3.000]" in text
    assert "soc=14.000 makespan=6.000" in text
    assert main(["validate", "--instance", TOY, "--solution", str(out)]) == 0


def test_gen_solve_validate_pipeline_is_reproducible(tmp_path):
    outs = []
    for k in range(2):
        inst = tmp_path / f"i{k}.json"
        sol = tmp_path / f"s{k}.json"
        assert main(["gen", "--map", "open:8x8", "-n", "12", "--seed", "5", "-o", str(inst)]) == 0
        assert main(["solve", "--instance", str(inst), "--planner", "lsrp-swap", "--seed", "7",
                     "--no-timing", "-o", str(sol)]) == 0
        assert main(["validate", "--instance", str(inst), "--solution", str(sol)]) == 0
        outs.append((inst.read_bytes(), sol.read_bytes()))
    assert outs[0] == outs[1]


def test_map_and_scen_inputs(tmp_path):
    g = open_grid(6, 5)
    inst = random_instance(g, 4, 1)
    (tmp_path / "m.map").write_text(render_map(g))
    (tmp_path / "m.scen").write_text(render_scen(g, inst.starts, inst.goals, "m.map"))
    out = tmp_path / "s.json"
    args = ["solve", "--map", str(tmp_path / "m.map"), "--scen", str(tmp_path / "m.scen"), "-n", "3",
            "--planner", "lsrp-swap", "--seed", "7", "--timeout", "30", "-o", str(out)]
    assert main(args) == 0
    data = json.loads(out.read_text())
    assert data["status"] == "solved" and len(data["paths"]) == 3
    gen_out = tmp_path / "g.json"
    assert main(["gen", "--map", str(tmp_path / "m.map"), "--scen", str(tmp_path / "m.scen"), "-n", "4",
                 "--durations", "2.5", "-o", str(gen_out)]) == 0
    assert json.loads(gen_out.read_text())["durations"]["values"] == [2.5] * 4
    assert main(["gen", "--map", str(tmp_path / "m.map"), "--scen", str(tmp_path / "m.scen"), "-n", "9"]) == 1


@pytest.mark.parametrize("planner,code", [("lsrp", 2), ("sipp-prio", 3), ("lsrp-swap", 0), ("oracle", 0)])
def test_exit_codes(tmp_path, planner, code):
    assert main(["solve", "--instance", TREE, "--planner", planner, "-o", str(tmp_path / "s.json")]) == code


def test_bad_inputs_exit_1(tmp_path, capsys):
    assert main(["solve", "--instance", str(tmp_path / "missing.json"), "-o", str(tmp_path / "s.json")]) == 1
    (tmp_path / "bad.json").write_text("{not json")
    assert main(["solve", "--instance", str(tmp_path / "bad.json"), "-o", str(tmp_path / "s.json")]) == 1
    big = tmp_path / "big.json"
    main(["gen", "--map", "open:16x16", "-n", "4", "--seed", "1", "-o", str(big)])
    assert main(["solve", "--instance", str(big), "--planner", "oracle", "-o", str(tmp_path / "s.json")]) == 1
    assert "oracle" in capsys.readouterr().err


def test_validate_flags_conflicts(tmp_path, capsys):
    sol = {"schema": "mapfaa-solution/1", "status": "solved", "paths": [
        [{"v": "E", "arrive": 0, "depart": 0}, {"v": "D", "arrive": 1, "depart": 1}],
        [{"v": "D", "arrive": 0, "depart": 0}, {"v": "B", "arrive": 2, "depart": 2}],
        [{"v": "B", "arrive": 0, "depart": 0}, {"v": "C", "arrive": 3, "depart": 3}]]}
    path = tmp_path / "s.json"
    path.write_text(json.dumps(sol))
    assert main(["validate", "--instance", TOY, "--solution", str(path)]) == 1
    assert "duration-conflict" in capsys.readouterr().out


def test_seed_from_environment(monkeypatch):
    monkeypatch.setenv("MAPFAA_SEED", "42")
    assert build_parser().parse_args(["solve", "--instance", TOY]).seed == 42
    monkeypatch.setenv("MAPFAA_SEED", "x")
    with pytest.raises(SystemExit):
        build_parser()


def test_bench_writes_records_and_tables(tmp_path, capsys):
    out = tmp_path / "b.csv"
    summary = tmp_path / "summary.md"
    code = main(["bench", "--maps", "open:8x8", "--agents", "4,6", "--reps", "3", "--seed", "1",
                 "--planners", "lsrp,sipp-prio", "--sync-duration", "5.0", "--workers", "2",
                 "-o", str(out), "--summary", str(summary)])
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 2 * 3 * 2 * 2
    assert list(rows[0]) == CSV_FIELDS and rows[0]["schema"] == BENCH_SCHEMA
    text = summary.read_text()
    assert "ratio to sipp-prio" in text and "makespan hetero / sync-5" in text


def test_bench_rejects_unknown_planner(tmp_path):
    assert main(["bench", "--planners", "cbs", "-o", str(tmp_path / "b.csv")]) == 1


def test_ratio_table_uses_only_co_solved():
    def rec(iid, planner, status, soc):
        return BenchRecord(iid, "m", 2, planner, 0, "hetero", status, soc, soc, 1.0, 1)

    records = [rec("a", "lsrp", "solved", 20.0), rec("a", "sipp-prio", "solved", 10.0),
               rec("b", "lsrp", "solved", 99.0), rec("b", "sipp-prio", "failure", None),
               rec("c", "lsrp", "timeout", None), rec("c", "sipp-prio", "solved", 5.0)]
    text = summarize(records)
    assert "| lsrp | hetero | 1 | 2.000 | 2.000 |" in text
