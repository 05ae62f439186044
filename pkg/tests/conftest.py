from __future__ import annotations

import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from mapfaa.timegraph import DurationModel, Graph, Instance, load_instance  # noqa: E402

INSTANCES = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "instances")


def edges_instance(names, edges, starts, goals, durations, priorities=None) -> Instance:
    g = Graph.from_named_edges(list(names), edges)
    v = g.vertex_named
    return Instance(g, tuple(v(s) for s in starts), tuple(v(x) for x in goals),
                    DurationModel(tuple(int(d * 1000) for d in durations)),
                    tuple(priorities) if priorities else None)


@pytest.fixture
def toy():
    """Five-vertex toy: agents E->D, D->B, B->C with durations 1, 2, 3."""
    return load_instance(os.path.join(INSTANCES, "toy_five_vertex.json"))


@pytest.fixture
def tree():
    """Six-vertex tree where two agents must exchange places."""
    return load_instance(os.path.join(INSTANCES, "tree_swap.json"))


def labels(graph, path):
    return [graph.label(e.v) for e in path]


# one pass/fail line per acceptance criterion, collected by tests/test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'} - {detail}")
