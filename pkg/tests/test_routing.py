import itertools
import math

import numpy as np
import pytest

from eongp.model import ConnectionRequest, InstanceError, load_topology
from eongp.routing import (
    build_graph, candidate_paths, enumerate_shortest, shortest_path,
    solve_routing, span_metrics,
)


def topo_from_text(tmp_path, text):
    p = tmp_path / "topo.txt"
    p.write_text(text)
    return load_topology(p)


DIAMOND = """\
node a
node b
node c
node d
link a b 1
link b d 1
link a c 1
link c d 1
link a d 3
"""

# three parallel routes s->t of lengths 10, 12 and 14
TRIDENT = """\
node s
node m
node t
node u
link s t 10
link s m 6
link m t 6
link s u 7
link u t 7
"""


def req(i, s, t, gbps=100.0):
    return ConnectionRequest(i, s, t, gbps * 1e9)


# ---------------------------------------------------------------- SPR

def test_spr_tie_break_prefers_earlier_nodes(tmp_path):
    topo = topo_from_text(tmp_path, DIAMOND)
    graph = build_graph(topo)
    # two length-2 routes a->d; the one through b (listed first) wins
    assert shortest_path(graph, topo, "a", "d") == (0, 2)
    assert shortest_path(graph, topo, "d", "a") == (3, 1)


def test_spr_matches_enumeration_on_mesh(data_dir):
    topo = load_topology(str(data_dir / "cost239_topology.txt"))
    graph = build_graph(topo)
    length = {l.id: l.length_km for l in topo.links}
    for s, t in [("1", "8"), ("3", "10"), ("5", "11"), ("2", "9"), ("7", "4")]:
        path = shortest_path(graph, topo, s, t)
        assert math.isclose(sum(length[l] for l in path),
                            enumerate_shortest(graph, s, t))


def test_spr_solution_fields(tmp_path):
    topo = topo_from_text(tmp_path, DIAMOND)
    sol = solve_routing(topo, [req(0, "a", "d"), req(1, "a", "d"),
                               req(2, "b", "d")], "spr", span_km=80.0)
    assert sol.paths == ((0, 2), (0, 2), (2,))
    assert sol.costs == (2.0, 2.0, 1.0)
    assert sol.order == (0, 1, 2)  # equal costs fall back to id order
    assert sol.objective == 5.0
    assert sol.span_counts == (2, 2, 1)
    assert sol.shared_spans[0, 1] == 2
    assert sol.shared_spans[0, 2] == 1
    assert dict(sol.link_order)[2] == (0, 1, 2)
    assert sol.rank(2) == 2


def test_unreachable_raises(tmp_path):
    topo = topo_from_text(tmp_path, "node a\nnode b\nnode c\nlink a b 1\n")
    with pytest.raises(InstanceError):
        solve_routing(topo, [req(0, "a", "c")], "spr")
    with pytest.raises(InstanceError):
        solve_routing(topo, [req(0, "a", "c")], "scpr")
    with pytest.raises(InstanceError):
        solve_routing(topo, [req(0, "a", "z")], "spr")
    with pytest.raises(InstanceError):
        solve_routing(topo, [req(0, "a", "b")], "fastest")


# ---------------------------------------------------------------- congestion

def test_candidates_sorted_shortest_first(tmp_path):
    topo = topo_from_text(tmp_path, TRIDENT)
    graph = build_graph(topo)
    cands = candidate_paths(graph, "s", "t", 8)
    length = {l.id: l.length_km for l in topo.links}
    totals = [sum(length[l] for l in p) for p in cands]
    assert totals == [10.0, 12.0, 14.0]


def test_scpr_spreads_congestion(tmp_path):
    topo = topo_from_text(tmp_path, TRIDENT)
    reqs = [req(i, "s", "t") for i in range(3)]
    sol = solve_routing(topo, reqs, "scpr")
    # optimum puts each request on its own route: 10 + 12 + 14
    assert sol.objective == pytest.approx(36.0)
    assert len({p for p in sol.paths}) == 3
    assert sol.costs == (10.0, 12.0, 14.0)
    assert sol.order == (2, 1, 0)  # costliest first
    spr = solve_routing(topo, reqs, "spr")
    assert spr.objective == pytest.approx(30.0)  # all stacked on the short route


def brute_force_congestion(topo, reqs, candidates, rate_weighted):
    length = {l.id: l.length_km for l in topo.links}
    best = math.inf
    for combo in itertools.product(*candidates):
        count: dict[int, int] = {}
        rate: dict[int, float] = {}
        for r, path in zip(reqs, combo):
            for l in path:
                count[l] = count.get(l, 0) + 1
                rate[l] = rate.get(l, 0.0) + r.rate_bps / 1e9
        if rate_weighted:
            val = sum(length[l] * count[l] * rate[l] for l in count)
        else:
            val = sum(length[l] * count[l] ** 2 for l in count)
        best = min(best, val)
    return best


def test_scprr_matches_brute_force(tmp_path):
    topo = topo_from_text(tmp_path, TRIDENT)
    graph = build_graph(topo)
    reqs = [req(0, "s", "t", 10.0), req(1, "s", "t", 1.0), req(2, "s", "t", 1.0)]
    cands = [candidate_paths(graph, "s", "t", 8)] * 3
    want = brute_force_congestion(topo, reqs, cands, rate_weighted=True)
    sol = solve_routing(topo, reqs, "scprr")
    assert sol.objective == pytest.approx(want) == pytest.approx(126.0)
    # the heavy request rides the short route
    heavy_len = sum({l.id: l.length_km for l in topo.links}[l]
                    for l in sol.paths[0])
    assert heavy_len == 10.0


def test_congestion_cost_sums_to_objective(tmp_path):
    topo = topo_from_text(tmp_path, TRIDENT)
    reqs = [req(i, "s", "t", 5.0 + i) for i in range(3)]
    for method in ("scpr", "scprr"):
        sol = solve_routing(topo, reqs, method)
        assert sum(sol.costs) == pytest.approx(sol.objective)


def test_local_search_reaches_small_optimum(tmp_path):
    topo = topo_from_text(tmp_path, TRIDENT)
    reqs = [req(i, "s", "t") for i in range(3)]
    # exhaustive disabled: force the seeded local search
    sol = solve_routing(topo, reqs, "scpr", exhaustive_limit=0, seed=3)
    assert sol.objective == pytest.approx(36.0)
    again = solve_routing(topo, reqs, "scpr", exhaustive_limit=0, seed=3)
    assert again.paths == sol.paths


def test_random_instances_local_equals_exhaustive(data_dir):
    topo = load_topology(str(data_dir / "cost239_topology.txt"))
    rng = np.random.default_rng(42)
    nodes = topo.nodes
    for trial in range(5):
        pairs = set()
        while len(pairs) < 4:
            s, t = rng.choice(len(nodes), size=2, replace=False)
            pairs.add((nodes[s], nodes[t]))
        reqs = [ConnectionRequest(i, s, t, float(rng.integers(1, 10)) * 1e10)
                for i, (s, t) in enumerate(sorted(pairs))]
        exact = solve_routing(topo, reqs, "scpr", max_candidates=4)
        local = solve_routing(topo, reqs, "scpr", max_candidates=4,
                              exhaustive_limit=0, seed=trial)
        assert local.objective >= exact.objective - 1e-9
        assert local.objective == pytest.approx(exact.objective, rel=0.02)


# ---------------------------------------------------------------- geometry

def test_span_metrics_on_mesh(data_dir):
    topo = load_topology(str(data_dir / "cost239_topology.txt"))
    reqs = [req(0, "1", "8"), req(1, "1", "2")]
    sol = solve_routing(topo, reqs, "spr")
    # 1->8 rides the 1000 km direct link: 13 spans of 80 km
    assert sol.span_counts[0] == 13
    # 1->2 rides the 410 km link: 6 spans
    assert sol.span_counts[1] == 6
    assert sol.shared_spans[0, 1] == 0
    assert np.array_equal(sol.shared_spans, sol.shared_spans.T)
    assert np.array_equal(np.diagonal(sol.shared_spans), sol.span_counts)


def test_shared_spans_bounded_by_own(tmp_path):
    topo = topo_from_text(tmp_path, DIAMOND)
    paths = [(0, 2), (2,), (0,)]
    counts, shared = span_metrics(paths, topo, span_km=0.6)
    assert counts == (4, 2, 2)  # 1 km links at 0.6 km spans: 2 each
    for q in range(3):
        for i in range(3):
            assert shared[q, i] <= min(counts[q], counts[i])


def test_link_order_is_projection_of_global_order(tmp_path):
    topo = topo_from_text(tmp_path, DIAMOND)
    reqs = [req(0, "a", "d", 10), req(1, "a", "d", 99), req(2, "b", "d", 50)]
    sol = solve_routing(topo, reqs, "scprr")
    pos = {q: k for k, q in enumerate(sol.order)}
    for link, seq in sol.link_order:
        assert list(seq) == sorted(seq, key=pos.__getitem__)
        for q in seq:
            assert link in sol.paths[q]
