"""Routing and traffic ordering: the first stage of the allocation pipeline.

Three routing methods are provided.  "spr" routes every request on its
shortest path independently.  "scpr" penalizes congestion: it minimizes
sum_l length_l * n_l^2 with n_l the number of requests crossing link l, so
stacking requests on a link costs quadratically.  "scprr" weights congestion
by traffic volume instead, minimizing sum_l length_l * n_l * r_l with r_l
the total bit rate on the link.

Besides paths, the stage emits the processing order used downstream: requests
sorted by descending routing cost.  Projecting that global order onto each
link fixes the relative spectral position of the channels sharing the link,
which is what turns spectrum nonoverlap into tractable pairwise constraints.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import networkx as nx
import numpy as np

from .model import ConnectionRequest, InstanceError, NetworkTopology, span_count

ROUTING_METHODS = ("spr", "scpr", "scprr")


@dataclass(frozen=True, eq=False)
class RoutingSolution:
    """Paths plus the derived ordering and span geometry."""
    method: str
    requests: tuple[ConnectionRequest, ...]
    paths: tuple[tuple[int, ...], ...]        # link ids along each path
    costs: tuple[float, ...]                  # per-request ordering cost
    order: tuple[int, ...]                    # request indices, costliest first
    objective: float
    span_counts: tuple[int, ...]
    shared_spans: np.ndarray
    link_order: tuple[tuple[int, tuple[int, ...]], ...]

    def rank(self, q: int) -> int:
        """Position of request q in the processing order."""
        return self.order.index(q)


def build_graph(topology: NetworkTopology) -> nx.DiGraph:
    """Directed graph with link ids on the edges (shorter parallel link wins)."""
    graph = nx.DiGraph()
    graph.add_nodes_from(topology.nodes)
    for link in topology.links:
        old = graph.get_edge_data(link.begin, link.end)
        if old is None or link.length_km < old["length"]:
            graph.add_edge(link.begin, link.end, length=link.length_km,
                           link_id=link.id)
    return graph


def _link_ids(graph: nx.DiGraph, node_path) -> tuple[int, ...]:
    return tuple(graph.edges[u, v]["link_id"]
                 for u, v in itertools.pairwise(node_path))


def shortest_path(graph: nx.DiGraph, topology: NetworkTopology,
                  source: str, dest: str) -> tuple[int, ...]:
    """Shortest path by length; ties resolved toward earlier-listed nodes.

    Among all shortest paths the one chosen is lexicographically smallest in
    the topology's node order, found by walking the DAG of tight edges.
    """
    try:
        dist_fwd = nx.single_source_dijkstra_path_length(graph, source,
                                                         weight="length")
        dist_bwd = nx.single_source_dijkstra_path_length(graph.reverse(copy=False),
                                                         dest, weight="length")
    except nx.NodeNotFound:
        raise InstanceError(f"unknown endpoint on demand {source}->{dest}") from None
    if dest not in dist_fwd:
        raise InstanceError(f"no path from {source} to {dest}")
    best = dist_fwd[dest]
    tol = 1e-9 * max(1.0, best)
    rank = {n: i for i, n in enumerate(topology.nodes)}
    path = [source]
    node = source
    while node != dest:
        succs = [v for v in graph.successors(node)
                 if v in dist_bwd and abs(dist_fwd[node]
                                          + graph.edges[node, v]["length"]
                                          + dist_bwd[v] - best) <= tol]
        node = min(succs, key=rank.__getitem__)
        path.append(node)
    return _link_ids(graph, path)


def candidate_paths(graph: nx.DiGraph, source: str, dest: str,
                    limit: int) -> list[tuple[int, ...]]:
    """Up to `limit` shortest simple paths, shortest first."""
    gen = nx.shortest_simple_paths(graph, source, dest, weight="length")
    try:
        return [_link_ids(graph, p) for p in itertools.islice(gen, limit)]
    except nx.NetworkXNoPath:
        raise InstanceError(f"no path from {source} to {dest}") from None


def span_metrics(paths, topology: NetworkTopology,
                 span_km: float) -> tuple[tuple[int, ...], np.ndarray]:
    """Per-request span counts and the matrix of pairwise shared spans."""
    spans_of = {l.id: span_count(l.length_km, span_km) for l in topology.links}
    n = len(paths)
    shared = np.zeros((n, n), dtype=int)
    for q, path_q in enumerate(paths):
        links_q = set(path_q)
        shared[q, q] = sum(spans_of[l] for l in path_q)
        for i in range(q + 1, n):
            common = links_q.intersection(paths[i])
            if common:
                shared[q, i] = shared[i, q] = sum(spans_of[l] for l in common)
    return tuple(int(shared[q, q]) for q in range(n)), shared


class _Congestion:
    """Incremental evaluator of the congestion objectives."""

    def __init__(self, topology: NetworkTopology, requests, rate_weighted: bool):
        self.length = {l.id: l.length_km for l in topology.links}
        self.rates = [r.rate_bps / 1e9 for r in requests]  # Gb/s keeps sums tame
        self.rate_weighted = rate_weighted
        self.count = {l.id: 0 for l in topology.links}
        self.rate = {l.id: 0.0 for l in topology.links}
        self.value = 0.0

    def add(self, q: int, path) -> None:
        self._apply(q, path, +1)

    def remove(self, q: int, path) -> None:
        self._apply(q, path, -1)

    def _apply(self, q, path, sign):
        rate_q = self.rates[q]
        for l in path:
            n, r, length = self.count[l], self.rate[l], self.length[l]
            if self.rate_weighted:
                if sign > 0:
                    self.value += length * (n * rate_q + r + rate_q)
                else:
                    self.value -= length * ((n - 1) * rate_q + r)
            else:
                self.value += length * (2 * n + 1) if sign > 0 else \
                    -length * (2 * n - 1)
            self.count[l] = n + sign
            self.rate[l] = r + sign * rate_q

    def cost_of(self, path) -> float:
        """Ordering cost of a request currently routed on `path`."""
        if self.rate_weighted:
            return sum(self.length[l] * self.rate[l] for l in path)
        return sum(self.length[l] * self.count[l] for l in path)


def _search_congestion(topology, requests, candidates, rate_weighted,
                       seed, exhaustive_limit, restarts):
    """Pick one candidate path per request minimizing the congestion objective.

    Exhaustive when the product of candidate counts is small enough, otherwise
    best-response local search from several seeded starts.
    """
    n = len(requests)
    combos = 1
    for c in candidates:
        combos *= len(c)
        if combos > exhaustive_limit:
            break
    if combos <= exhaustive_limit:
        state = _Congestion(topology, requests, rate_weighted)
        best_val, best_choice = math.inf, None
        choice = [0] * n

        def descend(q):
            nonlocal best_val, best_choice
            if q == n:
                if state.value < best_val - 1e-12:
                    best_val, best_choice = state.value, tuple(choice)
                return
            for j, path in enumerate(candidates[q]):
                choice[q] = j
                state.add(q, path)
                descend(q + 1)
                state.remove(q, path)

        descend(0)
        return best_choice, best_val

    rng = np.random.default_rng(seed)
    best_val, best_choice = math.inf, None
    for restart in range(restarts):
        if restart == 0:
            choice = [0] * n  # shortest-path start
        else:
            choice = [int(rng.integers(len(c))) for c in candidates]
        state = _Congestion(topology, requests, rate_weighted)
        for q in range(n):
            state.add(q, candidates[q][choice[q]])
        scan = list(range(n))
        improved = True
        while improved:
            improved = False
            rng.shuffle(scan)
            for q in scan:
                current = choice[q]
                state.remove(q, candidates[q][current])
                best_j, best_delta = current, math.inf
                for j, path in enumerate(candidates[q]):
                    state.add(q, path)
                    if state.value < best_delta - 1e-12:
                        best_delta, best_j = state.value, j
                    state.remove(q, path)
                state.add(q, candidates[q][best_j])
                if best_j != current:
                    choice[q] = best_j
                    improved = True
        if state.value < best_val - 1e-12:
            best_val, best_choice = state.value, tuple(choice)
    return best_choice, best_val


def solve_routing(topology: NetworkTopology, requests, method: str = "spr",
                  *, span_km: float = 80.0, seed: int = 0,
                  max_candidates: int = 8, exhaustive_limit: int = 200_000,
                  restarts: int = 16) -> RoutingSolution:
    """Route all requests and derive the processing order."""
    if method not in ROUTING_METHODS:
        raise InstanceError(f"unknown routing method {method!r}")
    requests = tuple(requests)
    graph = build_graph(topology)
    length = {l.id: l.length_km for l in topology.links}

    if method == "spr":
        paths = tuple(shortest_path(graph, topology, r.source, r.dest)
                      for r in requests)
        costs = tuple(sum(length[l] for l in p) for p in paths)
        objective = float(sum(costs))
    else:
        cache: dict[tuple[str, str], list] = {}
        candidates = []
        for r in requests:
            key = (r.source, r.dest)
            if key not in cache:
                cache[key] = candidate_paths(graph, r.source, r.dest,
                                             max_candidates)
            candidates.append(cache[key])
        choice, objective = _search_congestion(
            topology, requests, candidates, method == "scprr", seed,
            exhaustive_limit, restarts)
        paths = tuple(candidates[q][choice[q]] for q in range(len(requests)))
        state = _Congestion(topology, requests, method == "scprr")
        for q, p in enumerate(paths):
            state.add(q, p)
        costs = tuple(state.cost_of(p) for p in paths)

    order = tuple(sorted(range(len(requests)),
                         key=lambda q: (-costs[q], requests[q].id)))
    span_counts, shared = span_metrics(paths, topology, span_km)
    position = {q: k for k, q in enumerate(order)}
    per_link: dict[int, list[int]] = {}
    for q, path in enumerate(paths):
        for l in path:
            per_link.setdefault(l, []).append(q)
    link_order = tuple((l, tuple(sorted(qs, key=position.__getitem__)))
                       for l, qs in sorted(per_link.items()))
    return RoutingSolution(method=method, requests=requests, paths=paths,
                           costs=costs, order=order, objective=float(objective),
                           span_counts=span_counts, shared_spans=shared,
                           link_order=link_order)


def enumerate_shortest(graph: nx.DiGraph, source: str, dest: str) -> float:
    """Oracle: minimum path length by exhaustive simple-path enumeration."""
    best = math.inf
    for node_path in nx.all_simple_paths(graph, source, dest):
        total = sum(graph.edges[u, v]["length"]
                    for u, v in itertools.pairwise(node_path))
        best = min(best, total)
    if math.isinf(best):
        raise InstanceError(f"no path from {source} to {dest}")
    return best
