import itertools

import numpy as np
import pytest

from dcpp.map_core import LaneletMap
from dcpp.odd import (CostWeights, OddParameterKind, OddProfile,
                      extended_profile, nominal_profile)
from dcpp.routing import (RoutingGraph, build_routing_graph, edge_cost,
                          k_best_routes)

from conftest import straight_lanelet


def graph_from_edges(edges):
    """RoutingGraph from [(u, v, cost, dist), ...]."""
    nodes = {u for u, *_ in edges} | {v for _, v, *_ in edges}
    adjacency = {n: [] for n in nodes}
    for u, v, cost, dist in edges:
        adjacency[u].append((v, cost, dist))
    for n in adjacency:
        adjacency[n].sort()
    return RoutingGraph(nodes=nodes, adjacency=adjacency)


def enumerate_simple_paths(edges, start, goal):
    """Exhaustive DFS oracle: every loopless path with its summed cost."""
    out = {}
    for u, v, cost, _ in edges:
        out.setdefault(u, []).append((v, cost))
    results = []

    def walk(node, path, cost):
        if node == goal:
            results.append((cost, tuple(path)))
            return
        for succ, c in out.get(node, []):
            if succ not in path:
                walk(succ, path + [succ], cost + c)

    walk(start, [start], 0.0)
    return sorted(results, key=lambda item: (item[0], item[1]))


class TestEdgeCost:
    def test_hand_evaluated(self):
        # w1*d + w2/p with d=10, p=4
        a = straight_lanelet(1, 0, 10, tags=("parking_area",), successors=(2,))
        b = straight_lanelet(2, 10, 20)
        cost = edge_cost(a, b, extended_profile(), CostWeights(1.0, 1.0))
        assert cost == pytest.approx(10.25, abs=1e-12)

    def test_w2_zero_is_pure_distance(self):
        a = straight_lanelet(1, 0, 10, successors=(2,))
        b = straight_lanelet(2, 10, 20)
        cost = edge_cost(a, b, extended_profile(), CostWeights(1.0, 0.0))
        assert cost == pytest.approx(10.0, abs=1e-12)

    def test_w1_zero_ignores_distance(self):
        profile = extended_profile()
        w = CostWeights(0.0, 1.0)
        short = straight_lanelet(1, 0, 3, tags=("bus_driveway",), successors=(2,))
        long = straight_lanelet(1, 0, 300, tags=("bus_driveway",), successors=(2,))
        b = straight_lanelet(2, 300, 310)
        assert edge_cost(short, b, profile, w) \
            == pytest.approx(edge_cost(long, b, profile, w)) \
            == pytest.approx(0.2, abs=1e-12)


class TestKBestSmall:
    def test_start_equals_goal(self):
        g = graph_from_edges([(1, 2, 1.0, 1.0)])
        routes = k_best_routes(g, 1, 1, 3)
        assert len(routes) == 1
        assert routes[0].lanelet_ids == (1,)
        assert routes[0].total_cost == 0.0

    def test_unreachable_goal(self):
        g = graph_from_edges([(1, 2, 1.0, 1.0), (3, 4, 1.0, 1.0)])
        assert k_best_routes(g, 1, 4, 3) == []

    def test_diamond_two_paths(self):
        edges = [(1, 2, 1.0, 1.0), (1, 3, 2.0, 2.0),
                 (2, 4, 1.0, 1.0), (3, 4, 0.5, 0.5)]
        g = graph_from_edges(edges)
        routes = k_best_routes(g, 1, 4, 3)
        oracle = enumerate_simple_paths(edges, 1, 4)
        assert [r.lanelet_ids for r in routes] == [p for _, p in oracle]
        for r, (cost, _) in zip(routes, oracle):
            assert r.total_cost == pytest.approx(cost, rel=1e-9)

    def test_equal_cost_ties_break_lexicographically(self):
        edges = [(1, 3, 1.0, 1.0), (1, 2, 1.0, 1.0),
                 (2, 4, 1.0, 1.0), (3, 4, 1.0, 1.0)]
        g = graph_from_edges(edges)
        routes = k_best_routes(g, 1, 4, 2)
        assert [r.lanelet_ids for r in routes] == [(1, 2, 4), (1, 3, 4)]

    def test_routes_are_loopless_and_distinct(self):
        rng = np.random.default_rng(3)
        edges = [(u, v, float(rng.uniform(0.5, 3.0)), 1.0)
                 for u, v in itertools.permutations(range(6), 2)
                 if rng.random() < 0.5]
        g = graph_from_edges(edges)
        routes = k_best_routes(g, 0, 5, 4)
        seen = set()
        for r in routes:
            assert len(set(r.lanelet_ids)) == len(r.lanelet_ids)
            assert r.lanelet_ids not in seen
            seen.add(r.lanelet_ids)

    def test_k_validation(self):
        g = graph_from_edges([(1, 2, 1.0, 1.0)])
        with pytest.raises(ValueError):
            k_best_routes(g, 1, 2, 0)


class TestKBestOracle:
    """k_best_routes equals exhaustive simple-path enumeration on 50
    random graphs of at most 10 nodes."""

    def random_edges(self, rng):
        n = int(rng.integers(3, 11))
        edges = []
        for u, v in itertools.permutations(range(n), 2):
            if rng.random() < 0.35:
                edges.append((u, v, float(rng.uniform(0.1, 5.0)),
                              float(rng.uniform(0.1, 5.0))))
        return n, edges

    def test_matches_enumeration_on_50_random_graphs(self):
        rng = np.random.default_rng(2024)
        checked = 0
        while checked < 50:
            n, edges = self.random_edges(rng)
            if not edges:
                continue
            g = graph_from_edges(edges)
            start, goal = 0, n - 1
            if start not in g.nodes or goal not in g.nodes:
                continue
            k = int(rng.integers(1, 5))
            routes = k_best_routes(g, start, goal, k)
            oracle = enumerate_simple_paths(edges, start, goal)[:k]
            assert [r.lanelet_ids for r in routes] == [p for _, p in oracle]
            for r, (cost, _) in zip(routes, oracle):
                assert r.total_cost == pytest.approx(cost, rel=1e-9)
            checked += 1


def detour_map():
    """Main road with a shorter sidewalk shortcut and a parking detour."""
    return LaneletMap(lanelets={
        1: straight_lanelet(1, 0, 10, successors=(2, 4, 5)),
        2: straight_lanelet(2, 10, 40, successors=(3,)),
        4: straight_lanelet(4, 10, 30, y=5, tags=("parking_area",),
                            successors=(3,)),
        5: straight_lanelet(5, 10, 25, y=-5, tags=("sidewalk",),
                            successors=(3,)),
        3: straight_lanelet(3, 40, 50),
    })


class TestCostProperties:
    def test_w2_zero_argmin_is_shortest_distance(self):
        m = detour_map()
        graph = build_routing_graph(m, extended_profile(), CostWeights(1.0, 0.0))
        best = k_best_routes(graph, 1, 3, 1)[0]
        by_distance = min(k_best_routes(graph, 1, 3, 4),
                          key=lambda r: (r.total_distance, r.lanelet_ids))
        assert best.lanelet_ids == by_distance.lanelet_ids

    @pytest.mark.parametrize("lam", [0.25, 2.0, 100.0])
    def test_weight_scaling_preserves_ranking(self, lam):
        m = detour_map()
        base = build_routing_graph(m, extended_profile(), CostWeights(1.0, 1.0))
        scaled = build_routing_graph(m, extended_profile(),
                                     CostWeights(lam, lam))
        order_base = [r.lanelet_ids for r in k_best_routes(base, 1, 3, 4)]
        order_scaled = [r.lanelet_ids for r in k_best_routes(scaled, 1, 3, 4)]
        assert order_base == order_scaled

    def test_total_cost_is_sum_of_edge_costs(self):
        m = detour_map()
        graph = build_routing_graph(m, extended_profile(), CostWeights(1.0, 1.0))
        for route in k_best_routes(graph, 1, 3, 4):
            total = sum(graph.edge_cost_of(u, v)
                        for u, v in zip(route.lanelet_ids, route.lanelet_ids[1:]))
            assert route.total_cost == pytest.approx(total, rel=1e-9)

    def test_restricting_profile_never_cheapens_best_route(self):
        m = detour_map()
        full = build_routing_graph(m, extended_profile(), CostWeights(1.0, 1.0))
        restricted_profile = OddProfile(
            permitted=frozenset({OddParameterKind.REGULAR_ROAD,
                                 OddParameterKind.PARKING_AREA}),
            preference={OddParameterKind.REGULAR_ROAD: 8.0,
                        OddParameterKind.PARKING_AREA: 4.0})
        restricted = build_routing_graph(m, restricted_profile,
                                         CostWeights(1.0, 1.0))
        best_full = k_best_routes(full, 1, 3, 1)[0].total_cost
        best_restricted = k_best_routes(restricted, 1, 3, 1)[0].total_cost
        assert best_restricted >= best_full - 1e-12

    def test_nominal_profile_excludes_detours(self):
        m = detour_map()
        graph = build_routing_graph(m, nominal_profile(), CostWeights(1.0, 1.0))
        routes = k_best_routes(graph, 1, 3, 4)
        assert [r.lanelet_ids for r in routes] == [(1, 2, 3)]
