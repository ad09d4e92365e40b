"""Phase I: k-best loopless routes on the drivable lanelet graph.

Edge costs combine travel distance and inverse lanelet preference,
c(i, j) = w1 * d(i) + w2 / p(i), where d(i) is the centerline arc length of
the lanelet being traversed. Route enumeration uses Yen's k-shortest
loopless paths algorithm over a Dijkstra core; ties between equal-cost
routes break toward the lexicographically smallest id sequence.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass

from .errors import NotDrivableError
from .map_core import Lanelet, LaneletMap
from .odd import CostWeights, OddProfile, drivable_area, lanelet_preference

COST_EPS = 1e-12


@dataclass(frozen=True)
class Route:
    lanelet_ids: tuple[int, ...]
    total_cost: float
    total_distance: float


@dataclass
class RoutingGraph:
    """Directed graph over drivable lanelets with combined-cost edges."""

    nodes: set[int]
    adjacency: dict[int, list[tuple[int, float, float]]]  # node -> [(succ, cost, dist)]

    def edge_cost_of(self, u: int, v: int) -> float:
        for succ, cost, _ in self.adjacency.get(u, []):
            if succ == v:
                return cost
        raise KeyError(f"no edge {u} -> {v}")


def edge_cost(from_lanelet: Lanelet, to_lanelet: Lanelet, profile: OddProfile,
              weights: CostWeights) -> float:
    """Cost of leaving `from_lanelet` toward `to_lanelet`."""
    preference = lanelet_preference(from_lanelet, profile)
    if preference <= 0.0:
        raise NotDrivableError(f"lanelet {from_lanelet.id} has zero preference")
    return weights.w1 * from_lanelet.length() + weights.w2 / preference


def build_routing_graph(lanelet_map: LaneletMap, profile: OddProfile,
                        weights: CostWeights) -> RoutingGraph:
    area = drivable_area(lanelet_map, profile)
    adjacency: dict[int, list[tuple[int, float, float]]] = {n: [] for n in area}
    for lid in area:
        lanelet = lanelet_map.lanelets[lid]
        for succ in lanelet.successors:
            if succ in area:
                cost = edge_cost(lanelet, lanelet_map.lanelets[succ], profile, weights)
                adjacency[lid].append((succ, cost, lanelet.length()))
        adjacency[lid].sort()
    return RoutingGraph(nodes=set(area), adjacency=adjacency)


def _dijkstra(graph: RoutingGraph, start: int, goal: int,
              banned_edges: set[tuple[int, int]] = frozenset(),
              banned_nodes: set[int] = frozenset()) -> tuple[float, tuple[int, ...]] | None:
    """Min-cost simple path; ties resolved toward the smaller id sequence."""
    if start in banned_nodes or goal in banned_nodes:
        return None
    # heap entries (cost, path) — tuple comparison makes equal-cost pops
    # come out in lexicographic path order. Per node we keep only the single
    # best label: swapping an equal-cost prefix for a lexicographically
    # smaller one never worsens the final path, so one label is enough and
    # tie-heavy graphs stay linear instead of exploding.
    heap: list[tuple[float, tuple[int, ...]]] = [(0.0, (start,))]
    best: dict[int, tuple[float, tuple[int, ...]]] = {start: (0.0, (start,))}
    while heap:
        cost, path = heapq.heappop(heap)
        node = path[-1]
        if node == goal:
            return cost, path
        if best.get(node) != (cost, path):
            continue  # superseded by a better label
        for succ, ecost, _ in graph.adjacency.get(node, []):
            if succ in banned_nodes or (node, succ) in banned_edges:
                continue
            nxt = cost + ecost
            npath = path + (succ,)
            prev = best.get(succ)
            if prev is None or nxt < prev[0] - COST_EPS or \
                    (nxt < prev[0] + COST_EPS and npath < prev[1]):
                best[succ] = (nxt, npath)
                heapq.heappush(heap, (nxt, npath))
    return None


def _route_distance(graph: RoutingGraph, path: tuple[int, ...]) -> float:
    total = 0.0
    for u, v in zip(path, path[1:]):
        for succ, _, dist in graph.adjacency[u]:
            if succ == v:
                total += dist
                break
    return total


def _make_route(graph: RoutingGraph, cost: float, path: tuple[int, ...]) -> Route:
    return Route(lanelet_ids=path, total_cost=cost,
                 total_distance=_route_distance(graph, path))


def k_best_routes(graph: RoutingGraph, start: int, goal: int, k: int = 3) -> list[Route]:
    """Up to k cheapest loopless routes, sorted ascending by cost.

    Returns fewer than k routes when fewer simple paths exist; an empty list
    when the goal is unreachable.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if start not in graph.nodes or goal not in graph.nodes:
        return []
    first = _dijkstra(graph, start, goal)
    if first is None:
        return []
    accepted: list[tuple[float, tuple[int, ...]]] = [first]
    candidates: list[tuple[float, tuple[int, ...]]] = []
    while len(accepted) < k:
        _, prev_path = accepted[-1]
        for i in range(len(prev_path) - 1):
            spur_node = prev_path[i]
            root = prev_path[: i + 1]
            banned_edges: set[tuple[int, int]] = set()
            for _, path in accepted:
                if path[: i + 1] == root and len(path) > i + 1:
                    banned_edges.add((path[i], path[i + 1]))
            banned_nodes = set(root[:-1])
            root_cost = sum(graph.edge_cost_of(u, v) for u, v in zip(root, root[1:]))
            spur = _dijkstra(graph, spur_node, goal, banned_edges, banned_nodes)
            if spur is None:
                continue
            total = (root_cost + spur[0], root[:-1] + spur[1])
            if total[1] not in (p for _, p in accepted) and \
                    total[1] not in (p for _, p in candidates):
                heapq.heappush(candidates, total)
        if not candidates:
            break
        accepted.append(heapq.heappop(candidates))
    return [_make_route(graph, cost, path) for cost, path in accepted]
