"""Phase II: sampling-based geometric planning along a Phase-I route.

Routes are turned into waypoint polylines, then an RRT* search with
Reeds-Shepp steering grows a tree on the occupancy grid. Samples are biased
toward the waypoint corridor, reverse driving is cost-penalized, and the
whole search is deterministic for a fixed seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import shapely
from scipy import ndimage
from shapely.ops import unary_union

from .errors import PlanningError
from .geometry import Pose, cumulative_arclength, point_at_arclength, tangent_at_arclength
from .map_core import LaneletMap, OccupancyGrid, footprint_collides
from .reeds_shepp import (Direction, RSPath, RSSegment, propagate,
                          reeds_shepp_cost_many, reeds_shepp_path,
                          sample_path_array)
from .routing import Route

POSE_SPACING = 0.5          # max spacing of output poses (meters)
EDGE_CHECK_STEP = 0.2       # collision sampling step along tree edges
REVERSE_PENALTY = 2.0       # tree-cost multiplier for reverse segment length
CORRIDOR_MARGIN = 0.45      # containment margin inside the 0.5 m dilation


@dataclass(frozen=True)
class PlannerParams:
    r_min: float = 5.0
    footprint: tuple[float, float] = (4.5, 1.9)
    max_iterations: int = 5000
    goal_tolerance: tuple[float, float] = (0.5, 0.2)
    rng_seed: int = 42
    waypoint_spacing: float = 2.0
    neighbor_radius: float = 10.0
    corridor_half_width: float = 4.0
    max_extension: float = 12.0

    def __post_init__(self):
        if min(self.r_min, self.max_iterations, self.waypoint_spacing,
               self.neighbor_radius, self.corridor_half_width,
               self.footprint[0], self.footprint[1]) <= 0:
            raise ValueError("planner parameters must be positive")
        if self.goal_tolerance[0] >= self.waypoint_spacing:
            raise ValueError("goal position tolerance must be < waypoint spacing")


@dataclass(frozen=True)
class GeometricPath:
    poses: tuple[Pose, ...]
    length: float
    segments: tuple[RSSegment, ...]


def route_to_waypoints(route: Route, lanelet_map: LaneletMap,
                       spacing: float) -> list[Pose]:
    """Poses sampled along the route's concatenated centerlines.

    Headings are tangent to the polyline; the first and last poses sit at the
    route's start and goal.
    """
    pts: list[np.ndarray] = []
    for lid in route.lanelet_ids:
        center = lanelet_map.lanelets[lid].centerline
        for p in center:
            if pts and np.hypot(*(p - pts[-1])) < 1e-9:
                continue
            pts.append(np.asarray(p, dtype=float))
    polyline = np.array(pts)
    if len(polyline) < 2:
        raise PlanningError("route centerline is degenerate")
    total = float(cumulative_arclength(polyline)[-1])
    n = max(1, int(math.ceil(total / spacing)))
    poses = []
    for s in np.linspace(0.0, total, n + 1):
        point = point_at_arclength(polyline, s)
        poses.append(Pose(point[0], point[1], tangent_at_arclength(polyline, s)))
    return poses


class _EdgeValidator:
    """Fast collision + corridor containment test for candidate tree edges."""

    def __init__(self, grid: OccupancyGrid, corridor, params: PlannerParams):
        self.grid = grid
        self.params = params
        self.corridor = corridor  # shapely polygon, already dilated by the margin
        occupied = grid.occupied_mask(unknown_is_occupied=True)
        # distance (meters) from each free cell center to the nearest
        # non-free cell; used as a conservative definitely-free shortcut
        self.clearance = ndimage.distance_transform_edt(
            ~occupied, sampling=grid.resolution)
        length, width = params.footprint
        self.safe_radius = 0.5 * math.hypot(length, width) \
            + grid.resolution * math.sqrt(2.0)
        # nearest non-free cell center closer than this is certainly inside
        # the footprint's inscribed circle
        self.hit_radius = max(0.0, 0.5 * width
                              - grid.resolution * math.sqrt(2.0) * 0.5)

    def pose_free(self, pose: Pose) -> bool:
        row, col = self.grid.world_to_cell(pose.x, pose.y)
        if self.grid.in_bounds(row, col) and \
                self.clearance[row, col] > self.safe_radius:
            return True
        return not footprint_collides(self.grid, pose, self.params.footprint)

    def poses_free(self, arr: np.ndarray) -> bool:
        grid = self.grid
        cols = np.floor((arr[:, 0] - grid.origin[0]) / grid.resolution).astype(int)
        rows = np.floor((arr[:, 1] - grid.origin[1]) / grid.resolution).astype(int)
        inb = (rows >= 0) & (rows < grid.height) & (cols >= 0) & (cols < grid.width)
        if not np.all(inb):
            # footprint around an off-grid center always touches unknown space
            return False
        clear = self.clearance[rows, cols]
        if np.any(clear < self.hit_radius):
            return False
        for i in np.nonzero(clear <= self.safe_radius)[0]:
            pose = Pose(arr[i, 0], arr[i, 1], arr[i, 2])
            if footprint_collides(grid, pose, self.params.footprint):
                return False
        return True

    def path_valid(self, start: Pose, path: RSPath) -> bool:
        arr = sample_path_array(start, path, step=EDGE_CHECK_STEP)
        if not np.all(shapely.contains_xy(self.corridor, arr[:, 0], arr[:, 1])):
            return False
        return self.poses_free(arr)


def _edge_cost(path: RSPath) -> float:
    cost = 0.0
    for seg in path.segments:
        factor = 1.0 if seg.direction is Direction.FORWARD else REVERSE_PENALTY
        cost += factor * seg.length
    return cost


def _truncate(path: RSPath, max_length: float) -> RSPath:
    if path.length <= max_length:
        return path
    kept: list[RSSegment] = []
    remaining = max_length
    for seg in path.segments:
        if seg.length <= remaining:
            kept.append(seg)
            remaining -= seg.length
        else:
            if remaining > 1e-9:
                kept.append(RSSegment(seg.steer, seg.direction, remaining))
            break
    total = sum(s.length for s in kept)
    return RSPath(segments=tuple(kept), length=total, r_min=path.r_min)


class _Tree:
    """Preallocated search tree; arrays sized for the iteration budget."""

    def __init__(self, capacity: int):
        self.xy = np.zeros((capacity, 2))
        self.headings = np.zeros(capacity)
        self.costs = np.zeros(capacity)
        self.poses: list[Pose] = []
        self.parents: list[int] = []
        self.children: list[list[int]] = []
        self.edges: list[RSPath | None] = []
        self.n = 0

    def add(self, pose: Pose, parent: int, edge: RSPath | None, cost: float) -> int:
        i = self.n
        self.xy[i] = (pose.x, pose.y)
        self.headings[i] = pose.heading
        self.costs[i] = cost
        self.poses.append(pose)
        self.parents.append(parent)
        self.children.append([])
        if parent >= 0:
            self.children[parent].append(i)
        self.edges.append(edge)
        self.n += 1
        return i

    def reparent(self, node: int, new_parent: int, edge: RSPath, cost: float) -> None:
        old = self.parents[node]
        if old >= 0:
            self.children[old].remove(node)
        self.parents[node] = new_parent
        self.children[new_parent].append(node)
        self.edges[node] = edge
        _propagate_costs(self, node, cost)


def route_corridor(route: Route, lanelet_map: LaneletMap, margin: float):
    polys = [lanelet_map.lanelets[lid].polygon() for lid in route.lanelet_ids]
    return unary_union(polys).buffer(margin)


def plan_path(route: Route, lanelet_map: LaneletMap, grid: OccupancyGrid,
              params: PlannerParams, start_pose: Pose | None = None) -> GeometricPath:
    """Collision-free geometric path realizing a route (RRT* + Reeds-Shepp).

    Raises PlanningError("start in collision") or
    PlanningError("no path found") accordingly.
    """
    waypoints = route_to_waypoints(route, lanelet_map, params.waypoint_spacing)
    start = start_pose if start_pose is not None else waypoints[0]
    goal = waypoints[-1]
    corridor = route_corridor(route, lanelet_map, CORRIDOR_MARGIN)
    validator = _EdgeValidator(grid, corridor, params)
    if not validator.pose_free(start):
        raise PlanningError("start in collision")

    rng = np.random.default_rng(params.rng_seed)
    tree = _Tree(capacity=params.max_iterations + 2)
    tree.add(start, parent=-1, edge=None, cost=0.0)
    goal_links: list[tuple[int, RSPath]] = []

    # deterministic first attempt: direct start-to-goal connection
    direct = reeds_shepp_path(start, goal, params.r_min)
    if validator.path_valid(start, direct):
        goal_links.append((0, direct))

    wp_line = np.array([[p.x, p.y] for p in waypoints])
    wp_cum = cumulative_arclength(wp_line)
    wp_total = float(wp_cum[-1])
    bounds = corridor.bounds

    for _ in range(params.max_iterations):
        sample = _draw_sample(rng, goal, wp_line, wp_total, bounds, params)
        new_idx = _extend(tree, sample, validator, params)
        if new_idx is None:
            continue
        new_pose = tree.poses[new_idx]
        if new_pose.distance_to(goal) <= params.neighbor_radius:
            # skip attempts that cannot beat the best connection found so far
            bound = tree.costs[new_idx] + new_pose.distance_to(goal)
            best_known = min((tree.costs[i] + _edge_cost(link)
                              for i, link in goal_links), default=math.inf)
            if bound >= best_known:
                continue
            link = reeds_shepp_path(new_pose, goal, params.r_min)
            if validator.path_valid(new_pose, link):
                goal_links.append((new_idx, link))

    if not goal_links:
        raise PlanningError("no path found")
    best_idx, best_link = min(
        goal_links, key=lambda item: tree.costs[item[0]] + _edge_cost(item[1]))
    return _extract(tree, best_idx, best_link, start)


def _draw_sample(rng, goal: Pose, wp_line: np.ndarray, wp_total: float,
                 bounds, params: PlannerParams) -> Pose:
    # fixed draw pattern per iteration keeps the stream independent of tree
    # state, which preserves the anytime property across iteration budgets
    mode, s_frac, lateral, jitter, bx, by, bh = rng.random(7)
    if mode < 0.10:
        return goal
    if mode < 0.80:
        s = s_frac * wp_total
        point = point_at_arclength(wp_line, s)
        heading = tangent_at_arclength(wp_line, s)
        offset = (2.0 * lateral - 1.0) * params.corridor_half_width
        x = point[0] - offset * math.sin(heading)
        y = point[1] + offset * math.cos(heading)
        return Pose(x, y, heading + (2.0 * jitter - 1.0) * 0.6)
    xmin, ymin, xmax, ymax = bounds
    return Pose(xmin + bx * (xmax - xmin), ymin + by * (ymax - ymin),
                (2.0 * bh - 1.0) * math.pi)


def _extend(tree: _Tree, sample: Pose, validator: _EdgeValidator,
            params: PlannerParams) -> int | None:
    n = tree.n
    xy, headings, costs = tree.xy[:n], tree.headings[:n], tree.costs[:n]
    d = np.hypot(xy[:, 0] - sample.x, xy[:, 1] - sample.y)
    angular = np.abs(np.arctan2(np.sin(headings - sample.heading),
                                np.cos(headings - sample.heading)))
    nearest = int(np.argmin(d + params.r_min * 0.5 * angular))
    steer_path = _truncate(
        reeds_shepp_path(tree.poses[nearest], sample, params.r_min),
        params.max_extension)
    if not steer_path.segments:
        return None
    if not validator.path_valid(tree.poses[nearest], steer_path):
        return None
    new_pose = _path_end(tree.poses[nearest], steer_path)
    new_cost = tree.costs[nearest] + _edge_cost(steer_path)

    # choose-parent among nearby nodes; Euclidean distance lower-bounds the
    # Reeds-Shepp edge cost, so rank by cheap cost queries and validate only
    # the winning candidates
    radius = min(params.neighbor_radius,
                 max(2.0 * params.max_extension * math.sqrt(math.log(n + 1) / (n + 1)),
                     2.0))
    dist_new = np.hypot(xy[:, 0] - new_pose.x, xy[:, 1] - new_pose.y)
    neighbors = np.nonzero(dist_new <= radius)[0]
    best_parent, best_edge, best_cost = nearest, steer_path, new_cost
    order = neighbors[np.argsort(costs[neighbors] + dist_new[neighbors])][:15]
    order = order[(costs[order] + dist_new[order] < best_cost) & (order != nearest)]
    candidates: list[tuple[float, int]] = []
    if len(order):
        penalized = reeds_shepp_cost_many(
            xy[order, 0], xy[order, 1], headings[order],
            new_pose.x, new_pose.y, new_pose.heading,
            params.r_min, REVERSE_PENALTY)
        for idx, pen in zip(order, penalized):
            cost = costs[idx] + pen
            if cost < best_cost:
                candidates.append((cost, int(idx)))
    candidates.sort()
    for cost, idx in candidates:
        if cost >= best_cost:
            break
        cand = reeds_shepp_path(tree.poses[idx], new_pose, params.r_min)
        if validator.path_valid(tree.poses[idx], cand):
            best_parent, best_edge, best_cost = idx, cand, cost
            break
    new_idx = tree.add(new_pose, best_parent, best_edge, best_cost)

    # rewire: route cheaper-through-new-node neighbors via the new node
    rewirable = neighbors[(best_cost + dist_new[neighbors] < costs[neighbors])
                          & (neighbors != best_parent)]
    if len(rewirable) > 10:
        rewirable = rewirable[np.argsort(dist_new[rewirable])[:10]]
    if len(rewirable):
        penalized = reeds_shepp_cost_many(
            new_pose.x, new_pose.y, new_pose.heading,
            xy[rewirable, 0], xy[rewirable, 1], headings[rewirable],
            params.r_min, REVERSE_PENALTY)
        for idx, pen in zip(rewirable, penalized):
            cost = best_cost + pen
            if cost >= tree.costs[idx]:
                continue
            cand = reeds_shepp_path(new_pose, tree.poses[idx], params.r_min)
            if validator.path_valid(new_pose, cand):
                tree.reparent(int(idx), new_idx, cand, cost)
    return new_idx


def _propagate_costs(tree: _Tree, root: int, new_cost: float) -> None:
    delta = tree.costs[root] - new_cost
    tree.costs[root] = new_cost
    stack = list(tree.children[root])
    while stack:
        node = stack.pop()
        tree.costs[node] -= delta
        stack.extend(tree.children[node])


def _path_end(start: Pose, path: RSPath) -> Pose:
    pose = start
    for seg in path.segments:
        pose = propagate(pose, seg, path.r_min)
    return pose


def _extract(tree: _Tree, goal_idx: int, goal_link: RSPath,
             start: Pose) -> GeometricPath:
    chain: list[RSPath] = [goal_link]
    node = goal_idx
    while tree.parents[node] >= 0:
        chain.append(tree.edges[node])
        node = tree.parents[node]
    chain.reverse()

    segments: list[RSSegment] = []
    poses: list[Pose] = [start]
    pose = start
    for edge in chain:
        segments.extend(edge.segments)
        arr = sample_path_array(pose, edge, step=min(POSE_SPACING, 0.25))
        poses.extend(Pose(x, y, h) for x, y, h in arr[1:])
        pose = poses[-1]
    length = sum(seg.length for seg in segments)
    return GeometricPath(poses=tuple(poses), length=length,
                         segments=tuple(segments))
