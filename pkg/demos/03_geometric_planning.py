"""Curvature-bounded connections and sampling-based path search.

First a few optimal Reeds-Shepp connections between poses, then a full
RRT* search around an obstacle inside a lane corridor. Run from the
repository root:

    python3 demos/03_geometric_planning.py
"""
import numpy as np

from dcpp import (Lanelet, LaneletMap, OccupancyGrid, OddParameterKind,
                  PlannerParams, Pose, Route, plan_path, rasterize_rectangle,
                  reeds_shepp_path)

# Minimum-length curvature-bounded connections, forward and reverse.
for goal in (Pose(10.0, 0.0, 0.0), Pose(6.0, 4.0, np.pi / 2),
             Pose(-3.0, 1.0, 0.0)):
    path = reeds_shepp_path(Pose(0, 0, 0), goal, r_min=5.0)
    word = "".join(
        f"{seg.steer.value}{'+' if seg.direction.value == 'forward' else '-'}"
        for seg in path.segments)
    print(f"to ({goal.x:5.1f}, {goal.y:4.1f}, {goal.heading:5.2f}): "
          f"{path.length:6.2f} m, word {word}")

# A wide corridor with a square obstacle in the middle.
n = 41
xs = np.linspace(0.0, 40.0, n)
center = np.column_stack([xs, np.zeros(n)])
corridor = Lanelet(id=1, centerline=center,
                   left_boundary=center + [0.0, 8.0],
                   right_boundary=center - [0.0, 8.0], successors=(),
                   odd_tags=frozenset({OddParameterKind.REGULAR_ROAD}))
lanelet_map = LaneletMap(lanelets={1: corridor})
grid = OccupancyGrid(origin=np.array([-5.0, -40.0]), resolution=0.4,
                     width=200, height=200,
                     cells=np.zeros((200, 200), dtype=np.uint8))
rasterize_rectangle(grid, center=(20.0, 0.0), size=(4.0, 4.0))

route = Route(lanelet_ids=(1,), total_cost=40.0, total_distance=40.0)
for iterations in (500, 2000, 5000):
    params = PlannerParams(rng_seed=42, max_iterations=iterations)
    path = plan_path(route, lanelet_map, grid, params)
    print(f"{iterations:5d} iterations: path {path.length:.2f} m "
          f"over {len(path.poses)} poses")
