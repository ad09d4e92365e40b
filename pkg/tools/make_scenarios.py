"""Generate the scenario fixtures under scenarios/.

Three fixtures:
  blocked_lane_two_detours    blocked main lane with a parking-strip detour above and a
           sidewalk detour below; two candidate routes exist.
  narrow_corridor    blocked main lane with a single detour that needs both a
           parking area and a solid-line crossing; one candidate route.
  straight unobstructed two-lanelet road for follower tests.

Run from the repository root: python3 tools/make_scenarios.py
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from shapely.geometry import LineString

OUT = Path(__file__).resolve().parent.parent / "scenarios"
HALF_WIDTH = 2.0


def _points(arr) -> list[list[float]]:
    return [[round(float(x), 4), round(float(y), 4)] for x, y in arr]


def lanelet(lid, centerline, tags, successors):
    line = LineString(centerline)
    left = np.asarray(line.offset_curve(HALF_WIDTH).coords)
    right = np.asarray(line.offset_curve(-HALF_WIDTH).coords)
    center = np.asarray(centerline, dtype=float)
    # keep boundary direction aligned with the centerline
    if np.hypot(*(left[0] - center[0])) > np.hypot(*(left[-1] - center[0])):
        left = left[::-1]
    if np.hypot(*(right[0] - center[0])) > np.hypot(*(right[-1] - center[0])):
        right = right[::-1]
    return {"id": lid, "centerline": _points(center), "left": _points(left),
            "right": _points(right), "odd_tags": sorted(tags),
            "successors": successors}


def straight_center(x0, x1, y=0.0, step=2.0):
    n = int(round((x1 - x0) / step)) + 1
    xs = np.linspace(x0, x1, n)
    return np.column_stack([xs, np.full(n, y)])


def bump_center(x0, x1, amplitude, n=41):
    """Smooth detour arc leaving and rejoining the main centerline."""
    t = np.linspace(0.0, 1.0, n)
    xs = x0 + (x1 - x0) * t
    ys = amplitude * np.sin(np.pi * t) ** 2
    return np.column_stack([xs, ys])


def empty_grid():
    import base64
    width, height = 264, 80
    cells = np.zeros((height, width), dtype=np.uint8)
    return {"origin": [-2.0, -10.0], "resolution": 0.25,
            "width": width, "height": height,
            "cells_b64": base64.b64encode(cells.tobytes()).decode("ascii")}


def write(name, doc):
    path = OUT / name
    path.write_text(json.dumps(doc, indent=1) + "\n")
    print("wrote", path)


def main():
    OUT.mkdir(exist_ok=True)

    blocked_lane_two_detours_map = {"lanelets": [
        lanelet(1, straight_center(0, 20), ["regular_road"], [2, 4, 5]),
        lanelet(2, straight_center(20, 40), ["regular_road"], [3]),
        lanelet(3, straight_center(40, 60), ["regular_road"], []),
        lanelet(4, bump_center(20, 40, 6.0), ["parking_area"], [3]),
        lanelet(5, bump_center(20, 40, -6.0), ["sidewalk"], [3]),
    ]}
    write("blocked_lane_two_detours_map.json", blocked_lane_two_detours_map)

    narrow_corridor_map = {"lanelets": [
        lanelet(1, straight_center(0, 20), ["regular_road"], [2, 4, 5]),
        lanelet(2, straight_center(20, 40), ["regular_road"], [3]),
        lanelet(3, straight_center(40, 60), ["regular_road"], []),
        lanelet(4, bump_center(20, 40, 6.0),
                ["parking_area", "solid_line_crossing"], [3]),
        # sidewalk strip present in the map but not reconnecting to the road
        lanelet(5, bump_center(20, 40, -6.0), ["sidewalk"], []),
    ]}
    write("narrow_corridor_map.json", narrow_corridor_map)

    straight_map = {"lanelets": [
        lanelet(1, straight_center(0, 20), ["regular_road"], [2]),
        lanelet(2, straight_center(20, 40), ["regular_road"], []),
    ]}
    write("straight_map.json", straight_map)

    grid = empty_grid()
    write("blocked_lane_two_detours_grid.json", grid)
    write("narrow_corridor_grid.json", grid)
    write("straight_grid.json", grid)

    obstacle = [{"center": [30.0, 0.0], "size": [4.0, 3.8], "heading": 0.0}]
    common = {"nominal_profile": "nominal_profile.json",
              "extended_profile": "extended_profile.json",
              "k": 3, "weights": {"w1": 1.0, "w2": 1.0},
              "planner": {"max_iterations": 1500, "rng_seed": 42}}
    write("blocked_lane_two_detours.json", {
        "description": "Blocked lane, parking-strip and sidewalk detours",
        "map_file": "blocked_lane_two_detours_map.json", "grid_file": "blocked_lane_two_detours_grid.json",
        "start_pose": [5.0, 0.0, 0.0], "start_lanelet": 1, "goal_lanelet": 3,
        "obstacles": obstacle, **common})
    write("narrow_corridor.json", {
        "description": "Blocked lane, single detour over a parking area "
                       "behind a solid line",
        "map_file": "narrow_corridor_map.json", "grid_file": "narrow_corridor_grid.json",
        "start_pose": [5.0, 0.0, 0.0], "start_lanelet": 1, "goal_lanelet": 3,
        "obstacles": obstacle, **common})
    write("straight.json", {
        "description": "Unobstructed straight road",
        "map_file": "straight_map.json", "grid_file": "straight_grid.json",
        "start_pose": [2.0, 0.0, 0.0], "start_lanelet": 1, "goal_lanelet": 2,
        "obstacles": [], **common})

    from dcpp.odd import extended_profile, nominal_profile
    for name, profile in (("nominal_profile.json", nominal_profile()),
                          ("extended_profile.json", extended_profile())):
        write(name, {
            "permitted": sorted(p.value for p in profile.permitted),
            "preference": {k.value: v for k, v in
                           sorted(profile.preference.items())}})


if __name__ == "__main__":
    main()
