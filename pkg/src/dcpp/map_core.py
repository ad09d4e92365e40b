"""Lane-level HD map model, occupancy grid, and the temporary map update.

The map is a directed graph of lanelets (atomic drivable segments with
left/right boundaries). Obstacles arrive as an occupancy grid; a temporary
update marks lanelets whose drivable cross-width is covered by occupied
cells, and the resulting patch can be reverted once assistance ends.
"""
from __future__ import annotations

import base64
import json
import math
from dataclasses import dataclass, field
from pathlib import Path as FilePath

import numpy as np
from numba import njit
from shapely.geometry import Polygon

from .errors import FrameMismatchError, MapSchemaError, StalePatchError
from .geometry import (Pose, cumulative_arclength, oriented_rect_corners,
                       point_at_arclength, rects_overlap_aabb)
from .odd import OddParameterKind

FREE, OCCUPIED, UNKNOWN = 0, 1, 2


@dataclass
class Lanelet:
    id: int
    centerline: np.ndarray        # (N, 2) meters
    left_boundary: np.ndarray     # (N, 2) meters
    right_boundary: np.ndarray    # (N, 2) meters
    successors: tuple[int, ...]
    odd_tags: frozenset[OddParameterKind]
    blocked: bool = False
    _length: float | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.centerline = np.asarray(self.centerline, dtype=float)
        self.left_boundary = np.asarray(self.left_boundary, dtype=float)
        self.right_boundary = np.asarray(self.right_boundary, dtype=float)
        for name, pts in (("centerline", self.centerline),
                          ("left", self.left_boundary),
                          ("right", self.right_boundary)):
            if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
                raise MapSchemaError(
                    f"lanelet {self.id}: '{name}' needs >= 2 points of [x, y]")
            if not np.all(np.isfinite(pts)):
                raise MapSchemaError(f"lanelet {self.id}: '{name}' has non-finite points")
        if not self.odd_tags:
            raise MapSchemaError(f"lanelet {self.id}: 'odd_tags' must be non-empty")
        poly = self.polygon()
        if not poly.is_valid or poly.area <= 0.0:
            raise MapSchemaError(f"lanelet {self.id}: boundary polygon is degenerate")

    def polygon(self) -> Polygon:
        ring = np.vstack([self.left_boundary, self.right_boundary[::-1]])
        return Polygon(ring)

    def length(self) -> float:
        if self._length is None:
            self._length = float(cumulative_arclength(self.centerline)[-1])
        return self._length


@dataclass
class LaneletMap:
    lanelets: dict[int, Lanelet]
    version: int = 0

    def __post_init__(self):
        for lanelet in self.lanelets.values():
            for succ in lanelet.successors:
                if succ not in self.lanelets:
                    raise MapSchemaError(
                        f"lanelet {lanelet.id}: dangling successor {succ}")

    def bounds(self) -> tuple[float, float, float, float]:
        pts = np.vstack([l.left_boundary for l in self.lanelets.values()]
                        + [l.right_boundary for l in self.lanelets.values()])
        return (pts[:, 0].min(), pts[:, 1].min(), pts[:, 0].max(), pts[:, 1].max())

    def lanelet_at(self, x: float, y: float) -> int | None:
        """Id of a lanelet containing the point, or None."""
        from shapely.geometry import Point
        p = Point(x, y)
        for lanelet in self.lanelets.values():
            if lanelet.polygon().covers(p):
                return lanelet.id
        return None


@dataclass(frozen=True)
class MapPatch:
    blocked_lanelet_ids: frozenset[int]
    created_at_version: int


@dataclass
class OccupancyGrid:
    origin: np.ndarray      # (2,) world coords of the grid's lower-left corner
    resolution: float
    width: int
    height: int
    cells: np.ndarray       # (height, width) uint8, row-major from origin

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=float)
        if self.resolution <= 0.0:
            raise MapSchemaError("grid resolution must be > 0")
        self.cells = np.asarray(self.cells, dtype=np.uint8).reshape(self.height, self.width)

    def world_to_cell(self, x: float, y: float) -> tuple[int, int]:
        col = int(math.floor((x - self.origin[0]) / self.resolution))
        row = int(math.floor((y - self.origin[1]) / self.resolution))
        return row, col

    def in_bounds(self, row: int, col: int) -> bool:
        return 0 <= row < self.height and 0 <= col < self.width

    def value_at(self, x: float, y: float) -> int:
        """Cell value at a world point; points off the grid read as UNKNOWN."""
        row, col = self.world_to_cell(x, y)
        if not self.in_bounds(row, col):
            return UNKNOWN
        return int(self.cells[row, col])

    def bounds(self) -> tuple[float, float, float, float]:
        return (float(self.origin[0]), float(self.origin[1]),
                float(self.origin[0] + self.width * self.resolution),
                float(self.origin[1] + self.height * self.resolution))

    def occupied_mask(self, unknown_is_occupied: bool = True) -> np.ndarray:
        if unknown_is_occupied:
            return self.cells != FREE
        return self.cells == OCCUPIED


def _parse_points(raw, lanelet_id: int, name: str) -> np.ndarray:
    try:
        pts = np.asarray(raw, dtype=float)
    except (TypeError, ValueError):
        raise MapSchemaError(f"lanelet {lanelet_id}: '{name}' is not a point list")
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise MapSchemaError(f"lanelet {lanelet_id}: '{name}' must be [[x, y], ...]")
    return pts


def load_map(source) -> LaneletMap:
    """Build a LaneletMap from a JSON document (path, JSON string, or dict)."""
    doc = _load_document(source)
    if not isinstance(doc, dict) or "lanelets" not in doc:
        raise MapSchemaError("map document missing top-level 'lanelets'")
    lanelets: dict[int, Lanelet] = {}
    for entry in doc["lanelets"]:
        if "id" not in entry:
            raise MapSchemaError("lanelet entry missing 'id'")
        lid = int(entry["id"])
        if lid in lanelets:
            raise MapSchemaError(f"duplicate lanelet id {lid}")
        for key in ("centerline", "left", "right", "odd_tags"):
            if key not in entry:
                raise MapSchemaError(f"lanelet {lid}: missing '{key}'")
        try:
            tags = frozenset(OddParameterKind(t) for t in entry["odd_tags"])
        except ValueError as exc:
            raise MapSchemaError(f"lanelet {lid}: unknown odd tag ({exc})")
        lanelets[lid] = Lanelet(
            id=lid,
            centerline=_parse_points(entry["centerline"], lid, "centerline"),
            left_boundary=_parse_points(entry["left"], lid, "left"),
            right_boundary=_parse_points(entry["right"], lid, "right"),
            successors=tuple(int(s) for s in entry.get("successors", [])),
            odd_tags=tags,
        )
    return LaneletMap(lanelets=lanelets)


def load_grid(source) -> OccupancyGrid:
    """Build an OccupancyGrid from a JSON document (path, JSON string, or dict)."""
    doc = _load_document(source)
    for key in ("origin", "resolution", "width", "height"):
        if key not in doc:
            raise MapSchemaError(f"grid document missing '{key}'")
    width, height = int(doc["width"]), int(doc["height"])
    if "cells" in doc:
        cells = np.asarray(doc["cells"], dtype=np.uint8)
    elif "cells_b64" in doc:
        cells = np.frombuffer(base64.b64decode(doc["cells_b64"]), dtype=np.uint8).copy()
    else:
        raise MapSchemaError("grid document needs 'cells' or 'cells_b64'")
    if cells.size != width * height:
        raise MapSchemaError(
            f"grid cell count {cells.size} != width*height {width * height}")
    if np.any(cells > UNKNOWN):
        raise MapSchemaError("grid cells must be 0 (free), 1 (occupied) or 2 (unknown)")
    return OccupancyGrid(origin=np.asarray(doc["origin"], dtype=float),
                         resolution=float(doc["resolution"]),
                         width=width, height=height, cells=cells)


def grid_to_document(grid: OccupancyGrid) -> dict:
    return {
        "origin": [float(grid.origin[0]), float(grid.origin[1])],
        "resolution": grid.resolution,
        "width": grid.width,
        "height": grid.height,
        "cells_b64": base64.b64encode(grid.cells.tobytes()).decode("ascii"),
    }


def _load_document(source):
    if isinstance(source, dict):
        return source
    if isinstance(source, FilePath):
        return json.loads(source.read_text())
    if isinstance(source, str):
        stripped = source.lstrip()
        if stripped.startswith("{"):
            return json.loads(source)
        return json.loads(FilePath(source).read_text())
    raise MapSchemaError(f"unsupported document source: {type(source).__name__}")


def _cross_width_occupied_fraction(lanelet: Lanelet, grid: OccupancyGrid,
                                   station_fraction: float,
                                   lateral_step: float) -> float:
    """Fraction of the lane cross-width covered by occupied cells at a station."""
    left = point_at_arclength(lanelet.left_boundary,
                              station_fraction * cumulative_arclength(lanelet.left_boundary)[-1])
    right = point_at_arclength(lanelet.right_boundary,
                               station_fraction * cumulative_arclength(lanelet.right_boundary)[-1])
    width = float(np.hypot(*(left - right)))
    if width <= 0.0:
        return 0.0
    n = max(2, int(math.ceil(width / lateral_step)) + 1)
    ts = np.linspace(0.0, 1.0, n)
    samples = right[None, :] + ts[:, None] * (left - right)[None, :]
    occupied = sum(1 for x, y in samples if grid.value_at(x, y) == OCCUPIED)
    return occupied / n


def update_map(lanelet_map: LaneletMap, grid: OccupancyGrid,
               min_occupied_fraction: float = 0.5) -> MapPatch:
    """Mark lanelets blocked by grid obstacles; returns a revertible patch.

    A lanelet is blocked when occupied cells cover at least
    `min_occupied_fraction` of its drivable cross-width at some centerline
    station.
    """
    map_bounds = lanelet_map.bounds()
    grid_bounds = grid.bounds()
    if (grid_bounds[2] <= map_bounds[0] or grid_bounds[0] >= map_bounds[2]
            or grid_bounds[3] <= map_bounds[1] or grid_bounds[1] >= map_bounds[3]):
        raise FrameMismatchError("occupancy grid does not overlap the map extent")

    station_step = max(grid.resolution, 0.25)
    lateral_step = grid.resolution / 2.0
    newly_blocked: set[int] = set()
    for lanelet in lanelet_map.lanelets.values():
        if lanelet.blocked:
            continue
        length = lanelet.length()
        n_stations = max(2, int(math.ceil(length / station_step)) + 1)
        for frac in np.linspace(0.0, 1.0, n_stations):
            frac_occ = _cross_width_occupied_fraction(lanelet, grid, frac, lateral_step)
            if frac_occ >= min_occupied_fraction:
                newly_blocked.add(lanelet.id)
                break
    for lid in newly_blocked:
        lanelet_map.lanelets[lid].blocked = True
    lanelet_map.version += 1
    return MapPatch(blocked_lanelet_ids=frozenset(newly_blocked),
                    created_at_version=lanelet_map.version)


def revert_patch(lanelet_map: LaneletMap, patch: MapPatch) -> LaneletMap:
    """Undo a temporary update; errors if the patch is not the latest one."""
    if patch.created_at_version != lanelet_map.version:
        raise StalePatchError(
            f"stale patch: created at version {patch.created_at_version}, "
            f"map is at {lanelet_map.version}")
    for lid in patch.blocked_lanelet_ids:
        lanelet_map.lanelets[lid].blocked = False
    lanelet_map.version += 1
    return lanelet_map


@njit(cache=True)
def _rect_cell_hit(corners, xmin, ymin, xmax, ymax):
    # separating-axis test: AABB axes first, then the rectangle's own axes
    if corners[:, 0].max() < xmin or corners[:, 0].min() > xmax:
        return False
    if corners[:, 1].max() < ymin or corners[:, 1].min() > ymax:
        return False
    for i in range(2):
        ex = corners[i + 1, 0] - corners[i, 0]
        ey = corners[i + 1, 1] - corners[i, 1]
        ax, ay = -ey, ex
        pmin, pmax = 1e18, -1e18
        for j in range(4):
            p = corners[j, 0] * ax + corners[j, 1] * ay
            pmin = min(pmin, p)
            pmax = max(pmax, p)
        qs = (xmin * ax + ymin * ay, xmax * ax + ymin * ay,
              xmax * ax + ymax * ay, xmin * ax + ymax * ay)
        qmin, qmax = min(qs), max(qs)
        if pmax < qmin or qmax < pmin:
            return False
    return True


@njit(cache=True)
def _footprint_hit_kernel(cells, origin_x, origin_y, res, corners,
                          unknown_occupied):
    height, width = cells.shape
    xmin, ymin = corners[:, 0].min(), corners[:, 1].min()
    xmax, ymax = corners[:, 0].max(), corners[:, 1].max()
    c0 = max(0, int(math.floor((xmin - origin_x) / res)))
    r0 = max(0, int(math.floor((ymin - origin_y) / res)))
    c1 = min(width - 1, int(math.floor((xmax - origin_x) / res)))
    r1 = min(height - 1, int(math.floor((ymax - origin_y) / res)))
    for r in range(r0, r1 + 1):
        for c in range(c0, c1 + 1):
            v = cells[r, c]
            if v == OCCUPIED or (unknown_occupied and v == UNKNOWN):
                cx = origin_x + c * res
                cy = origin_y + r * res
                if _rect_cell_hit(corners, cx, cy, cx + res, cy + res):
                    return True
    return False


def footprint_collides(grid: OccupancyGrid, pose: Pose,
                       footprint: tuple[float, float],
                       unknown_is_occupied: bool = True) -> bool:
    """True iff the oriented footprint rectangle intersects a non-free cell.

    Any part of the footprint leaving the grid counts as collision (off-grid
    space is unknown, and unknown defaults to occupied).
    """
    length, width = footprint
    if length <= 0.0 or width <= 0.0:
        raise ValueError("footprint dimensions must be > 0")
    corners = oriented_rect_corners(pose.x, pose.y, pose.heading, length, width)
    gxmin, gymin, gxmax, gymax = grid.bounds()
    xmin, ymin = corners.min(axis=0)
    xmax, ymax = corners.max(axis=0)
    if unknown_is_occupied and (xmin < gxmin or ymin < gymin
                                or xmax > gxmax or ymax > gymax):
        return True
    return bool(_footprint_hit_kernel(grid.cells, grid.origin[0], grid.origin[1],
                                      grid.resolution, corners,
                                      unknown_is_occupied))


def rasterize_rectangle(grid: OccupancyGrid, center: tuple[float, float],
                        size: tuple[float, float], heading: float = 0.0,
                        value: int = OCCUPIED) -> None:
    """Write an oriented rectangle into the grid (cells touching it get `value`)."""
    corners = oriented_rect_corners(center[0], center[1], heading, size[0], size[1])
    res = grid.resolution
    xmin, ymin = corners.min(axis=0)
    xmax, ymax = corners.max(axis=0)
    c0 = max(0, int(math.floor((xmin - grid.origin[0]) / res)))
    r0 = max(0, int(math.floor((ymin - grid.origin[1]) / res)))
    c1 = min(grid.width - 1, int(math.floor((xmax - grid.origin[0]) / res)))
    r1 = min(grid.height - 1, int(math.floor((ymax - grid.origin[1]) / res)))
    for r in range(r0, r1 + 1):
        for c in range(c0, c1 + 1):
            cell_x = grid.origin[0] + c * res
            cell_y = grid.origin[1] + r * res
            if rects_overlap_aabb(corners, cell_x, cell_y, cell_x + res, cell_y + res):
                grid.cells[r, c] = value
