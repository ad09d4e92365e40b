"""Maps, occupancy grids, and temporary blockages.

Loads the three-corridor fixture map, drops an obstacle into its occupancy
grid, and shows how the blockage is projected onto the lane graph and then
reverted. Run from the repository root:

    python3 demos/01_map_and_occupancy.py
"""
from pathlib import Path

from dcpp import load_grid, load_map, rasterize_rectangle, revert_patch, update_map

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

lanelet_map = load_map(SCENARIOS / "blocked_lane_two_detours_map.json")
grid = load_grid(SCENARIOS / "blocked_lane_two_detours_grid.json")

print(f"loaded {len(lanelet_map.lanelets)} lanelets, "
      f"grid {grid.width}x{grid.height} at {grid.resolution} m")
for lanelet in lanelet_map.lanelets.values():
    tags = ", ".join(sorted(t.value for t in lanelet.odd_tags))
    print(f"  lanelet {lanelet.id}: length {lanelet.length():.1f} m, "
          f"tags [{tags}], successors {list(lanelet.successors)}")

# A parked truck shows up in the middle of the main lane.
rasterize_rectangle(grid, center=(30.0, 0.0), size=(4.0, 3.8))

# update_map compares the occupied cells against each lanelet's footprint
# and flags the ones that no longer have a passable gap.
patch = update_map(lanelet_map, grid)
print(f"\npatch at map version {patch.created_at_version}, "
      f"blocked: {sorted(patch.blocked_lanelet_ids)}")

# The blockage is temporary state. Reverting the patch restores the
# original drivability once the episode is over.
revert_patch(lanelet_map, patch)
blocked = [l.id for l in lanelet_map.lanelets.values() if l.blocked]
print(f"after revert, blocked lanelets: {blocked}")
