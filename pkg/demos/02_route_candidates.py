"""Profile-aware routing and candidate generation.

Under the everyday driving profile only regular road is allowed, so a
blocked lane means no route at all. Widening to the extended profile brings
the parking strip and sidewalk corridors into the graph, each detour priced
by c(i, j) = w1 * d(i) + w2 / p(i). Run from the repository root:

    python3 demos/02_route_candidates.py
"""
from pathlib import Path

from dcpp import (CostWeights, build_routing_graph, k_best_routes,
                  load_scenario, modifications_for,
                  open_session_from_scenario, update_map)

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

scenario = load_scenario(SCENARIOS / "blocked_lane_two_detours.json")
update_map(scenario.lanelet_map, scenario.grid)

weights = CostWeights(w1=1.0, w2=1.0)
nominal_graph = build_routing_graph(scenario.lanelet_map, scenario.nominal, weights)
print("nominal-profile routes:",
      k_best_routes(nominal_graph, scenario.start_lanelet,
                    scenario.goal_lanelet, 3) or "none, vehicle is stuck")

extended_graph = build_routing_graph(scenario.lanelet_map, scenario.extended, weights)
for route in k_best_routes(extended_graph, scenario.start_lanelet,
                           scenario.goal_lanelet, 3):
    mods = set()
    for lid in route.lanelet_ids:
        mods |= modifications_for(scenario.lanelet_map.lanelets[lid],
                                  scenario.nominal, scenario.extended)
    print(f"  route {route.lanelet_ids}: cost {route.total_cost:.3f}, "
          f"distance {route.total_distance:.1f} m, "
          f"needs {sorted(m.value for m in mods) or 'nothing'}")

# The session layer wraps the same machinery and adds geometric paths.
session = open_session_from_scenario(scenario)
print(f"\n{len(session.candidates)} full candidates:")
for c in session.candidates:
    flag = " (preferred)" if c.preferred else ""
    print(f"  candidate {c.candidate_id}{flag}: "
          f"path {c.path.length:.1f} m, "
          f"modifications {sorted(m.value for m in c.odd_modifications)}")
