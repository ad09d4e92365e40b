"""Remote assistance path planning engine.

Generates drivable path candidates beyond a vehicle's nominal operational
design domain, ranks them by a tunable cost, and manages the approval
workflow between vehicle and remote operator.
"""

from .errors import (AssistanceNotValidError, DcppError, DivergenceError,
                     FrameMismatchError, MapSchemaError, NotDrivableError,
                     PlanningError, ProtocolViolationError, ScenarioError,
                     StalePatchError, ZeroCandidatesError)
from .geometry import Pose
from .map_core import (FREE, OCCUPIED, UNKNOWN, Lanelet, LaneletMap, MapPatch,
                       OccupancyGrid, footprint_collides, load_grid, load_map,
                       rasterize_rectangle, revert_patch, update_map)
from .motion import GeometricPath, PlannerParams, plan_path
from .odd import (DEFAULT_PREFERENCES, CostWeights, OddParameterKind,
                  OddProfile, drivable_area, extended_profile, load_profile,
                  modifications_for, nominal_profile)
from .reeds_shepp import (RSPath, RSSegment, reeds_shepp_cost,
                          reeds_shepp_path, sample_path)
from .routing import Route, RoutingGraph, build_routing_graph, k_best_routes
from .session import (AssistanceResponse, AssistanceSession, PathCandidate,
                      SessionEvent, SessionState, VehicleMode, VehicleState,
                      advance_session, find_path_candidates,
                      validate_response)
from .sim import (Scenario, SimState, detect_disengagement, load_scenario,
                  open_session_from_scenario, run_scenario, track_path)

__version__ = "0.1.0"
