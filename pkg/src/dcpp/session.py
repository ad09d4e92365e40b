"""Assistance sessions: candidate assembly, operator-response validation,
and the session state machine with an MRM escape hatch.

A session follows the interaction loop: a disengaged vehicle requests help,
path candidates are generated under the extended profile and annotated with
the parameter modifications they rely on, the operator approves one, the
vehicle executes it, and the temporary map update is reverted on resolution.
The vehicle can fall back to a minimal-risk maneuver from any state.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Callable

from .errors import (AssistanceNotValidError, PlanningError,
                     ProtocolViolationError, ZeroCandidatesError)
from .geometry import Pose
from .map_core import (LaneletMap, MapPatch, OccupancyGrid, footprint_collides,
                       revert_patch, update_map)
from .motion import GeometricPath, PlannerParams, plan_path
from .odd import (CostWeights, OddParameterKind, OddProfile, modifications_for)
from .routing import Route, build_routing_graph, k_best_routes


class VehicleMode(str, Enum):
    AUTONOMOUS = "autonomous"
    AWAITING_ASSISTANCE = "awaiting_assistance"
    ASSISTED_DRIVING = "assisted_driving"
    MRM = "mrm"


@dataclass
class VehicleState:
    pose: Pose
    speed: float
    current_lanelet: int
    goal_lanelet: int
    mode: VehicleMode = VehicleMode.AUTONOMOUS

    def __post_init__(self):
        if self.speed < 0.0:
            raise ValueError("speed must be >= 0")


@dataclass(frozen=True)
class PathCandidate:
    candidate_id: int
    route: Route
    path: GeometricPath
    odd_modifications: frozenset[OddParameterKind]
    cost_score: float
    preferred: bool


@dataclass(frozen=True)
class AssistanceResponse:
    candidate_id: int
    approved_modifications: frozenset[OddParameterKind]
    operator_id: str = "operator"


class SessionState(str, Enum):
    IDLE = "idle"
    CANDIDATES_PENDING = "candidates_pending"
    AWAITING_OPERATOR = "awaiting_operator"
    EXECUTING = "executing"
    RESOLVED = "resolved"
    MRM = "mrm"


class SessionEvent(str, Enum):
    ASSISTANCE_NEEDED = "assistance_needed"
    CANDIDATES_READY = "candidates_ready"
    VALID_RESPONSE = "valid_response"
    INVALID_RESPONSE = "invalid_response"
    REJECT_ALL = "reject_all"
    TRIGGER_RESOLVED = "trigger_resolved"
    MRM_TRIGGER = "mrm_trigger"
    RE_REQUEST = "re_request"


#: Legal transitions. mrm_trigger is additionally accepted in every state.
_TRANSITIONS: dict[tuple[SessionState, SessionEvent], SessionState] = {
    (SessionState.IDLE, SessionEvent.ASSISTANCE_NEEDED): SessionState.CANDIDATES_PENDING,
    (SessionState.CANDIDATES_PENDING, SessionEvent.CANDIDATES_READY): SessionState.AWAITING_OPERATOR,
    (SessionState.AWAITING_OPERATOR, SessionEvent.VALID_RESPONSE): SessionState.EXECUTING,
    (SessionState.AWAITING_OPERATOR, SessionEvent.INVALID_RESPONSE): SessionState.AWAITING_OPERATOR,
    (SessionState.AWAITING_OPERATOR, SessionEvent.REJECT_ALL): SessionState.CANDIDATES_PENDING,
    (SessionState.EXECUTING, SessionEvent.TRIGGER_RESOLVED): SessionState.RESOLVED,
    (SessionState.MRM, SessionEvent.RE_REQUEST): SessionState.CANDIDATES_PENDING,
}

DEFAULT_RESPONSE_TIMEOUT_S = 120.0


def _utc_now() -> datetime:
    return datetime.now(timezone.utc)


@dataclass
class AssistanceSession:
    session_id: str
    vehicle: VehicleState
    lanelet_map: LaneletMap
    grid: OccupancyGrid
    nominal: OddProfile
    extended: OddProfile
    weights: CostWeights = field(default_factory=CostWeights)
    planner: PlannerParams = field(default_factory=PlannerParams)
    k: int = 3
    response_timeout_s: float = DEFAULT_RESPONSE_TIMEOUT_S
    clock: Callable[[], datetime] = _utc_now
    state: SessionState = SessionState.IDLE
    candidates: tuple[PathCandidate, ...] = ()
    map_patch: MapPatch | None = None
    approved: AssistanceResponse | None = None
    event_log: list[dict] = field(default_factory=list)
    awaiting_since: datetime | None = None

    def selected_candidate(self) -> PathCandidate | None:
        if self.approved is None:
            return None
        return self.candidates[self.approved.candidate_id]


def legal_events(state: SessionState) -> set[SessionEvent]:
    events = {event for (from_state, event) in _TRANSITIONS if from_state == state}
    events.add(SessionEvent.MRM_TRIGGER)
    return events


def advance_session(session: AssistanceSession,
                    event: SessionEvent) -> AssistanceSession:
    """Apply one event to the session state machine.

    Raises ProtocolViolationError (state unchanged) for inapplicable events.
    """
    if event is SessionEvent.MRM_TRIGGER:
        target = SessionState.MRM
    else:
        key = (session.state, event)
        if key not in _TRANSITIONS:
            raise ProtocolViolationError(
                f"event '{event.value}' not applicable in state '{session.state.value}'")
        target = _TRANSITIONS[key]
    previous = session.state
    session.state = target
    session.event_log.append({
        "t": session.clock().isoformat(),
        "from": previous.value,
        "event": event.value,
        "to": target.value,
    })
    if target is SessionState.AWAITING_OPERATOR:
        session.awaiting_since = session.clock()
    else:
        session.awaiting_since = None
    if event is SessionEvent.REJECT_ALL or event is SessionEvent.RE_REQUEST:
        session.candidates = ()
        session.approved = None
    if event is SessionEvent.MRM_TRIGGER:
        session.vehicle.mode = VehicleMode.MRM
    if target is SessionState.RESOLVED:
        if session.map_patch is not None:
            revert_patch(session.lanelet_map, session.map_patch)
            session.map_patch = None
        session.vehicle.mode = VehicleMode.AUTONOMOUS
    return session


def check_timeout(session: AssistanceSession) -> bool:
    """Move an unattended request to MRM; True if the timeout fired."""
    if session.state is not SessionState.AWAITING_OPERATOR:
        return False
    if session.awaiting_since is None:
        return False
    elapsed = (session.clock() - session.awaiting_since).total_seconds()
    if elapsed >= session.response_timeout_s:
        advance_session(session, SessionEvent.MRM_TRIGGER)
        return True
    return False


def find_path_candidates(state: VehicleState, lanelet_map: LaneletMap,
                         grid: OccupancyGrid, extended: OddProfile,
                         nominal: OddProfile, weights: CostWeights,
                         k: int, planner: PlannerParams,
                         ) -> tuple[list[PathCandidate], MapPatch]:
    """Generate ranked path candidates under the extended profile.

    Composes the temporary map update, the drivable-area computation, k-best
    routing, and one seeded geometric planning run per route. Each candidate
    carries the parameter modifications its route entails. Returns the
    candidates together with the map patch so the caller can revert it.

    Raises ZeroCandidatesError("Zero candidates found") when no route exists
    or every route fails geometric planning.
    """
    if state.mode is not VehicleMode.AWAITING_ASSISTANCE:
        raise ProtocolViolationError("vehicle is not awaiting assistance")
    patch = update_map(lanelet_map, grid)
    graph = build_routing_graph(lanelet_map, extended, weights)
    routes = k_best_routes(graph, state.current_lanelet, state.goal_lanelet, k)
    if not routes:
        raise ZeroCandidatesError()
    planned: list[tuple[Route, GeometricPath]] = []
    for index, route in enumerate(routes):
        # one deterministic planning run per route
        params = PlannerParams(
            r_min=planner.r_min, footprint=planner.footprint,
            max_iterations=planner.max_iterations,
            goal_tolerance=planner.goal_tolerance,
            rng_seed=planner.rng_seed + index,
            waypoint_spacing=planner.waypoint_spacing,
            neighbor_radius=planner.neighbor_radius,
            corridor_half_width=planner.corridor_half_width,
            max_extension=planner.max_extension)
        try:
            path = plan_path(route, lanelet_map, grid, params,
                             start_pose=state.pose)
        except PlanningError:
            continue
        planned.append((route, path))
    if not planned:
        raise ZeroCandidatesError()
    planned.sort(key=lambda item: (item[0].total_cost, item[0].lanelet_ids))
    candidates = []
    for rank, (route, path) in enumerate(planned):
        modifications: set[OddParameterKind] = set()
        for lid in route.lanelet_ids:
            modifications |= modifications_for(
                lanelet_map.lanelets[lid], nominal, extended)
        candidates.append(PathCandidate(
            candidate_id=rank, route=route, path=path,
            odd_modifications=frozenset(modifications),
            cost_score=route.total_cost, preferred=rank == 0))
    return candidates, patch


def validate_response(session: AssistanceSession,
                      response: AssistanceResponse) -> PathCandidate:
    """Check an operator response against the session's open request.

    Valid iff the candidate exists, all of its modifications are explicitly
    approved, and its path start is still collision-free on the current
    grid. Raises AssistanceNotValidError("Assistance not valid") with a
    machine-readable reason otherwise; the session stays open for a retry.
    """
    if session.state is not SessionState.AWAITING_OPERATOR:
        raise ProtocolViolationError(
            f"no open request in state '{session.state.value}'")
    ids = {c.candidate_id for c in session.candidates}
    if response.candidate_id not in ids:
        raise AssistanceNotValidError("unknown_candidate")
    candidate = session.candidates[response.candidate_id]
    if not response.approved_modifications >= candidate.odd_modifications:
        raise AssistanceNotValidError("modifications_not_acknowledged")
    start = candidate.path.poses[0]
    if footprint_collides(session.grid, start, session.planner.footprint):
        raise AssistanceNotValidError("stale_path")
    return candidate


def generate_candidates(session: AssistanceSession) -> tuple[PathCandidate, ...]:
    """Run candidate generation for a session in candidates_pending state."""
    if session.state is not SessionState.CANDIDATES_PENDING:
        raise ProtocolViolationError(
            f"cannot generate candidates in state '{session.state.value}'")
    session.vehicle.mode = VehicleMode.AWAITING_ASSISTANCE
    candidates, patch = find_path_candidates(
        session.vehicle, session.lanelet_map, session.grid,
        session.extended, session.nominal, session.weights,
        session.k, session.planner)
    session.candidates = tuple(candidates)
    session.map_patch = patch
    advance_session(session, SessionEvent.CANDIDATES_READY)
    return session.candidates


def submit_response(session: AssistanceSession,
                    response: AssistanceResponse) -> PathCandidate:
    """Validate a response and advance the session accordingly.

    On success the session moves to executing and the selection is recorded;
    on failure the invalid_response transition is logged and the error is
    re-raised for the caller to report back to the operator.
    """
    try:
        candidate = validate_response(session, response)
    except AssistanceNotValidError:
        advance_session(session, SessionEvent.INVALID_RESPONSE)
        raise
    session.approved = response
    advance_session(session, SessionEvent.VALID_RESPONSE)
    session.vehicle.mode = VehicleMode.ASSISTED_DRIVING
    return candidate
