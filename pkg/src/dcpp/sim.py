"""Scenario simulation: a kinematic vehicle, a pure pursuit follower, and
the end-to-end assistance loop with scripted operator policies.

Episodes are fully deterministic: the loop is single threaded, time advances
by a fixed dt per tick, and timestamps come from a logical clock derived
from simulated time, so a fixed seed and policy reproduce a report byte for
byte.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import (AssistanceNotValidError, DivergenceError, ScenarioError,
                     ZeroCandidatesError)
from .geometry import Pose, cumulative_arclength, normalize_angle
from .map_core import (LaneletMap, OccupancyGrid, footprint_collides,
                       load_grid, load_map, rasterize_rectangle, revert_patch,
                       update_map)
from .motion import GeometricPath, PlannerParams, route_to_waypoints
from .odd import (CostWeights, OddProfile, is_drivable, load_profile,
                  modifications_for)
from .routing import build_routing_graph, k_best_routes
from .session import (AssistanceResponse, AssistanceSession, SessionEvent,
                      SessionState, VehicleState, advance_session,
                      check_timeout, generate_candidates, submit_response)

LOOKAHEAD_M = 3.0
CROSS_TRACK_SOFT_M = 0.3
CROSS_TRACK_HARD_M = 1.0
REVERSE_SPEED_FACTOR = 0.5
ARRIVAL_TOLERANCE_M = 0.6
DEFAULT_DISENGAGE_LOOKAHEAD_M = 20.0

#: Logical epoch for report timestamps; sim time is seconds past this.
SIM_EPOCH = datetime(2000, 1, 1, tzinfo=timezone.utc)


@dataclass(frozen=True)
class Scenario:
    description: str
    lanelet_map: LaneletMap
    grid: OccupancyGrid
    start_pose: Pose
    start_lanelet: int
    goal_lanelet: int
    nominal: OddProfile
    extended: OddProfile
    weights: CostWeights
    planner: PlannerParams
    k: int = 3


@dataclass
class SimState:
    time: float
    vehicle: VehicleState
    path_progress: float | None = None


def load_scenario(source) -> Scenario:
    """Load a scenario document; relative file references resolve against
    the document's directory. Obstacles are rasterized into the grid."""
    path = Path(source)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc}")
    base = path.parent
    for key in ("map_file", "grid_file", "start_pose", "start_lanelet",
                "goal_lanelet"):
        if key not in doc:
            raise ScenarioError(f"scenario missing '{key}'")
    lanelet_map = load_map(base / doc["map_file"])
    grid = load_grid(base / doc["grid_file"])
    for obs in doc.get("obstacles", []):
        rasterize_rectangle(grid, tuple(obs["center"]), tuple(obs["size"]),
                            heading=float(obs.get("heading", 0.0)))
    nominal = load_profile(base / doc["nominal_profile"]) \
        if doc.get("nominal_profile") else None
    extended = load_profile(base / doc["extended_profile"]) \
        if doc.get("extended_profile") else None
    if nominal is None or extended is None:
        from .odd import extended_profile, nominal_profile
        nominal = nominal or nominal_profile()
        extended = extended or extended_profile()
    w = doc.get("weights", {})
    weights = CostWeights(w1=float(w.get("w1", 1.0)), w2=float(w.get("w2", 1.0)))
    planner = PlannerParams(**doc.get("planner", {}))
    x, y, heading = doc["start_pose"]
    start = Pose(float(x), float(y), float(heading))
    for lid in (int(doc["start_lanelet"]), int(doc["goal_lanelet"])):
        if lid not in lanelet_map.lanelets:
            raise ScenarioError(f"scenario references unknown lanelet {lid}")
    scenario = Scenario(
        description=doc.get("description", ""), lanelet_map=lanelet_map,
        grid=grid, start_pose=start,
        start_lanelet=int(doc["start_lanelet"]),
        goal_lanelet=int(doc["goal_lanelet"]),
        nominal=nominal, extended=extended, weights=weights, planner=planner,
        k=int(doc.get("k", 3)))
    if footprint_collides(grid, start, planner.footprint):
        raise ScenarioError("start pose is in collision")
    return scenario


def waypoints_as_path(poses: list[Pose]) -> GeometricPath:
    pts = np.array([[p.x, p.y] for p in poses])
    length = float(cumulative_arclength(pts)[-1]) if len(pts) > 1 else 0.0
    return GeometricPath(poses=tuple(poses), length=length, segments=())


class _PathTracker:
    """Precomputed geometry for pure pursuit along a pose sequence."""

    def __init__(self, path: GeometricPath):
        self.points = np.array([[p.x, p.y] for p in path.poses])
        self.arclength = cumulative_arclength(self.points)
        self.total = float(self.arclength[-1])
        headings = np.array([p.heading for p in path.poses])
        if len(self.points) > 1:
            delta = np.diff(self.points, axis=0)
            dots = (delta[:, 0] * np.cos(headings[:-1])
                    + delta[:, 1] * np.sin(headings[:-1]))
            self.direction = np.where(dots < 0.0, -1.0, 1.0)
        else:
            self.direction = np.array([1.0])

    def point_at(self, s: float) -> np.ndarray:
        s = min(max(s, 0.0), self.total)
        i = int(np.searchsorted(self.arclength, s, side="right")) - 1
        i = min(max(i, 0), len(self.points) - 2) if len(self.points) > 1 else 0
        if len(self.points) == 1:
            return self.points[0]
        seg = self.arclength[i + 1] - self.arclength[i]
        t = 0.0 if seg <= 0.0 else (s - self.arclength[i]) / seg
        return self.points[i] + t * (self.points[i + 1] - self.points[i])

    def direction_at(self, s: float) -> float:
        if len(self.points) < 2:
            return 1.0
        i = int(np.searchsorted(self.arclength, s, side="right")) - 1
        return float(self.direction[min(max(i, 0), len(self.direction) - 1)])

    def project(self, x: float, y: float) -> float:
        """Arclength of the nearest point on the path."""
        if len(self.points) < 2:
            return 0.0
        p = np.array([x, y])
        a = self.points[:-1]
        b = self.points[1:]
        ab = b - a
        denom = np.maximum((ab * ab).sum(axis=1), 1e-12)
        t = np.clip(((p - a) * ab).sum(axis=1) / denom, 0.0, 1.0)
        nearest = a + t[:, None] * ab
        dists = np.hypot(*(p - nearest).T)
        i = int(np.argmin(dists))
        return float(self.arclength[i]
                     + t[i] * (self.arclength[i + 1] - self.arclength[i]))

    def cross_track(self, x: float, y: float) -> float:
        p = np.array([x, y])
        if len(self.points) == 1:
            return float(np.hypot(*(p - self.points[0])))
        a = self.points[:-1]
        b = self.points[1:]
        ab = b - a
        denom = np.maximum((ab * ab).sum(axis=1), 1e-12)
        t = np.clip(((p - a) * ab).sum(axis=1) / denom, 0.0, 1.0)
        nearest = a + t[:, None] * ab
        return float(np.min(np.hypot(*(p - nearest).T)))


def track_path(sim: SimState, path: GeometricPath, dt: float,
               speed: float) -> SimState:
    """One pure pursuit tick along the path; returns the advanced state.

    Reverse segments are followed at half speed. Raises DivergenceError
    when cross-track error exceeds the hard limit.
    """
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    tracker = _PathTracker(path)
    progress = sim.path_progress or 0.0
    pose = sim.vehicle.pose
    if tracker.total <= 0.0:
        vehicle = replace(sim.vehicle, speed=0.0)
        return SimState(time=sim.time + dt, vehicle=vehicle,
                        path_progress=tracker.total)
    direction = tracker.direction_at(min(progress, tracker.total - 1e-9))
    v = speed if direction > 0.0 else -speed * REVERSE_SPEED_FACTOR
    target = tracker.point_at(progress + LOOKAHEAD_M)
    dist = float(np.hypot(target[0] - pose.x, target[1] - pose.y))
    if dist > 1e-6:
        alpha = normalize_angle(
            np.arctan2(target[1] - pose.y, target[0] - pose.x) - pose.heading)
        if direction < 0.0:
            alpha = normalize_angle(alpha + np.pi)
        curvature = 2.0 * np.sin(alpha) / dist
    else:
        curvature = 0.0
    x = pose.x + v * np.cos(pose.heading) * dt
    y = pose.y + v * np.sin(pose.heading) * dt
    heading = pose.heading + v * curvature * dt
    progress = min(progress + abs(v) * dt, tracker.total)
    error = tracker.cross_track(x, y)
    if error > CROSS_TRACK_HARD_M:
        raise DivergenceError(
            f"cross-track {error:.2f} m exceeds {CROSS_TRACK_HARD_M} m")
    vehicle = replace(sim.vehicle, pose=Pose(x, y, heading), speed=abs(v))
    return SimState(time=sim.time + dt, vehicle=vehicle, path_progress=progress)


def path_completed(sim: SimState, path: GeometricPath) -> bool:
    if sim.path_progress is None:
        return False
    if sim.path_progress < _PathTracker(path).total - ARRIVAL_TOLERANCE_M:
        return False
    end = path.poses[-1]
    return sim.vehicle.pose.distance_to(end) <= ARRIVAL_TOLERANCE_M


def detect_disengagement(vehicle: VehicleState, lanelet_map: LaneletMap,
                         nominal: OddProfile,
                         lookahead: float = DEFAULT_DISENGAGE_LOOKAHEAD_M) -> bool:
    """True iff no nominal-profile route to the goal survives the obstacles
    observed within the lookahead horizon.

    Blocked lanelets farther than `lookahead` from the vehicle are treated
    as clear, since the vehicle has not observed them yet. The map must
    already reflect the current occupancy (see update_map)."""
    if lanelet_map.lanelet_at(vehicle.pose.x, vehicle.pose.y) is None:
        raise ScenarioError("vehicle is not on any mapped lanelet")
    if vehicle.current_lanelet == vehicle.goal_lanelet:
        return False
    ignored: list[int] = []
    position = np.array([vehicle.pose.x, vehicle.pose.y])
    for lanelet in lanelet_map.lanelets.values():
        if not lanelet.blocked:
            continue
        gap = float(np.min(np.hypot(*(lanelet.centerline - position).T)))
        if gap > lookahead:
            ignored.append(lanelet.id)
            lanelet.blocked = False
    try:
        graph = build_routing_graph(lanelet_map, nominal, CostWeights())
        routes = k_best_routes(graph, vehicle.current_lanelet,
                               vehicle.goal_lanelet, 1)
    finally:
        for lid in ignored:
            lanelet_map.lanelets[lid].blocked = True
    return not routes


@dataclass
class OperatorPolicy:
    """Scripted operator stand-in: picks a response (or None to reject)."""

    name: str
    choose: Callable[[tuple, int], AssistanceResponse | None]
    delay_s: float = 0.0


def make_policy(name: str) -> OperatorPolicy:
    """accept_preferred | accept_index_<n> | reject_all | delay_then_accept."""
    def accept_preferred(candidates, _round):
        best = next(c for c in candidates if c.preferred)
        return AssistanceResponse(candidate_id=best.candidate_id,
                                  approved_modifications=best.odd_modifications)

    if name == "accept_preferred":
        return OperatorPolicy(name, accept_preferred)
    if name == "reject_all":
        return OperatorPolicy(name, lambda candidates, r: None)
    if name == "delay_then_accept":
        return OperatorPolicy(name, accept_preferred, delay_s=5.0)
    if name.startswith("accept_index_"):
        index = int(name.rsplit("_", 1)[1])

        def accept_index(candidates, _round):
            if index >= len(candidates):
                return None
            c = candidates[index]
            return AssistanceResponse(candidate_id=c.candidate_id,
                                      approved_modifications=c.odd_modifications)
        return OperatorPolicy(name, accept_index)
    raise ScenarioError(f"unknown operator policy '{name}'")


@dataclass
class _Episode:
    sim: SimState
    session: AssistanceSession
    max_cross_track: float = 0.0
    collisions: int = 0
    odd_violations: int = 0
    distance: float = 0.0
    candidates_offered: int = 0
    rounds: int = 0
    mrm_events: int = 0
    phase_times: dict = field(default_factory=dict)


def _nominal_route_path(scenario: Scenario, current: int) -> GeometricPath | None:
    graph = build_routing_graph(scenario.lanelet_map, scenario.nominal,
                                scenario.weights)
    routes = k_best_routes(graph, current, scenario.goal_lanelet, 1)
    if not routes:
        return None
    poses = route_to_waypoints(routes[0], scenario.lanelet_map,
                               scenario.planner.waypoint_spacing)
    return waypoints_as_path(poses)


def _tick_checks(ep: _Episode, scenario: Scenario,
                 approved: frozenset | None) -> None:
    pose = ep.sim.vehicle.pose
    if footprint_collides(scenario.grid, pose, scenario.planner.footprint,
                          unknown_is_occupied=False):
        ep.collisions += 1
    lid = scenario.lanelet_map.lanelet_at(pose.x, pose.y)
    if lid is None:
        return
    lanelet = scenario.lanelet_map.lanelets[lid]
    if approved is None:
        if not is_drivable(lanelet, scenario.nominal):
            ep.odd_violations += 1
    else:
        mods = modifications_for(lanelet, scenario.nominal, scenario.extended)
        if not mods <= approved:
            ep.odd_violations += 1


def _drive(ep: _Episode, scenario: Scenario, path: GeometricPath, dt: float,
           speed: float, max_time: float,
           approved: frozenset | None = None,
           stop_when: Callable[[_Episode], bool] | None = None,
           on_tick: Callable[[SimState, Scenario], None] | None = None) -> str:
    """Track a path until completion, a stop condition, or the time budget."""
    tracker = _PathTracker(path)
    pose = ep.sim.vehicle.pose
    ep.sim = replace(ep.sim, path_progress=tracker.project(pose.x, pose.y))
    if path_completed(ep.sim, path):
        return "completed"
    while ep.sim.time < max_time:
        before = ep.sim.vehicle.pose
        ep.sim = track_path(ep.sim, path, dt, speed)
        after = ep.sim.vehicle.pose
        ep.distance += before.distance_to(after)
        ep.max_cross_track = max(
            ep.max_cross_track, _PathTracker(path).cross_track(after.x, after.y))
        lid = scenario.lanelet_map.lanelet_at(after.x, after.y)
        if lid is not None:
            ep.sim.vehicle.current_lanelet = lid
        _tick_checks(ep, scenario, approved)
        if on_tick is not None:
            on_tick(ep.sim, scenario)
        if stop_when is not None and stop_when(ep):
            return "stopped"
        if path_completed(ep.sim, path):
            return "completed"
    return "timeout"


def open_session_from_scenario(scenario: Scenario, seed: int = 42,
                               session_id: str | None = None,
                               ) -> AssistanceSession:
    """Build a session for a scenario and bring it to awaiting_operator.

    Used by the serving layer: candidates are generated from the scenario's
    start pose and the session is left open for an operator response.
    """
    planner = replace(scenario.planner, rng_seed=seed)
    vehicle = VehicleState(pose=scenario.start_pose, speed=0.0,
                           current_lanelet=scenario.start_lanelet,
                           goal_lanelet=scenario.goal_lanelet)
    session = AssistanceSession(
        session_id=session_id or f"scenario-{seed}", vehicle=vehicle,
        lanelet_map=scenario.lanelet_map, grid=scenario.grid,
        nominal=scenario.nominal, extended=scenario.extended,
        weights=scenario.weights, planner=planner, k=scenario.k)
    advance_session(session, SessionEvent.ASSISTANCE_NEEDED)
    generate_candidates(session)
    return session


def run_scenario(scenario: Scenario, operator_policy: OperatorPolicy | str,
                 seed: int = 42, dt: float = 0.05, speed: float = 4.0,
                 max_rounds: int = 3, max_sim_time: float = 600.0,
                 on_tick: Callable[[SimState, Scenario], None] | None = None,
                 ) -> dict:
    """Run the full assistance loop on a scenario and return the episode
    report (a JSON-serializable dict)."""
    policy = make_policy(operator_policy) \
        if isinstance(operator_policy, str) else operator_policy
    planner = replace(scenario.planner, rng_seed=seed)
    vehicle = VehicleState(pose=scenario.start_pose, speed=0.0,
                           current_lanelet=scenario.start_lanelet,
                           goal_lanelet=scenario.goal_lanelet)
    sim = SimState(time=0.0, vehicle=vehicle, path_progress=0.0)
    session = AssistanceSession(
        session_id=f"{policy.name}-{seed}", vehicle=vehicle,
        lanelet_map=scenario.lanelet_map, grid=scenario.grid,
        nominal=scenario.nominal, extended=scenario.extended,
        weights=scenario.weights, planner=planner, k=scenario.k,
        clock=lambda: SIM_EPOCH + timedelta(seconds=round(sim.time, 6)))
    ep = _Episode(sim=sim, session=session)
    result = "failed"
    failure = None

    def clock_sync():
        # the session clock closes over `sim`; keep it pointing at the
        # episode's live state
        nonlocal sim
        sim = ep.sim

    try:
        # Phase 1: drive the nominal route until disengagement or arrival.
        nominal_path = _nominal_route_path(scenario, scenario.start_lanelet)
        if nominal_path is None:
            raise ScenarioError("no nominal route from start to goal")
        patch = update_map(scenario.lanelet_map, scenario.grid)

        def disengaged(ep: _Episode) -> bool:
            clock_sync()
            return detect_disengagement(ep.sim.vehicle, scenario.lanelet_map,
                                        scenario.nominal)
        t0 = ep.sim.time
        outcome = _drive(ep, scenario, nominal_path, dt, speed, max_sim_time,
                         stop_when=disengaged, on_tick=on_tick)
        clock_sync()
        ep.phase_times["drive_s"] = round(ep.sim.time - t0, 6)
        revert_patch(scenario.lanelet_map, patch)
        if outcome == "completed":
            result = "resolved"
            return _report(ep, scenario, policy, seed, result, failure)
        if outcome == "timeout":
            raise ScenarioError("episode exceeded the simulated time budget")

        # Phase 2: assistance rounds.
        advance_session(session, SessionEvent.ASSISTANCE_NEEDED)
        candidate = None
        t0 = ep.sim.time
        while ep.rounds < max_rounds:
            ep.rounds += 1
            if session.map_patch is not None:
                revert_patch(scenario.lanelet_map, session.map_patch)
                session.map_patch = None
            try:
                candidates = generate_candidates(session)
            except ZeroCandidatesError:
                advance_session(session, SessionEvent.MRM_TRIGGER)
                break
            ep.candidates_offered += len(candidates)
            if policy.delay_s > 0.0:
                ep.sim = replace(ep.sim, time=ep.sim.time + policy.delay_s)
                clock_sync()
                if check_timeout(session):
                    break
            response = policy.choose(candidates, ep.rounds)
            if response is None:
                advance_session(session, SessionEvent.REJECT_ALL)
                continue
            try:
                candidate = submit_response(session, response)
                break
            except AssistanceNotValidError:
                continue
        ep.phase_times["assistance_s"] = round(ep.sim.time - t0, 6)
        if session.state is SessionState.MRM:
            ep.mrm_events += 1
            result = "mrm"
            return _report(ep, scenario, policy, seed, result, failure)
        if candidate is None:
            advance_session(session, SessionEvent.MRM_TRIGGER)
            ep.mrm_events += 1
            result = "mrm"
            return _report(ep, scenario, policy, seed, result, failure)

        # Phase 3: execute the approved path until the trigger resolves.
        ep.sim = replace(ep.sim, path_progress=0.0)
        approved = response.approved_modifications

        def trigger_resolved(ep: _Episode) -> bool:
            clock_sync()
            v = ep.sim.vehicle
            lid = scenario.lanelet_map.lanelet_at(v.pose.x, v.pose.y)
            if lid is None:
                return False
            lanelet = scenario.lanelet_map.lanelets[lid]
            if lanelet.blocked or not is_drivable(lanelet, scenario.nominal):
                return False
            probe = replace(v, current_lanelet=lid)
            if detect_disengagement(probe, scenario.lanelet_map,
                                    scenario.nominal, lookahead=float("inf")):
                return False
            # re-entry means actually being back on the nominal route, not
            # just clipping the lanelet polygon while still merging
            resume = _nominal_route_path(scenario, lid)
            if resume is None:
                return False
            gap = _PathTracker(resume).cross_track(v.pose.x, v.pose.y)
            return gap <= CROSS_TRACK_SOFT_M
        t0 = ep.sim.time
        outcome = _drive(ep, scenario, candidate.path, dt, speed, max_sim_time,
                         approved=approved, stop_when=trigger_resolved,
                         on_tick=on_tick)
        clock_sync()
        ep.phase_times["execute_s"] = round(ep.sim.time - t0, 6)
        if outcome == "timeout":
            raise ScenarioError("episode exceeded the simulated time budget")
        advance_session(session, SessionEvent.TRIGGER_RESOLVED)

        # Phase 4: resume the nominal route to the goal.
        resume = _nominal_route_path(scenario, ep.sim.vehicle.current_lanelet)
        if resume is not None and resume.length > 0.0:
            ep.sim = replace(ep.sim, path_progress=0.0)
            t0 = ep.sim.time
            outcome = _drive(ep, scenario, resume, dt, speed, max_sim_time,
                             on_tick=on_tick)
            clock_sync()
            ep.phase_times["resume_s"] = round(ep.sim.time - t0, 6)
            if outcome == "timeout":
                raise ScenarioError("episode exceeded the simulated time budget")
        result = "resolved"
    except (DivergenceError, ScenarioError) as exc:
        failure = str(exc)
        result = "failed"
    return _report(ep, scenario, policy, seed, result, failure)


def _report(ep: _Episode, scenario: Scenario, policy: OperatorPolicy,
            seed: int, result: str, failure: str | None) -> dict:
    report = {
        "description": scenario.description,
        "policy": policy.name,
        "seed": seed,
        "result": result,
        "rounds": ep.rounds,
        "candidates_offered": ep.candidates_offered,
        "mrm_events": ep.mrm_events,
        "collisions": ep.collisions,
        "odd_violations": ep.odd_violations,
        "max_cross_track_m": round(ep.max_cross_track, 6),
        "distance_m": round(ep.distance, 6),
        "sim_time_s": round(ep.sim.time, 6),
        "phase_times_s": ep.phase_times,
        "event_log": list(ep.session.event_log),
    }
    if failure is not None:
        report["failure"] = failure
    return report
