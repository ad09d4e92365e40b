import copy
import itertools
from datetime import datetime, timedelta, timezone

import pytest

from dcpp.errors import (AssistanceNotValidError, ProtocolViolationError,
                         ZeroCandidatesError)
from dcpp.geometry import Pose
from dcpp.map_core import LaneletMap, rasterize_rectangle, update_map
from dcpp.motion import GeometricPath, PlannerParams
from dcpp.odd import (CostWeights, OddParameterKind, extended_profile,
                      nominal_profile)
from dcpp.routing import Route
from dcpp.session import (AssistanceResponse, AssistanceSession, PathCandidate,
                          SessionEvent, SessionState, VehicleMode,
                          VehicleState, advance_session, check_timeout,
                          generate_candidates, legal_events, submit_response,
                          validate_response)
from dcpp.sim import open_session_from_scenario

from conftest import make_grid, straight_lanelet

# Independent statement of the intended state machine, asserted against the
# implementation by exhaustive enumeration below.
EXPECTED = {
    ("idle", "assistance_needed"): "candidates_pending",
    ("candidates_pending", "candidates_ready"): "awaiting_operator",
    ("awaiting_operator", "valid_response"): "executing",
    ("awaiting_operator", "invalid_response"): "awaiting_operator",
    ("awaiting_operator", "reject_all"): "candidates_pending",
    ("executing", "trigger_resolved"): "resolved",
    ("mrm", "re_request"): "candidates_pending",
}


class FakeClock:
    def __init__(self, start=datetime(2021, 3, 1, tzinfo=timezone.utc)):
        self.now = start

    def __call__(self):
        return self.now

    def tick(self, seconds):
        self.now += timedelta(seconds=seconds)


def make_session(state=SessionState.IDLE, clock=None, timeout=120.0):
    m = LaneletMap(lanelets={1: straight_lanelet(1, 0.0, 30.0)})
    vehicle = VehicleState(pose=Pose(2.0, 0.0, 0.0), speed=0.0,
                           current_lanelet=1, goal_lanelet=1)
    return AssistanceSession(
        session_id="s1", vehicle=vehicle, lanelet_map=m, grid=make_grid(),
        nominal=nominal_profile(), extended=extended_profile(),
        weights=CostWeights(), planner=PlannerParams(max_iterations=100),
        response_timeout_s=timeout, clock=clock or FakeClock(), state=state)


def fake_candidate(cid, mods=(), preferred=None, start=Pose(2.0, 0.0, 0.0)):
    route = Route(lanelet_ids=(1,), total_cost=30.0, total_distance=30.0)
    path = GeometricPath(poses=(start, Pose(30.0, 0.0, 0.0)),
                         length=28.0, segments=())
    return PathCandidate(
        candidate_id=cid, route=route, path=path,
        odd_modifications=frozenset(OddParameterKind(m) for m in mods),
        cost_score=30.0 + cid,
        preferred=(cid == 0) if preferred is None else preferred)


def awaiting_session(candidates=None, **kwargs):
    session = make_session(state=SessionState.AWAITING_OPERATOR, **kwargs)
    session.awaiting_since = session.clock()
    session.candidates = tuple(
        candidates if candidates is not None
        else [fake_candidate(0, ("sidewalk",)), fake_candidate(1)])
    return session


class TestTransitionTable:
    def test_exhaustive_enumeration(self):
        """Every (state, event) pair behaves exactly as the frozen table."""
        for state, event in itertools.product(SessionState, SessionEvent):
            session = make_session(state=state)
            log_before = list(session.event_log)
            if event is SessionEvent.MRM_TRIGGER:
                advance_session(session, event)
                assert session.state is SessionState.MRM
                assert session.vehicle.mode is VehicleMode.MRM
            elif (state.value, event.value) in EXPECTED:
                advance_session(session, event)
                assert session.state.value == EXPECTED[(state.value, event.value)]
            else:
                with pytest.raises(ProtocolViolationError):
                    advance_session(session, event)
                assert session.state is state
                assert session.event_log == log_before

    def test_legal_events_match_table(self):
        for state in SessionState:
            expected = {SessionEvent(e) for (s, e) in EXPECTED
                        if s == state.value}
            expected.add(SessionEvent.MRM_TRIGGER)
            assert legal_events(state) == expected

    def test_executing_only_reachable_via_valid_response(self):
        targets = {(s, e) for (s, e), to in EXPECTED.items()
                   if to == "executing"}
        assert targets == {("awaiting_operator", "valid_response")}

    def test_mrm_reachable_from_every_state(self):
        for state in SessionState:
            session = make_session(state=state)
            advance_session(session, SessionEvent.MRM_TRIGGER)
            assert session.state is SessionState.MRM

    def test_reject_all_clears_candidates(self):
        session = awaiting_session()
        advance_session(session, SessionEvent.REJECT_ALL)
        assert session.candidates == ()
        assert session.approved is None

    def test_resolution_reverts_patch_and_restores_autonomy(self):
        session = make_session(state=SessionState.EXECUTING)
        rasterize_rectangle(session.grid, (15.0, 0.0), (2.0, 6.0))
        session.map_patch = update_map(session.lanelet_map, session.grid)
        assert session.lanelet_map.lanelets[1].blocked
        session.vehicle.mode = VehicleMode.ASSISTED_DRIVING
        advance_session(session, SessionEvent.TRIGGER_RESOLVED)
        assert session.state is SessionState.RESOLVED
        assert session.map_patch is None
        assert not session.lanelet_map.lanelets[1].blocked
        assert session.vehicle.mode is VehicleMode.AUTONOMOUS


class TestValidateResponse:
    def test_unknown_candidate(self):
        session = awaiting_session()
        with pytest.raises(AssistanceNotValidError) as exc:
            validate_response(session, AssistanceResponse(
                candidate_id=99, approved_modifications=frozenset()))
        assert str(exc.value) == "Assistance not valid"
        assert exc.value.reason == "unknown_candidate"

    def test_modifications_not_acknowledged(self):
        session = awaiting_session()
        with pytest.raises(AssistanceNotValidError) as exc:
            validate_response(session, AssistanceResponse(
                candidate_id=0, approved_modifications=frozenset()))
        assert exc.value.reason == "modifications_not_acknowledged"

    def test_stale_path(self):
        session = awaiting_session()
        rasterize_rectangle(session.grid, (2.0, 0.0), (6.0, 6.0))
        with pytest.raises(AssistanceNotValidError) as exc:
            validate_response(session, AssistanceResponse(
                candidate_id=1, approved_modifications=frozenset()))
        assert exc.value.reason == "stale_path"

    def test_superset_of_modifications_is_accepted(self):
        session = awaiting_session()
        candidate = validate_response(session, AssistanceResponse(
            candidate_id=0,
            approved_modifications=frozenset({OddParameterKind.SIDEWALK,
                                              OddParameterKind.OFF_ROAD})))
        assert candidate.candidate_id == 0

    def test_no_open_request_is_protocol_violation(self):
        session = make_session(state=SessionState.EXECUTING)
        with pytest.raises(ProtocolViolationError):
            validate_response(session, AssistanceResponse(
                candidate_id=0, approved_modifications=frozenset()))


class TestSubmitResponse:
    def test_valid_response_starts_execution(self):
        session = awaiting_session()
        response = AssistanceResponse(
            candidate_id=0,
            approved_modifications=frozenset({OddParameterKind.SIDEWALK}))
        candidate = submit_response(session, response)
        assert session.state is SessionState.EXECUTING
        assert session.vehicle.mode is VehicleMode.ASSISTED_DRIVING
        assert session.approved is response
        assert session.selected_candidate() is candidate

    def test_invalid_response_keeps_session_open(self):
        session = awaiting_session()
        with pytest.raises(AssistanceNotValidError):
            submit_response(session, AssistanceResponse(
                candidate_id=0, approved_modifications=frozenset()))
        assert session.state is SessionState.AWAITING_OPERATOR
        assert session.event_log[-1]["event"] == "invalid_response"
        assert session.approved is None
        # a corrected retry then succeeds
        submit_response(session, AssistanceResponse(
            candidate_id=0,
            approved_modifications=frozenset({OddParameterKind.SIDEWALK})))
        assert session.state is SessionState.EXECUTING


class TestCandidateGeneration:
    def test_unreachable_goal_reports_zero_candidates(self):
        session = make_session(state=SessionState.CANDIDATES_PENDING)
        session.lanelet_map = LaneletMap(lanelets={
            1: straight_lanelet(1, 0.0, 10.0),
            2: straight_lanelet(2, 20.0, 30.0)})
        session.vehicle.goal_lanelet = 2
        with pytest.raises(ZeroCandidatesError) as exc:
            generate_candidates(session)
        assert str(exc.value) == "Zero candidates found"

    def test_wrong_state_is_protocol_violation(self):
        session = make_session(state=SessionState.IDLE)
        with pytest.raises(ProtocolViolationError):
            generate_candidates(session)

    def test_generated_candidates_invariants(self, blocked_lane_two_detours):
        session = open_session_from_scenario(blocked_lane_two_detours)
        assert session.state is SessionState.AWAITING_OPERATOR
        candidates = session.candidates
        assert [c.candidate_id for c in candidates] == list(range(len(candidates)))
        assert [c.preferred for c in candidates].count(True) == 1
        assert candidates[0].preferred
        scores = [c.cost_score for c in candidates]
        assert scores == sorted(scores)


class TestTimeout:
    def test_fires_after_deadline(self):
        clock = FakeClock()
        session = awaiting_session(clock=clock, timeout=120.0)
        clock.tick(119.0)
        assert not check_timeout(session)
        assert session.state is SessionState.AWAITING_OPERATOR
        clock.tick(1.0)
        assert check_timeout(session)
        assert session.state is SessionState.MRM
        assert session.vehicle.mode is VehicleMode.MRM

    def test_noop_outside_awaiting_operator(self):
        clock = FakeClock()
        for state in SessionState:
            if state is SessionState.AWAITING_OPERATOR:
                continue
            session = make_session(state=state, clock=clock)
            clock.tick(1000.0)
            assert not check_timeout(session)


class TestEventLog:
    SCRIPT = [SessionEvent.ASSISTANCE_NEEDED, SessionEvent.CANDIDATES_READY,
              SessionEvent.REJECT_ALL, SessionEvent.CANDIDATES_READY,
              SessionEvent.VALID_RESPONSE, SessionEvent.TRIGGER_RESOLVED]

    def run_script(self):
        clock = FakeClock()
        session = make_session(clock=clock)
        for event in self.SCRIPT:
            clock.tick(7.0)
            advance_session(session, event)
        return session

    def test_log_records_every_transition(self):
        session = self.run_script()
        assert [e["event"] for e in session.event_log] \
            == [e.value for e in self.SCRIPT]
        assert session.event_log[0]["from"] == "idle"
        assert session.event_log[-1]["to"] == "resolved"
        for prev, cur in zip(session.event_log, session.event_log[1:]):
            assert cur["from"] == prev["to"]

    def test_replay_is_deterministic(self):
        assert self.run_script().event_log == self.run_script().event_log

    def test_log_is_append_only(self):
        clock = FakeClock()
        session = make_session(clock=clock)
        snapshots = []
        for event in self.SCRIPT:
            snapshots.append(copy.deepcopy(session.event_log))
            clock.tick(1.0)
            advance_session(session, event)
        for snap in snapshots:
            assert session.event_log[:len(snap)] == snap
