"""Wire protocol between the planning engine and operator clients.

Messages are JSON documents, one per frame, over a bidirectional channel.
Each direction carries its own gapless sequence counter; replayed or
reordered frames are rejected. The gateway is a conduit: every state
transition is made by the session layer and merely reported here.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import AssistanceNotValidError, ProtocolViolationError
from .map_core import LaneletMap, OccupancyGrid
from .session import (AssistanceResponse, AssistanceSession, SessionEvent,
                      SessionState, VehicleState, advance_session,
                      submit_response)

MESSAGE_TYPES = frozenset({
    "hello", "scene_snapshot", "assistance_request", "assistance_response",
    "selection_preview", "state_update", "error", "bye",
})

SNAPSHOT_VERTEX_BUDGET = 1000
HEARTBEAT_INTERVAL_S = 5.0


@dataclass(frozen=True)
class WireMessage:
    type: str
    session_id: str
    seq: int
    payload: dict

    def __post_init__(self):
        if self.type not in MESSAGE_TYPES:
            raise ProtocolViolationError(f"unknown message type '{self.type}'")
        if self.seq < 0:
            raise ProtocolViolationError("seq must be non-negative")


def encode_message(message: WireMessage) -> str:
    return json.dumps({"type": message.type, "session_id": message.session_id,
                       "seq": message.seq, "payload": message.payload},
                      separators=(",", ":"))


def decode_message(raw) -> WireMessage:
    """Parse a frame (JSON string or dict) into a WireMessage."""
    if isinstance(raw, str):
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ProtocolViolationError(f"malformed frame: {exc}")
    elif isinstance(raw, dict):
        doc = raw
    else:
        raise ProtocolViolationError("frame must be a JSON string or object")
    for key in ("type", "session_id", "seq", "payload"):
        if key not in doc:
            raise ProtocolViolationError(f"frame missing '{key}'")
    if not isinstance(doc["payload"], dict):
        raise ProtocolViolationError("payload must be an object")
    return WireMessage(type=str(doc["type"]), session_id=str(doc["session_id"]),
                       seq=int(doc["seq"]), payload=doc["payload"])


class SequenceTracker:
    """Gapless per-direction sequence numbers starting at 0."""

    def __init__(self):
        self._next_out = 0
        self._expected_in = 0

    def next_outgoing(self) -> int:
        seq = self._next_out
        self._next_out += 1
        return seq

    def check_incoming(self, seq: int) -> None:
        if seq != self._expected_in:
            raise ProtocolViolationError(
                f"sequence gap: expected {self._expected_in}, got {seq}")
        self._expected_in += 1


def _decimate(points: np.ndarray, step: int) -> list[list[float]]:
    kept = points[::step]
    if not np.array_equal(kept[-1], points[-1]):
        kept = np.vstack([kept, points[-1]])
    return [[round(float(x), 3), round(float(y), 3)] for x, y in kept]


def scene_snapshot_payload(lanelet_map: LaneletMap, grid: OccupancyGrid,
                           vehicle: VehicleState) -> dict:
    """Render-ready scene: lanelet outlines, occupied cells, vehicle pose.

    Polygon vertices are decimated to stay within the per-message budget.
    """
    total = sum(len(l.left_boundary) + len(l.right_boundary)
                for l in lanelet_map.lanelets.values())
    step = max(1, -(-total // SNAPSHOT_VERTEX_BUDGET))
    ordered = sorted(lanelet_map.lanelets.values(), key=lambda l: l.id)
    while True:
        lanelets = []
        kept = 0
        for lanelet in ordered:
            left = _decimate(lanelet.left_boundary, step)
            right = _decimate(lanelet.right_boundary, step)
            kept += len(left) + len(right)
            lanelets.append({
                "id": lanelet.id,
                "left": left,
                "right": right,
                "odd_tags": sorted(t.value for t in lanelet.odd_tags),
                "blocked": lanelet.blocked,
            })
        # rounding and endpoint retention can push a first guess over the
        # budget; coarsen until the cap holds (two points per boundary is
        # the floor, so this terminates)
        if kept <= SNAPSHOT_VERTEX_BUDGET or step > total:
            break
        step += 1
    rows, cols = np.nonzero(grid.occupied_mask())
    occupied = [[round(float(grid.origin[0] + (c + 0.5) * grid.resolution), 3),
                 round(float(grid.origin[1] + (r + 0.5) * grid.resolution), 3)]
                for r, c in zip(rows.tolist(), cols.tolist())]
    return {
        "lanelets": lanelets,
        "occupied_cells": occupied,
        "cell_size": grid.resolution,
        "vehicle_pose": [round(vehicle.pose.x, 3), round(vehicle.pose.y, 3),
                         round(vehicle.pose.heading, 4)],
        "goal_lanelet": vehicle.goal_lanelet,
    }


def publish_request(session: AssistanceSession,
                    tracker: SequenceTracker | None = None) -> WireMessage:
    """Build the assistance_request frame for an open session.

    A serialization failure is fail-safe: the session is moved to mrm
    before the error propagates.
    """
    if session.state is not SessionState.AWAITING_OPERATOR:
        raise ProtocolViolationError(
            f"cannot publish a request in state '{session.state.value}'")
    try:
        candidates = []
        for c in session.candidates:
            candidates.append({
                "id": c.candidate_id,
                "polyline": [[round(p.x, 3), round(p.y, 3),
                              round(p.heading, 4)] for p in c.path.poses],
                "odd_modifications": sorted(m.value for m in c.odd_modifications),
                "cost_score": round(c.cost_score, 6),
                "preferred": c.preferred,
            })
        payload = {
            "candidates": candidates,
            "scene": scene_snapshot_payload(session.lanelet_map, session.grid,
                                            session.vehicle),
            "timeout_s": session.response_timeout_s,
        }
        json.dumps(payload)
    except Exception:
        advance_session(session, SessionEvent.MRM_TRIGGER)
        raise
    seq = tracker.next_outgoing() if tracker else 0
    return WireMessage(type="assistance_request",
                       session_id=session.session_id, seq=seq, payload=payload)


def ingest_response(raw: WireMessage) -> AssistanceResponse:
    """Decode an assistance_response frame into an operator response."""
    if raw.type != "assistance_response":
        raise ProtocolViolationError(
            f"expected assistance_response, got '{raw.type}'")
    payload = raw.payload
    if "candidate_id" not in payload:
        raise ProtocolViolationError("response missing 'candidate_id'")
    mods = payload.get("approved_modifications", [])
    if not isinstance(mods, list):
        raise ProtocolViolationError("approved_modifications must be a list")
    from .odd import OddParameterKind
    try:
        approved = frozenset(OddParameterKind(m) for m in mods)
    except ValueError as exc:
        raise ProtocolViolationError(f"unknown modification ({exc})")
    return AssistanceResponse(
        candidate_id=int(payload["candidate_id"]),
        approved_modifications=approved,
        operator_id=str(payload.get("operator_id", "operator")))


@dataclass
class SessionBroker:
    """Serialized per-session message handling for operator connections."""

    sessions: dict[str, AssistanceSession] = field(default_factory=dict)
    trackers: dict[str, SequenceTracker] = field(default_factory=dict)

    def open_session(self, session: AssistanceSession) -> SequenceTracker:
        self.sessions[session.session_id] = session
        tracker = SequenceTracker()
        self.trackers[session.session_id] = tracker
        return tracker

    def _error(self, session_id: str, reason: str, detail: str = "") -> WireMessage:
        tracker = self.trackers.get(session_id)
        seq = tracker.next_outgoing() if tracker else 0
        payload = {"reason": reason}
        if detail:
            payload["detail"] = detail
        return WireMessage(type="error", session_id=session_id, seq=seq,
                           payload=payload)

    def _state_update(self, session: AssistanceSession) -> WireMessage:
        tracker = self.trackers[session.session_id]
        return WireMessage(
            type="state_update", session_id=session.session_id,
            seq=tracker.next_outgoing(),
            payload={"state": session.state.value,
                     "vehicle_mode": session.vehicle.mode.value})

    def handle_frame(self, raw) -> WireMessage:
        """Process one inbound frame and produce the reply frame."""
        try:
            message = decode_message(raw)
        except ProtocolViolationError as exc:
            return self._error("", "malformed", str(exc))
        session = self.sessions.get(message.session_id)
        if session is None:
            return self._error(message.session_id, "unknown_session")
        tracker = self.trackers[message.session_id]
        try:
            tracker.check_incoming(message.seq)
        except ProtocolViolationError as exc:
            return self._error(message.session_id, "sequence_violation", str(exc))
        if message.type == "selection_preview":
            # echo back so clients can mirror each other's preview
            return WireMessage(type="selection_preview",
                               session_id=message.session_id,
                               seq=tracker.next_outgoing(),
                               payload=message.payload)
        if message.type != "assistance_response":
            return self._error(message.session_id, "unexpected_type",
                               message.type)
        if session.state is not SessionState.AWAITING_OPERATOR:
            return self._error(message.session_id, "stale_session",
                               f"session is '{session.state.value}'")
        try:
            response = ingest_response(message)
        except ProtocolViolationError as exc:
            return self._error(message.session_id, "malformed", str(exc))
        try:
            submit_response(session, response)
        except AssistanceNotValidError as exc:
            return self._error(message.session_id, exc.reason,
                               "Assistance not valid")
        return self._state_update(session)
