"""Websocket host for operator connections.

One frame per message, JSON payloads; see docs/protocol.md for the schema.
The host relays frames between operator clients and the session broker and
never makes state decisions of its own.
"""
from __future__ import annotations

import logging

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .gateway import (HEARTBEAT_INTERVAL_S, SessionBroker, WireMessage,
                      encode_message, publish_request)
from .session import SessionState

log = logging.getLogger("dcpp.server")

PROTOCOL_VERSION = 1


def create_app(broker: SessionBroker) -> FastAPI:
    app = FastAPI(title="assistance gateway")

    @app.get("/sessions")
    def list_sessions():
        return {sid: s.state.value for sid, s in broker.sessions.items()}

    @app.websocket("/ws/{session_id}")
    async def operator_channel(socket: WebSocket, session_id: str):
        await socket.accept()
        session = broker.sessions.get(session_id)
        if session is None:
            await socket.send_text(encode_message(WireMessage(
                type="error", session_id=session_id, seq=0,
                payload={"reason": "unknown_session"})))
            await socket.close()
            return
        tracker = broker.trackers[session_id]
        await socket.send_text(encode_message(WireMessage(
            type="hello", session_id=session_id, seq=tracker.next_outgoing(),
            payload={"protocol": PROTOCOL_VERSION,
                     "heartbeat_interval_s": HEARTBEAT_INTERVAL_S})))
        if session.state is SessionState.AWAITING_OPERATOR:
            await socket.send_text(encode_message(
                publish_request(session, tracker)))
        try:
            while True:
                raw = await socket.receive_text()
                reply = broker.handle_frame(raw)
                await socket.send_text(encode_message(reply))
                if (reply.type == "state_update"
                        and session.state is SessionState.EXECUTING):
                    log.info("session %s: response accepted", session_id)
                    await socket.send_text(encode_message(WireMessage(
                        type="bye", session_id=session_id,
                        seq=tracker.next_outgoing(),
                        payload={"reason": "request_answered"})))
                    break
        except WebSocketDisconnect:
            log.info("session %s: operator disconnected", session_id)

    return app
