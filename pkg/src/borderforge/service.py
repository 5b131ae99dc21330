"""Session service: exposes the interaction state machine, map state and the
live event feed over HTTP + WebSocket for the browser UI and test drivers.

The simulation clock is server-authoritative: every accepted spot or command
post advances the session by one fixed 40 ms tick (the stationary camera
period), so timing reports are reproducible regardless of client pacing.
Client timestamps are recorded in the ack but never trusted.
"""

from __future__ import annotations

import asyncio
import threading
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel, Field

from .geometry import Point2
from .gridmap import pgm_bytes
from .harness import Scenario, get_scenario, make_session, scenario_from_dict
from .interaction import (
    Command,
    InteractionSession,
    Mode,
    handle_command,
    on_laser_spot,
    tick,
)

TICK_DT = 0.04

_COMMAND_ALIASES = {
    "define_border": Command.DEFINE_BORDER,
    "define-border": Command.DEFINE_BORDER,
    "define_seed": Command.DEFINE_SEED,
    "define-seed": Command.DEFINE_SEED,
    "guide_robot": Command.GUIDE_ROBOT,
    "guide-robot": Command.GUIDE_ROBOT,
    "save": Command.SAVE,
    "cancel": Command.CANCEL,
}


class CreateSessionRequest(BaseModel):
    scenario: str | dict = Field(description="builtin:1..3, a file path, or an inline scenario")
    mode: str = "nrs"
    seed: int = 0
    noise_scale: float = 1.0


class CommandRequest(BaseModel):
    command: str


class SpotRequest(BaseModel):
    x: float
    y: float
    client_time: float | None = None


@dataclass
class _LiveSession:
    id: str
    scenario: Scenario
    mode: Mode
    session: InteractionSession
    lock: threading.Lock = field(default_factory=threading.Lock)

    def advance(self) -> None:
        tick(self.session, TICK_DT)


def _error(status: int, code: str, message: str, field_name: str | None = None):
    body = {"code": code, "message": message}
    if field_name:
        body["field"] = field_name
    return JSONResponse(status_code=status, content=body)


def _state_snapshot(live: _LiveSession) -> dict:
    s = live.session
    return {
        "id": live.id,
        "scenario": live.scenario.name,
        "mode": live.mode.value,
        "state": s.state.value,
        "robot": {
            "x": s.robot.pose.x,
            "y": s.robot.pose.y,
            "theta": s.robot.pose.theta,
        },
        "buffers": {"border": len(s.border_buffer), "seed": len(s.seed_buffer)},
        "map_version": s.map_version,
        "sim_time": s.now,
        "event_count": len(s.event_log),
    }


def create_app() -> FastAPI:
    app = FastAPI(title="borderforge session service")
    sessions: dict[str, _LiveSession] = {}
    registry_lock = threading.Lock()

    def _get(session_id: str) -> _LiveSession | None:
        with registry_lock:
            return sessions.get(session_id)

    @app.post("/sessions", status_code=201)
    def create_session(req: CreateSessionRequest):
        try:
            if isinstance(req.scenario, dict):
                scenario = scenario_from_dict(req.scenario)
            else:
                scenario = get_scenario(req.scenario)
        except (KeyError, ValueError, FileNotFoundError) as exc:
            return _error(422, "invalid_scenario", str(exc), "scenario")
        try:
            mode = Mode(req.mode)
        except ValueError:
            return _error(422, "invalid_mode", f"unknown mode {req.mode!r}", "mode")
        session = make_session(scenario, mode, rng_seed=req.seed, noise_scale=req.noise_scale)
        live = _LiveSession(id=uuid.uuid4().hex, scenario=scenario, mode=mode, session=session)
        with registry_lock:
            sessions[live.id] = live
        return _state_snapshot(live)

    @app.delete("/sessions/{session_id}")
    def delete_session(session_id: str):
        with registry_lock:
            live = sessions.pop(session_id, None)
        if live is None:
            return _error(404, "not_found", f"no session {session_id}")
        return {"deleted": session_id}

    @app.post("/sessions/{session_id}/commands")
    def post_command(session_id: str, req: CommandRequest):
        live = _get(session_id)
        if live is None:
            return _error(404, "not_found", f"no session {session_id}")
        cmd = _COMMAND_ALIASES.get(req.command.lower())
        if cmd is None:
            return _error(422, "invalid_command", f"unknown command {req.command!r}", "command")
        with live.lock:
            events = handle_command(live.session, cmd)
            live.advance()
            snapshot = _state_snapshot(live)
        return {"events": [e.to_record() for e in events], "state": snapshot}

    @app.post("/sessions/{session_id}/spots")
    def post_spot(session_id: str, req: SpotRequest):
        live = _get(session_id)
        if live is None:
            return _error(404, "not_found", f"no session {session_id}")
        spot = Point2(req.x, req.y)
        if not live.scenario.contains(spot):
            bx, by = live.scenario.bounds
            return _error(
                422,
                "out_of_bounds",
                f"spot ({req.x}, {req.y}) outside bounds [0, {bx}] x [0, {by}]",
                "x" if not 0 <= req.x <= bx else "y",
            )
        with live.lock:
            events = on_laser_spot(live.session, spot)
            live.advance()
            detected = 0
            for ev in events:
                if ev.kind == "SpotDetected":
                    detected = ev.payload.get("count", 0)
            snapshot = _state_snapshot(live)
        return {
            "detections": detected,
            "client_time": req.client_time,
            "events": [e.to_record() for e in events],
            "state": snapshot,
        }

    @app.get("/sessions/{session_id}/state")
    def get_state(session_id: str):
        live = _get(session_id)
        if live is None:
            return _error(404, "not_found", f"no session {session_id}")
        with live.lock:
            return _state_snapshot(live)

    @app.get("/sessions/{session_id}/maps/{which}")
    def get_map(session_id: str, which: str):
        live = _get(session_id)
        if live is None:
            return _error(404, "not_found", f"no session {session_id}")
        if which not in ("prior", "posterior"):
            return _error(422, "invalid_map", f"unknown map {which!r}", "which")
        with live.lock:
            if which == "prior":
                grid = live.session.prior
            else:
                grid = live.session.posterior
                if grid is None:
                    return _error(409, "not_ready", "no posterior map before a successful save")
            payload = pgm_bytes(grid)
            headers = {
                "X-Map-Resolution": repr(grid.resolution),
                "X-Map-Origin": f"{grid.origin.x!r} {grid.origin.y!r} {grid.origin.theta!r}",
                "X-Map-Width": str(grid.width),
                "X-Map-Height": str(grid.height),
                "X-Map-Version": str(live.session.map_version),
            }
        return Response(content=payload, media_type="image/x-portable-graymap", headers=headers)

    @app.get("/sessions/{session_id}/events")
    def get_events(session_id: str, cursor: int = 0):
        """Polling fallback for the event stream (same records as the socket)."""
        live = _get(session_id)
        if live is None:
            return _error(404, "not_found", f"no session {session_id}")
        with live.lock:
            events = list(live.session.event_log[cursor:])
        return {"events": [e.to_record() for e in events], "cursor": cursor + len(events)}

    @app.websocket("/sessions/{session_id}/events")
    async def event_stream(ws: WebSocket, session_id: str, cursor: int = 0):
        live = _get(session_id)
        if live is None:
            await ws.close(code=4404)
            return
        await ws.accept()
        sent = max(0, cursor)
        try:
            while True:
                log = live.session.event_log
                while sent < len(log):
                    await ws.send_json(log[sent].to_record())
                    sent += 1
                if _get(session_id) is None:
                    await ws.close(code=4410)
                    return
                await asyncio.sleep(0.02)
        except WebSocketDisconnect:
            return

    return app


app = create_app()
