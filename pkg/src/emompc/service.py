"""HTTP + WebSocket service around the simulation sessions.

The stream emits one frame per MPC step and accepts preference and
lifecycle messages; incoming messages are queued into the session
mailbox and drained at the next step, so a ``set_rho`` is visible in the
following frame at the latest.  Batch runs and served sessions share
:class:`~emompc.online.SimulationSession`, which keeps them trace-identical
for identical preference schedules.
"""

from __future__ import annotations

import asyncio
import itertools
import json
from dataclasses import dataclass, field
from typing import Optional

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect

from .library import Library, grid_count
from .online import SimulationSession, centered_start
from .track import GlobalPolyline


@dataclass
class SessionHandle:
    session: SimulationSession
    track_name: str
    speed: float = 0.0          # 0 = unthrottled; 1 = wall-clock pace
    lockstep: bool = False      # advance only on an explicit step message
    paused: bool = False
    streaming: bool = False
    init_kwargs: dict = field(default_factory=dict)


def step_frame(handle: SessionHandle, record) -> dict:
    session = handle.session
    front = session.library.front_at(record.front_index)
    metrics = session.lap_metrics()
    return {
        "type": "step",
        "time": float(record.time),
        "state": {
            "p1": float(record.state[0]),
            "p2": float(record.state[1]),
            "theta": float(record.state[2]),
            "v_y": float(record.state[3]),
            "r": float(record.state[4]),
        },
        "reduced": {
            "v_y": float(record.reduced[0]),
            "r": float(record.reduced[1]),
            "xi": float(record.reduced[2]),
            "d": float(record.reduced[3]),
            "kappa": float(record.reduced[4]),
            "mirrored": bool(record.mirrored),
        },
        "rho": float(record.rho),
        "mode": session.mode,
        "control": float(record.control),
        "front": [[float(a), float(b)] for a, b in front.objectives_array()],
        "selected_index": int(record.selected_index),
        "progress": float(record.s_progress),
        "metrics": {
            "elapsed": float(session.time),
            "integrated_distance": float(metrics.integrated_distance),
            "constraint_max": float(metrics.constraint_max),
        },
    }


def final_frame(handle: SessionHandle) -> dict:
    metrics = handle.session.lap_metrics()
    return {
        "type": "finished",
        "status": handle.session.status,
        "metrics": {
            "lap_time": None if metrics.lap_time is None else float(metrics.lap_time),
            "integrated_distance": float(metrics.integrated_distance),
            "constraint_max": float(metrics.constraint_max),
            "completed": bool(metrics.completed),
            "aborted": bool(metrics.aborted),
            "steps": int(metrics.steps),
        },
    }


def create_app(library: Library, tracks: dict[str, GlobalPolyline]) -> FastAPI:
    app = FastAPI(title="emompc service")
    sessions: dict[str, SessionHandle] = {}
    ids = itertools.count(1)

    def make_session(track_name: str, policy: dict, speed: float, lockstep: bool) -> SessionHandle:
        track = tracks[track_name]
        mode = policy.get("mode", "manual")
        rho = float(policy.get("rho", 0.5))
        schedule = policy.get("schedule")
        init = dict(
            rho=rho,
            mode=mode,
            schedule=[(float(t), float(r)) for t, r in schedule] if schedule else None,
            t_max=float(policy.get("t_max", 120.0)),
        )
        session = SimulationSession(library, track, centered_start(track), **init)
        return SessionHandle(
            session=session,
            track_name=track_name,
            speed=speed,
            lockstep=lockstep,
            init_kwargs=init,
        )

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.get("/library/meta")
    def library_meta():
        spec = library.grid
        return {
            "nodes": grid_count(spec),
            "solved": len(library.entries),
            "complete": library.complete,
            "grid": [
                {"name": d.name, "min": d.min, "max": d.max, "count": d.count}
                for d in spec.dims
            ],
            "horizon": {
                "t0": library.config.horizon.t0,
                "te": library.config.horizon.te,
                "steps": library.config.horizon.steps,
            },
            "vehicle": {
                "v_x": library.config.vehicle.v_x,
                "d_max": library.config.vehicle.d_max,
                "u_min": library.config.vehicle.u_min,
                "u_max": library.config.vehicle.u_max,
            },
        }

    @app.get("/tracks")
    def list_tracks():
        return {
            "tracks": [
                {
                    "name": name,
                    "closed": t.closed,
                    "length": t.length,
                    "waypoints": [[float(x), float(y)] for x, y in t.points],
                }
                for name, t in sorted(tracks.items())
            ]
        }

    @app.post("/sessions")
    async def create_session(payload: dict):
        track_name = payload.get("track")
        if track_name not in tracks:
            raise HTTPException(status_code=404, detail=f"unknown track {track_name!r}")
        policy = payload.get("policy", {})
        speed = float(payload.get("speed", 0.0))
        lockstep = bool(payload.get("lockstep", False))
        handle = make_session(track_name, policy, speed, lockstep)
        session_id = f"s{next(ids)}"
        sessions[session_id] = handle
        return {"id": session_id, "track": track_name}

    @app.websocket("/sessions/{session_id}/stream")
    async def stream(websocket: WebSocket, session_id: str):
        handle = sessions.get(session_id)
        if handle is None:
            await websocket.close(code=4404, reason="unknown session")
            return
        if handle.streaming:
            await websocket.close(code=4409, reason="session already streamed")
            return
        handle.streaming = True
        await websocket.accept()

        inbox: asyncio.Queue = asyncio.Queue()

        async def reader():
            try:
                while True:
                    inbox.put_nowait(await websocket.receive_text())
            except WebSocketDisconnect:
                inbox.put_nowait(None)

        reader_task = asyncio.create_task(reader())

        async def handle_message(raw) -> tuple[bool, bool]:
            """Apply one inbound message; returns (disconnected, step_requested)."""
            if raw is None:
                return True, False
            try:
                msg = json.loads(raw)
            except json.JSONDecodeError:
                await websocket.send_text(
                    json.dumps({"type": "error", "error": "malformed message"})
                )
                return False, False
            kind = msg.get("type")
            if kind == "set_rho":
                handle.session.push_rho(float(msg.get("value", 0.5)))
            elif kind == "set_mode":
                handle.session.push_mode(str(msg.get("value", "manual")))
            elif kind == "pause":
                handle.paused = True
            elif kind == "resume":
                handle.paused = False
            elif kind == "step":
                return False, True
            elif kind == "reset":
                handle.session = SimulationSession(
                    handle.session.library,
                    handle.session.track,
                    centered_start(handle.session.track),
                    **handle.init_kwargs,
                )
            else:
                await websocket.send_text(
                    json.dumps({"type": "error", "error": f"unknown message {kind!r}"})
                )
            return False, False

        try:
            disconnected = False
            while not disconnected:
                step_requested = False
                # drain the inbox into the session mailbox before stepping
                while not inbox.empty():
                    gone, stepped = await handle_message(inbox.get_nowait())
                    disconnected = disconnected or gone
                    step_requested = step_requested or stepped
                if disconnected:
                    break
                if handle.lockstep and not step_requested:
                    # block until the client asks for the next step
                    gone, stepped = await handle_message(await inbox.get())
                    if gone:
                        break
                    if not stepped:
                        continue

                if handle.session.status != "running":
                    await websocket.send_text(json.dumps(final_frame(handle)))
                    break
                if handle.paused and not handle.lockstep:
                    await asyncio.sleep(0.02)
                    continue

                record = handle.session.step()
                await websocket.send_text(json.dumps(step_frame(handle, record)))
                if handle.speed > 0:
                    await asyncio.sleep(handle.session.horizon.h / handle.speed)
                else:
                    await asyncio.sleep(0)
        except WebSocketDisconnect:
            pass
        finally:
            reader_task.cancel()
            handle.streaming = False

    return app
