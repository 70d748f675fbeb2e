"""HTTP/WebSocket front end for a running session.

Endpoints:
  GET /state     current knobs, latest efficiency estimate, rates
  GET /report    structured run summary (409 until a reconstruction exists)
  WS  /session   telemetry stream; accepts {"kind": "set-knob", "name", "value"}
                 and {"kind": "snapshot-request"}; replies with "knob-ack" /
                 "snapshot" messages on the same connection.

Every server message is one JSON object {"kind", "seq", "t_ms", "payload"}
serialized with a fixed separator convention, so identical payloads are
byte-identical on the wire.
"""

from __future__ import annotations

import json
from pathlib import Path

import anyio
from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from fastapi.responses import FileResponse, Response

from .fock import InvalidParameter
from .report import render_report
from .session import NotReady, SessionEngine


def dumps(obj) -> str:
    return json.dumps(obj, separators=(", ", ": "))


def build_app(engine: SessionEngine, dashboard_dir: str = None) -> FastAPI:
    app = FastAPI(title="fockscope", docs_url=None, redoc_url=None)

    if dashboard_dir is not None:
        root = Path(dashboard_dir)

        @app.get("/")
        async def index():
            return FileResponse(root / "index.html")

        @app.get("/dist/{name}")
        async def dist(name: str):
            target = (root / "dist" / name).resolve()
            if root.resolve() not in target.parents or not target.is_file():
                raise HTTPException(status_code=404)
            return FileResponse(target)

    @app.get("/state")
    async def state():
        return Response(dumps(engine.state_view()), media_type="application/json")

    @app.get("/report")
    async def report():
        try:
            summary = engine.snapshot()
        except NotReady as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return Response(render_report(summary, "structured"), media_type="application/json")

    @app.websocket("/session")
    async def session_ws(ws: WebSocket):
        await ws.accept()
        sub = engine.subscribe()
        try:
            async with anyio.create_task_group() as tg:

                async def forward_telemetry():
                    try:
                        while True:
                            msg = await anyio.to_thread.run_sync(sub.get, 0.1)
                            if msg is not None:
                                await ws.send_text(dumps(msg))
                    except (WebSocketDisconnect, RuntimeError):
                        tg.cancel_scope.cancel()

                async def handle_requests():
                    try:
                        while True:
                            raw = await ws.receive_text()
                            _handle_client_message(engine, sub, raw)
                    except WebSocketDisconnect:
                        tg.cancel_scope.cancel()

                tg.start_soon(forward_telemetry)
                tg.start_soon(handle_requests)
        finally:
            engine.unsubscribe(sub)

    return app


def _handle_client_message(engine: SessionEngine, sub, raw: str) -> None:
    """Process one client request and queue the reply on the same subscriber."""
    try:
        data = json.loads(raw)
    except json.JSONDecodeError:
        sub.put(engine.envelope("error", {"error": "malformed message"}))
        return
    kind = data.get("kind") if isinstance(data, dict) else None
    if kind == "set-knob":
        try:
            ack = engine.set_knob(data.get("name"), data.get("value"))
            ack["ok"] = True
        except (InvalidParameter, TypeError, ValueError) as exc:
            ack = {"ok": False, "name": data.get("name"), "error": str(exc)}
        sub.put(engine.envelope("knob-ack", ack))
    elif kind == "snapshot-request":
        try:
            payload = json.loads(render_report(engine.snapshot(), "structured"))
            sub.put(engine.envelope("snapshot", payload))
        except NotReady as exc:
            sub.put(engine.envelope("error", {"error": str(exc)}))
    else:
        sub.put(engine.envelope("error", {"error": f"unknown kind {kind!r}"}))


def serve(
    engine: SessionEngine,
    host: str = "127.0.0.1",
    port: int = 8765,
    paced: bool = True,
    dashboard_dir: str = None,
) -> None:
    """Run the session thread and block serving HTTP until interrupted."""
    import uvicorn

    from .session import SessionRunner

    runner = SessionRunner(engine, paced=paced).start()
    try:
        uvicorn.run(build_app(engine, dashboard_dir), host=host, port=port, log_level="warning")
    finally:
        runner.stop()
