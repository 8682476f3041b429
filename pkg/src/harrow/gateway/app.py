"""ASGI wiring: websocket endpoint, pacing clock, optional static console.

One process, one event loop: inbound frames are handled synchronously on
the loop thread, so each session sees a total order of events no matter
how many clients are connected. Outbound delivery goes through per-
connection outboxes drained by a writer task per socket.
"""

from __future__ import annotations

import asyncio
import itertools
import json
import logging
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from ..autonomy import SessionManager
from .bridge import Bridge

log = logging.getLogger("harrow.gateway")


def create_app(
    store_path: str | Path | None = None,
    tick_rate: float = 0.0,
    static_dir: str | Path | None = None,
) -> FastAPI:
    manager = SessionManager(store_path)
    bridge = Bridge(manager, tick_rate=tick_rate)

    async def _clock() -> None:
        while True:
            await asyncio.sleep(1.0 / tick_rate)
            try:
                bridge.tick_all()
            except Exception:  # noqa: BLE001 - the clock must survive session errors
                log.exception("pacing clock tick failed")

    from contextlib import asynccontextmanager

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        task = asyncio.create_task(_clock()) if tick_rate > 0 else None
        try:
            yield
        finally:
            if task is not None:
                task.cancel()

    app = FastAPI(title="harrow gateway", lifespan=lifespan)
    app.state.bridge = bridge
    app.state.manager = manager
    conn_counter = itertools.count(1)

    @app.get("/healthz")
    async def healthz() -> dict:
        return {"ok": True, "sessions": len(manager.sessions)}

    @app.websocket("/bridge")
    async def ws_bridge(websocket: WebSocket) -> None:
        await websocket.accept()
        conn_id = f"conn{next(conn_counter)}"
        outbox = bridge.attach(conn_id)
        wakeup = asyncio.Event()
        outbox.on_push = wakeup.set

        async def writer() -> None:
            while True:
                await wakeup.wait()
                wakeup.clear()
                for msg in outbox.drain():
                    await websocket.send_json(msg)

        writer_task = asyncio.create_task(writer())
        try:
            while True:
                raw = await websocket.receive_text()
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    msg = None
                bridge.handle(conn_id, msg)
        except WebSocketDisconnect:
            pass
        finally:
            writer_task.cancel()
            bridge.detach(conn_id)

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="console")

    return app


def serve(
    host: str = "127.0.0.1",
    port: int = 9091,
    store_path: str | Path | None = None,
    tick_rate: float = 5.0,
    static_dir: str | Path | None = None,
) -> None:
    import uvicorn

    app = create_app(store_path=store_path, tick_rate=tick_rate, static_dir=static_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")
