"""WebSocket transport for the session protocol.

One session per connection; text frames, each frame exactly one JSON
object with a "type" field.
"""

from __future__ import annotations

import json

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .session import Session, SessionConfig


def create_app(config: SessionConfig | None = None, knn_index=None) -> FastAPI:
    app = FastAPI(title="handteleop")

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        session = Session(config=config, knn_index=knn_index)
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError as exc:
                    outbound = [{"type": "error", "code": "bad_json", "detail": str(exc)}]
                else:
                    outbound = session.handle_message(msg)
                for out in outbound:
                    await ws.send_text(json.dumps(out))
        except WebSocketDisconnect:
            pass

    return app
