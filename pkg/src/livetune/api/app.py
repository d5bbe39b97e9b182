"""HTTP surface over the chat service.

Routes return JSON except message streams, which are newline-delimited JSON
events so clients can render tokens and job progress as they arrive.
"""

from __future__ import annotations

import base64
import binascii
from typing import Iterator

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel, Field

from ..config import AppConfig, load_config
from ..errors import (
    LivetuneError,
    UnknownJob,
    UnknownMessage,
    UnknownScope,
    UnknownSession,
    UnknownVersion,
)
from ..datagen.documents import SUPPORTED_FORMATS
from ..sessions import DocumentRef
from .events import ApiEvent
from .service import ChatService

_NOT_FOUND = (UnknownSession, UnknownMessage, UnknownJob, UnknownScope, UnknownVersion)


class SessionRequest(BaseModel):
    pinned_version: str | None = None


class AttachmentBody(BaseModel):
    name: str
    format: str
    content_b64: str

    def to_ref(self) -> DocumentRef:
        if self.format not in SUPPORTED_FORMATS:
            raise ValueError(f"unsupported attachment format {self.format!r}")
        try:
            payload = base64.b64decode(self.content_b64, validate=True)
        except (binascii.Error, ValueError):
            raise ValueError(f"attachment {self.name!r} is not valid base64")
        return DocumentRef(name=self.name, format=self.format, content=payload)


class MessageRequest(BaseModel):
    text: str = Field(min_length=1)
    attachments: list[AttachmentBody] = Field(default_factory=list)


class FeedbackRequest(BaseModel):
    message_id: str
    note: str = ""


def _ndjson(events: Iterator[ApiEvent]) -> Iterator[bytes]:
    for event in events:
        yield (event.to_json_line() + "\n").encode("utf-8")


def create_app(
    config: AppConfig | None = None, service: ChatService | None = None
) -> FastAPI:
    service = service or ChatService(config)
    app = FastAPI(title="livetune", version="0.1.0")
    app.state.service = service

    @app.exception_handler(LivetuneError)
    async def _domain_error(request: Request, exc: LivetuneError):
        status = 404 if isinstance(exc, _NOT_FOUND) else 422
        return JSONResponse(
            status_code=status, content={"error": exc.code, "detail": str(exc)}
        )

    @app.exception_handler(ValueError)
    async def _value_error(request: Request, exc: ValueError):
        return JSONResponse(
            status_code=422, content={"error": "invalid_request", "detail": str(exc)}
        )

    @app.get("/healthz")
    def healthz():
        return {
            "status": "ok",
            "scope": service.config.scope,
            "active_version": service.registry.active(service.config.scope),
        }

    @app.post("/sessions")
    def create_session(body: SessionRequest | None = None):
        pinned = body.pinned_version if body else None
        session = service.create_session(pinned_version=pinned)
        return {"session_id": session.id}

    @app.post("/sessions/{session_id}/messages")
    def post_message(session_id: str, body: MessageRequest):
        attachments = [a.to_ref() for a in body.attachments]
        user, events = service.handle_message(session_id, body.text, attachments)
        return StreamingResponse(
            _ndjson(events),
            media_type="application/x-ndjson",
            headers={"X-Message-Id": user.id},
        )

    @app.post("/sessions/{session_id}/feedback")
    def post_feedback(session_id: str, body: FeedbackRequest):
        job_id = service.post_feedback(session_id, body.message_id, body.note)
        return {"job_id": job_id}

    @app.get("/sessions/{session_id}/events")
    def session_events(session_id: str, after: int = 0):
        events = service.events_after(session_id, after)
        return {"events": [e.to_dict() for e in events]}

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str):
        return service.get_job(job_id).to_dict()

    @app.get("/versions")
    def versions(scope: str | None = None):
        return {"versions": service.list_versions(scope or service.config.scope)}

    return app


def main() -> int:
    import uvicorn

    config = load_config()
    app = create_app(config)
    host, _, port = config.listen.rpartition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
