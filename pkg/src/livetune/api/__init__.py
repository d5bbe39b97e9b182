"""HTTP service: chat sessions, learn-directive jobs, event streams."""

from .app import create_app, main
from .events import EVENT_TYPES, TERMINAL_JOB_EVENTS, ApiEvent, EventBus, EventLog
from .service import ChatService, token_chunks

__all__ = [
    "EVENT_TYPES",
    "TERMINAL_JOB_EVENTS",
    "ApiEvent",
    "ChatService",
    "EventBus",
    "EventLog",
    "create_app",
    "main",
    "token_chunks",
]
