"""Per-session ordered event logs backing the streaming API.

Events get a per-session sequence number at append time, so clients can
resume from the last seq they saw. The wire format is one JSON object per
line: {"seq": n, "type": ..., <payload fields>}.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field

EVENT_TYPES = (
    "token",
    "message_complete",
    "job_queued",
    "job_running",
    "job_succeeded",
    "job_failed",
    "model_swapped",
    "error",
)

TERMINAL_JOB_EVENTS = ("model_swapped", "job_failed", "error")


@dataclass
class ApiEvent:
    seq: int
    type: str
    payload: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.type not in EVENT_TYPES:
            raise ValueError(f"unknown event type {self.type!r}")
        for reserved in ("seq", "type"):
            if reserved in self.payload:
                raise ValueError(f"payload may not carry {reserved!r}")

    def to_dict(self) -> dict:
        return {"seq": self.seq, "type": self.type, **self.payload}

    def to_json_line(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, separators=(",", ":"))


class EventLog:
    """Append-only ordered event list for one session, with blocking reads."""

    def __init__(self):
        self._events: list[ApiEvent] = []
        self._cond = threading.Condition()

    def append(self, type: str, payload: dict) -> ApiEvent:
        with self._cond:
            event = ApiEvent(seq=len(self._events) + 1, type=type, payload=payload)
            self._events.append(event)
            self._cond.notify_all()
            return event

    def events_after(self, seq: int = 0) -> list[ApiEvent]:
        with self._cond:
            return self._events[seq:]

    def wait_after(self, seq: int, timeout: float = 30.0) -> list[ApiEvent]:
        """Events with seq greater than the given one, blocking until some exist."""
        with self._cond:
            self._cond.wait_for(lambda: len(self._events) > seq, timeout=timeout)
            return self._events[seq:]


class EventBus:
    """Lazily created EventLog per session."""

    def __init__(self):
        self._logs: dict[str, EventLog] = {}
        self._lock = threading.Lock()

    def log(self, session_id: str) -> EventLog:
        with self._lock:
            if session_id not in self._logs:
                self._logs[session_id] = EventLog()
            return self._logs[session_id]
