"""Time and identifier sources, injectable so transcripts can be replayed byte-for-byte."""

from __future__ import annotations

import itertools
import threading
import time
import uuid
from datetime import datetime, timezone
from typing import Protocol


class Clock(Protocol):
    def now(self) -> datetime: ...

    def monotonic(self) -> float: ...

    def sleep(self, seconds: float) -> None: ...


class IdFactory(Protocol):
    def new(self, prefix: str) -> str: ...


def to_rfc3339(dt: datetime) -> str:
    """Format a UTC datetime as RFC 3339 with microseconds and a Z suffix."""
    return dt.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")


def from_rfc3339(text: str) -> datetime:
    return datetime.strptime(text, "%Y-%m-%dT%H:%M:%S.%fZ").replace(tzinfo=timezone.utc)


class SystemClock:
    def now(self) -> datetime:
        return datetime.now(timezone.utc)

    def monotonic(self) -> float:
        return time.monotonic()

    def sleep(self, seconds: float) -> None:
        time.sleep(seconds)


class FakeClock:
    """Deterministic clock: every read advances time by a fixed step, sleeps are instant."""

    def __init__(self, start: datetime | None = None, step_seconds: float = 1.0):
        self._now = start or datetime(2024, 1, 1, tzinfo=timezone.utc)
        self._step = step_seconds
        self._mono = 0.0
        self._lock = threading.Lock()

    def now(self) -> datetime:
        with self._lock:
            current = self._now
            self._now = datetime.fromtimestamp(
                current.timestamp() + self._step, tz=timezone.utc
            )
            return current

    def monotonic(self) -> float:
        with self._lock:
            self._mono += self._step
            return self._mono

    def sleep(self, seconds: float) -> None:
        with self._lock:
            self._mono += seconds
            self._now = datetime.fromtimestamp(
                self._now.timestamp() + seconds, tz=timezone.utc
            )


class SequentialIds:
    """Id factory yielding 'prefix-0001', 'prefix-0002', ... per prefix."""

    def __init__(self):
        self._counters: dict[str, itertools.count] = {}
        self._lock = threading.Lock()

    def new(self, prefix: str) -> str:
        with self._lock:
            counter = self._counters.setdefault(prefix, itertools.count(1))
            return f"{prefix}-{next(counter):04d}"


class UuidIds:
    def new(self, prefix: str) -> str:
        return f"{prefix}-{uuid.uuid4().hex[:12]}"
