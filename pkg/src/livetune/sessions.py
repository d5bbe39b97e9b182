"""Chat sessions: turn parsing, learning-intent classification, message history.

Every user turn is either plain chat or a learning directive. Directives are
the literal token `[Learn]` at the start of the turn (case-sensitive), with
the learning mode decided by a deterministic rule cascade that an optional
teacher-backed classifier may refine.

Message history is persisted append-only, one JSON object per line per
session, under <data_dir>/sessions/.
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Callable

from .clock import SystemClock, UuidIds, from_rfc3339, to_rfc3339
from .errors import EmptyDirective, UnknownMessage, UnknownSession

TRIGGER = "[Learn]"

ROLES = ("user", "assistant", "system")
MODES = ("instruction", "document", "web")

# Default intent lexicons; word-boundary, case-insensitive.
WEB_INTENT_TERMS = ("news", "search", "latest", "fetch", "current")
DOCUMENT_INTENT_TERMS = ("this file", "the document", "uploaded")

_URL_RE = re.compile(r"https?://\S+")


@dataclass
class Message:
    id: str
    session_id: str
    role: str
    text: str
    timestamp: datetime
    model_version: str | None = None

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")
        if self.role == "assistant" and not self.model_version:
            raise ValueError("assistant messages must carry a model_version")

    def to_json_line(self) -> str:
        payload = {
            "id": self.id,
            "session_id": self.session_id,
            "role": self.role,
            "text": self.text,
        }
        if self.model_version is not None:
            payload["model_version"] = self.model_version
        payload["timestamp"] = to_rfc3339(self.timestamp)
        return json.dumps(payload, ensure_ascii=False, separators=(",", ":"))

    @classmethod
    def from_json_line(cls, line: str) -> "Message":
        raw = json.loads(line)
        return cls(
            id=raw["id"],
            session_id=raw["session_id"],
            role=raw["role"],
            text=raw["text"],
            timestamp=from_rfc3339(raw["timestamp"]),
            model_version=raw.get("model_version"),
        )


@dataclass
class DocumentRef:
    name: str
    format: str               # txt | pdf | url
    content: bytes


@dataclass
class ChatText:
    text: str


@dataclass
class DirectiveCandidate:
    raw_text: str


@dataclass
class LearnDirective:
    raw_text: str
    mode: str
    session_id: str
    attachments: list[DocumentRef] = field(default_factory=list)

    def __post_init__(self):
        if not self.raw_text.strip():
            raise ValueError("directive raw_text must be non-empty")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "document" and not self.attachments and not _URL_RE.search(self.raw_text):
            raise ValueError("document directive needs an attachment or a fetchable url")


@dataclass
class FeedbackEvent:
    target_message_id: str
    session_id: str
    note: str = ""


@dataclass
class Session:
    id: str
    created_at: datetime
    messages: list[Message] = field(default_factory=list)
    pinned_version: str | None = None


def parse_turn(raw: str) -> ChatText | DirectiveCandidate:
    """Split a user turn into plain chat or a learning-directive candidate.

    The trigger is the exact token `[Learn]` at the start of the string;
    anything else, including lowercase variants, is ordinary chat.
    """
    if not raw.strip():
        raise ValueError("empty turn")
    if raw.startswith(TRIGGER):
        remainder = raw[len(TRIGGER):].strip()
        if not remainder:
            raise EmptyDirective("learning directive has no body")
        return DirectiveCandidate(raw_text=remainder)
    return ChatText(text=raw)


class IntentClassifier:
    """Rule cascade deciding which learning pipeline a directive feeds.

    Order: attachments force document mode; else a web-intent lexicon, then a
    document-intent lexicon, then instruction mode as the fallback. A teacher
    hook, when given, may override the lexicon rules but never the attachment
    rule.
    """

    def __init__(
        self,
        web_terms: tuple[str, ...] = WEB_INTENT_TERMS,
        document_terms: tuple[str, ...] = DOCUMENT_INTENT_TERMS,
        teacher_hook: Callable[[str], str | None] | None = None,
    ):
        self._web = [re.compile(rf"\b{re.escape(t)}\b", re.IGNORECASE) for t in web_terms]
        self._doc = [re.compile(rf"\b{re.escape(t)}\b", re.IGNORECASE) for t in document_terms]
        self._hook = teacher_hook

    def classify(self, raw_text: str, attachments: list[DocumentRef]) -> str:
        if not raw_text.strip():
            raise ValueError("cannot classify empty text")
        if attachments:
            return "document"
        if self._hook is not None:
            mode = self._hook(raw_text)
            if mode in MODES:
                return mode
        if any(rx.search(raw_text) for rx in self._web):
            return "web"
        if any(rx.search(raw_text) for rx in self._doc):
            return "document"
        return "instruction"


def classify_intent(
    raw_text: str,
    attachments: list[DocumentRef],
    classifier: IntentClassifier | None = None,
) -> str:
    return (classifier or IntentClassifier()).classify(raw_text, attachments)


class SessionStore:
    """Session registry with append-only JSONL persistence.

    Safe under concurrent use: the session map has its own lock and each
    session serializes appends through a per-session lock (single writer per
    session). Model resolution is a read against the registry's active
    version and never blocks on appends.
    """

    def __init__(self, data_dir, registry=None, scope: str = "global",
                 clock=None, ids=None):
        self._dir = Path(data_dir) / "sessions"
        self._dir.mkdir(parents=True, exist_ok=True)
        self._registry = registry
        self._scope = scope
        self._clock = clock or SystemClock()
        self._ids = ids or UuidIds()
        self._sessions: dict[str, Session] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._map_lock = threading.Lock()
        self._load()

    def _load(self) -> None:
        for path in sorted(self._dir.glob("*.jsonl")):
            messages = [
                Message.from_json_line(line)
                for line in path.read_text(encoding="utf-8").splitlines()
                if line.strip()
            ]
            meta_path = path.with_suffix(".meta.json")
            meta = {}
            if meta_path.exists():
                meta = json.loads(meta_path.read_text(encoding="utf-8"))
            session_id = path.stem
            created = (
                from_rfc3339(meta["created_at"])
                if "created_at" in meta
                else (messages[0].timestamp if messages else self._clock.now())
            )
            self._sessions[session_id] = Session(
                id=session_id,
                created_at=created,
                messages=messages,
                pinned_version=meta.get("pinned_version"),
            )
            self._locks[session_id] = threading.Lock()

    def create_session(self, pinned_version: str | None = None) -> Session:
        session = Session(
            id=self._ids.new("s"),
            created_at=self._clock.now(),
            pinned_version=pinned_version,
        )
        with self._map_lock:
            self._sessions[session.id] = session
            self._locks[session.id] = threading.Lock()
        meta = {"created_at": to_rfc3339(session.created_at)}
        if pinned_version is not None:
            meta["pinned_version"] = pinned_version
        (self._dir / f"{session.id}.meta.json").write_text(
            json.dumps(meta), encoding="utf-8"
        )
        return session

    def get(self, session_id: str) -> Session:
        with self._map_lock:
            if session_id not in self._sessions:
                raise UnknownSession(session_id)
            return self._sessions[session_id]

    def list_ids(self) -> list[str]:
        with self._map_lock:
            return sorted(self._sessions)

    def new_message_id(self, session_id: str) -> str:
        session = self.get(session_id)
        with self._locks[session_id]:
            return f"m-{len(session.messages) + 1:06d}"

    def append_message(
        self,
        session_id: str,
        role: str,
        text: str,
        model_version: str | None = None,
        message_id: str | None = None,
    ) -> Message:
        """Append one message; persisted to the session's JSONL before returning."""
        session = self.get(session_id)
        lock = self._locks[session_id]
        with lock:
            now = self._clock.now()
            if session.messages and session.messages[-1].timestamp > now:
                now = session.messages[-1].timestamp
            message = Message(
                id=message_id or f"m-{len(session.messages) + 1:06d}",
                session_id=session_id,
                role=role,
                text=text,
                timestamp=now,
                model_version=model_version,
            )
            if any(m.id == message.id for m in session.messages):
                raise ValueError(f"duplicate message id {message.id}")
            with open(self._dir / f"{session_id}.jsonl", "a", encoding="utf-8") as fh:
                fh.write(message.to_json_line() + "\n")
                fh.flush()
            session.messages.append(message)
            return message

    def get_message(self, session_id: str, message_id: str) -> Message:
        session = self.get(session_id)
        for message in session.messages:
            if message.id == message_id:
                return message
        raise UnknownMessage(message_id)

    def preceding_user_message(self, session_id: str, message_id: str) -> Message:
        """The closest user message before the given one; UnknownMessage if none."""
        session = self.get(session_id)
        idx = next(
            (i for i, m in enumerate(session.messages) if m.id == message_id), None
        )
        if idx is None:
            raise UnknownMessage(message_id)
        for message in reversed(session.messages[:idx]):
            if message.role == "user":
                return message
        raise UnknownMessage(f"no user message precedes {message_id}")

    def resolve_model(self, session_id: str) -> str:
        """Version serving this session: its pin if set, else the active version."""
        session = self.get(session_id)
        if session.pinned_version is not None:
            return session.pinned_version
        if self._registry is None:
            raise RuntimeError("session store has no registry to resolve against")
        return self._registry.active(self._scope)
