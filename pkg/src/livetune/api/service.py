"""Chat service orchestration: sessions, directives, jobs, swaps, events.

This is the seam between the HTTP layer and everything underneath. Handlers
never block on training: a directive kicks off a pipeline thread, the trainer
reports transitions through a hook, and clients follow along on the session's
event stream.
"""

from __future__ import annotations

import logging
import queue
import re
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

from ..clock import Clock, IdFactory, SystemClock, UuidIds
from ..config import AppConfig
from ..datagen.clients import SearchClient, TeacherClient, make_search, make_teacher
from ..datagen.documents import Fetcher
from ..errors import (
    EmptyDataset,
    EmptyDirective,
    LivetuneError,
    NoValidExamples,
    TeacherUnavailable,
)
from ..learnflow import build_candidates, register_and_activate, screen_and_submit
from ..moderation import ModerationPolicy, feedback_to_correction
from ..registry import Registry
from ..sessions import (
    ChatText,
    DocumentRef,
    FeedbackEvent,
    IntentClassifier,
    LearnDirective,
    Message,
    Session,
    SessionStore,
    parse_turn,
)
from ..trainer.artifacts import ArtifactStore
from ..trainer.backends import MockBackend
from ..trainer.jobs import TrainerService, TrainingJob
from ..trainer.profiles import HyperProfile, get_profile
from ..trainer.tiny import TinyBackend
from .events import TERMINAL_JOB_EVENTS, ApiEvent, EventBus, EventLog

log = logging.getLogger(__name__)

_TOKEN_CHUNKS = re.compile(r"\S+\s*|\s+")

STREAM_TIMEOUT_SECONDS = 600.0


def token_chunks(text: str) -> list[str]:
    """Split a reply into streamable chunks whose concatenation is the reply."""
    return _TOKEN_CHUNKS.findall(text)


@dataclass
class _Route:
    session_id: str
    sink: "queue.Queue[ApiEvent] | None"


class ChatService:
    def __init__(
        self,
        config: AppConfig | None = None,
        clock: Clock | None = None,
        ids: IdFactory | None = None,
        teacher: TeacherClient | None = None,
        search: SearchClient | None = None,
        fetcher: Fetcher | None = None,
        intent_classifier: IntentClassifier | None = None,
    ):
        self.config = config or AppConfig()
        self.clock = clock or SystemClock()
        self.ids = ids or UuidIds()
        root = Path(self.config.data_dir)
        root.mkdir(parents=True, exist_ok=True)

        self.artifacts = ArtifactStore(root / "artifacts")
        self.registry = Registry(
            root / "registry.json",
            self.artifacts,
            clock=self.clock,
            default_base=self.config.base_model,
        )
        self.registry.ensure_scope(self.config.scope)
        trainer_cfg = self.config.trainer
        self.trainer = TrainerService(
            jobs_dir=root / "jobs",
            datasets_dir=root / "datasets",
            artifact_store=self.artifacts,
            backends={
                "mock": MockBackend(trainer_cfg.mock_seconds_per_unit, clock=self.clock),
                "tiny": TinyBackend(trainer_cfg.tiny_lr_scale, trainer_cfg.tiny_min_steps),
            },
            resolve_base=self.registry.base_for,
            clock=self.clock,
            ids=self.ids,
            on_transition=self._on_job_transition,
        )
        self.store = SessionStore(
            root,
            registry=self.registry,
            scope=self.config.scope,
            clock=self.clock,
            ids=self.ids,
        )
        mod = self.config.moderation
        if mod.blocklist:
            self.policy = ModerationPolicy.from_file(
                mod.blocklist, max_output_chars=mod.max_output_chars
            )
        else:
            self.policy = ModerationPolicy(max_output_chars=mod.max_output_chars)
        self.teacher = teacher or make_teacher(self.config.teacher)
        self.search = search or make_search(self.config.search)
        self.fetcher = fetcher
        self.classifier = intent_classifier or IntentClassifier()
        self.bus = EventBus()
        self._routes: dict[str, _Route] = {}
        self._route_lock = threading.RLock()

    # -- small helpers ---------------------------------------------------------

    def profile(self, name: str) -> HyperProfile:
        cfg = self.config.trainer.profiles.get(name)
        if cfg is None:
            return get_profile(name)
        return HyperProfile(
            name=name,
            learning_rate=cfg.learning_rate,
            epochs=cfg.epochs,
            batch_size=cfg.batch_size,
        )

    def _emit(
        self,
        session_log: EventLog,
        sink: "queue.Queue[ApiEvent] | None",
        type: str,
        payload: dict,
    ) -> ApiEvent:
        event = session_log.append(type, payload)
        if sink is not None:
            sink.put(event)
        return event

    # -- session + chat --------------------------------------------------------

    def create_session(self, pinned_version: str | None = None) -> Session:
        return self.store.create_session(pinned_version=pinned_version)

    def events_after(self, session_id: str, after: int = 0) -> list[ApiEvent]:
        self.store.get(session_id)
        return self.bus.log(session_id).events_after(after)

    def handle_message(
        self,
        session_id: str,
        text: str,
        attachments: list[DocumentRef] | None = None,
    ) -> tuple[Message, Iterator[ApiEvent]]:
        """Store the user turn and return it plus the event stream it causes."""
        self.store.get(session_id)
        if not text.strip():
            raise ValueError("message text must be non-empty")
        session_log = self.bus.log(session_id)
        user = self.store.append_message(session_id, "user", text)
        try:
            parsed = parse_turn(text)
        except EmptyDirective as exc:
            event = session_log.append(
                "error",
                {"code": exc.code, "detail": str(exc), "message_id": user.id},
            )
            return user, iter([event])
        if isinstance(parsed, ChatText):
            return user, iter(self._answer_chat(session_id, session_log, text))
        mode = self.classifier.classify(parsed.raw_text, attachments or [])
        directive = LearnDirective(
            raw_text=parsed.raw_text,
            mode=mode,
            session_id=session_id,
            attachments=attachments or [],
        )
        sink: "queue.Queue[ApiEvent]" = queue.Queue()
        threading.Thread(
            target=self._run_directive,
            args=(directive, user.id, sink),
            name=f"directive-{user.id}",
            daemon=True,
        ).start()
        return user, self._stream_from(sink)

    def _answer_chat(
        self, session_id: str, session_log: EventLog, text: str
    ) -> list[ApiEvent]:
        version_id = self.store.resolve_model(session_id)
        handle = self.registry.handle(self.config.scope, version_id=version_id)
        reply = handle.generate(text)
        assistant = self.store.append_message(
            session_id, "assistant", reply, model_version=version_id
        )
        events = [
            session_log.append("token", {"message_id": assistant.id, "text": chunk})
            for chunk in token_chunks(reply)
        ]
        events.append(
            session_log.append(
                "message_complete",
                {
                    "message_id": assistant.id,
                    "model_version": version_id,
                    "text": reply,
                },
            )
        )
        return events

    def _stream_from(self, sink: "queue.Queue[ApiEvent]") -> Iterator[ApiEvent]:
        while True:
            try:
                event = sink.get(timeout=STREAM_TIMEOUT_SECONDS)
            except queue.Empty:
                return
            yield event
            if event.type in TERMINAL_JOB_EVENTS:
                return

    # -- learn directives ------------------------------------------------------

    def _run_directive(
        self,
        directive: LearnDirective,
        message_id: str,
        sink: "queue.Queue[ApiEvent]",
    ) -> None:
        session_log = self.bus.log(directive.session_id)
        scope = self.config.scope
        try:
            candidates = build_candidates(
                directive,
                self.teacher,
                search=self.search,
                cfg=self.config.datagen,
                clock=self.clock,
                fetcher=self.fetcher,
            )
            # routing must exist before the worker can report transitions,
            # and job_queued must hit the log before job_running can
            with self._route_lock:
                job_id, _, _ = screen_and_submit(
                    candidates,
                    self.policy,
                    self.trainer,
                    self.profile("OT"),
                    self.registry.active(scope),
                    scope=scope,
                    seed=self.config.trainer.tiny_seed,
                    backend=self.config.trainer.backend,
                    clock=self.clock,
                )
                self._routes[job_id] = _Route(directive.session_id, sink)
                self._emit(
                    session_log,
                    sink,
                    "job_queued",
                    {"job_id": job_id, "message_id": message_id, "mode": directive.mode},
                )
        except LivetuneError as exc:
            self._emit(
                session_log,
                sink,
                "job_failed",
                {"job_id": None, "error": f"{exc.code}: {exc}"},
            )
        except Exception as exc:
            log.exception("directive pipeline crashed for %s", message_id)
            self._emit(
                session_log,
                sink,
                "job_failed",
                {"job_id": None, "error": f"{type(exc).__name__}: {exc}"},
            )

    def _on_job_transition(self, job: TrainingJob) -> None:
        with self._route_lock:
            route = self._routes.get(job.id)
        if route is None:
            # job recovered from a previous process: no stream to feed,
            # but a success must still fold into the registry
            if job.state == "succeeded":
                try:
                    register_and_activate(self.trainer, self.registry, job)
                except LivetuneError:
                    log.exception("recovered job %s could not be activated", job.id)
            return
        session_log = self.bus.log(route.session_id)
        if job.state == "running":
            self._emit(session_log, route.sink, "job_running", {"job_id": job.id})
            return
        if job.state == "failed":
            self._emit(
                session_log,
                route.sink,
                "job_failed",
                {"job_id": job.id, "error": job.error},
            )
        elif job.state == "succeeded":
            self._emit(
                session_log,
                route.sink,
                "job_succeeded",
                {"job_id": job.id, "artifact_digest": job.artifact_digest},
            )
            try:
                version_id, previous = register_and_activate(
                    self.trainer, self.registry, job
                )
                self._emit(
                    session_log,
                    route.sink,
                    "model_swapped",
                    {
                        "job_id": job.id,
                        "version": version_id,
                        "previous": previous,
                        "scope": job.scope,
                    },
                )
            except LivetuneError as exc:
                self._emit(
                    session_log,
                    route.sink,
                    "error",
                    {"code": exc.code, "detail": str(exc), "job_id": job.id},
                )
        with self._route_lock:
            self._routes.pop(job.id, None)

    # -- feedback ----------------------------------------------------------------

    def post_feedback(self, session_id: str, message_id: str, note: str = "") -> str:
        """Turn feedback into a corrective training job; returns the job id."""
        session = self.store.get(session_id)
        session_log = self.bus.log(session_id)
        event = FeedbackEvent(
            target_message_id=message_id, session_id=session_id, note=note
        )
        scope = self.config.scope
        try:
            candidates = feedback_to_correction(event, session, self.teacher)
            with self._route_lock:
                job_id, _, _ = screen_and_submit(
                    candidates,
                    self.policy,
                    self.trainer,
                    self.profile("OT"),
                    self.registry.active(scope),
                    scope=scope,
                    seed=self.config.trainer.tiny_seed,
                    backend=self.config.trainer.backend,
                    clock=self.clock,
                )
                self._routes[job_id] = _Route(session_id, None)
                self._emit(
                    session_log,
                    None,
                    "job_queued",
                    {"job_id": job_id, "message_id": message_id, "mode": "feedback"},
                )
            return job_id
        except (NoValidExamples, EmptyDataset, TeacherUnavailable) as exc:
            session_log.append(
                "job_failed", {"job_id": None, "error": f"{exc.code}: {exc}"}
            )
            raise

    # -- thin reads ----------------------------------------------------------------

    def get_job(self, job_id: str) -> TrainingJob:
        return self.trainer.poll_job(job_id)

    def list_versions(self, scope: str) -> list[dict]:
        return [v.to_dict() for v in self.registry.versions(scope)]
