"""Asynchronous training jobs: submission, state machine, durable records.

Jobs run on one worker thread per scope, so directives against the same
scope train FIFO while chat stays responsive. Every state change lands in a
JSON record (written atomically) before anyone can observe it, and datasets
are parked on disk so a restart can re-queue unfinished work.
"""

from __future__ import annotations

import copy
import json
import logging
import os
import queue
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from ..clock import Clock, IdFactory, SystemClock, UuidIds, to_rfc3339
from ..datagen.types import TrainingSet
from ..errors import (
    EmptyDataset,
    InvalidTransition,
    MissingModerationReceipt,
    UnknownBaseVersion,
    UnknownJob,
)
from ..moderation import ModerationReceipt
from .artifacts import ArtifactStore
from .backends import TrainingBackend
from .profiles import HyperProfile

log = logging.getLogger(__name__)

STATES = ("queued", "running", "succeeded", "failed")
_ALLOWED = {("queued", "running"), ("running", "succeeded"), ("running", "failed")}

BaseResolver = Callable[[str, str], str]
TransitionHook = Callable[["TrainingJob"], None]


@dataclass
class TrainingJob:
    id: str
    dataset_digest: str
    dataset_path: str
    profile: HyperProfile
    base_version: str                 # registry version the job trains on top of
    base_ref: str                     # backend-level base model reference
    backend: str
    scope: str
    seed: int
    moderation_receipt: dict
    state: str = "queued"
    artifact_digest: str | None = None
    error: str | None = None
    submitted_at: str | None = None
    started_at: str | None = None
    ended_at: str | None = None

    def transition(self, new_state: str) -> None:
        if (self.state, new_state) not in _ALLOWED:
            raise InvalidTransition(f"{self.state} -> {new_state}")
        self.state = new_state

    @property
    def terminal(self) -> bool:
        return self.state in ("succeeded", "failed")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "dataset_digest": self.dataset_digest,
            "dataset_path": self.dataset_path,
            "profile": self.profile.to_dict(),
            "base_version": self.base_version,
            "base_ref": self.base_ref,
            "backend": self.backend,
            "scope": self.scope,
            "seed": self.seed,
            "moderation_receipt": self.moderation_receipt,
            "state": self.state,
            "artifact_digest": self.artifact_digest,
            "error": self.error,
            "submitted_at": self.submitted_at,
            "started_at": self.started_at,
            "ended_at": self.ended_at,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "TrainingJob":
        raw = dict(raw)
        raw["profile"] = HyperProfile.from_dict(raw["profile"])
        return cls(**raw)


@dataclass
class _ScopeWorker:
    queue: "queue.Queue[str]" = field(default_factory=queue.Queue)
    thread: threading.Thread | None = None


class TrainerService:
    """Owns job records, datasets on disk, and the per-scope worker threads."""

    def __init__(
        self,
        jobs_dir: str | Path,
        datasets_dir: str | Path,
        artifact_store: ArtifactStore,
        backends: dict[str, TrainingBackend],
        resolve_base: BaseResolver,
        clock: Clock | None = None,
        ids: IdFactory | None = None,
        on_transition: TransitionHook | None = None,
    ):
        self.jobs_dir = Path(jobs_dir)
        self.datasets_dir = Path(datasets_dir)
        self.jobs_dir.mkdir(parents=True, exist_ok=True)
        self.datasets_dir.mkdir(parents=True, exist_ok=True)
        self.artifacts = artifact_store
        self.backends = backends
        self.resolve_base = resolve_base
        self.clock = clock or SystemClock()
        self.ids = ids or UuidIds()
        self.on_transition = on_transition
        self._jobs: dict[str, TrainingJob] = {}
        self._lock = threading.RLock()
        self._workers: dict[str, _ScopeWorker] = {}
        self._recover()

    # -- persistence ---------------------------------------------------------

    def _record_path(self, job_id: str) -> Path:
        return self.jobs_dir / f"{job_id}.json"

    def _persist(self, job: TrainingJob) -> None:
        tmp = self._record_path(job.id).with_suffix(".json.tmp")
        tmp.write_text(json.dumps(job.to_dict(), indent=1), encoding="utf-8")
        os.replace(tmp, self._record_path(job.id))

    def _recover(self) -> None:
        """Reload job records; fail interrupted runs, re-queue pending ones."""
        for path in sorted(self.jobs_dir.glob("*.json")):
            try:
                job = TrainingJob.from_dict(json.loads(path.read_text(encoding="utf-8")))
            except (json.JSONDecodeError, KeyError, TypeError):
                log.warning("skipping unreadable job record %s", path)
                continue
            if job.state == "running":
                job.transition("failed")
                job.error = "interrupted by service restart"
                job.ended_at = to_rfc3339(self.clock.now())
                self._persist(job)
            self._jobs[job.id] = job
            if job.state == "queued":
                self._enqueue(job)

    # -- public API ----------------------------------------------------------

    def submit_job(
        self,
        dataset: TrainingSet,
        profile: HyperProfile,
        base_version: str,
        moderation_receipt: ModerationReceipt | None,
        scope: str = "global",
        seed: int = 0,
        backend: str = "mock",
    ) -> str:
        if not len(dataset):
            raise EmptyDataset("cannot train on an empty dataset")
        if moderation_receipt is None:
            raise MissingModerationReceipt("submission carries no moderation receipt")
        digest = dataset.digest()
        if moderation_receipt.dataset_digest != digest:
            raise MissingModerationReceipt(
                "moderation receipt does not match the submitted dataset"
            )
        if backend not in self.backends:
            raise ValueError(f"unknown backend {backend!r}")
        try:
            base_ref = self.resolve_base(base_version, scope)
        except (KeyError, LookupError) as exc:
            raise UnknownBaseVersion(base_version) from exc

        dataset_path = self.datasets_dir / f"{digest}.jsonl"
        if not dataset_path.exists():
            dataset.save(dataset_path)
        job = TrainingJob(
            id=self.ids.new("job"),
            dataset_digest=digest,
            dataset_path=str(dataset_path),
            profile=profile,
            base_version=base_version,
            base_ref=base_ref,
            backend=backend,
            scope=scope,
            seed=seed,
            moderation_receipt=moderation_receipt.to_dict(),
            submitted_at=to_rfc3339(self.clock.now()),
        )
        with self._lock:
            self._jobs[job.id] = job
            self._persist(job)
        self._enqueue(job)
        return job.id

    def poll_job(self, job_id: str) -> TrainingJob:
        with self._lock:
            job = self._jobs.get(job_id)
            if job is None:
                raise UnknownJob(job_id)
            return copy.deepcopy(job)

    def wait(self, job_id: str, timeout: float = 120.0, interval: float = 0.01) -> TrainingJob:
        deadline = self.clock.monotonic() + timeout
        while True:
            job = self.poll_job(job_id)
            if job.terminal:
                return job
            if self.clock.monotonic() >= deadline:
                raise TimeoutError(f"job {job_id} still {job.state} after {timeout}s")
            self.clock.sleep(interval)

    def jobs_for_scope(self, scope: str) -> list[TrainingJob]:
        with self._lock:
            return [copy.deepcopy(j) for j in self._jobs.values() if j.scope == scope]

    # -- execution -----------------------------------------------------------

    def _enqueue(self, job: TrainingJob) -> None:
        with self._lock:
            worker = self._workers.get(job.scope)
            if worker is None:
                worker = _ScopeWorker()
                worker.thread = threading.Thread(
                    target=self._worker_loop,
                    args=(job.scope, worker.queue),
                    name=f"trainer-{job.scope}",
                    daemon=True,
                )
                self._workers[job.scope] = worker
                worker.thread.start()
            worker.queue.put(job.id)

    def _worker_loop(self, scope: str, q: "queue.Queue[str]") -> None:
        while True:
            job_id = q.get()
            try:
                self._run(job_id)
            except Exception:
                log.exception("job %s crashed outside the state machine", job_id)
            finally:
                q.task_done()

    def _notify(self, job_id: str) -> None:
        if self.on_transition is None:
            return
        snapshot = self.poll_job(job_id)
        try:
            self.on_transition(snapshot)
        except Exception:
            log.exception("transition hook failed for job %s", job_id)

    def _run(self, job_id: str) -> None:
        with self._lock:
            job = self._jobs[job_id]
            job.transition("running")
            job.started_at = to_rfc3339(self.clock.now())
            self._persist(job)
        self._notify(job_id)
        backend = self.backends[job.backend]
        try:
            dataset = TrainingSet.load(job.dataset_path)
            artifact = backend.train(job.base_ref, dataset, job.profile, job.seed)
            self.artifacts.save(artifact)
            with self._lock:
                job.transition("succeeded")
                job.artifact_digest = artifact.digest
                job.ended_at = to_rfc3339(self.clock.now())
                self._persist(job)
        except Exception as exc:
            with self._lock:
                job.transition("failed")
                job.error = f"{type(exc).__name__}: {exc}"
                job.ended_at = to_rfc3339(self.clock.now())
                self._persist(job)
        self._notify(job_id)
