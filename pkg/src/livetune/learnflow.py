"""The directive-to-new-model flow, shared by the chat service and the harness.

Three stages: build candidate training data for a directive's mode, screen it
and submit the job, then fold the finished artifact into the registry and
flip the active version.
"""

from __future__ import annotations

from .clock import Clock, SystemClock
from .config import DatagenConfig
from .datagen import (
    SearchClient,
    TeacherClient,
    TrainingSet,
    augment_from_web,
    backtranslate,
    dedupe_and_diversify,
    generate_self_instruct,
    ingest_document,
    search_and_extract,
)
from .datagen.documents import Fetcher
from .errors import BackendFailure
from .moderation import ModerationPolicy, ModerationReceipt, screen_with_receipt
from .registry import Registry
from .sessions import LearnDirective
from .trainer.jobs import TrainerService, TrainingJob
from .trainer.profiles import HyperProfile


def build_candidates(
    directive: LearnDirective,
    teacher: TeacherClient,
    search: SearchClient | None = None,
    cfg: DatagenConfig | None = None,
    clock: Clock | None = None,
    fetcher: Fetcher | None = None,
) -> TrainingSet:
    """Run the pipeline for the directive's mode and dedupe the result."""
    cfg = cfg or DatagenConfig()
    if directive.mode == "instruction":
        candidates = generate_self_instruct(directive, teacher, cfg.n_target)
    elif directive.mode == "document":
        chunks = []
        if directive.attachments:
            for ref in directive.attachments:
                chunks.extend(
                    ingest_document(
                        ref.content,
                        ref.format,
                        chunk_size=cfg.chunk_size,
                        overlap=cfg.chunk_overlap,
                        fetcher=fetcher,
                    )
                )
        else:
            # directive invariant guarantees a fetchable url in the text
            chunks = ingest_document(
                directive.raw_text.encode("utf-8"),
                "url",
                chunk_size=cfg.chunk_size,
                overlap=cfg.chunk_overlap,
                fetcher=fetcher,
            )
        candidates = backtranslate(chunks, teacher, cfg.backtranslation_threshold)
    elif directive.mode == "web":
        if search is None:
            raise ValueError("web directives need a search client")
        passages = search_and_extract(
            directive.raw_text, search, k=cfg.search_k, teacher=teacher, clock=clock
        )
        candidates = augment_from_web(passages, teacher)
    else:
        raise ValueError(f"no pipeline for mode {directive.mode!r}")
    return dedupe_and_diversify(candidates, cfg.dedupe_threshold)


def screen_and_submit(
    candidates: TrainingSet,
    policy: ModerationPolicy,
    trainer: TrainerService,
    profile: HyperProfile,
    base_version: str,
    scope: str = "global",
    seed: int = 0,
    backend: str = "mock",
    clock: Clock | None = None,
) -> tuple[str, TrainingSet, ModerationReceipt]:
    """Prevention gate then job submission; returns (job id, kept, receipt)."""
    kept, _, receipt = screen_with_receipt(candidates, policy, clock)
    job_id = trainer.submit_job(
        kept, profile, base_version, receipt, scope=scope, seed=seed, backend=backend
    )
    return job_id, kept, receipt


def register_and_activate(
    trainer: TrainerService,
    registry: Registry,
    job: TrainingJob,
) -> tuple[str, str]:
    """Fold a succeeded job's artifact into the registry; returns (new, previous)."""
    artifact = trainer.artifacts.load(job.artifact_digest)
    parent = registry.version(job.base_version, job.scope)
    version = registry.register(artifact, parent, job.id)
    previous = registry.activate(version.id, job.scope)
    return version.id, previous


def train_to_version(
    candidates: TrainingSet,
    policy: ModerationPolicy,
    trainer: TrainerService,
    registry: Registry,
    profile: HyperProfile,
    scope: str = "global",
    seed: int = 0,
    backend: str = "mock",
    base_version: str | None = None,
    clock: Clock | None = None,
    timeout: float = 1800.0,
) -> tuple[TrainingJob, str, str]:
    """Synchronous end-to-end: screen, train, register, activate.

    Returns (terminal job, activated version id, displaced version id).
    """
    clock = clock or SystemClock()
    base = base_version or registry.active(scope)
    job_id, _, _ = screen_and_submit(
        candidates, policy, trainer, profile, base,
        scope=scope, seed=seed, backend=backend, clock=clock,
    )
    job = trainer.wait(job_id, timeout=timeout)
    if job.state != "succeeded":
        raise BackendFailure(job.error or f"job {job_id} failed")
    version_id, previous = register_and_activate(trainer, registry, job)
    return job, version_id, previous
