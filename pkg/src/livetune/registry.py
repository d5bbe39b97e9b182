"""Versioned model registry: register adapters, activate atomically, roll back.

Every scope (the global one, or one per user) owns a chain of versions rooted
at a plain base model. Activation flips a single pointer under a lock and
persists the whole manifest with write-then-rename, so readers observe either
the old or the new version and a restart recovers the exact state.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

from .clock import Clock, SystemClock, to_rfc3339
from .errors import (
    IncompatibleBase,
    NothingToRollback,
    UnknownArtifact,
    UnknownScope,
    UnknownVersion,
)
from .trainer.artifacts import ArtifactStore
from .trainer.tiny import apply_deltas, greedy_decode, parse_base_ref

GLOBAL_SCOPE = "global"


@dataclass
class ModelVersion:
    id: str
    scope: str
    base: str
    adapters: list[str] = field(default_factory=list)
    lineage: list[str] = field(default_factory=list)
    created_at: str = ""

    def __post_init__(self):
        if len(self.adapters) != len(self.lineage):
            raise ValueError("lineage must record one job per adapter")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "scope": self.scope,
            "base": self.base,
            "adapters": list(self.adapters),
            "lineage": list(self.lineage),
            "created_at": self.created_at,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "ModelVersion":
        return cls(**raw)


# -- servable handles ---------------------------------------------------------

class ServableModel(Protocol):
    version_id: str

    def generate(self, prompt: str) -> str:
        """Deterministic reply for the prompt."""
        ...


class EchoModel:
    """Zero-weight base for hermetic tests and the mock training path.

    Replies are a pure function of the prompt and the adapter count, so an
    adapter swap is observable in transcripts without real weights.
    """

    def __init__(self, adapters: list[str] | None = None, version_id: str = ""):
        self.adapters = list(adapters or [])
        self.version_id = version_id

    def generate(self, prompt: str) -> str:
        return f"echo/{len(self.adapters)}: {prompt}"


class TinyModelHandle:
    """Greedy-decoding wrapper around composed tiny-transformer weights."""

    def __init__(self, model, version_id: str = ""):
        self._model = model
        self.version_id = version_id

    def generate(self, prompt: str) -> str:
        return greedy_decode(self._model, prompt)


def compose(
    base: str,
    adapter_digests: list[str],
    artifacts: ArtifactStore | None = None,
    version_id: str = "",
) -> ServableModel:
    """Build a servable handle: the base with adapters applied in order."""
    if adapter_digests and artifacts is None:
        raise UnknownArtifact("no artifact store configured")
    loaded = [artifacts.load(d) for d in adapter_digests] if adapter_digests else []
    for artifact in loaded:
        if artifact.base_version != base:
            raise IncompatibleBase(
                f"artifact {artifact.digest[:12]} targets {artifact.base_version!r}, "
                f"not {base!r}"
            )
    if base == "echo" or base.startswith("echo"):
        return EchoModel([a.digest for a in loaded], version_id=version_id)
    parse_base_ref(base)        # raises for refs no backend can serve
    model = apply_deltas(base, [a.payload for a in loaded])
    return TinyModelHandle(model, version_id=version_id)


# -- registry -----------------------------------------------------------------

class Registry:
    """Durable per-scope version store with atomic activation."""

    def __init__(
        self,
        path: str | Path,
        artifacts: ArtifactStore | None = None,
        clock: Clock | None = None,
        default_base: str = "echo",
    ):
        self.path = Path(path)
        self.artifacts = artifacts
        self.clock = clock or SystemClock()
        self.default_base = default_base
        self._lock = threading.RLock()
        self._scopes: dict[str, dict] = {}
        self._handle_cache: dict[tuple[str, tuple[str, ...]], ServableModel] = {}
        if self.path.exists():
            self._scopes = json.loads(self.path.read_text(encoding="utf-8"))["scopes"]

    # -- persistence ----------------------------------------------------------

    def _persist(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        tmp = self.path.with_suffix(".json.tmp")
        tmp.write_text(
            json.dumps({"scopes": self._scopes}, indent=1), encoding="utf-8"
        )
        os.replace(tmp, self.path)

    # -- scope/version lookups -------------------------------------------------

    def _scope(self, scope: str) -> dict:
        if scope not in self._scopes:
            raise UnknownScope(scope)
        return self._scopes[scope]

    def ensure_scope(self, scope: str, base: str | None = None) -> ModelVersion:
        """Create the scope with its plain-base v0 (active) if missing."""
        with self._lock:
            if scope in self._scopes:
                return self.version(self._scopes[scope]["active"], scope)
            genesis = ModelVersion(
                id="v0",
                scope=scope,
                base=base or self.default_base,
                created_at=to_rfc3339(self.clock.now()),
            )
            self._scopes[scope] = {
                "base": genesis.base,
                "versions": {genesis.id: genesis.to_dict()},
                "active": genesis.id,
                "history": [genesis.id],
                "next_id": 1,
            }
            self._persist()
            return genesis

    def scopes(self) -> list[str]:
        with self._lock:
            return sorted(self._scopes)

    def version(self, version_id: str, scope: str = GLOBAL_SCOPE) -> ModelVersion:
        with self._lock:
            record = self._scope(scope)["versions"].get(version_id)
            if record is None:
                raise UnknownVersion(f"{version_id} in scope {scope}")
            return ModelVersion.from_dict(record)

    def versions(self, scope: str = GLOBAL_SCOPE) -> list[ModelVersion]:
        with self._lock:
            data = self._scope(scope)["versions"]
            return [ModelVersion.from_dict(v) for v in data.values()]

    def active(self, scope: str = GLOBAL_SCOPE) -> str:
        with self._lock:
            return self._scope(scope)["active"]

    def active_version(self, scope: str = GLOBAL_SCOPE) -> ModelVersion:
        return self.version(self.active(scope), scope)

    def history(self, scope: str = GLOBAL_SCOPE) -> list[str]:
        with self._lock:
            return list(self._scope(scope)["history"])

    def base_for(self, version_id: str, scope: str = GLOBAL_SCOPE) -> str:
        """Backend-level base model reference behind a registry version."""
        return self.version(version_id, scope).base

    # -- mutations --------------------------------------------------------------

    def register(self, artifact, parent: ModelVersion, job_id: str) -> ModelVersion:
        """Append an adapter to a parent version; the result is not yet active."""
        if artifact.base_version != parent.base:
            raise IncompatibleBase(
                f"artifact targets base {artifact.base_version!r}, "
                f"parent serves {parent.base!r}"
            )
        with self._lock:
            data = self._scope(parent.scope)
            version = ModelVersion(
                id=f"v{data['next_id']}",
                scope=parent.scope,
                base=parent.base,
                adapters=parent.adapters + [artifact.digest],
                lineage=parent.lineage + [job_id],
                created_at=to_rfc3339(self.clock.now()),
            )
            data["next_id"] += 1
            data["versions"][version.id] = version.to_dict()
            self._persist()
            return version

    def activate(self, version_id: str, scope: str = GLOBAL_SCOPE) -> str:
        """Atomically make the version active; returns the displaced id."""
        with self._lock:
            data = self._scope(scope)
            if version_id not in data["versions"]:
                raise UnknownVersion(f"{version_id} in scope {scope}")
            previous = data["active"]
            if version_id != previous:
                data["active"] = version_id
                data["history"].append(version_id)
                self._persist()
            return previous

    def rollback(self, scope: str = GLOBAL_SCOPE) -> str:
        """Re-activate the previous version in the activation history."""
        with self._lock:
            data = self._scope(scope)
            if len(data["history"]) < 2:
                raise NothingToRollback(scope)
            data["history"].pop()
            restored = data["history"][-1]
            data["active"] = restored
            self._persist()
            return restored

    # -- serving ------------------------------------------------------------------

    def handle(self, scope: str = GLOBAL_SCOPE, version_id: str | None = None) -> ServableModel:
        """Servable handle for the active (or a pinned) version of the scope."""
        with self._lock:
            vid = version_id or self._scope(scope)["active"]
            version = self.version(vid, scope)
            key = (version.base, tuple(version.adapters))
            cached = self._handle_cache.get(key)
            if cached is not None:
                return cached
        handle = compose(version.base, version.adapters, self.artifacts, version_id=vid)
        with self._lock:
            self._handle_cache[key] = handle
        return handle
