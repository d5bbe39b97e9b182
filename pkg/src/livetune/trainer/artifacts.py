"""Adapter artifacts and their content-addressed store.

Artifacts are opaque byte payloads plus provenance (which base they apply to,
how training went). The digest is always sha256 of the payload, so storage is
content-addressed and identical training runs land on the same address.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import UnknownArtifact

LossCurve = list[tuple[int, float]]


@dataclass
class AdapterArtifact:
    digest: str
    base_version: str
    payload: bytes
    train_loss_curve: LossCurve = field(default_factory=list)

    def __post_init__(self):
        if self.digest != sha256_hex(self.payload):
            raise ValueError("digest does not match payload")
        for _, loss in self.train_loss_curve:
            if not math.isfinite(loss):
                raise ValueError("loss curve contains non-finite values")

    @classmethod
    def from_payload(
        cls,
        payload: bytes,
        base_version: str,
        train_loss_curve: LossCurve | None = None,
    ) -> "AdapterArtifact":
        return cls(
            digest=sha256_hex(payload),
            base_version=base_version,
            payload=payload,
            train_loss_curve=list(train_loss_curve or []),
        )


def sha256_hex(payload: bytes) -> str:
    return hashlib.sha256(payload).hexdigest()


class ArtifactStore:
    """Payloads under artifacts/<digest>, provenance in a JSON sidecar."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _payload_path(self, digest: str) -> Path:
        return self.root / digest

    def _meta_path(self, digest: str) -> Path:
        return self.root / f"{digest}.json"

    def save(self, artifact: AdapterArtifact) -> str:
        path = self._payload_path(artifact.digest)
        if not path.exists():
            tmp = path.with_suffix(".tmp")
            tmp.write_bytes(artifact.payload)
            os.replace(tmp, path)
        meta = {
            "digest": artifact.digest,
            "base_version": artifact.base_version,
            "train_loss_curve": [[s, l] for s, l in artifact.train_loss_curve],
        }
        tmp = self._meta_path(artifact.digest).with_suffix(".json.tmp")
        tmp.write_text(json.dumps(meta, indent=1), encoding="utf-8")
        os.replace(tmp, self._meta_path(artifact.digest))
        return artifact.digest

    def load(self, digest: str) -> AdapterArtifact:
        path = self._payload_path(digest)
        meta_path = self._meta_path(digest)
        if not path.exists() or not meta_path.exists():
            raise UnknownArtifact(digest)
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        return AdapterArtifact(
            digest=meta["digest"],
            base_version=meta["base_version"],
            payload=path.read_bytes(),
            train_loss_curve=[(int(s), float(l)) for s, l in meta["train_loss_curve"]],
        )

    def __contains__(self, digest: str) -> bool:
        return self._payload_path(digest).exists()
