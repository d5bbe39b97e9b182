"""Training backend contract and the deterministic mock backend.

The mock never touches weights: its artifact is a canonical serialization of
what it was asked to train, so equal requests collide on the same digest and
permuting the dataset changes nothing. Simulated duration scales with
dataset size times epochs, mirroring how real training cost moves.
"""

from __future__ import annotations

import json
from typing import Protocol

from ..clock import Clock, SystemClock
from ..datagen.types import TrainingSet
from ..errors import BackendFailure
from .artifacts import AdapterArtifact, sha256_hex
from .profiles import HyperProfile


class TrainingBackend(Protocol):
    name: str

    def train(
        self,
        base_version: str,
        dataset: TrainingSet,
        profile: HyperProfile,
        seed: int,
    ) -> AdapterArtifact:
        """Produce an adapter for base_version from the screened dataset."""
        ...


class MockBackend:
    """Hash-of-request backend for fast, hermetic pipeline tests."""

    name = "mock"

    def __init__(self, seconds_per_unit: float = 1e-4, clock: Clock | None = None):
        self.seconds_per_unit = seconds_per_unit
        self.clock = clock or SystemClock()

    def train(
        self,
        base_version: str,
        dataset: TrainingSet,
        profile: HyperProfile,
        seed: int,
    ) -> AdapterArtifact:
        if not len(dataset):
            raise BackendFailure("refusing to train on an empty dataset")
        example_digests = sorted(
            sha256_hex(ex.to_json_line().encode("utf-8")) for ex in dataset
        )
        payload = json.dumps(
            {
                "format": "mock-adapter/1",
                "base_version": base_version,
                "dataset": example_digests,
                "profile": profile.to_dict(),
                "seed": seed,
            },
            sort_keys=True,
            separators=(",", ":"),
        ).encode("utf-8")
        duration = self.seconds_per_unit * len(dataset) * profile.epochs
        if duration > 0:
            self.clock.sleep(duration)
        return AdapterArtifact.from_payload(payload, base_version=base_version)
