"""Version registry: registration, atomic activation, rollback, composition."""

import threading

import pytest

from livetune.clock import FakeClock
from livetune.datagen.types import TrainingExample, TrainingSet
from livetune.errors import (
    IncompatibleBase,
    NothingToRollback,
    UnknownArtifact,
    UnknownScope,
    UnknownVersion,
)
from livetune.registry import EchoModel, Registry, compose
from livetune.trainer.artifacts import AdapterArtifact, ArtifactStore
from livetune.trainer.profiles import get_profile
from livetune.trainer.tiny import TinyBackend, build_base, greedy_decode


@pytest.fixture
def reg(tmp_path):
    artifacts = ArtifactStore(tmp_path / "artifacts")
    registry = Registry(tmp_path / "registry.json", artifacts, clock=FakeClock())
    registry.ensure_scope("global")
    return registry


def _artifact(reg, payload=b"delta-1", base="echo"):
    a = AdapterArtifact.from_payload(payload, base_version=base)
    reg.artifacts.save(a)
    return a


def test_scope_starts_at_v0_active(reg):
    assert reg.active("global") == "v0"
    v0 = reg.version("v0", "global")
    assert v0.adapters == [] and v0.lineage == []


def test_register_extends_adapters_in_order(reg):
    a1 = _artifact(reg, b"one")
    a2 = _artifact(reg, b"two")
    v1 = reg.register(a1, reg.version("v0", "global"), "job-1")
    assert v1.id == "v1" and v1.adapters == [a1.digest] and v1.lineage == ["job-1"]
    assert reg.active("global") == "v0"            # not active yet
    reg.activate(v1.id, "global")
    v2 = reg.register(a2, v1, "job-2")
    assert v2.adapters == [a1.digest, a2.digest]
    assert v2.lineage == ["job-1", "job-2"]


def test_incompatible_base_rejected(reg):
    alien = AdapterArtifact.from_payload(b"x", base_version="tiny:0")
    reg.artifacts.save(alien)
    with pytest.raises(IncompatibleBase):
        reg.register(alien, reg.version("v0", "global"), "job-x")


def test_activate_returns_previous_and_is_idempotent(reg):
    v1 = reg.register(_artifact(reg), reg.version("v0", "global"), "job-1")
    assert reg.activate(v1.id, "global") == "v0"
    assert reg.active("global") == "v1"
    assert reg.activate(v1.id, "global") == "v1"   # idempotent re-activation
    with pytest.raises(UnknownVersion):
        reg.activate("v9", "global")


def test_rollback_stack_semantics(reg):
    v1 = reg.register(_artifact(reg, b"1"), reg.version("v0", "global"), "j1")
    reg.activate(v1.id, "global")
    v2 = reg.register(_artifact(reg, b"2"), v1, "j2")
    reg.activate(v2.id, "global")
    assert reg.rollback("global") == "v1"
    assert reg.active("global") == "v1"
    assert reg.rollback("global") == "v0"
    with pytest.raises(NothingToRollback):
        reg.rollback("global")


def test_unknown_scope(reg):
    with pytest.raises(UnknownScope):
        reg.active("nobody")
    with pytest.raises(UnknownScope):
        reg.versions("nobody")


def test_version_ids_strictly_increase(reg):
    parent = reg.version("v0", "global")
    ids = []
    for i in range(5):
        v = reg.register(_artifact(reg, f"p{i}".encode()), parent, f"j{i}")
        ids.append(int(v.id[1:]))
    assert ids == sorted(ids) and len(set(ids)) == 5


def test_durable_across_reopen(tmp_path):
    artifacts = ArtifactStore(tmp_path / "artifacts")
    reg = Registry(tmp_path / "registry.json", artifacts, clock=FakeClock())
    reg.ensure_scope("global")
    a = AdapterArtifact.from_payload(b"persist", base_version="echo")
    artifacts.save(a)
    v1 = reg.register(a, reg.version("v0", "global"), "job-1")
    reg.activate(v1.id, "global")

    again = Registry(tmp_path / "registry.json", ArtifactStore(tmp_path / "artifacts"))
    assert again.active("global") == "v1"
    assert again.version("v1", "global").adapters == [a.digest]
    assert again.handle("global").generate("hi") == "echo/1: hi"


def test_per_scope_isolation(reg):
    reg.ensure_scope("user-a")
    v1 = reg.register(_artifact(reg), reg.version("v0", "global"), "j1")
    reg.activate(v1.id, "global")
    assert reg.active("user-a") == "v0"
    assert reg.active("global") == "v1"


# -- compose -----------------------------------------------------------------------

def test_compose_empty_is_identity_echo(reg):
    handle = compose("echo", [], reg.artifacts, version_id="v0")
    assert isinstance(handle, EchoModel)
    assert handle.generate("ping") == "echo/0: ping"


def test_compose_unknown_artifact(reg):
    with pytest.raises(UnknownArtifact):
        compose("echo", ["9" * 64], reg.artifacts, version_id="vx")


def test_compose_incompatible_base(reg):
    alien = AdapterArtifact.from_payload(b"z", base_version="tiny:0")
    reg.artifacts.save(alien)
    with pytest.raises(IncompatibleBase):
        compose("echo", [alien.digest], reg.artifacts, version_id="vx")


def test_compose_empty_tiny_matches_base_decodes():
    import tempfile
    with tempfile.TemporaryDirectory() as td:
        store = ArtifactStore(td)
        handle = compose("tiny:0", [], store, version_id="v0")
        base = build_base("tiny:0")
        for prompt in ("hello", "what is this?"):
            assert handle.generate(prompt) == greedy_decode(base, prompt)


def test_compose_trained_delta_changes_decodes(tmp_path):
    backend = TinyBackend(lr_scale=100.0, min_steps=60, curve_every=20)
    ds = TrainingSet([TrainingExample(instruction="magic word?", output="xyzzy")])
    artifact = backend.train("tiny:0", ds, get_profile("OT"), 0)
    store = ArtifactStore(tmp_path)
    store.save(artifact)
    tuned = compose("tiny:0", [artifact.digest], store, version_id="v1")
    plain = compose("tiny:0", [], store, version_id="v0")
    assert tuned.generate("magic word?") != plain.generate("magic word?")


# -- concurrent swap smoke (the big stress run lives in the acceptance suite) -----------

def test_activation_visible_to_concurrent_readers(reg):
    versions = [reg.version("v0", "global")]
    for i in range(4):
        v = reg.register(_artifact(reg, f"s{i}".encode()), versions[-1], f"j{i}")
        versions.append(v)
    seen = []
    stop = threading.Event()

    def reader():
        while not stop.is_set():
            seen.append(reg.active("global"))

    t = threading.Thread(target=reader)
    t.start()
    for v in versions[1:]:
        reg.activate(v.id, "global")
    stop.set()
    t.join()
    registered = {v.id for v in versions}
    assert set(seen) <= registered
    # distinct ids appear in activation order
    distinct = [x for i, x in enumerate(seen) if i == 0 or seen[i - 1] != x]
    expected_order = [v.id for v in versions]
    assert distinct == sorted(distinct, key=expected_order.index)
