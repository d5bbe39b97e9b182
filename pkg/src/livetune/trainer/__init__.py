"""Asynchronous fine-tuning: profiles, backends, artifacts, job orchestration."""

from .artifacts import AdapterArtifact, ArtifactStore, sha256_hex
from .backends import MockBackend, TrainingBackend
from .jobs import TrainerService, TrainingJob
from .profiles import DEFAULT_PROFILES, OT, PROFILE_NAMES, SFT, HyperProfile, get_profile
from .tiny import (
    TinyBackend,
    TinyGPT,
    apply_deltas,
    build_base,
    decode_delta,
    encode_delta,
    encode_pair,
    encode_prompt,
    greedy_decode,
    parse_base_ref,
)

__all__ = [
    "DEFAULT_PROFILES",
    "OT",
    "PROFILE_NAMES",
    "SFT",
    "AdapterArtifact",
    "ArtifactStore",
    "HyperProfile",
    "MockBackend",
    "TinyBackend",
    "TinyGPT",
    "TrainerService",
    "TrainingBackend",
    "TrainingJob",
    "apply_deltas",
    "build_base",
    "decode_delta",
    "encode_delta",
    "encode_pair",
    "encode_prompt",
    "get_profile",
    "greedy_decode",
    "parse_base_ref",
    "sha256_hex",
]
