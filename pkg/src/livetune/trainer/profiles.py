"""Hyperparameter profiles for the two training styles.

OT is the fast online-tuning recipe, SFT the slower full pass. Defaults come
from the service configuration and can be overridden per deployment.
"""

from __future__ import annotations

from dataclasses import dataclass

PROFILE_NAMES = ("OT", "SFT")


@dataclass(frozen=True)
class HyperProfile:
    name: str
    learning_rate: float
    epochs: int
    batch_size: int = 4

    def __post_init__(self):
        if self.name not in PROFILE_NAMES:
            raise ValueError(f"unknown profile {self.name!r}")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be at least 1")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "learning_rate": self.learning_rate,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "HyperProfile":
        return cls(**raw)


OT = HyperProfile(name="OT", learning_rate=2e-5, epochs=10)
SFT = HyperProfile(name="SFT", learning_rate=2e-6, epochs=2)

DEFAULT_PROFILES = {"OT": OT, "SFT": SFT}


def get_profile(name: str, overrides: dict | None = None) -> HyperProfile:
    """Profile by name, with optional per-deployment overrides applied."""
    if name not in DEFAULT_PROFILES:
        raise ValueError(f"unknown profile {name!r}")
    base = DEFAULT_PROFILES[name]
    if not overrides:
        return base
    return HyperProfile(
        name=name,
        learning_rate=overrides.get("learning_rate", base.learning_rate),
        epochs=overrides.get("epochs", base.epochs),
        batch_size=overrides.get("batch_size", base.batch_size),
    )
