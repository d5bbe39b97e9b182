"""Chat service whose serving model is fine-tuned live, by its users, mid-chat.

Messages prefixed with the learn trigger become training-data pipelines
(self-generated instructions, document backtranslation, or web QA synthesis);
surviving examples pass a moderation gate, train an adapter asynchronously,
and hot-swap into the serving path without interrupting open sessions.
"""

from .clock import FakeClock, SequentialIds, SystemClock, UuidIds
from .config import AppConfig, load_config
from .errors import LivetuneError
from .datagen.types import TrainingExample, TrainingSet
from .learnflow import (
    build_candidates,
    register_and_activate,
    screen_and_submit,
    train_to_version,
)
from .moderation import ModerationPolicy, ModerationReceipt, screen_with_receipt
from .registry import Registry
from .sessions import LearnDirective, SessionStore, classify_intent, parse_turn
from .trainer import TrainerService, TrainingJob, get_profile

__version__ = "0.1.0"

__all__ = [
    "AppConfig",
    "FakeClock",
    "LearnDirective",
    "LivetuneError",
    "ModerationPolicy",
    "ModerationReceipt",
    "Registry",
    "SequentialIds",
    "SessionStore",
    "SystemClock",
    "TrainerService",
    "TrainingExample",
    "TrainingJob",
    "TrainingSet",
    "UuidIds",
    "__version__",
    "build_candidates",
    "classify_intent",
    "get_profile",
    "load_config",
    "parse_turn",
    "register_and_activate",
    "screen_and_submit",
    "screen_with_receipt",
    "train_to_version",
]
