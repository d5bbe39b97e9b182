"""Moderation gate: prevention screening and corrective-feedback pairs.

Prevention runs every candidate training set through a blocklist, an output
length bound, and an optional scored classifier before anything may train.
Feedback turns a user's complaint about an answer into supervised corrective
pairs; those pairs go back through the same screen like any other data.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .clock import Clock, SystemClock, to_rfc3339
from .datagen.clients import TeacherClient
from .datagen.prompts import REVISE_ANSWER
from .datagen.types import TrainingExample, TrainingSet
from .errors import NoValidExamples, UnknownMessage
from .sessions import FeedbackEvent, Session

REASON_BLOCKLIST = "blocklist"
REASON_LENGTH = "length"
REASON_CLASSIFIER = "classifier"

Classifier = Callable[[TrainingExample], float]


@dataclass
class ModerationVerdict:
    example_ref: int
    decision: str                       # kept | rejected
    reasons: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.decision not in ("kept", "rejected"):
            raise ValueError(f"unknown decision {self.decision!r}")
        if (self.decision == "rejected") != bool(self.reasons):
            raise ValueError("reasons must be non-empty exactly when rejected")


class ModerationPolicy:
    """Blocklist terms/regexes plus an output length bound.

    Plain blocklist entries match as case-insensitive substrings; entries
    prefixed `re:` are compiled as case-insensitive regexes. The optional
    classifier scores an example's toxicity in [0, 1]; scores at or above
    the threshold reject.
    """

    def __init__(
        self,
        blocklist: list[str] | None = None,
        max_output_chars: int = 4000,
        classifier: Classifier | None = None,
        classifier_threshold: float = 0.5,
    ):
        if max_output_chars < 1:
            raise ValueError("max_output_chars must be positive")
        self.blocklist_lines = [t.strip() for t in (blocklist or []) if t.strip()]
        self.max_output_chars = max_output_chars
        self.classifier = classifier
        self.classifier_threshold = classifier_threshold
        self._terms = []
        self._regexes = []
        for line in self.blocklist_lines:
            if line.startswith("re:"):
                self._regexes.append(re.compile(line[3:], re.IGNORECASE))
            else:
                self._terms.append(line.lower())

    @classmethod
    def from_file(
        cls,
        path: str | Path,
        max_output_chars: int = 4000,
        classifier: Classifier | None = None,
        classifier_threshold: float = 0.5,
    ) -> "ModerationPolicy":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls(lines, max_output_chars, classifier, classifier_threshold)

    def digest(self) -> str:
        """Content hash identifying the policy a receipt was issued under."""
        desc = json.dumps(
            {
                "blocklist": self.blocklist_lines,
                "max_output_chars": self.max_output_chars,
                "classifier": self.classifier is not None,
                "classifier_threshold": self.classifier_threshold,
            },
            sort_keys=True,
        )
        return hashlib.sha256(desc.encode("utf-8")).hexdigest()

    def _hits_blocklist(self, text: str) -> bool:
        lowered = text.lower()
        return any(term in lowered for term in self._terms) or any(
            rx.search(text) for rx in self._regexes
        )

    def evaluate(self, index: int, example: TrainingExample) -> ModerationVerdict:
        reasons = []
        if any(
            self._hits_blocklist(t)
            for t in (example.instruction, example.input, example.output)
        ):
            reasons.append(REASON_BLOCKLIST)
        if len(example.output) > self.max_output_chars:
            reasons.append(REASON_LENGTH)
        if (
            self.classifier is not None
            and self.classifier(example) >= self.classifier_threshold
        ):
            reasons.append(REASON_CLASSIFIER)
        decision = "rejected" if reasons else "kept"
        return ModerationVerdict(example_ref=index, decision=decision, reasons=reasons)


@dataclass
class ModerationReceipt:
    """Proof that a specific screened dataset passed the prevention gate.

    The trainer refuses any submission whose receipt digest does not match
    the dataset it is handed.
    """

    dataset_digest: str
    policy_digest: str
    kept: int
    rejected: int
    screened_at: str

    def to_dict(self) -> dict:
        return {
            "dataset_digest": self.dataset_digest,
            "policy_digest": self.policy_digest,
            "kept": self.kept,
            "rejected": self.rejected,
            "screened_at": self.screened_at,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "ModerationReceipt":
        return cls(**raw)


def screen_examples(
    examples: TrainingSet,
    policy: ModerationPolicy,
) -> tuple[TrainingSet, list[ModerationVerdict]]:
    """Partition a candidate set into kept examples and rejection verdicts."""
    kept = TrainingSet()
    rejected = []
    for index, example in enumerate(examples):
        verdict = policy.evaluate(index, example)
        if verdict.decision == "kept":
            kept.append(example)
        else:
            rejected.append(verdict)
    return kept, rejected


def screen_with_receipt(
    examples: TrainingSet,
    policy: ModerationPolicy,
    clock: Clock | None = None,
) -> tuple[TrainingSet, list[ModerationVerdict], ModerationReceipt]:
    """Screen and issue the receipt the trainer demands at submission."""
    clock = clock or SystemClock()
    kept, rejected = screen_examples(examples, policy)
    receipt = ModerationReceipt(
        dataset_digest=kept.digest(),
        policy_digest=policy.digest(),
        kept=len(kept),
        rejected=len(rejected),
        screened_at=to_rfc3339(clock.now()),
    )
    return kept, rejected, receipt


_SELF_REVISE_NOTE = "(no note provided; identify and fix the problem yourself)"


def feedback_to_correction(
    event: FeedbackEvent,
    session: Session,
    teacher: TeacherClient,
) -> TrainingSet:
    """Build corrective supervised pairs from a feedback event.

    The flagged assistant answer and the user's note condition a teacher
    revision; the preceding user message becomes the instruction. The caller
    must still screen the result before training.
    """
    target = next(
        (m for m in session.messages if m.id == event.target_message_id), None
    )
    if target is None or target.role != "assistant":
        raise UnknownMessage(event.target_message_id)
    idx = session.messages.index(target)
    question = next(
        (m for m in reversed(session.messages[:idx]) if m.role == "user"), None
    )
    if question is None:
        raise UnknownMessage(f"no user message precedes {event.target_message_id}")
    note = event.note.strip() or _SELF_REVISE_NOTE
    revised = teacher.complete(
        REVISE_ANSWER.format(question=question.text, answer=target.text, note=note)
    ).strip()
    if not revised:
        raise NoValidExamples("teacher produced no revised answer")
    return TrainingSet(
        [
            TrainingExample(
                instruction=question.text,
                input="",
                output=revised,
                source="feedback",
                meta={"origin": "feedback", "message_id": event.target_message_id},
            )
        ]
    )
