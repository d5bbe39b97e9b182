"""Document-mode data generation by instruction backtranslation.

Each chunk becomes the *output* of a candidate pair; the teacher proposes the
instruction that would elicit it, then scores the pair 0-1. Pairs scoring
below the threshold (or with unparseable scores) are discarded. An empty
result is valid: it means no chunk survived curation.
"""

from __future__ import annotations

import re

from .clients import TeacherClient
from .prompts import BACKTRANSLATE_INSTRUCTION, QUALITY_SCORE
from .types import DocumentChunk, TrainingExample, TrainingSet

_FLOAT = re.compile(r"-?\d+(?:\.\d+)?")


def parse_score(completion: str) -> float | None:
    """First number in the completion, or None if absent or out of range."""
    match = _FLOAT.search(completion)
    if not match:
        return None
    value = float(match.group())
    if not 0.0 <= value <= 1.0:
        return None
    return value


def backtranslate(
    chunks: list[DocumentChunk],
    teacher: TeacherClient,
    score_threshold: float = 0.7,
) -> TrainingSet:
    """Turn document chunks into instruction/output pairs that pass curation."""
    if not chunks:
        raise ValueError("chunks must be non-empty")
    if not 0.0 <= score_threshold <= 1.0:
        raise ValueError("score_threshold must lie in [0, 1]")
    result = TrainingSet()
    for chunk in chunks:
        instruction = teacher.complete(
            BACKTRANSLATE_INSTRUCTION.format(chunk=chunk.text)
        ).strip()
        if not instruction:
            continue
        score = parse_score(
            teacher.complete(
                QUALITY_SCORE.format(instruction=instruction, answer=chunk.text)
            )
        )
        if score is None or score < score_threshold:
            continue
        result.append(
            TrainingExample(
                instruction=instruction,
                input="",
                output=chunk.text,
                source="document",
                meta={
                    "doc_id": chunk.doc_id,
                    "chunk_index": chunk.index,
                    "score": score,
                },
            )
        )
    return result
