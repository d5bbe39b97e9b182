"""Duplicate removal for candidate training sets.

Two passes folded into one scan, always keeping the first occurrence: exact
duplicates on normalized instruction+output, then near-duplicates whose
token-level Jaccard similarity on the instruction exceeds the threshold.
"""

from __future__ import annotations

import re

from .types import TrainingExample, TrainingSet

_TOKEN = re.compile(r"[a-z0-9]+")


def _normalize(text: str) -> str:
    return re.sub(r"\s+", " ", text.strip().lower())


def tokens(text: str) -> frozenset[str]:
    return frozenset(_TOKEN.findall(text.lower()))


def jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    if not a and not b:
        return 1.0
    union = len(a | b)
    return len(a & b) / union


def dedupe_and_diversify(
    examples: TrainingSet,
    similarity_threshold: float = 0.8,
) -> TrainingSet:
    """Drop exact and near-duplicate examples, preserving first occurrences."""
    if not 0.0 <= similarity_threshold <= 1.0:
        raise ValueError("similarity_threshold must lie in [0, 1]")
    seen_exact: set[tuple[str, str]] = set()
    kept_tokens: list[frozenset[str]] = []
    kept: list[TrainingExample] = []
    for example in examples:
        key = (_normalize(example.instruction), _normalize(example.output))
        if key in seen_exact:
            continue
        toks = tokens(example.instruction)
        if any(jaccard(toks, prior) > similarity_threshold for prior in kept_tokens):
            continue
        seen_exact.add(key)
        kept_tokens.append(toks)
        kept.append(example)
    return TrainingSet(kept)
