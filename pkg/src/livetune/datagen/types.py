"""Training-data domain types and the canonical JSONL wire format.

One JSON object per line, UTF-8, no trailing whitespace, keys in the fixed
order instruction/input/output/source/meta with meta keys sorted. Examples
must round-trip through this format byte-identically, so every serialization
in the codebase goes through `to_json_line` / `from_json_line`.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime
from typing import Iterable, Iterator

SOURCES = ("instruction", "document", "web", "feedback")


@dataclass
class TrainingExample:
    instruction: str
    output: str
    input: str = ""
    source: str = "instruction"
    meta: dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if not self.instruction:
            raise ValueError("instruction must be non-empty")
        if not self.output:
            raise ValueError("output must be non-empty")
        if self.source not in SOURCES:
            raise ValueError(f"unknown source {self.source!r}")

    def to_json_line(self) -> str:
        payload = {
            "instruction": self.instruction,
            "input": self.input,
            "output": self.output,
            "source": self.source,
            "meta": {k: self.meta[k] for k in sorted(self.meta)},
        }
        return json.dumps(payload, ensure_ascii=False, separators=(",", ":"))

    @classmethod
    def from_json_line(cls, line: str) -> "TrainingExample":
        raw = json.loads(line)
        return cls(
            instruction=raw["instruction"],
            input=raw.get("input", ""),
            output=raw["output"],
            source=raw.get("source", "instruction"),
            meta=raw.get("meta", {}),
        )


class TrainingSet:
    """Ordered collection of examples, serializable to canonical JSONL."""

    def __init__(self, examples: Iterable[TrainingExample] = ()):
        self.examples: list[TrainingExample] = list(examples)

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self) -> Iterator[TrainingExample]:
        return iter(self.examples)

    def __getitem__(self, idx: int) -> TrainingExample:
        return self.examples[idx]

    def append(self, example: TrainingExample) -> None:
        self.examples.append(example)

    def extend(self, examples: Iterable[TrainingExample]) -> None:
        self.examples.extend(examples)

    def to_jsonl(self) -> str:
        return "".join(ex.to_json_line() + "\n" for ex in self.examples)

    @classmethod
    def from_jsonl(cls, text: str) -> "TrainingSet":
        return cls(
            TrainingExample.from_json_line(line)
            for line in text.splitlines()
            if line.strip()
        )

    def digest(self) -> str:
        """Content hash of the canonical JSONL serialization."""
        return hashlib.sha256(self.to_jsonl().encode("utf-8")).hexdigest()

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_jsonl())

    @classmethod
    def load(cls, path) -> "TrainingSet":
        with open(path, encoding="utf-8") as fh:
            return cls.from_jsonl(fh.read())


@dataclass
class DocumentChunk:
    doc_id: str
    index: int
    text: str
    char_span: tuple[int, int]


@dataclass
class ExtractedPassage:
    url: str
    title: str
    summary: str
    retrieved_at: datetime

    def __post_init__(self):
        if not self.summary:
            raise ValueError("summary must be non-empty")
        if "://" not in self.url:
            raise ValueError(f"malformed url {self.url!r}")
