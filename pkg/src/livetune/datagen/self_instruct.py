"""Instruction-mode data generation.

A directive like "[Learn] how to write good commit messages" is expanded by
the teacher into numbered blocks:

    1. Instruction: <text>
    Input: <optional text>
    Output: <text>

Blocks missing a label or with empty text are dropped rather than repaired;
quality control is the moderation gate's job, not the parser's.
"""

from __future__ import annotations

import re

from ..errors import NoValidExamples
from ..sessions import LearnDirective
from .clients import TeacherClient
from .prompts import SELF_INSTRUCT
from .types import TrainingExample, TrainingSet

# a block begins where a numbered "Instruction:" label begins
_BLOCK_START = re.compile(r"(?m)^\s*\d+\s*\.\s*Instruction\s*:")

_BLOCK_BODY = re.compile(
    r"Instruction\s*:\s*(?P<instr>.+?)\s*"
    r"(?:^\s*Input\s*:\s*(?P<inp>.*?)\s*)?"
    r"^\s*Output\s*:\s*(?P<out>.+?)\s*\Z",
    re.DOTALL | re.MULTILINE,
)

_EMPTY_INPUT = {"", "none", "<none>", "n/a", "<noinput>"}


def parse_numbered_blocks(completion: str) -> list[tuple[str, str, str]]:
    """Parse (instruction, input, output) triples, skipping malformed blocks."""
    starts = [m.start() for m in _BLOCK_START.finditer(completion)]
    triples = []
    for i, start in enumerate(starts):
        end = starts[i + 1] if i + 1 < len(starts) else len(completion)
        match = _BLOCK_BODY.search(completion[start:end])
        if not match:
            continue
        instr = match.group("instr").strip()
        out = match.group("out").strip()
        inp = (match.group("inp") or "").strip()
        if inp.lower() in _EMPTY_INPUT:
            inp = ""
        if instr and out:
            triples.append((instr, inp, out))
    return triples


def generate_self_instruct(
    directive: LearnDirective,
    teacher: TeacherClient,
    n_target: int = 100,
) -> TrainingSet:
    """Expand an instruction-mode directive into up to n_target examples."""
    if directive.mode != "instruction":
        raise ValueError(f"expected an instruction-mode directive, got {directive.mode!r}")
    if n_target < 1:
        raise ValueError("n_target must be at least 1")
    prompt = SELF_INSTRUCT.format(seed=directive.raw_text, n=n_target)
    completion = teacher.complete(prompt)
    triples = parse_numbered_blocks(completion)
    if not triples:
        raise NoValidExamples("teacher completion contained no well-formed blocks")
    return TrainingSet(
        TrainingExample(
            instruction=instr,
            input=inp,
            output=out,
            source="instruction",
            meta={"origin": "self_instruct"},
        )
        for instr, inp, out in triples[:n_target]
    )
