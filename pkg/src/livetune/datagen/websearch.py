"""Web-mode data generation: search, extract passages, synthesize QA pairs.

Each search hit is reduced to a short summary (teacher-written when a teacher
is configured, leading sentences of the page text otherwise) and the teacher
then writes question/answer pairs grounded in that summary, returned as a
JSON array of {"instruction", "output"} objects.
"""

from __future__ import annotations

import json
import re

from ..clock import Clock, SystemClock, to_rfc3339
from ..errors import EmptyResults, NoValidExamples, TeacherUnavailable
from .clients import SearchClient, TeacherClient
from .documents import strip_html
from .prompts import SUMMARIZE, WEB_QA
from .types import ExtractedPassage, TrainingExample, TrainingSet

_SENTENCE_SPLIT = re.compile(r"(?<=[.!?])\s+")
_FALLBACK_CHAR_BUDGET = 500


def leading_sentences(text: str, budget: int = _FALLBACK_CHAR_BUDGET) -> str:
    """First sentences of the text up to the character budget, at least one."""
    text = re.sub(r"\s+", " ", text).strip()
    pieces = _SENTENCE_SPLIT.split(text)
    out: list[str] = []
    used = 0
    for piece in pieces:
        if out and used + len(piece) + 1 > budget:
            break
        out.append(piece)
        used += len(piece) + 1
    summary = " ".join(out)
    return summary[:budget] if len(summary) > budget and len(out) == 1 else summary


def _looks_like_markup(content: str) -> bool:
    head = content[:2000].lower()
    return "<html" in head or "<body" in head or "<div" in head or "<p>" in head


def search_and_extract(
    query: str,
    client: SearchClient,
    k: int = 5,
    teacher: TeacherClient | None = None,
    clock: Clock | None = None,
) -> list[ExtractedPassage]:
    """Run the search and reduce each usable hit to a summarized passage.

    Hits whose content has no extractable text are skipped; result order is
    preserved for the rest.
    """
    if not query.strip():
        raise ValueError("query must be non-empty")
    if k < 1:
        raise ValueError("k must be at least 1")
    clock = clock or SystemClock()
    results = client.search(query, k)
    if not results:
        raise EmptyResults(query)
    passages = []
    for url, title, content in results:
        text = strip_html(content)[0] if _looks_like_markup(content) else content
        text = text.strip()
        if not text:
            continue
        summary = ""
        if teacher is not None:
            try:
                summary = teacher.complete(
                    SUMMARIZE.format(title=title, text=text)
                ).strip()
            except TeacherUnavailable:
                summary = ""
        if not summary:
            summary = leading_sentences(text)
        if not summary:
            continue
        passages.append(
            ExtractedPassage(
                url=url,
                title=title,
                summary=summary,
                retrieved_at=to_rfc3339(clock.now()),
            )
        )
    return passages


def _parse_qa_array(completion: str) -> list[tuple[str, str, str]]:
    try:
        data = json.loads(completion)
    except json.JSONDecodeError:
        return []
    if not isinstance(data, list):
        return []
    pairs = []
    for item in data:
        if not isinstance(item, dict):
            continue
        instr = item.get("instruction")
        out = item.get("output")
        inp = item.get("input", "")
        if isinstance(instr, str) and isinstance(out, str) and instr.strip() and out.strip():
            pairs.append((instr.strip(), inp.strip() if isinstance(inp, str) else "", out.strip()))
    return pairs


def augment_from_web(
    passages: list[ExtractedPassage],
    teacher: TeacherClient,
) -> TrainingSet:
    """Synthesize grounded QA training examples from extracted passages."""
    if not passages:
        raise ValueError("passages must be non-empty")
    result = TrainingSet()
    for passage in passages:
        completion = teacher.complete(
            WEB_QA.format(title=passage.title, summary=passage.summary)
        )
        for instr, inp, out in _parse_qa_array(completion):
            result.append(
                TrainingExample(
                    instruction=instr,
                    input=inp,
                    output=out,
                    source="web",
                    meta={"origin": passage.url, "retrieved_at": passage.retrieved_at},
                )
            )
    if not len(result):
        raise NoValidExamples("no passage yielded well-formed QA pairs")
    return result
