"""Shared builders for tests: scripted clients, service stacks, golden runs.

The golden end-to-end scenario lives here so the recorded transcript and the
test that replays it are generated by the same code path (make_goldens.py
writes the file, test_acceptance byte-compares a fresh run against it).
"""

from __future__ import annotations

from pathlib import Path

from livetune.api.service import ChatService
from livetune.clock import FakeClock, SequentialIds
from livetune.config import AppConfig
from livetune.datagen.clients import FixtureSearch, FixtureTeacher
from livetune.datagen.prompts import SUMMARIZE, WEB_QA
from livetune.datagen.types import TrainingExample, TrainingSet
from livetune.datagen.websearch import leading_sentences

DATA = Path(__file__).parent / "data"
GOLDEN_TRANSCRIPT = DATA / "golden_transcript.ndjson"


class ScriptedTeacher:
    """Substring-routed teacher for unit tests; records every prompt seen."""

    def __init__(self, rules: list[tuple[str, str]], default: str = ""):
        self.rules = rules
        self.default = default
        self.prompts: list[str] = []

    def complete(self, prompt: str, temperature: float = 0.0, max_tokens: int = 2048) -> str:
        self.prompts.append(prompt)
        for needle, completion in self.rules:
            if needle in prompt:
                return completion
        return self.default


def make_examples(n: int, source: str = "instruction") -> TrainingSet:
    return TrainingSet(
        TrainingExample(
            instruction=f"question number {i}",
            output=f"answer number {i}",
            source=source,
        )
        for i in range(n)
    )


# -- the golden web-directive scenario ----------------------------------------

GOLDEN_QUERY = "[Learn] search the web for the Voynota festival schedule"

_PAGE = (
    "<html><body><p>The Voynota festival runs every March in the town of "
    "Kessl. The opening parade starts at the clock tower. Entry is free on "
    "the first day.</p></body></html>"
)
_PAGE_TITLE = "Voynota festival guide"
_PAGE_URL = "https://example.test/voynota"
_SUMMARY = (
    "The Voynota festival is held each March in Kessl; the opening parade "
    "starts at the clock tower and the first day is free."
)
_QA_JSON = (
    '[{"instruction": "When is the Voynota festival held?", '
    '"output": "Every March, in the town of Kessl."}, '
    '{"instruction": "Where does the Voynota opening parade start?", '
    '"output": "At the clock tower."}]'
)


def golden_fixtures() -> tuple[FixtureTeacher, FixtureSearch]:
    """Fixture clients for the recorded web directive, prompt-exact."""
    text = "The Voynota festival runs every March in the town of Kessl. The opening parade starts at the clock tower. Entry is free on the first day."
    teacher = FixtureTeacher()
    teacher.add(SUMMARIZE.format(title=_PAGE_TITLE, text=text), _SUMMARY)
    teacher.add(WEB_QA.format(title=_PAGE_TITLE, summary=_SUMMARY), _QA_JSON)
    search = FixtureSearch()
    search.add(
        GOLDEN_QUERY.removeprefix("[Learn]").strip(),
        [(_PAGE_URL, _PAGE_TITLE, _PAGE)],
    )
    return teacher, search


def run_golden_scenario(data_dir: str) -> bytes:
    """Web directive then a post-swap chat turn; returns the session's NDJSON log."""
    teacher, search = golden_fixtures()
    svc = ChatService(
        AppConfig(data_dir=data_dir),
        clock=FakeClock(),
        ids=SequentialIds(),
        teacher=teacher,
        search=search,
    )
    session = svc.create_session()
    _, stream = svc.handle_message(session.id, GOLDEN_QUERY)
    terminal = list(stream)[-1]
    assert terminal.type == "model_swapped", terminal.to_json_line()
    _, stream = svc.handle_message(session.id, "when is the festival?")
    list(stream)
    events = svc.events_after(session.id, 0)
    return "".join(e.to_json_line() + "\n" for e in events).encode("utf-8")


def fallback_summary_matches() -> bool:
    """Sanity hook: fixture summary is teacher-authored, not the fallback."""
    return leading_sentences(_PAGE) != _SUMMARY
