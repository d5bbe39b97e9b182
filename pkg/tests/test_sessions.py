"""Turn parsing, intent cascade, session store persistence and resolution."""

import json
import threading

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from livetune.clock import FakeClock, SequentialIds, from_rfc3339
from livetune.errors import EmptyDirective, UnknownSession
from livetune.registry import Registry
from livetune.sessions import (
    ChatText,
    DirectiveCandidate,
    IntentClassifier,
    LearnDirective,
    Message,
    SessionStore,
    classify_intent,
    parse_turn,
)
from livetune.trainer.artifacts import ArtifactStore


# -- parse_turn example table ---------------------------------------------------

def test_directive_candidate_from_prefixed_turn():
    turn = "[Learn] I wish you could fetch more news on environmental pollution"
    parsed = parse_turn(turn)
    assert isinstance(parsed, DirectiveCandidate)
    assert parsed.raw_text == "I wish you could fetch more news on environmental pollution"


def test_plain_chat_passes_through():
    parsed = parse_turn("Hello, how are you?")
    assert parsed == ChatText("Hello, how are you?")


def test_bare_trigger_is_empty_directive():
    with pytest.raises(EmptyDirective):
        parse_turn("[Learn]   ")
    with pytest.raises(EmptyDirective):
        parse_turn("[Learn]")


def test_trigger_is_case_sensitive_and_anchored():
    assert isinstance(parse_turn("[learn] something"), ChatText)
    assert isinstance(parse_turn("please [Learn] something"), ChatText)
    assert isinstance(parse_turn("[LEARN] x"), ChatText)


def test_whitespace_only_turn_rejected():
    with pytest.raises(ValueError):
        parse_turn("   ")


# -- parse_turn properties --------------------------------------------------------

@given(st.text(min_size=1).filter(lambda s: s.strip() and not s.startswith("[Learn]")))
def test_roundtrip_non_trigger_text_is_chat(x):
    assert parse_turn(x) == ChatText(x)


@given(st.text(min_size=1).filter(lambda s: s.strip()))
def test_roundtrip_directive_body_is_trimmed(x):
    parsed = parse_turn("[Learn] " + x)
    assert isinstance(parsed, DirectiveCandidate)
    assert parsed.raw_text == x.strip()


@given(st.text(min_size=1).filter(lambda s: s.strip()))
def test_parse_turn_deterministic(x):
    assert parse_turn(x) == parse_turn(x)


# -- classify_intent example table -------------------------------------------------

def _doc(name="doc.pdf"):
    from livetune.sessions import DocumentRef
    return DocumentRef(name=name, format="pdf", content=b"%PDF-1.4 x")


def test_web_lexicon_classifies_web():
    text = "I wish you could fetch more news on environmental pollution"
    assert classify_intent(text, []) == "web"


def test_attachment_rule_is_absolute():
    # "summarize key facts" has no doc lexicon hit; attachment forces document
    assert classify_intent("summarize key facts", [_doc()]) == "document"
    # even with a web lexicon hit, attachments win
    assert classify_intent("search the latest news", [_doc()]) == "document"


def test_fallthrough_is_instruction():
    assert classify_intent("Remember that my project codename is Falcon", []) == "instruction"


def test_document_lexicon():
    assert classify_intent("study the uploaded report", []) == "document"
    assert classify_intent("learn this file by heart", []) == "document"


def test_teacher_hook_overrides_lexicon_but_not_attachments():
    clf = IntentClassifier(teacher_hook=lambda text: "web")
    assert clf.classify("remember my codename", []) == "web"
    assert clf.classify("remember my codename", [_doc()]) == "document"


def test_teacher_hook_garbage_falls_back_to_rules():
    clf = IntentClassifier(teacher_hook=lambda text: "banana")
    assert clf.classify("fetch the news", []) == "web"


@given(st.text(min_size=1).filter(lambda s: s.strip()))
def test_classify_deterministic_total(x):
    assert classify_intent(x, []) == classify_intent(x, [])
    assert classify_intent(x, []) in ("instruction", "document", "web")


# -- LearnDirective invariants ---------------------------------------------------

def test_document_directive_requires_source():
    with pytest.raises(ValueError):
        LearnDirective(raw_text="study this", mode="document", session_id="s1")
    # URL in the text satisfies the requirement
    LearnDirective(
        raw_text="study https://example.test/page", mode="document", session_id="s1"
    )
    LearnDirective(raw_text="study this", mode="document", session_id="s1",
                   attachments=[_doc()])


# -- session store ---------------------------------------------------------------

@pytest.fixture
def store(tmp_path):
    return SessionStore(tmp_path, clock=FakeClock(), ids=SequentialIds())


def test_append_grows_session_and_persists(store, tmp_path):
    s = store.create_session()
    store.append_message(s.id, "user", "hi")
    assert len(store.get(s.id).messages) == 1
    # persisted before return: a fresh store over the same dir sees it
    reread = SessionStore(tmp_path)
    assert [m.text for m in reread.get(s.id).messages] == ["hi"]


def test_assistant_message_keeps_version_tag(store):
    s = store.create_session()
    m = store.append_message(s.id, "assistant", "hello", model_version="v3")
    assert store.get_message(s.id, m.id).model_version == "v3"


def test_unknown_session_raises(store):
    with pytest.raises(UnknownSession):
        store.append_message("nope", "user", "hi")
    with pytest.raises(UnknownSession):
        store.get("nope")


def test_message_jsonl_field_names_and_order(store):
    s = store.create_session()
    m = store.append_message(s.id, "assistant", "hey", model_version="v1")
    row = json.loads(m.to_json_line())
    assert list(row) == ["id", "session_id", "role", "text", "model_version", "timestamp"]
    from_rfc3339(row["timestamp"])  # parses or raises


def test_message_roundtrip_through_jsonl(store):
    s = store.create_session()
    m = store.append_message(s.id, "user", "héllo ✓ lines\nkept")
    again = Message.from_json_line(m.to_json_line())
    assert again == m


def test_timestamps_non_decreasing(store):
    s = store.create_session()
    for i in range(5):
        store.append_message(s.id, "user", f"m{i}")
    stamps = [m.timestamp for m in store.get(s.id).messages]
    assert stamps == sorted(stamps)


def test_concurrent_appends_all_land(tmp_path):
    store = SessionStore(tmp_path)
    s = store.create_session()
    errors = []

    def work(i):
        try:
            for j in range(25):
                store.append_message(s.id, "user", f"w{i}-{j}")
        except Exception as exc:  # pragma: no cover - failure reporting
            errors.append(exc)

    threads = [threading.Thread(target=work, args=(i,)) for i in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors
    msgs = store.get(s.id).messages
    assert len(msgs) == 200
    assert len({m.id for m in msgs}) == 200


# -- resolve_model against a live registry ------------------------------------------

@pytest.fixture
def registry(tmp_path):
    artifacts = ArtifactStore(tmp_path / "artifacts")
    reg = Registry(tmp_path / "registry.json", artifacts, clock=FakeClock())
    reg.ensure_scope("global")
    return reg


def _activate_new_version(registry):
    from livetune.trainer.artifacts import AdapterArtifact
    artifact = AdapterArtifact.from_payload(b"delta-bytes", base_version="echo")
    registry.artifacts.save(artifact)
    v = registry.register(artifact, registry.active_version("global"), "job-x")
    registry.activate(v.id, "global")
    return v.id


def test_resolve_model_follows_active(tmp_path, registry):
    store = SessionStore(tmp_path, registry=registry)
    s1 = store.create_session()
    assert store.resolve_model(s1.id) == "v0"
    v1 = _activate_new_version(registry)
    s2 = store.create_session()
    assert store.resolve_model(s2.id) == v1
    assert store.resolve_model(s1.id) == v1  # unpinned follows latest


def test_pinned_session_ignores_activation(tmp_path, registry):
    store = SessionStore(tmp_path, registry=registry)
    s = store.create_session(pinned_version="v0")
    _activate_new_version(registry)
    assert store.resolve_model(s.id) == "v0"


def test_cross_session_persistency_of_stored_tags(tmp_path, registry):
    store = SessionStore(tmp_path, registry=registry)
    s1 = store.create_session()
    tagged = store.append_message(
        s1.id, "assistant", "old reply", model_version=store.resolve_model(s1.id)
    )
    v1 = _activate_new_version(registry)
    s2 = store.create_session()
    assert store.resolve_model(s2.id) == v1
    assert store.get_message(s1.id, tagged.id).model_version == "v0"
