"""Acceptance gate: eight production criteria, one verdict line each.

Every test wraps its checks in `criterion(...)`, which prints a single
[PASS]/[FAIL] line outside pytest's capture and enforces the criterion's
runtime budget. Run the whole gate with:

    pytest tests/test_acceptance.py -v
"""

import json
import random
import statistics
import threading
import time
from contextlib import contextmanager

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import (
    DATA,
    GOLDEN_TRANSCRIPT,
    ScriptedTeacher,
    golden_fixtures,
    make_examples,
    run_golden_scenario,
)

from livetune.api.service import ChatService
from livetune.clock import FakeClock, SequentialIds, SystemClock, from_rfc3339
from livetune.config import AppConfig, DatagenConfig, TrainerConfig
from livetune.datagen.clients import FixtureTeacher
from livetune.datagen.documents import chunk_text, ingest_document
from livetune.datagen.prompts import BACKTRANSLATE_INSTRUCTION, QUALITY_SCORE, SELF_INSTRUCT
from livetune.datagen.types import TrainingExample, TrainingSet
from livetune.errors import EmptyDirective, MalformedCompletion, MissingModerationReceipt
from livetune.evalharness.runner import (
    EvalReport,
    ScriptedModel,
    load_dataset,
    run_experiment,
    emit_report,
)
from livetune.evalharness.toolcalls import (
    canonical_json,
    format_tool_call,
    parse_tool_completion,
    score,
)
from livetune.learnflow import build_candidates
from livetune.moderation import ModerationPolicy, screen_examples, screen_with_receipt
from livetune.registry import Registry
from livetune.sessions import (
    ChatText,
    DocumentRef,
    LearnDirective,
    SessionStore,
    classify_intent,
    parse_turn,
)
from livetune.trainer import TrainerService, get_profile
from livetune.trainer.artifacts import AdapterArtifact, ArtifactStore
from livetune.trainer.backends import MockBackend
from livetune.trainer.tiny import TinyBackend


@contextmanager
def criterion(capfd, name, budget):
    """Run one criterion; always print a verdict line; fail on budget overrun."""
    t0 = time.monotonic()
    ok = False
    try:
        yield
        ok = True
    finally:
        elapsed = time.monotonic() - t0
        ok = ok and elapsed <= budget
        with capfd.disabled():
            print(
                f"[{'PASS' if ok else 'FAIL'}] {name} "
                f"({elapsed:.1f}s, budget {budget:.0f}s)",
                flush=True,
            )
    assert elapsed <= budget, f"{name} overran its {budget:.0f}s budget"


def _trainer_at(root, backends, base_ref, clock=None):
    return TrainerService(
        jobs_dir=f"{root}/jobs",
        datasets_dir=f"{root}/datasets",
        artifact_store=ArtifactStore(f"{root}/artifacts"),
        backends=backends,
        resolve_base=lambda version_id, scope: base_ref,
        clock=clock,
    )


def _job_seconds(job):
    return (
        from_rfc3339(job.ended_at) - from_rfc3339(job.started_at)
    ).total_seconds()


def _submit_sized(trainer, n, profile_name, backend):
    kept, _, receipt = screen_with_receipt(make_examples(n), ModerationPolicy())
    return trainer.submit_job(
        kept, get_profile(profile_name), "v0", receipt, backend=backend
    )


# -- 1. trigger and intent ----------------------------------------------------------

def test_trigger_and_intent_suite(capfd):
    with criterion(capfd, "trigger/intent tables and properties", budget=5.0):
        parsed = parse_turn(
            "[Learn] I wish you could fetch more news on environmental pollution"
        )
        assert parsed.raw_text == (
            "I wish you could fetch more news on environmental pollution"
        )
        assert parse_turn("Hello, how are you?") == ChatText("Hello, how are you?")
        with pytest.raises(EmptyDirective):
            parse_turn("[Learn]   ")

        pdf = DocumentRef(name="doc.pdf", format="pdf", content=b"%PDF-1.4")
        table = [
            ("I wish you could fetch more news on environmental pollution", [], "web"),
            ("summarize key facts", [pdf], "document"),
            ("Remember that my project codename is Falcon", [], "instruction"),
        ]
        for text, attachments, want in table:
            assert classify_intent(text, attachments) == want, text

        chat_text = st.text(min_size=1, max_size=80).filter(
            lambda s: s.strip() and not s.lstrip().startswith("[Learn]")
        )

        @settings(max_examples=200, deadline=None)
        @given(chat_text)
        def chat_round_trip(x):
            assert parse_turn(x) == ChatText(x)

        @settings(max_examples=200, deadline=None)
        @given(st.text(min_size=1, max_size=80).filter(lambda s: s.strip()))
        def directive_round_trip(x):
            assert parse_turn("[Learn] " + x).raw_text == x.strip()

        @settings(max_examples=200, deadline=None)
        @given(st.text(min_size=1, max_size=80).filter(lambda s: s.strip()))
        def intent_deterministic(x):
            assert classify_intent(x, []) == classify_intent(x, [])
            assert classify_intent(x, []) in ("instruction", "document", "web")

        chat_round_trip()
        directive_round_trip()
        intent_deterministic()


# -- 2. pipeline determinism -----------------------------------------------------------

_DOC_TEXT = (
    "Tide pools form where rocky shores trap seawater at low tide. "
    "The organisms that live in them tolerate wide swings in temperature "
    "and salinity over a single day. "
) * 14  # two chunks at the default geometry


def _instruction_fixture(cfg):
    teacher = FixtureTeacher()
    teacher.add(
        SELF_INSTRUCT.format(seed="teach me the basics of tide pools", n=cfg.n_target),
        "1. Instruction: What is a tide pool?\n"
        "Output: A rocky basin that traps seawater at low tide.\n"
        "2. Instruction: Why are tide pool animals hardy?\n"
        "Output: They endure daily swings in temperature and salinity.\n",
    )
    directive = LearnDirective(
        raw_text="teach me the basics of tide pools", mode="instruction", session_id="s"
    )
    return directive, teacher, None


def _document_fixture(cfg):
    ref = DocumentRef(name="pools.txt", format="txt", content=_DOC_TEXT.encode())
    chunks = ingest_document(
        ref.content, ref.format, chunk_size=cfg.chunk_size, overlap=cfg.chunk_overlap
    )
    assert len(chunks) >= 2
    teacher = FixtureTeacher()
    for i, chunk in enumerate(chunks):
        question = f"What does part {i + 1} of the tide pool text explain?"
        teacher.add(BACKTRANSLATE_INSTRUCTION.format(chunk=chunk.text), question)
        teacher.add(
            QUALITY_SCORE.format(instruction=question, answer=chunk.text), "0.9"
        )
    directive = LearnDirective(
        raw_text="study this file", mode="document", session_id="s", attachments=[ref]
    )
    return directive, teacher, None


def _web_fixture(cfg):
    teacher, search = golden_fixtures()
    directive = LearnDirective(
        raw_text="search the web for the Voynota festival schedule",
        mode="web",
        session_id="s",
    )
    return directive, teacher, search


def test_pipeline_determinism(capfd):
    with criterion(capfd, "three pipelines byte-identical; chunking holds", budget=30.0):
        cfg = DatagenConfig()
        for build in (_instruction_fixture, _document_fixture, _web_fixture):
            runs = []
            for _ in range(2):
                directive, teacher, search = build(cfg)
                out = build_candidates(
                    directive, teacher, search=search, cfg=cfg, clock=FakeClock()
                )
                runs.append(out.to_jsonl().encode("utf-8"))
            assert runs[0], f"{directive.mode} pipeline produced nothing"
            assert runs[0] == runs[1], f"{directive.mode} pipeline not deterministic"

        rng = random.Random(0xD0C5)
        alphabet = "abcdefghij \n"
        for case in range(50):
            doc = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 4000)))
            size = rng.randint(2, 900)
            overlap = rng.randint(0, size - 1)
            chunks = chunk_text(doc, f"d{case}", chunk_size=size, overlap=overlap)
            assert chunks[0].char_span[0] == 0
            assert chunks[-1].char_span[1] == len(doc)
            rebuilt = chunks[0].text
            for prev, cur in zip(chunks, chunks[1:]):
                start, end = cur.char_span
                assert start == prev.char_span[0] + (size - overlap)
                assert start <= prev.char_span[1]  # no gap in coverage
                assert doc[start:end] == cur.text
                rebuilt += cur.text[prev.char_span[1] - start:]
            assert rebuilt == doc


# -- 3. moderation gate ----------------------------------------------------------------

def test_moderation_gate(capfd, tmp_path):
    with criterion(capfd, "moderation partition/monotonicity; receipt gate", budget=30.0):
        rng = random.Random(20260816)
        bad = ["gore", "ricin", "doxx", "napalm", "bioweapon"]
        safe = ("tide pool crab kelp otter reef wave stone cloud harbor "
                "lantern market bridge").split()
        cases = 0
        for _ in range(1100):
            terms = rng.sample(bad, rng.randint(1, 3))
            if rng.random() < 0.3:
                terms.append(r"re:ssn\s*:\s*\d{3}-\d{2}-\d{4}")
            policy = ModerationPolicy(blocklist=terms, max_output_chars=200)

            examples = TrainingSet()
            for i in range(rng.randint(1, 10)):
                words = [rng.choice(safe) for _ in range(rng.randint(3, 10))]
                if rng.random() < 0.4:
                    words.insert(rng.randrange(len(words)), rng.choice(bad))
                if rng.random() < 0.1:
                    words.append("ssn: 123-45-6789")
                examples.append(
                    TrainingExample(
                        instruction=" ".join(words[:3]),
                        output=" ".join(words[3:]) or "ok",
                        source="instruction",
                    )
                )

            kept, rejected = screen_examples(examples, policy)
            assert len(kept) + len(rejected) == len(examples)
            refs = [v.example_ref for v in rejected]
            assert len(set(refs)) == len(refs)
            assert all(v.reasons for v in rejected)
            survivors = [
                ex for i, ex in enumerate(examples) if i not in set(refs)
            ]
            assert [ex.to_json_line() for ex in kept] == [
                ex.to_json_line() for ex in survivors
            ]
            rescreened, again = screen_examples(kept, policy)
            assert len(rescreened) == len(kept) and not again

            wider = ModerationPolicy(
                blocklist=terms + [rng.choice(safe)], max_output_chars=200
            )
            kept2, _ = screen_examples(examples, wider)
            lines = [ex.to_json_line() for ex in kept]
            lines2 = [ex.to_json_line() for ex in kept2]
            it = iter(lines)
            assert all(line in it for line in lines2)  # kept2 is a subsequence
            cases += 2
        assert cases >= 1000

        trainer = _trainer_at(tmp_path, {"mock": MockBackend(1e-6)}, "echo")
        dataset = make_examples(6)
        kept, _, receipt = screen_with_receipt(dataset, ModerationPolicy())
        with pytest.raises(MissingModerationReceipt):
            trainer.submit_job(kept, get_profile("OT"), "v0", None)
        tampered = TrainingSet(list(kept) + list(make_examples(1, source="feedback")))
        with pytest.raises(MissingModerationReceipt):
            trainer.submit_job(tampered, get_profile("OT"), "v0", receipt)
        job_id = trainer.submit_job(kept, get_profile("OT"), "v0", receipt)
        assert trainer.wait(job_id, timeout=30.0).state == "succeeded"


# -- 4. knowledge injection --------------------------------------------------------------

def test_knowledge_injection(capfd, tmp_path):
    with criterion(capfd, "20-fact injection: loss falls, recall >= 80%", budget=600.0):
        facts = [
            json.loads(line)
            for line in (DATA / "facts_20.jsonl").read_text(encoding="utf-8").splitlines()
        ]
        assert len(facts) == 20
        blocks = "\n".join(
            f"{i + 1}. Instruction: {f['instruction']}\nOutput: {f['output']}"
            for i, f in enumerate(facts)
        )
        svc = ChatService(
            AppConfig(
                data_dir=str(tmp_path / "data"),
                base_model="tiny:0",
                trainer=TrainerConfig(backend="tiny"),
            ),
            clock=FakeClock(),
            ids=SequentialIds(),
            teacher=ScriptedTeacher([("", blocks)]),
        )
        session = svc.create_session()
        _, stream = svc.handle_message(session.id, "[Learn] memorize these facts")
        events = list(stream)
        assert [e.type for e in events] == [
            "job_queued", "job_running", "job_succeeded", "model_swapped",
        ]
        new_version = events[-1].payload["version"]

        job = svc.get_job(events[0].payload["job_id"])
        assert job.profile.learning_rate == pytest.approx(2e-5)
        assert job.seed == 0
        curve = svc.trainer.artifacts.load(job.artifact_digest).train_loss_curve
        assert curve[-1][1] < curve[0][1], "training loss did not decrease"

        fresh = svc.create_session()
        assert svc.store.resolve_model(fresh.id) == new_version
        hits = 0
        for fact in facts:
            _, stream = svc.handle_message(fresh.id, fact["instruction"])
            done = list(stream)[-1]
            assert done.payload["model_version"] == new_version
            hits += done.payload["text"] == fact["output"]
        assert hits >= 16, f"verbatim recall {hits}/20 under greedy decoding"


# -- 5. efficient update ordering ----------------------------------------------------------

def test_efficient_update_ordering(capfd, tmp_path):
    with criterion(capfd, "OT(100) beats SFT(6000); chat stays under 2x idle",
                   budget=900.0):
        # simulated timing: the backend sleeps per unit on a virtual clock
        clock = FakeClock(step_seconds=0.0)
        trainer = _trainer_at(
            tmp_path / "mock", {"mock": MockBackend(1e-4, clock=clock)}, "echo",
            clock=clock,
        )
        ot = _submit_sized(trainer, 100, "OT", "mock")
        sft = _submit_sized(trainer, 6000, "SFT", "mock")
        deadline = time.monotonic() + 60
        while time.monotonic() < deadline:
            if trainer.poll_job(ot).terminal and trainer.poll_job(sft).terminal:
                break
            time.sleep(0.01)
        j_ot, j_sft = trainer.poll_job(ot), trainer.poll_job(sft)
        assert (j_ot.state, j_sft.state) == ("succeeded", "succeeded")
        assert _job_seconds(j_ot) < _job_seconds(j_sft)

        # non-blocking invariant, measured against a real clock while the
        # worker is mid-job
        svc = ChatService(
            AppConfig(
                data_dir=str(tmp_path / "nb"),
                trainer=TrainerConfig(backend="mock", mock_seconds_per_unit=3.5e-4),
            ),
            ids=SequentialIds(),
            teacher=ScriptedTeacher([]),
        )
        chat_session = svc.create_session()
        prompt = ("could you summarize what we decided about the harbor "
                  "project during yesterday's long planning meeting?")

        def turn_seconds():
            t0 = time.perf_counter()
            _, stream = svc.handle_message(chat_session.id, prompt)
            assert list(stream)[-1].type == "message_complete"
            return time.perf_counter() - t0

        for _ in range(30):
            turn_seconds()
        idle = statistics.median(turn_seconds() for _ in range(100))

        kept, _, receipt = screen_with_receipt(make_examples(6000), ModerationPolicy())
        job_id = svc.trainer.submit_job(
            kept, svc.profile("SFT"), "v0", receipt, backend="mock"
        )
        while svc.get_job(job_id).state != "running":
            time.sleep(0.001)
        during = []
        while svc.get_job(job_id).state == "running" and len(during) < 100:
            during.append(turn_seconds())
        assert len(during) >= 60, "job window closed before enough samples"
        assert statistics.median(during) <= 2 * idle, (
            f"chat latency {statistics.median(during) * 1e3:.2f}ms during training "
            f"vs {idle * 1e3:.2f}ms idle"
        )

        # same ordering on the real gradient-descent backend
        tiny = _trainer_at(tmp_path / "tiny", {"tiny": TinyBackend()}, "tiny:0")
        ot = _submit_sized(tiny, 100, "OT", "tiny")
        sft = _submit_sized(tiny, 6000, "SFT", "tiny")
        deadline = time.monotonic() + 840
        while time.monotonic() < deadline:
            if tiny.poll_job(ot).terminal and tiny.poll_job(sft).terminal:
                break
            time.sleep(0.2)
        j_ot, j_sft = tiny.poll_job(ot), tiny.poll_job(sft)
        assert (j_ot.state, j_sft.state) == ("succeeded", "succeeded")
        assert _job_seconds(j_ot) < _job_seconds(j_sft)


# -- 6. hot-swap atomicity ---------------------------------------------------------------

def test_hot_swap_atomicity(capfd, tmp_path):
    with criterion(capfd, ">=10k concurrent resolves honor activation order",
                   budget=60.0):
        store = ArtifactStore(tmp_path / "artifacts")
        registry = Registry(tmp_path / "registry.json", artifacts=store)
        scopes = ("global", "tenant-b")
        n_versions = 30
        for scope in scopes:
            parent = registry.ensure_scope(scope)
            for k in range(1, n_versions + 1):
                artifact = AdapterArtifact.from_payload(
                    f"delta-{scope}-{k}".encode(), base_version="echo"
                )
                store.save(artifact)
                parent = registry.register(artifact, parent, f"job-{scope}-{k}")
        registered = {
            scope: {v.id for v in registry.versions(scope)} for scope in scopes
        }
        order = {f"v{k}": k for k in range(n_versions + 1)}

        stores = {
            scope: SessionStore(
                tmp_path / f"sessions-{scope}", registry=registry, scope=scope
            )
            for scope in scopes
        }
        reads_per_thread = 1500
        lanes = [(scope, []) for scope in scopes for _ in range(4)]

        def reader(scope, trace):
            sid = stores[scope].create_session().id
            for _ in range(reads_per_thread):
                trace.append(stores[scope].resolve_model(sid))

        threads = [
            threading.Thread(target=reader, args=lane) for lane in lanes
        ]
        for t in threads:
            t.start()
        # pace activations across the readers' lifetime so the two op kinds
        # genuinely interleave; never outwait readers that already finished
        activations = 0
        total_target = len(lanes) * reads_per_thread
        for k in range(1, n_versions + 1):
            for scope in scopes:
                registry.activate(f"v{k}", scope)
                activations += 1
            floor = activations * total_target // (2 * n_versions + 1)
            while (
                sum(len(trace) for _, trace in lanes) < floor
                and any(t.is_alive() for t in threads)
            ):
                time.sleep(0.0005)
        for t in threads:
            t.join(timeout=60)
            assert not t.is_alive()

        reads = sum(len(trace) for _, trace in lanes)
        assert reads + activations >= 10_000, f"only {reads + activations} operations"
        torn = sum(
            1
            for scope, trace in lanes
            for vid in trace
            if vid not in registered[scope]
        )
        assert torn == 0, f"{torn} resolves returned unregistered versions"
        for scope, trace in lanes:
            indices = [order[vid] for vid in trace]
            assert indices == sorted(indices), f"{scope} reader saw a rollback"


# -- 7. eval harness oracle equivalence -------------------------------------------------

def test_eval_harness_oracle(capfd):
    with criterion(capfd, "scripted 15/20 reports exactly 0.75; suites 100%",
                   budget=10.0):
        dataset = load_dataset(DATA / "tooldataset_20.jsonl")
        assert len(dataset) == 20

        answers = {}
        for i, example in enumerate(dataset):
            if i < 15:
                answers[example.question] = format_tool_call(example.gold)
            elif i < 18:
                wrong = format_tool_call(example.gold).replace(
                    f"Action: {example.gold.action}", "Action: wrong.tool"
                )
                answers[example.question] = wrong
            elif i < 19:
                answers[example.question] = (
                    f"Thought: hmm\nAction: {example.gold.action}\n"
                    'Action Input: {"bogus": 1}'
                )
            else:
                answers[example.question] = "I cannot decide on a tool."
        model = ScriptedModel(answers)

        report = run_experiment("prompt", dataset, model, seed=0)
        correct = 0  # independent recount straight from the answer key
        for example in dataset:
            try:
                call = parse_tool_completion(answers[example.question])
            except MalformedCompletion:
                continue
            flags = score(call, example.gold)
            correct += flags["action_correct"] and flags["input_correct"]
        assert correct == 15
        assert report.accuracy == correct / 20 == 0.75

        for example in dataset:
            call = parse_tool_completion(format_tool_call(example.gold))
            assert call.action == example.gold.action
            assert score(call, example.gold) == {
                "action_correct": True, "input_correct": True,
            }

        assert canonical_json({"b": 2, "a": 1}) == canonical_json({"a": 1, "b": 2})
        assert canonical_json({"n": 2}) == canonical_json({"n": 2.0})
        assert canonical_json([1, {"x": [True, 2.5]}]) == canonical_json(
            [1, {"x": [True, 2.5]}]
        )
        assert canonical_json({"n": 2}) != canonical_json({"n": "2"})
        assert canonical_json(True) != canonical_json(1)
        assert canonical_json({"n": 2.5}) != canonical_json({"n": 2})

        reports = [
            EvalReport(
                method="prompt", n=20, accuracy=acc, train_seconds=0.0,
                infer_seconds=0.1, seed=seed, per_example=[], train_size=0,
            )
            for seed, acc in ((0, 0.25), (1, 0.5), (2, 0.75))
        ]
        plot = json.loads(emit_report(reports, fmt="plot-data"))
        (series,) = plot["series"]
        assert series["mean_accuracy"] == 0.5
        assert series["per_seed"] == {"0": 0.25, "1": 0.5, "2": 0.75}


# -- 8. end-to-end golden transcript ---------------------------------------------------

def test_golden_transcript(capfd, tmp_path):
    with criterion(capfd, "web directive replay matches golden bytes", budget=60.0):
        got = run_golden_scenario(str(tmp_path / "golden"))
        want = GOLDEN_TRANSCRIPT.read_bytes()
        assert got == want, "transcript diverged from the recorded golden run"

        events = [json.loads(line) for line in got.decode().splitlines()]
        lifecycle = [
            e["type"] for e in events
            if e["type"].startswith("job_") or e["type"] == "model_swapped"
        ]
        assert lifecycle == [
            "job_queued", "job_running", "job_succeeded", "model_swapped",
        ]
        swapped = next(e for e in events if e["type"] == "model_swapped")
        final = events[-1]
        assert final["type"] == "message_complete"
        assert final["model_version"] == swapped["version"]
