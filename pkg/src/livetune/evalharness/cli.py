"""Command-line experiment runner.

    evalrun --method prompt|ot|sft --dataset eval.jsonl \
            [--profile OT|SFT] [--seeds 0,1,2] [--out report.json] \
            [--format json|table|plot-data]

Runs are self-contained: ot/sft train on labeled pairs derived from the
dataset itself, against an ephemeral registry with the mock backend, so the
command works offline. Exit code 0 on success, 2 on a malformed dataset.
"""

from __future__ import annotations

import argparse
import sys
import tempfile
from pathlib import Path

from ..errors import LivetuneError
from ..moderation import ModerationPolicy
from ..registry import EchoModel, Registry
from ..trainer.artifacts import ArtifactStore
from ..trainer.backends import MockBackend
from ..trainer.jobs import TrainerService
from ..trainer.profiles import get_profile
from .runner import (
    DEFAULT_SEEDS,
    METHODS,
    REPORT_FORMATS,
    EvalExample,
    TrainingPhase,
    dataset_to_trainset,
    emit_report,
    load_dataset,
    run_experiment,
)
from .toolcalls import format_tool_call


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evalrun", description="Run tool-invocation evaluation experiments."
    )
    parser.add_argument("--method", required=True, choices=METHODS)
    parser.add_argument("--dataset", required=True, help="eval dataset JSONL path")
    parser.add_argument(
        "--profile",
        choices=("OT", "SFT"),
        help="training profile for ot/sft (default: the method's own profile)",
    )
    parser.add_argument(
        "--seeds",
        default=",".join(str(s) for s in DEFAULT_SEEDS),
        help="comma-separated seeds, one run each (default 0,1,2)",
    )
    parser.add_argument("--out", default="-", help="output path, - for stdout")
    parser.add_argument("--format", default="json", choices=REPORT_FORMATS)
    return parser


def _few_shot(dataset: list[EvalExample]) -> str:
    first = dataset[0]
    return f"Question: {first.question}\n{format_tool_call(first.gold)}"


def _run_one(method: str, dataset: list[EvalExample], profile_name: str | None, seed: int):
    few_shot = _few_shot(dataset)
    if method == "prompt":
        return run_experiment(method, dataset, EchoModel(), few_shot, seed)
    with tempfile.TemporaryDirectory(prefix="evalrun-") as tmp:
        root = Path(tmp)
        artifacts = ArtifactStore(root / "artifacts")
        registry = Registry(root / "registry.json", artifacts, default_base="echo")
        registry.ensure_scope("global")
        trainer = TrainerService(
            jobs_dir=root / "jobs",
            datasets_dir=root / "datasets",
            artifact_store=artifacts,
            backends={"mock": MockBackend()},
            resolve_base=registry.base_for,
        )
        training = TrainingPhase(
            trainset=dataset_to_trainset(dataset),
            policy=ModerationPolicy(),
            trainer=trainer,
            registry=registry,
            profile=get_profile(profile_name) if profile_name else None,
        )
        return run_experiment(
            method, dataset, EchoModel(), few_shot, seed, training=training
        )


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    except ValueError:
        print(f"evalrun: bad --seeds value {args.seeds!r}", file=sys.stderr)
        return 2
    try:
        dataset = load_dataset(args.dataset)
    except (OSError, ValueError) as exc:
        print(f"evalrun: {exc}", file=sys.stderr)
        return 2
    try:
        reports = [_run_one(args.method, dataset, args.profile, seed) for seed in seeds]
        payload = emit_report(reports, args.format)
    except LivetuneError as exc:
        print(f"evalrun: {exc}", file=sys.stderr)
        return 1
    if args.out == "-":
        sys.stdout.buffer.write(payload)
        sys.stdout.buffer.write(b"\n")
    else:
        Path(args.out).write_bytes(payload)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
