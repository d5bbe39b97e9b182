"""Tool-invocation evaluation: parsing, scoring, experiment runs, reports."""

from .runner import (
    DEFAULT_SEEDS,
    METHODS,
    REFERENCE_FULL_SCALE,
    REPORT_FORMATS,
    EvalExample,
    EvalReport,
    ScriptedModel,
    TrainingPhase,
    build_prompt,
    dataset_to_trainset,
    emit_report,
    load_dataset,
    run_experiment,
)
from .toolcalls import (
    ToolCall,
    canonical_json,
    format_tool_call,
    parse_tool_completion,
    scan_json_object,
    score,
)

__all__ = [
    "DEFAULT_SEEDS",
    "METHODS",
    "REFERENCE_FULL_SCALE",
    "REPORT_FORMATS",
    "EvalExample",
    "EvalReport",
    "ScriptedModel",
    "ToolCall",
    "TrainingPhase",
    "build_prompt",
    "canonical_json",
    "dataset_to_trainset",
    "emit_report",
    "format_tool_call",
    "load_dataset",
    "parse_tool_completion",
    "run_experiment",
    "scan_json_object",
    "score",
]
