"""Tool-invocation completions: parsing, formatting, scoring.

Completions follow the Thought / Action / Action Input layout. The Action
Input value is a JSON object that may continue over several lines, so the
parser collects it by balanced-brace completion (string-aware) rather than
stopping at the line break.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from ..errors import MalformedCompletion

_THOUGHT = re.compile(r"(?m)^[ \t]*Thought:[ \t]*(?P<rest>.*)$")
_ACTION = re.compile(r"(?m)^[ \t]*Action:[ \t]*(?P<rest>.*)$")
_ACTION_INPUT = re.compile(r"(?m)^[ \t]*Action Input:[ \t]*")


@dataclass
class ToolCall:
    thought: str
    action: str
    action_input: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.action:
            raise ValueError("action must be non-empty")
        if not isinstance(self.action_input, dict):
            raise ValueError("action_input must be a JSON object")


def scan_json_object(text: str, start: int) -> str:
    """Slice of text holding one balanced JSON object starting at text[start]."""
    if start >= len(text) or text[start] != "{":
        raise MalformedCompletion("Action Input does not begin a JSON object")
    depth = 0
    in_string = False
    escaped = False
    for i in range(start, len(text)):
        ch = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
        elif ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return text[start : i + 1]
    raise MalformedCompletion("Action Input braces never balance")


def parse_tool_completion(text: str) -> ToolCall:
    """Extract the ToolCall from a Thought/Action/Action Input completion."""
    if not text.strip():
        raise MalformedCompletion("empty completion")
    thought_m = _THOUGHT.search(text)
    action_m = _ACTION.search(text)
    input_m = _ACTION_INPUT.search(text)
    if thought_m is None:
        raise MalformedCompletion("missing Thought: label")
    if action_m is None:
        raise MalformedCompletion("missing Action: label")
    if input_m is None:
        raise MalformedCompletion("missing Action Input: label")
    action = action_m.group("rest").strip()
    if not action:
        raise MalformedCompletion("Action: line names no tool")
    brace = text.find("{", input_m.end())
    if brace == -1:
        raise MalformedCompletion("Action Input carries no JSON object")
    blob = scan_json_object(text, brace)
    try:
        action_input = json.loads(blob)
    except json.JSONDecodeError as exc:
        raise MalformedCompletion(f"Action Input is not valid JSON: {exc}") from exc
    if not isinstance(action_input, dict):
        raise MalformedCompletion("Action Input must be a JSON object")
    return ToolCall(
        thought=thought_m.group("rest").strip(),
        action=action,
        action_input=action_input,
    )


def format_tool_call(call: ToolCall) -> str:
    """Render a ToolCall in the completion layout parse_tool_completion reads."""
    return (
        f"Thought: {call.thought}\n"
        f"Action: {call.action}\n"
        f"Action Input: {json.dumps(call.action_input, ensure_ascii=False)}"
    )


def _normalize(value):
    """Collapse serialization accidents: integral floats become ints."""
    if isinstance(value, bool):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)
    if isinstance(value, dict):
        return {k: _normalize(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_normalize(v) for v in value]
    return value


def canonical_json(value) -> str:
    """Key-sorted, number-normalized, compact serialization for comparison."""
    return json.dumps(
        _normalize(value), sort_keys=True, separators=(",", ":"), ensure_ascii=False
    )


def score(pred: ToolCall, gold: ToolCall) -> dict:
    """Exact action match and canonical-JSON input match, independently."""
    return {
        "action_correct": pred.action == gold.action,
        "input_correct": canonical_json(pred.action_input)
        == canonical_json(gold.action_input),
    }
