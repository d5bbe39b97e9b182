"""Teacher and search client contracts plus fixture/HTTP implementations.

Fixture clients replay recorded transcripts deterministically so every
pipeline is runnable offline; HTTP clients talk to configured endpoints and
pull credentials from the environment.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from pathlib import Path
from typing import Protocol, runtime_checkable

import httpx

from ..config import EndpointConfig
from ..errors import SearchUnavailable, TeacherUnavailable


@runtime_checkable
class TeacherClient(Protocol):
    def complete(self, prompt: str, temperature: float = 0.0, max_tokens: int = 2048) -> str:
        ...


@runtime_checkable
class SearchClient(Protocol):
    def search(self, query: str, k: int) -> list[tuple[str, str, str]]:
        """Return up to k (url, title, raw content) results."""
        ...


def prompt_key(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


class FixtureTeacher:
    """Replays completions keyed by sha256 of the exact prompt.

    Transcript file: JSONL of {"prompt": ...} or {"prompt_sha256": ...} plus
    {"completion": ...}. Unknown prompts raise TeacherUnavailable, which keeps
    accidental fixture drift loud instead of silently generating garbage.
    """

    def __init__(self, transcript: dict[str, str] | None = None):
        self._by_key = dict(transcript or {})
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> "FixtureTeacher":
        table: dict[str, str] = {}
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            row = json.loads(line)
            key = row.get("prompt_sha256") or prompt_key(row["prompt"])
            table[key] = row["completion"]
        return cls(table)

    def add(self, prompt: str, completion: str) -> None:
        with self._lock:
            self._by_key[prompt_key(prompt)] = completion

    def complete(self, prompt: str, temperature: float = 0.0, max_tokens: int = 2048) -> str:
        with self._lock:
            key = prompt_key(prompt)
            if key not in self._by_key:
                raise TeacherUnavailable(
                    f"no fixture completion recorded for prompt hash {key[:12]}"
                )
            return self._by_key[key]


class FixtureSearch:
    """Replays recorded search results, keyed by (query, k)-insensitive query string."""

    def __init__(self, results: dict[str, list[tuple[str, str, str]]] | None = None):
        self._by_query = dict(results or {})

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> "FixtureSearch":
        table: dict[str, list[tuple[str, str, str]]] = {}
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            row = json.loads(line)
            table[row["query"]] = [
                (hit["url"], hit["title"], hit["content"]) for hit in row["results"]
            ]
        return cls(table)

    def add(self, query: str, results: list[tuple[str, str, str]]) -> None:
        self._by_query[query] = list(results)

    def search(self, query: str, k: int) -> list[tuple[str, str, str]]:
        if query not in self._by_query:
            raise SearchUnavailable(f"no fixture results recorded for query {query!r}")
        return self._by_query[query][:k]


class HttpTeacher:
    """POSTs {prompt, temperature, max_tokens} to the configured completion endpoint."""

    def __init__(self, cfg: EndpointConfig, timeout: float = 60.0):
        self._endpoint = cfg.endpoint
        self._api_key = os.environ.get(cfg.api_key_env or "TEACHER_API_KEY", "")
        self._timeout = timeout

    def complete(self, prompt: str, temperature: float = 0.0, max_tokens: int = 2048) -> str:
        headers = {}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        try:
            resp = httpx.post(
                self._endpoint,
                json={"prompt": prompt, "temperature": temperature, "max_tokens": max_tokens},
                headers=headers,
                timeout=self._timeout,
            )
            resp.raise_for_status()
        except httpx.HTTPError as exc:
            raise TeacherUnavailable(str(exc)) from exc
        return resp.json()["completion"]


class HttpSearch:
    """GETs the configured search endpoint with ?q=...&k=..."""

    def __init__(self, cfg: EndpointConfig, timeout: float = 30.0):
        self._endpoint = cfg.endpoint
        self._api_key = os.environ.get(cfg.api_key_env or "SEARCH_API_KEY", "")
        self._timeout = timeout

    def search(self, query: str, k: int) -> list[tuple[str, str, str]]:
        headers = {}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        try:
            resp = httpx.get(
                self._endpoint,
                params={"q": query, "k": k},
                headers=headers,
                timeout=self._timeout,
            )
            resp.raise_for_status()
        except httpx.HTTPError as exc:
            raise SearchUnavailable(str(exc)) from exc
        return [
            (hit["url"], hit["title"], hit["content"]) for hit in resp.json()["results"]
        ]


def make_teacher(cfg: EndpointConfig) -> TeacherClient:
    if cfg.mode == "fixture":
        if cfg.transcript:
            return FixtureTeacher.from_file(cfg.transcript)
        return FixtureTeacher()
    return HttpTeacher(cfg)


def make_search(cfg: EndpointConfig) -> SearchClient:
    if cfg.mode == "fixture":
        if cfg.transcript:
            return FixtureSearch.from_file(cfg.transcript)
        return FixtureSearch()
    return HttpSearch(cfg)
