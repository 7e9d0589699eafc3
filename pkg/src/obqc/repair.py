"""Bounded generate / check / repair loop around a pluggable query rewriter.

Cycle 0 sends the zero-shot generation prompt (question plus ontology).
Whenever the checker reports violations, the rewriter is re-prompted with
the faulty query and the violation sentences, and the loop repeats until a
query passes or the cycle limit (default 3) is exhausted, at which point
the outcome is an explicit UNKNOWN rather than an unchecked query.
A response that fails to parse is treated like a violation and fed back,
it does not abort the session.
"""

from __future__ import annotations

import os
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Protocol, Sequence

import requests

from .querygraph import Namespaces, DEFAULT_NAMESPACES
from .rdf import Graph, ParseError, PrefixMap, parse_turtle
from .rules import CheckOptions, CheckReport, DEFAULT_OPTIONS, check_query
from .sparql import QueryAst, strip_code_fences

GENERATION_PROMPT_TEMPLATE = (
    "Given the OWL model described in the following TTL file:\n"
    "{ontology}\n"
    "Write a SPARQL query that answers the question.\n"
    "Do not explain the query. Return just the query,\n"
    "so it can be run verbatim from your response.\n"
    "Here's the question: {question}"
)

REPAIR_PROMPT_TEMPLATE = (
    "We have a query {query} with some issues outlined here {issues}\n"
    "Please re-write it."
)

PARSE_FAILURE_ISSUE = "the previous response was not a parsable SPARQL SELECT query"


def build_generation_prompt(question: str, ontology_ttl: str) -> str:
    """Zero-shot generation prompt with the ontology and question filled in."""
    return GENERATION_PROMPT_TEMPLATE.format(ontology=ontology_ttl, question=question)


def build_repair_prompt(query: str, report: CheckReport | Sequence[str]) -> str:
    """Repair prompt: the faulty query plus newline-joined issue sentences.

    Neither the original question nor the ontology is repeated; the query
    already reflects the question and the issues already reflect the
    ontology.
    """
    issues = report.messages() if isinstance(report, CheckReport) else list(report)
    return REPAIR_PROMPT_TEMPLATE.format(query=query, issues="\n".join(issues))


class RewriterEndpoint(Protocol):
    """Anything that maps a full prompt to a raw model response."""

    def generate(self, prompt: str) -> str: ...


class EndpointError(Exception):
    """The rewriter endpoint failed; recorded on the session, outcome UNKNOWN."""

    def __init__(self, cycle: int, cause: Exception | str) -> None:
        self.cycle = cycle
        self.cause = cause
        super().__init__(f"endpoint failed at cycle {cycle}: {cause}")


class ScriptedEndpoint:
    """Deterministic test double: plays back responses in order.

    Every prompt received is recorded for assertions. When the script runs
    out, the last response repeats.
    """

    def __init__(self, responses: Sequence[str]) -> None:
        if not responses:
            raise ValueError("a scripted endpoint needs at least one response")
        self.responses = list(responses)
        self.prompts: list[str] = []

    def generate(self, prompt: str) -> str:
        self.prompts.append(prompt)
        index = min(len(self.prompts) - 1, len(self.responses) - 1)
        return self.responses[index]

    @property
    def call_count(self) -> int:
        return len(self.prompts)


def scripted_mock(responses: Sequence[str]) -> ScriptedEndpoint:
    return ScriptedEndpoint(responses)


class HttpEndpoint:
    """Generic JSON-over-HTTP chat-completion client.

    Configured by URL, model name, API-key environment variable and
    temperature; integration-only, nothing in the test suite calls the
    network. Requests are rate limited by an optional minimum interval.
    """

    def __init__(
        self,
        url: str,
        model: str,
        api_key_env: str = "",
        temperature: float = 0.0,
        timeout_ms: int = 60000,
        min_interval_ms: int = 0,
    ) -> None:
        self.url = url
        self.model = model
        self.api_key_env = api_key_env
        self.temperature = temperature
        self.timeout_s = timeout_ms / 1000.0
        self.min_interval_s = min_interval_ms / 1000.0
        self._lock = threading.Lock()
        self._last_call = 0.0

    @classmethod
    def from_config(cls, path: str) -> "HttpEndpoint":
        try:
            import tomllib  # Python >= 3.11
        except ModuleNotFoundError:  # pragma: no cover - version dependent
            import tomli as tomllib
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
        return cls(
            url=cfg["url"],
            model=cfg["model"],
            api_key_env=cfg.get("api_key_env", ""),
            temperature=cfg.get("temperature", 0.0),
            timeout_ms=cfg.get("timeout_ms", 60000),
            min_interval_ms=cfg.get("min_interval_ms", 0),
        )

    def _throttle(self) -> None:
        if self.min_interval_s <= 0:
            return
        with self._lock:
            wait = self._last_call + self.min_interval_s - time.monotonic()
            if wait > 0:
                time.sleep(wait)
            self._last_call = time.monotonic()

    def generate(self, prompt: str) -> str:
        self._throttle()
        headers = {"Content-Type": "application/json"}
        if self.api_key_env:
            key = os.environ.get(self.api_key_env, "")
            if key:
                headers["Authorization"] = f"Bearer {key}"
        payload = {
            "model": self.model,
            "temperature": self.temperature,
            "messages": [{"role": "user", "content": prompt}],
        }
        resp = requests.post(self.url, json=payload, headers=headers, timeout=self.timeout_s)
        resp.raise_for_status()
        body = resp.json()
        return body["choices"][0]["message"]["content"]


class SessionOutcome(Enum):
    VALIDATED_FIRST_TIME = "validated_first_time"
    VALIDATED_AFTER_REPAIR = "validated_after_repair"
    UNKNOWN = "unknown"


@dataclass
class CycleRecord:
    """One prompt/response exchange and what the checker made of it."""

    prompt: str
    response: str
    query_text: str
    parsed: QueryAst | None = None
    report: CheckReport | None = None
    parse_error: str | None = None
    timestamp: str = ""
    latency_s: float = 0.0

    def to_dict(self) -> dict:
        return {
            "prompt": self.prompt,
            "response": self.response,
            "query_text": self.query_text,
            "parsed": self.parsed is not None,
            "report": self.report.to_dict() if self.report is not None else None,
            "parse_error": self.parse_error,
            "timestamp": self.timestamp,
            "latency_s": round(self.latency_s, 6),
        }


@dataclass
class RepairSession:
    """Full transcript of one question's generate/check/repair run."""

    question: str
    ontology_ref: str
    cycle_limit: int
    cycles: list[CycleRecord] = field(default_factory=list)
    outcome: SessionOutcome = SessionOutcome.UNKNOWN
    repairs: int = 0
    final_query: str | None = None
    error: str | None = None

    @property
    def validated(self) -> bool:
        return self.outcome is not SessionOutcome.UNKNOWN

    def to_dict(self) -> dict:
        return {
            "question": self.question,
            "ontology_ref": self.ontology_ref,
            "cycle_limit": self.cycle_limit,
            "outcome": self.outcome.value,
            "repairs": self.repairs,
            "final_query": self.final_query,
            "error": self.error,
            "cycles": [c.to_dict() for c in self.cycles],
        }


def run_session(
    question: str,
    ontology_ttl: str,
    endpoint: RewriterEndpoint,
    limit: int = 3,
    options: CheckOptions = DEFAULT_OPTIONS,
    ontology_ref: str = "",
    namespaces: Namespaces = DEFAULT_NAMESPACES,
    ontology: Graph | None = None,
    prefixes: PrefixMap | None = None,
) -> RepairSession:
    """Run the loop: 1 generation cycle plus up to `limit` repair cycles.

    Stops at the first passing report. A validated outcome always carries a
    passing final report; UNKNOWN never exposes a query for execution.
    """
    if ontology is None:
        ontology, prefixes = parse_turtle(ontology_ttl)
    session = RepairSession(question=question, ontology_ref=ontology_ref, cycle_limit=limit)
    prompt = build_generation_prompt(question, ontology_ttl)

    for cycle in range(limit + 1):
        started = time.perf_counter()
        try:
            response = endpoint.generate(prompt)
        except Exception as exc:  # endpoint failure ends the session
            session.error = str(EndpointError(cycle, exc))
            session.outcome = SessionOutcome.UNKNOWN
            return session
        latency = time.perf_counter() - started
        query_text = strip_code_fences(response).strip()
        record = CycleRecord(
            prompt=prompt,
            response=response,
            query_text=query_text,
            timestamp=datetime.now(timezone.utc).isoformat(),
            latency_s=latency,
        )
        session.cycles.append(record)

        issues: CheckReport | list[str]
        try:
            ast, cg, report = check_query(query_text, ontology, prefixes, options)
            record.parsed = ast
            record.report = report
            if report.passed:
                session.final_query = query_text
                session.repairs = cycle
                session.outcome = (
                    SessionOutcome.VALIDATED_FIRST_TIME
                    if cycle == 0
                    else SessionOutcome.VALIDATED_AFTER_REPAIR
                )
                return session
            issues = report
        except ParseError as exc:
            record.parse_error = str(exc)
            issues = [PARSE_FAILURE_ISSUE]

        if cycle == limit:
            break
        prompt = build_repair_prompt(query_text, issues)

    session.outcome = SessionOutcome.UNKNOWN
    return session
