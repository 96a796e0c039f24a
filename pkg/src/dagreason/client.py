"""Completion clients: an OpenAI-compatible HTTP client plus mocks for tests.

The harness only sees the ``complete(request) -> str`` contract, so mock and
HTTP implementations are interchangeable.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass
from typing import Protocol

import requests


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    temperature: float = 0.0  # greedy default
    max_tokens: int = 1024
    model: str = ""


class ClientError(Exception):
    pass


class TransportError(ClientError):
    """Network-level failure (connection, timeout)."""


class ApiStatusError(ClientError):
    """Non-2xx HTTP response."""

    def __init__(self, status: int, body: str):
        super().__init__(f"HTTP {status}: {body[:200]}")
        self.status = status

    @property
    def retryable(self) -> bool:
        return self.status == 429 or self.status >= 500


class MalformedResponseError(ClientError):
    """2xx response whose body is not a chat completion."""


class CompletionClient(Protocol):
    def complete(self, request: CompletionRequest) -> str: ...


class HttpCompletionClient:
    """POSTs to {base_url}/v1/chat/completions with retry and backoff.

    The API key is read from an environment variable whose name is
    configurable; the key itself is never logged.
    """

    def __init__(
        self,
        base_url: str,
        api_key_env: str = "OPENAI_API_KEY",
        timeout: float = 120.0,
        retries: int = 3,
        backoff: float = 1.0,
        session: requests.Session | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.api_key_env = api_key_env
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self._session = session or requests.Session()

    def complete(self, request: CompletionRequest) -> str:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        body = {
            "model": request.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        last_error: ClientError | None = None
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(self.backoff * (2 ** (attempt - 1)))
            try:
                resp = self._session.post(
                    f"{self.base_url}/v1/chat/completions",
                    json=body,
                    headers=headers,
                    timeout=self.timeout,
                )
            except requests.RequestException as exc:
                last_error = TransportError(str(exc))
                continue
            if resp.status_code < 200 or resp.status_code >= 300:
                last_error = ApiStatusError(resp.status_code, resp.text)
                if last_error.retryable:
                    continue
                raise last_error
            try:
                payload = resp.json()
                return payload["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise MalformedResponseError(f"unexpected completion body: {exc}") from exc
        raise last_error


class MappingClient:
    """Answers from a fixed prompt -> response map; unknown prompts fail."""

    def __init__(self, responses: dict[str, str]):
        self.responses = responses

    def complete(self, request: CompletionRequest) -> str:
        if request.prompt not in self.responses:
            raise TransportError("no recorded response for prompt")
        return self.responses[request.prompt]


class RecordedClient(MappingClient):
    """Replays a JSONL transcript of {"prompt", "response"} records."""

    def __init__(self, transcript_path: str):
        from .dataset import read_jsonl

        records = read_jsonl(transcript_path, {"prompt": str, "response": str})
        super().__init__({rec["prompt"]: rec["response"] for rec in records})


class FailingClient:
    """Always raises; exercises retry exhaustion paths."""

    def __init__(self, error: ClientError | None = None):
        self.error = error or TransportError("injected failure")
        self.calls = 0

    def complete(self, request: CompletionRequest) -> str:
        self.calls += 1
        raise self.error


class OracleClient:
    """Parses the prompt and replies with the full correct reasoning chain.

    Useful as the --mock fixture: any permutation or redundancy level still
    grades as correct because the answer is recomputed from semantics.
    """

    def complete(self, request: CompletionRequest) -> str:
        from .render import parse_query, problem_from_parsed, render_reasoning_chain

        parsed = parse_query(request.prompt)
        problem = problem_from_parsed(parsed)
        return render_reasoning_chain(problem).text


class TopoOnlyClient:
    """Correct only when the prompt's premises arrive in a valid topological
    order; otherwise declines without an answer marker.

    Models the order-overfitted behavior that SCoP-style paraphrase voting is
    meant to rescue.
    """

    REFUSAL = "I cannot determine the answer."

    def complete(self, request: CompletionRequest) -> str:
        from .render import ParseError, parse_query, problem_from_parsed, render_reasoning_chain

        try:
            parsed = parse_query(request.prompt)
        except ParseError:
            return self.REFUSAL
        declared: set[str] = set()
        for sentence in parsed.premises:
            node = parsed.nodes[sentence.subject]
            if any(p not in declared for p in node.parents):
                return self.REFUSAL
            declared.add(sentence.subject)
        problem = problem_from_parsed(parsed)
        return render_reasoning_chain(problem).text
