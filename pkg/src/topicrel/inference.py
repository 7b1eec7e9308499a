"""Text-generation clients: two HTTP wire dialects plus deterministic mocks.

The HTTP client retries transport failures and retryable statuses (5xx,
429) with exponential backoff; request bodies carry exactly the fields
of the chosen dialect and nothing else. Auth tokens are read from a
named environment variable, never from configuration files.
"""
from __future__ import annotations

import json
import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import requests

from .labels import RelationLabel, invert_label

logger = logging.getLogger(__name__)

DIALECT_SIMPLE = "simple-generate"
DIALECT_CHAT = "chat-completions"
DIALECT_MOCK = "mock"
DIALECTS = (DIALECT_SIMPLE, DIALECT_CHAT, DIALECT_MOCK)

MOCK_ORACLE = "oracle"
MOCK_SCRIPTED = "scripted"
MOCK_FIXED = "fixed"


class InferenceError(Exception):
    pass


class TransportError(InferenceError):
    pass


class HttpStatusError(InferenceError):
    def __init__(self, status: int, detail: str = ""):
        super().__init__(f"endpoint returned HTTP {status}" + (f": {detail}" if detail else ""))
        self.status = status


class MalformedResponseBody(InferenceError):
    pass


class MissingAuthToken(InferenceError):
    def __init__(self, env_var: str):
        super().__init__(f"environment variable {env_var} is not set or empty")
        self.env_var = env_var


class UnknownScriptKey(InferenceError):
    pass


@dataclass(frozen=True)
class EndpointConfig:
    dialect: str
    base_url: str | None = None
    model_name: str | None = None
    auth_env_var: str | None = None
    temperature: float = 0.0
    max_new_tokens: int = 256
    stop_sequences: tuple[str, ...] = ()
    timeout: float = 60.0
    retries: int = 2
    backoff_base: float = 0.5
    max_in_flight: int = 4

    def __post_init__(self) -> None:
        if self.dialect not in DIALECTS:
            raise ValueError(f"unknown dialect: {self.dialect!r}")
        if self.dialect != DIALECT_MOCK and not self.base_url:
            raise ValueError(f"dialect {self.dialect} requires base_url")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_new_tokens < 1:
            raise ValueError("max_new_tokens must be >= 1")
        if self.retries < 0:
            raise ValueError("retries must be >= 0")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")


@dataclass(frozen=True)
class MockScript:
    """Deterministic stand-in for an endpoint.

    oracle answers the gold label for the pair named by the request tag
    (``<pair_id>#ab`` or ``<pair_id>#ba``, with an optional stage suffix),
    inverting it for the swapped direction; scripted looks responses up
    by prompt text, then by tag, then by tag without its stage suffix,
    and errors on anything unknown; fixed always answers the same text.
    """

    mode: str
    script: Mapping[str, str] = field(default_factory=dict)
    fixed_response: str = ""
    gold: Mapping[str, RelationLabel] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.mode not in (MOCK_ORACLE, MOCK_SCRIPTED, MOCK_FIXED):
            raise ValueError(f"unknown mock mode: {self.mode!r}")


def split_request_tag(tag: str) -> tuple[str, str]:
    """(pair_id, direction) from a strategy request tag."""
    parts = tag.split("#")
    pair_id = parts[0]
    direction = parts[1] if len(parts) > 1 else "ab"
    return pair_id, direction


class InferenceClient:
    """Thread-safe generation client; build once and share across workers."""

    def __init__(
        self,
        config: EndpointConfig,
        mock: MockScript | None = None,
        audit_log: Path | str | None = None,
    ):
        if (config.dialect == DIALECT_MOCK) != (mock is not None):
            raise ValueError("mock script must be supplied exactly when dialect is mock")
        self.config = config
        self._mock = mock
        self._audit_path = Path(audit_log) if audit_log else None
        self._audit_lock = threading.Lock()

    def generate(self, prompt: str, request_tag: str = "") -> str:
        try:
            if self._mock is not None:
                response = self._mock_response(prompt, request_tag)
            else:
                response = self._http_generate(prompt)
        except InferenceError as exc:
            self._audit(request_tag, prompt, error=str(exc))
            raise
        self._audit(request_tag, prompt, response=response)
        return response

    def generate_batch(
        self, prompts: Sequence[tuple[str, str]]
    ) -> dict[str, "str | InferenceError"]:
        """Run (tag, prompt) items with at most max_in_flight concurrent
        requests; failures are captured per tag, not raised."""
        tags = [tag for tag, _ in prompts]
        if len(set(tags)) != len(tags):
            raise ValueError("request tags must be unique within a batch")
        results: dict[str, str | InferenceError] = {}
        if not prompts:
            return results

        def run(item: tuple[str, str]) -> tuple[str, str | InferenceError]:
            tag, prompt = item
            try:
                return tag, self.generate(prompt, request_tag=tag)
            except InferenceError as exc:
                return tag, exc

        with ThreadPoolExecutor(max_workers=self.config.max_in_flight) as pool:
            for tag, outcome in pool.map(run, prompts):
                results[tag] = outcome
        return results

    def _audit(
        self, tag: str, prompt: str, response: str | None = None, error: str | None = None
    ) -> None:
        if self._audit_path is None:
            return
        row = {"tag": tag, "prompt": prompt, "response": response, "error": error}
        with self._audit_lock:
            with open(self._audit_path, "a", encoding="utf-8") as handle:
                handle.write(json.dumps(row, ensure_ascii=False) + "\n")

    def _mock_response(self, prompt: str, tag: str) -> str:
        mock = self._mock
        assert mock is not None
        if mock.mode == MOCK_FIXED:
            return mock.fixed_response
        if mock.mode == MOCK_ORACLE:
            pair_id, direction = split_request_tag(tag)
            gold = mock.gold.get(pair_id)
            if gold is None:
                raise UnknownScriptKey(f"no gold label for pair {pair_id!r}")
            label = invert_label(gold) if direction == "ba" else gold
            return f"relationship: {label.value}"
        for key in (prompt, tag, "#".join(tag.split("#")[:2])):
            if key in mock.script:
                return mock.script[key]
        raise UnknownScriptKey(f"no scripted response for tag {tag!r}")

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.config.auth_env_var:
            token = os.environ.get(self.config.auth_env_var, "")
            if not token:
                raise MissingAuthToken(self.config.auth_env_var)
            headers["Authorization"] = f"Bearer {token}"
        return headers

    def _body(self, prompt: str) -> dict:
        if self.config.dialect == DIALECT_SIMPLE:
            return {
                "prompt": prompt,
                "max_new_tokens": self.config.max_new_tokens,
                "temperature": self.config.temperature,
                "stop": list(self.config.stop_sequences),
            }
        return {
            "model": self.config.model_name or "",
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_new_tokens,
        }

    def _extract(self, data: object) -> str:
        try:
            if self.config.dialect == DIALECT_SIMPLE:
                text = data["text"]  # type: ignore[index]
            else:
                text = data["choices"][0]["message"]["content"]  # type: ignore[index]
        except (KeyError, IndexError, TypeError) as exc:
            raise MalformedResponseBody(f"unexpected response shape: {exc}") from None
        if not isinstance(text, str):
            raise MalformedResponseBody("generated text is not a string")
        return text

    def _http_generate(self, prompt: str) -> str:
        headers = self._headers()
        body = self._body(prompt)
        attempts = self.config.retries + 1
        last_error: InferenceError = TransportError("no attempt made")
        for attempt in range(attempts):
            if attempt > 0:
                time.sleep(self.config.backoff_base * (2 ** (attempt - 1)))
            try:
                response = requests.post(
                    self.config.base_url,
                    json=body,
                    headers=headers,
                    timeout=self.config.timeout,
                )
            except requests.RequestException as exc:
                last_error = TransportError(str(exc))
                logger.debug("attempt %d transport error: %s", attempt + 1, exc)
                continue
            if response.status_code >= 500 or response.status_code == 429:
                last_error = HttpStatusError(response.status_code)
                logger.debug("attempt %d retryable status %d", attempt + 1, response.status_code)
                continue
            if not (200 <= response.status_code < 300):
                raise HttpStatusError(response.status_code, response.text[:200])
            try:
                data = response.json()
            except ValueError:
                raise MalformedResponseBody("response body is not JSON") from None
            return self._extract(data)
        raise last_error


def build_client(
    config: EndpointConfig,
    mock: MockScript | None = None,
    audit_log: Path | str | None = None,
) -> InferenceClient:
    return InferenceClient(config, mock=mock, audit_log=audit_log)


def generate(prompt: str, config: EndpointConfig, request_tag: str = "") -> str:
    """One-shot convenience wrapper for non-mock configs."""
    return InferenceClient(config).generate(prompt, request_tag=request_tag)
