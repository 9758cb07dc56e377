"""Chat-completion backends.

Every component that needs model output goes through the ChatBackend
protocol: one method, ``complete(request) -> str``. Three implementations
ship here: an HTTP client speaking the OpenAI-style chat-completions wire
format, a scripted mock for tests and offline runs, and a replay wrapper
that records transcripts so live runs can be turned into mocks.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterable, Protocol, Sequence

import requests

from .corpus import ASSISTANT, SYSTEM, USER, ImageRef, image_data_uri, read_jsonl
from .errors import (
    BackendTimeoutError,
    ConfigError,
    ConnectionFailedError,
    HttpStatusError,
    MalformedResponseError,
    NoRuleMatchedError,
    RetriesExhaustedError,
    ValidationError,
)

ENDPOINT_ENV = "VISTRUCT_ENDPOINT"
TOKEN_ENV = "VISTRUCT_API_TOKEN"

_ROLES = (SYSTEM, USER, ASSISTANT)


@dataclass(frozen=True)
class ChatMessage:
    role: str
    text: str
    image: ImageRef | None = None

    def __post_init__(self):
        if self.role not in _ROLES:
            raise ValidationError(f"message role must be one of {_ROLES}, got {self.role!r}")
        if not isinstance(self.text, str):
            raise ValidationError("message text must be a string")
        if self.image is not None and self.role != USER:
            raise ValidationError("only user messages may carry an image")

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"role": self.role, "text": self.text}
        if self.image is not None:
            out["image"] = self.image.to_dict()
        return out

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "ChatMessage":
        image = raw.get("image")
        return cls(
            role=raw["role"],
            text=raw["text"],
            image=ImageRef.from_dict(image) if image is not None else None,
        )


@dataclass(frozen=True)
class ChatRequest:
    messages: tuple[ChatMessage, ...]
    max_new_tokens: int = 512
    temperature: float = 0.0
    stop: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "messages", tuple(self.messages))
        if self.stop is not None:
            object.__setattr__(self, "stop", tuple(self.stop))
        if not self.messages:
            raise ValidationError("a chat request needs at least one message")
        if self.max_new_tokens < 1:
            raise ValidationError("max_new_tokens must be positive")
        if self.temperature < 0:
            raise ValidationError("temperature must be non-negative")


@dataclass(frozen=True)
class BackendConfig:
    endpoint: str
    model_name: str
    timeout: float = 60.0
    max_retries: int = 3
    backoff_base: float = 0.5
    auth_token: str | None = None

    def __post_init__(self):
        if not self.endpoint:
            raise ConfigError("backend endpoint must be set")
        if not self.model_name:
            raise ConfigError("backend model_name must be set")
        if self.timeout <= 0:
            raise ConfigError("backend timeout must be positive")
        if self.max_retries < 0:
            raise ConfigError("max_retries must be >= 0")
        if self.backoff_base < 0:
            raise ConfigError("backoff_base must be >= 0")

    @classmethod
    def from_env(cls, model_name: str, **overrides: Any) -> "BackendConfig":
        """Build a config whose endpoint/token default from the environment."""
        endpoint = overrides.pop("endpoint", None) or os.environ.get(ENDPOINT_ENV)
        if not endpoint:
            raise ConfigError(f"no backend endpoint given and {ENDPOINT_ENV} is unset")
        token = overrides.pop("auth_token", None) or os.environ.get(TOKEN_ENV)
        return cls(endpoint=endpoint, model_name=model_name, auth_token=token, **overrides)


class ChatBackend(Protocol):
    def complete(self, request: ChatRequest) -> str: ...


def request_text(request: ChatRequest) -> str:
    """All message text in one string; what scripted substring rules match on."""
    return "\n".join(message.text for message in request.messages)


def request_fingerprint(request: ChatRequest) -> str:
    """Stable digest of a request's content and sampling parameters."""
    payload = {
        "messages": [m.to_dict() for m in request.messages],
        "max_new_tokens": request.max_new_tokens,
        "temperature": request.temperature,
        "stop": list(request.stop) if request.stop else None,
    }
    blob = json.dumps(payload, sort_keys=True, ensure_ascii=False).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def build_wire_payload(request: ChatRequest, model_name: str) -> dict[str, Any]:
    """Encode a request as an OpenAI-style chat-completions JSON body.

    A message that carries an ImageRef always contributes an image content
    part (base64 data URI) ahead of its text part.
    """
    messages: list[dict[str, Any]] = []
    for message in request.messages:
        if message.image is None:
            messages.append({"role": message.role, "content": message.text})
        else:
            messages.append(
                {
                    "role": message.role,
                    "content": [
                        {"type": "image_url", "image_url": {"url": image_data_uri(message.image)}},
                        {"type": "text", "text": message.text},
                    ],
                }
            )
    payload: dict[str, Any] = {
        "model": model_name,
        "messages": messages,
        "max_tokens": request.max_new_tokens,
        "temperature": request.temperature,
    }
    if request.stop:
        payload["stop"] = list(request.stop)
    return payload


def parse_wire_reply(data: Any) -> str:
    try:
        content = data["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise MalformedResponseError(f"reply body lacks choices[0].message.content: {exc}") from exc
    if not isinstance(content, str):
        raise MalformedResponseError("reply content is not a string")
    return content


_TRANSIENT_STATUS = frozenset({429, 500, 502, 503, 504})


class HttpChatBackend:
    """OpenAI-compatible chat-completions client with bounded retries.

    Transient failures (timeouts, connection errors, HTTP 429/5xx) are retried
    with exponential backoff: ``backoff_base * 2**attempt`` seconds between
    attempts, ``max_retries + 1`` attempts in total. Non-transient HTTP errors
    and malformed bodies raise immediately.
    """

    def __init__(
        self,
        config: BackendConfig,
        *,
        post: Callable[..., Any] | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.config = config
        self._post = post if post is not None else requests.post
        self._sleep = sleep

    def complete(self, request: ChatRequest) -> str:
        attempts = self.config.max_retries + 1
        last: Exception | None = None
        for attempt in range(attempts):
            if attempt:
                self._sleep(self.config.backoff_base * 2 ** (attempt - 1))
            try:
                return self._attempt(request)
            except (BackendTimeoutError, ConnectionFailedError) as exc:
                last = exc
            except HttpStatusError as exc:
                if exc.status_code not in _TRANSIENT_STATUS:
                    raise
                last = exc
        raise RetriesExhaustedError(attempts, last)

    def _attempt(self, request: ChatRequest) -> str:
        headers = {"Content-Type": "application/json"}
        if self.config.auth_token:
            headers["Authorization"] = f"Bearer {self.config.auth_token}"
        payload = build_wire_payload(request, self.config.model_name)
        try:
            response = self._post(
                self.config.endpoint,
                json=payload,
                headers=headers,
                timeout=self.config.timeout,
            )
        except requests.Timeout as exc:
            raise BackendTimeoutError(str(exc)) from exc
        except requests.ConnectionError as exc:
            raise ConnectionFailedError(str(exc)) from exc
        status = getattr(response, "status_code", 200)
        if status != 200:
            raise HttpStatusError(status, _body_snippet(response))
        try:
            data = response.json()
        except ValueError as exc:
            raise MalformedResponseError(f"reply body is not JSON: {exc}") from exc
        return parse_wire_reply(data)


def _body_snippet(response: Any) -> str:
    text = getattr(response, "text", "") or ""
    return text[:200]


class ScriptedBackend:
    """Deterministic mock backend driven by an ordered rule list.

    Each rule is ``(matcher, outcome)``. A string matcher tests substring
    membership in the request's joined message text; a callable matcher gets
    the full request. The first matching rule wins. A string outcome is
    returned verbatim; an Exception outcome is raised; a callable outcome is
    invoked with the request (and may itself raise, which is how tests script
    flaky behavior). Requests no rule covers raise NoRuleMatchedError.

    ``latency`` injects a deterministic pseudo-random sleep keyed on the
    request fingerprint, which shuffles completion order across worker
    threads without breaking reproducibility.
    """

    def __init__(
        self,
        rules: Sequence[tuple[Any, Any]],
        *,
        latency: tuple[float, float] | None = None,
        latency_seed: int = 0,
    ):
        self.rules = list(rules)
        self.latency = latency
        self.latency_seed = latency_seed

    def complete(self, request: ChatRequest) -> str:
        if self.latency is not None:
            rng = random.Random(f"{self.latency_seed}:{request_fingerprint(request)}")
            time.sleep(rng.uniform(*self.latency))
        text = request_text(request)
        for matcher, outcome in self.rules:
            if isinstance(matcher, str):
                matched = matcher in text
            else:
                matched = bool(matcher(request))
            if not matched:
                continue
            if isinstance(outcome, Exception):
                raise outcome
            if callable(outcome):
                return outcome(request)
            return outcome
        raise NoRuleMatchedError(f"no scripted rule matches request: {text[:120]!r}")


class TranscriptRecorder:
    """Wrap a backend and append every exchange to a JSONL transcript."""

    def __init__(self, inner: ChatBackend, path: str | Path):
        self.inner = inner
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def complete(self, request: ChatRequest) -> str:
        reply = self.inner.complete(request)
        row = {
            "fingerprint": request_fingerprint(request),
            "messages": [m.to_dict() for m in request.messages],
            "reply": reply,
        }
        line = json.dumps(row, ensure_ascii=False)
        with self._lock:
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(line)
                fh.write("\n")
        return reply


def scripted_from_replay(path: str | Path) -> ScriptedBackend:
    """Rebuild a scripted backend from a recorded transcript.

    Matching is by request fingerprint, so a replayed run must issue requests
    with exactly the recorded content; anything else fails loudly.
    """
    replies: dict[str, str] = {}
    for row in read_jsonl(path):
        replies[row["fingerprint"]] = row["reply"]

    def matcher(request: ChatRequest) -> bool:
        return request_fingerprint(request) in replies

    def outcome(request: ChatRequest) -> str:
        return replies[request_fingerprint(request)]

    return ScriptedBackend([(matcher, outcome)])


def bounded_map(fn: Callable[[Any], Any], items: Iterable[Any], max_in_flight: int) -> list[Any]:
    """Order-preserving parallel map with at most ``max_in_flight`` workers.

    Output index i is always the result for input index i regardless of
    completion order, so results are independent of max_in_flight as long as
    ``fn`` is a pure function of its item.
    """
    if max_in_flight < 1:
        raise ConfigError("max_in_flight must be >= 1")
    items = list(items)
    if max_in_flight == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
        return list(pool.map(fn, items))
