"""LLM provider gateway.

Every pipeline stage talks to a model through this module: an HTTP provider
for chat-completion style endpoints, and a deterministic fixture provider
that replays recorded responses keyed by a hash of the request content.
The retry loop appends (assistant, user) feedback turns on each failed
attempt, so attempt i+1 carries exactly i feedback pairs.
"""

from __future__ import annotations

import json
import math
import os
import threading
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Protocol

import requests

from .util import sha256_hex

DEFAULT_FEEDBACK_TEMPLATE = (
    "Your previous answer was:\n{previous_output}\n\n"
    "It failed with:\n{error}\n\n"
    "Produce a corrected answer."
)

ROLE_USER = "user"
ROLE_ASSISTANT = "assistant"


class GatewayError(Exception):
    """Base class for provider-side failures."""


class TransportError(GatewayError):
    """Network-level failure reaching the provider."""


class ProviderStatusError(GatewayError):
    def __init__(self, status: int, body: str):
        self.status = status
        super().__init__(f"provider returned status {status}: {body[:200]}")


class MalformedPayloadError(GatewayError):
    """Provider answered 2xx but the payload is not a usable completion."""


class FixtureMissError(GatewayError):
    def __init__(self, request_hash: str, directory: Path):
        self.request_hash = request_hash
        super().__init__(f"no fixture {request_hash}.json under {directory}")


@dataclass(frozen=True)
class ChatRequest:
    system_prompt: str
    messages: tuple[tuple[str, str], ...]
    temperature: float = 0.0
    max_tokens: int = 4096

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValueError("messages must not be empty")
        for i, (role, _content) in enumerate(self.messages):
            expected = ROLE_USER if i % 2 == 0 else ROLE_ASSISTANT
            if role != expected:
                raise ValueError(
                    f"messages must alternate user/assistant starting with user; "
                    f"position {i} is {role!r}"
                )
        if self.messages[-1][0] != ROLE_USER:
            raise ValueError("conversation must end with a user turn")

    def extended(self, assistant_text: str, user_text: str) -> "ChatRequest":
        return replace(
            self,
            messages=self.messages
            + ((ROLE_ASSISTANT, assistant_text), (ROLE_USER, user_text)),
        )

    def content_dict(self) -> dict[str, Any]:
        return {
            "system_prompt": self.system_prompt,
            "messages": [list(m) for m in self.messages],
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }


def request_hash(req: ChatRequest) -> str:
    return sha256_hex(json.dumps(req.content_dict(), sort_keys=True, ensure_ascii=False))


def estimate_tokens(text: str) -> int:
    """Crude fallback when the provider reports no usage: one token per four
    characters, rounded up."""
    return math.ceil(len(text) / 4)


@dataclass(frozen=True)
class ChatExchange:
    request: ChatRequest
    response_text: str
    prompt_tokens: int
    completion_tokens: int
    latency_ms: int
    provider_id: str
    tokens_estimated: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "request": self.request.content_dict(),
            "response_text": self.response_text,
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
            "latency_ms": self.latency_ms,
            "provider_id": self.provider_id,
            "tokens_estimated": self.tokens_estimated,
        }

    @staticmethod
    def from_dict(data: dict[str, Any]) -> "ChatExchange":
        raw_req = data["request"]
        req = ChatRequest(
            system_prompt=raw_req["system_prompt"],
            messages=tuple((m[0], m[1]) for m in raw_req["messages"]),
            temperature=raw_req["temperature"],
            max_tokens=raw_req["max_tokens"],
        )
        return ChatExchange(
            request=req,
            response_text=data["response_text"],
            prompt_tokens=data["prompt_tokens"],
            completion_tokens=data["completion_tokens"],
            latency_ms=data["latency_ms"],
            provider_id=data["provider_id"],
            tokens_estimated=data.get("tokens_estimated", False),
        )


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 5
    feedback_template: str = DEFAULT_FEEDBACK_TEMPLATE

    def __post_init__(self) -> None:
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        for placeholder in ("{previous_output}", "{error}"):
            if placeholder not in self.feedback_template:
                raise ValueError(f"feedback template must contain {placeholder}")


@dataclass(frozen=True)
class ProviderConfig:
    id: str
    endpoint: str
    model: str
    api_key_env: str = ""
    thinking: bool = False


_CONFIG_KEYS = {"id", "endpoint", "model", "api_key_env", "thinking"}


def load_provider_config(path: Path | str) -> ProviderConfig:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return provider_config_from_dict(data, source=str(path))


def provider_config_from_dict(data: Any, source: str = "<inline>") -> ProviderConfig:
    if not isinstance(data, dict):
        raise ValueError(f"{source}: provider config must be an object")
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise ValueError(f"{source}: unknown provider config keys {sorted(unknown)}")
    missing = _CONFIG_KEYS - set(data)
    if missing:
        raise ValueError(f"{source}: missing provider config keys {sorted(missing)}")
    return ProviderConfig(
        id=data["id"],
        endpoint=data["endpoint"],
        model=data["model"],
        api_key_env=data["api_key_env"],
        thinking=bool(data["thinking"]),
    )


class TraceLogger:
    """Appends request/response bodies as JSONL, with credentials redacted."""

    def __init__(self, directory: Path | str):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    @staticmethod
    def redact(obj: Any) -> Any:
        if isinstance(obj, dict):
            out = {}
            for k, v in obj.items():
                if k.lower() in ("authorization", "api_key", "api-key", "x-api-key"):
                    out[k] = "***"
                else:
                    out[k] = TraceLogger.redact(v)
            return out
        if isinstance(obj, list):
            return [TraceLogger.redact(v) for v in obj]
        return obj

    def log(self, provider_id: str, direction: str, payload: Any) -> None:
        line = json.dumps(
            {"provider": provider_id, "direction": direction, "payload": self.redact(payload)},
            ensure_ascii=False,
            sort_keys=True,
        )
        path = self.directory / f"{provider_id}.jsonl"
        with self._lock:
            with path.open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")


class Provider(Protocol):
    id: str

    def complete(self, req: ChatRequest) -> ChatExchange: ...


Transport = Callable[[str, dict[str, str], bytes, float], tuple[int, bytes]]


def _requests_transport(url: str, headers: dict[str, str], body: bytes, timeout_s: float) -> tuple[int, bytes]:
    try:
        resp = requests.post(url, headers=headers, data=body, timeout=timeout_s)
    except requests.RequestException as exc:
        raise TransportError(f"POST {url} failed: {exc}") from exc
    return resp.status_code, resp.content


class HttpProvider:
    """Chat-completion style JSON endpoint (OpenAI-compatible shape)."""

    def __init__(
        self,
        config: ProviderConfig,
        transport: Transport | None = None,
        trace: TraceLogger | None = None,
        timeout_s: float = 600.0,
    ):
        self.config = config
        self.id = config.id
        self._transport = transport or _requests_transport
        self._trace = trace
        self._timeout_s = timeout_s

    def complete(self, req: ChatRequest) -> ChatExchange:
        body: dict[str, Any] = {
            "model": self.config.model,
            "messages": [{"role": "system", "content": req.system_prompt}]
            + [{"role": role, "content": content} for role, content in req.messages],
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        }
        headers = {"Content-Type": "application/json"}
        if self.config.api_key_env:
            key = os.environ.get(self.config.api_key_env, "")
            if key:
                headers["Authorization"] = f"Bearer {key}"
        if self._trace:
            self._trace.log(self.id, "request", {"url": self.config.endpoint, "headers": headers, "body": body})
        started = time.monotonic()
        status, raw = self._transport(
            self.config.endpoint, headers, json.dumps(body).encode("utf-8"), self._timeout_s
        )
        latency_ms = int((time.monotonic() - started) * 1000)
        if not 200 <= status < 300:
            raise ProviderStatusError(status, raw.decode("utf-8", "replace"))
        try:
            payload = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise MalformedPayloadError(f"provider payload is not JSON: {exc}") from exc
        if self._trace:
            self._trace.log(self.id, "response", payload)
        try:
            text = payload["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise MalformedPayloadError("provider payload missing choices[0].message.content") from exc
        if not isinstance(text, str) or not text:
            raise MalformedPayloadError("provider returned an empty completion")
        usage = payload.get("usage") or {}
        prompt_tokens = usage.get("prompt_tokens")
        completion_tokens = usage.get("completion_tokens")
        estimated = False
        if not isinstance(prompt_tokens, int) or not isinstance(completion_tokens, int):
            prompt_text = req.system_prompt + "".join(c for _, c in req.messages)
            prompt_tokens = estimate_tokens(prompt_text)
            completion_tokens = estimate_tokens(text)
            estimated = True
        return ChatExchange(
            request=req,
            response_text=text,
            prompt_tokens=prompt_tokens,
            completion_tokens=completion_tokens,
            latency_ms=latency_ms,
            provider_id=self.id,
            tokens_estimated=estimated,
        )


class FixtureProvider:
    """Replays responses from a directory of {request_hash}.json files.

    A fixture is a pure function of the request content, so identical
    requests always yield identical exchanges; latency is pinned to zero to
    keep replayed artifacts byte-stable.
    """

    def __init__(self, directory: Path | str, provider_id: str = "fixture"):
        self.directory = Path(directory)
        self.id = provider_id

    def complete(self, req: ChatRequest) -> ChatExchange:
        digest = request_hash(req)
        path = self.directory / f"{digest}.json"
        if not path.exists():
            raise FixtureMissError(digest, self.directory)
        data = json.loads(path.read_text(encoding="utf-8"))
        text = data["response_text"]
        prompt_tokens = data.get("prompt_tokens")
        completion_tokens = data.get("completion_tokens")
        estimated = False
        if not isinstance(prompt_tokens, int) or not isinstance(completion_tokens, int):
            prompt_tokens = estimate_tokens(req.system_prompt + "".join(c for _, c in req.messages))
            completion_tokens = estimate_tokens(text)
            estimated = True
        return ChatExchange(
            request=req,
            response_text=text,
            prompt_tokens=prompt_tokens,
            completion_tokens=completion_tokens,
            latency_ms=0,
            provider_id=self.id,
            tokens_estimated=estimated,
        )


def record_fixture(
    directory: Path | str,
    req: ChatRequest,
    response_text: str,
    prompt_tokens: int | None = None,
    completion_tokens: int | None = None,
) -> Path:
    """Write a fixture file answering ``req``; returns the file path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{request_hash(req)}.json"
    payload: dict[str, Any] = {"response_text": response_text}
    if prompt_tokens is not None:
        payload["prompt_tokens"] = prompt_tokens
    if completion_tokens is not None:
        payload["completion_tokens"] = completion_tokens
    path.write_text(json.dumps(payload, indent=2, ensure_ascii=False, sort_keys=True) + "\n", encoding="utf-8")
    return path


class ScriptedProvider:
    """In-memory provider that answers from a queue; raises when exhausted.

    Intended for unit tests that script fail/pass sequences.
    """

    def __init__(self, responses: list[str], provider_id: str = "scripted"):
        self._responses = list(responses)
        self.id = provider_id
        self.requests: list[ChatRequest] = []

    def complete(self, req: ChatRequest) -> ChatExchange:
        self.requests.append(req)
        if not self._responses:
            raise FixtureMissError("(scripted queue empty)", Path("."))
        text = self._responses.pop(0)
        return ChatExchange(
            request=req,
            response_text=text,
            prompt_tokens=estimate_tokens(req.system_prompt + "".join(c for _, c in req.messages)),
            completion_tokens=estimate_tokens(text),
            latency_ms=0,
            provider_id=self.id,
            tokens_estimated=True,
        )


FIXTURE_SCHEME = "fixture:"


def provider_from_config(
    config: ProviderConfig,
    transport: Transport | None = None,
    trace: TraceLogger | None = None,
) -> Provider:
    if config.endpoint.startswith(FIXTURE_SCHEME):
        directory = config.endpoint[len(FIXTURE_SCHEME):]
        if directory.startswith("//"):
            directory = directory[2:]
        return FixtureProvider(directory, provider_id=config.id)
    return HttpProvider(config, transport=transport, trace=trace)


def complete(provider: Provider, req: ChatRequest) -> ChatExchange:
    """Single completion through any provider, with gateway error semantics."""
    return provider.complete(req)


CheckFn = Callable[[str], "str | None"]


def retry_with_feedback(
    provider: Provider,
    req: ChatRequest,
    policy: RetryPolicy,
    check: CheckFn,
) -> tuple[ChatExchange, list[ChatExchange], bool]:
    """pass@k self-correction loop.

    ``check`` maps response text to None (pass) or an error string (fail).
    On failure the next attempt's conversation gains the previous assistant
    output plus a rendered feedback turn. Transport and payload errors are
    not retried here; they abort the loop and propagate.
    """
    attempts: list[ChatExchange] = []
    current = req
    while True:
        exchange = complete(provider, current)
        attempts.append(exchange)
        error = check(exchange.response_text)
        if error is None:
            return exchange, attempts, True
        if len(attempts) >= policy.max_attempts:
            return exchange, attempts, False
        feedback = policy.feedback_template.format(
            previous_output=exchange.response_text, error=error
        )
        current = current.extended(exchange.response_text, feedback)


class TokenTally:
    """Thread-safe accumulator for run-level token accounting."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self.prompt_tokens = 0
        self.completion_tokens = 0
        self.exchanges = 0
        self.estimated_exchanges = 0

    def add(self, exchange: ChatExchange) -> None:
        with self._lock:
            self.prompt_tokens += exchange.prompt_tokens
            self.completion_tokens += exchange.completion_tokens
            self.exchanges += 1
            if exchange.tokens_estimated:
                self.estimated_exchanges += 1

    def add_all(self, exchanges: list[ChatExchange]) -> None:
        for e in exchanges:
            self.add(e)
