"""Chat-completion backends behind one interface.

The harness core only ever calls ``backend.complete(request)``. Real
experiments use the HTTP backend against an OpenAI-compatible endpoint;
tests and offline runs use scripted backends that replay deterministic
policies with zero network use.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol

import requests

from .seeding import derive_rng
from .tokens import CHARS_DIV_4, count_tokens

log = logging.getLogger(__name__)


class BackendError(Exception):
    """Non-recoverable backend failure (transport, credentials, policy exhausted)."""


@dataclass(frozen=True)
class Message:
    role: str  # system | assistant | user
    text: str


@dataclass(frozen=True)
class ChatRequest:
    messages: tuple[Message, ...]
    model_name: str = ""
    temperature: float = 0.0
    max_output_tokens: int = 1024

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValueError("a chat request needs at least one message")
        if self.messages[0].role != "system":
            raise ValueError("the first message must carry the system/task text")


@dataclass(frozen=True)
class ChatReply:
    text: str
    tokens_in: int
    tokens_out: int


def request_text(request: ChatRequest) -> str:
    """Flatten a request for counting and substring matching."""
    return "\n".join(m.text for m in request.messages)


class Backend(Protocol):
    def complete(self, request: ChatRequest) -> ChatReply: ...


# -- HTTP backend -----------------------------------------------------------

TRANSIENT_STATUS = {408, 409, 429, 500, 502, 503, 504}


class HttpBackend:
    """OpenAI-compatible chat-completion client with retry and a permit pool.

    Transient failures (connection errors, 429, 5xx) are retried with
    exponential backoff up to ``retries`` total attempts. Usage numbers come
    from the response when present, otherwise from local counting.
    """

    def __init__(
        self,
        endpoint_url: str,
        model_name: str = "",
        api_key_env: str = "GRAPHBENCH_API_KEY",
        retries: int = 3,
        timeout: float = 60.0,
        permits: int = 8,
        backoff: float = 0.5,
        counting_mode: str = CHARS_DIV_4,
    ):
        if retries < 1:
            raise ValueError("retries must be at least 1")
        api_key = os.environ.get(api_key_env, "")
        if not api_key:
            raise BackendError(f"missing credential: set {api_key_env}")
        self._url = endpoint_url.rstrip("/") + "/chat/completions"
        self._model_name = model_name
        self._headers = {
            "Authorization": f"Bearer {api_key}",
            "Content-Type": "application/json",
        }
        self._retries = retries
        self._timeout = timeout
        self._backoff = backoff
        self._counting_mode = counting_mode
        self._permits = threading.Semaphore(permits)
        self._session = requests.Session()

    def complete(self, request: ChatRequest) -> ChatReply:
        payload = {
            "model": request.model_name or self._model_name,
            "messages": [{"role": m.role, "content": m.text} for m in request.messages],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        }
        last_error: Exception | None = None
        for attempt in range(self._retries):
            if attempt:
                time.sleep(self._backoff * (2 ** (attempt - 1)))
            try:
                with self._permits:
                    response = self._session.post(
                        self._url, json=payload, headers=self._headers, timeout=self._timeout
                    )
            except requests.RequestException as exc:
                last_error = exc
                log.warning("request attempt %d failed: %s", attempt + 1, exc)
                continue
            if response.status_code in TRANSIENT_STATUS:
                last_error = BackendError(f"HTTP {response.status_code}")
                log.warning("request attempt %d got HTTP %d", attempt + 1, response.status_code)
                continue
            if response.status_code != 200:
                raise BackendError(f"HTTP {response.status_code}: {response.text[:200]}")
            return self._parse_reply(request, response)
        raise BackendError(f"request failed after {self._retries} attempts: {last_error}")

    def _parse_reply(self, request: ChatRequest, response: requests.Response) -> ChatReply:
        try:
            body = response.json()
            text = body["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"malformed completion response: {exc}") from exc
        usage = body.get("usage") or {}
        tokens_in = usage.get("prompt_tokens")
        tokens_out = usage.get("completion_tokens")
        if not isinstance(tokens_in, int):
            tokens_in = count_tokens(request_text(request), self._counting_mode)
        if not isinstance(tokens_out, int):
            tokens_out = count_tokens(text, self._counting_mode)
        return ChatReply(text=text, tokens_in=tokens_in, tokens_out=tokens_out)


# -- Scripted backend -------------------------------------------------------

# A responder computes a reply from the visible transcript. Signature:
# responder(request, rng, step, params) -> str
Responder = Callable[[ChatRequest, "ScriptedBackend"], str]

RESPONDERS: dict[str, Callable] = {}


def register_responder(name: str):
    def wrap(fn):
        RESPONDERS[name] = fn
        return fn

    return wrap


@dataclass(frozen=True)
class Rule:
    """One scripted rule: matchers are ANDed; the first matching rule fires.

    Exactly one of ``reply`` or ``responder`` must be set. ``responder``
    names a registered oracle function computed over the visible transcript.
    """

    reply: str | None = None
    responder: str | None = None
    step: int | None = None
    contains: str | None = None
    pattern: str | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if (self.reply is None) == (self.responder is None):
            raise ValueError("rule needs exactly one of reply or responder")
        if self.responder is not None and self.responder not in RESPONDERS:
            from . import responders  # noqa: F401  (registers the built-in set)

            if self.responder not in RESPONDERS:
                raise ValueError(f"unknown responder: {self.responder!r}")

    def matches(self, step: int, text: str) -> bool:
        import re

        if self.step is not None and self.step != step:
            return False
        if self.contains is not None and self.contains not in text:
            return False
        if self.pattern is not None and not re.search(self.pattern, text):
            return False
        return True


@dataclass(frozen=True)
class ScriptedPolicy:
    rules: tuple[Rule, ...] = ()
    default: str | None = None
    seed: int = 0


class ScriptedBackend:
    """Deterministic replay of a scripted policy; one instance per episode.

    The step counter is the number of completions already served, and the
    per-episode RNG is derived from the policy seed and the episode key, so
    replies are bit-reproducible regardless of scheduling.
    """

    def __init__(self, policy: ScriptedPolicy, episode_key: tuple = (), counting_mode: str = CHARS_DIV_4):
        self.policy = policy
        self.episode_key = episode_key
        self.rng = derive_rng("scripted", policy.seed, *episode_key)
        self.step = 0
        self.params: dict = {}
        self._counting_mode = counting_mode

    def complete(self, request: ChatRequest) -> ChatReply:
        text = request_text(request)
        reply: str | None = None
        for rule in self.policy.rules:
            if rule.matches(self.step, text):
                if rule.reply is not None:
                    reply = rule.reply
                else:
                    self.params = rule.params
                    reply = RESPONDERS[rule.responder](request, self)
                break
        if reply is None:
            reply = self.policy.default
        if reply is None:
            raise BackendError(f"scripted policy exhausted at step {self.step}")
        self.step += 1
        return ChatReply(
            text=reply,
            tokens_in=count_tokens(text, self._counting_mode),
            tokens_out=count_tokens(reply, self._counting_mode),
        )


def load_policy(path: str | Path) -> ScriptedPolicy:
    """Load a scripted policy from JSON: {"seed": 0, "default": ..., "rules": [...]}."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    rules = tuple(
        Rule(
            reply=entry.get("reply"),
            responder=entry.get("responder"),
            step=entry.get("step"),
            contains=entry.get("contains"),
            pattern=entry.get("pattern"),
            params=entry.get("params", {}),
        )
        for entry in data.get("rules", [])
    )
    return ScriptedPolicy(rules=rules, default=data.get("default"), seed=data.get("seed", 0))
