"""Provider-agnostic chat completion and embeddings, with a scripted double.

The live provider speaks an OpenAI-compatible chat-completions schema; the
scripted provider replays a fixed list of turns and records every prompt it
receives, which is what the loop and gating tests assert against.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import re
import time
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import Protocol

from .functions import SPECS_BY_NAME, FunctionCall, FunctionSpec

log = logging.getLogger(__name__)

EMBED_DIM = 256


class EventKind(str, Enum):
    PLAYER = "player"
    GM = "gm"
    FUNCTION_CALL = "function_call"
    FUNCTION_RESULT = "function_result"
    SUMMARY = "summary"
    SYSTEM = "system"


@dataclass(frozen=True)
class ChatEvent:
    """One transcript entry; ``call`` is set on call events, ``call_id`` on results."""

    kind: EventKind
    speaker: str
    content: str
    timestamp: int
    call: FunctionCall | None = None
    call_id: str | None = None
    data: dict | None = None

    def to_document(self) -> dict:
        doc = {
            "kind": self.kind.value,
            "speaker": self.speaker,
            "content": self.content,
            "timestamp": self.timestamp,
        }
        if self.call is not None:
            doc["call"] = {
                "name": self.call.name,
                "arguments": self.call.arguments,
                "call_id": self.call.call_id,
            }
        if self.call_id is not None:
            doc["call_id"] = self.call_id
        if self.data is not None:
            doc["data"] = self.data
        return doc


def event_from_document(doc: dict) -> ChatEvent:
    call = None
    if "call" in doc:
        call = FunctionCall(doc["call"]["name"], doc["call"]["arguments"], doc["call"]["call_id"])
    return ChatEvent(
        kind=EventKind(doc["kind"]),
        speaker=doc["speaker"],
        content=doc["content"],
        timestamp=doc["timestamp"],
        call=call,
        call_id=doc.get("call_id"),
        data=doc.get("data"),
    )


class PairingError(ValueError):
    pass


def validate_pairing(events: Sequence[ChatEvent]) -> None:
    """Check call/result adjacency and strictly increasing timestamps."""
    pending: ChatEvent | None = None
    last_ts = None
    for event in events:
        if last_ts is not None and event.timestamp <= last_ts:
            raise PairingError(
                f"timestamps must strictly increase: {event.timestamp} after {last_ts}"
            )
        last_ts = event.timestamp
        if pending is not None:
            if event.kind is not EventKind.FUNCTION_RESULT:
                raise PairingError(
                    f"call {pending.call.call_id} not followed by its result"
                )
            if event.call_id != pending.call.call_id:
                raise PairingError(
                    f"result call_id {event.call_id!r} does not match pending "
                    f"call {pending.call.call_id!r}"
                )
            pending = None
        elif event.kind is EventKind.FUNCTION_RESULT:
            raise PairingError(f"orphan function result at timestamp {event.timestamp}")
        if event.kind is EventKind.FUNCTION_CALL:
            if event.call is None:
                raise PairingError("function-call event without a call payload")
            pending = event
    if pending is not None:
        raise PairingError(f"transcript ends with unanswered call {pending.call.call_id}")


class TurnKind(str, Enum):
    TEXT = "text"
    CALL = "call"
    STOP = "stop"


@dataclass(frozen=True)
class ModelTurn:
    """Exactly one of: a text reply, a function call, or a stop."""

    kind: TurnKind
    content: str | None = None
    call: FunctionCall | None = None

    def __post_init__(self):
        populated = (self.content is not None) + (self.call is not None)
        expected = {TurnKind.TEXT: 1, TurnKind.CALL: 1, TurnKind.STOP: 0}[self.kind]
        if populated != expected or (self.kind is TurnKind.TEXT) != (self.content is not None):
            raise ValueError(f"malformed {self.kind.value} turn")


def text_turn(content: str) -> ModelTurn:
    return ModelTurn(TurnKind.TEXT, content=content)


def call_turn(call: FunctionCall) -> ModelTurn:
    return ModelTurn(TurnKind.CALL, call=call)


def stop_turn() -> ModelTurn:
    return ModelTurn(TurnKind.STOP)


def turn_to_document(turn: ModelTurn) -> dict:
    if turn.kind is TurnKind.TEXT:
        return {"kind": "text", "content": turn.content}
    if turn.kind is TurnKind.CALL:
        return {
            "kind": "call",
            "name": turn.call.name,
            "arguments": turn.call.arguments,
            "call_id": turn.call.call_id,
        }
    return {"kind": "stop"}


def turn_from_document(doc: dict) -> ModelTurn:
    kind = doc["kind"]
    if kind == "text":
        return text_turn(doc["content"])
    if kind == "call":
        return call_turn(FunctionCall(doc["name"], doc["arguments"], doc["call_id"]))
    if kind == "stop":
        return stop_turn()
    raise ValueError(f"unknown turn kind {kind!r}")


@dataclass(frozen=True)
class PromptPackage:
    system_instruction: str
    tool_specs: tuple[FunctionSpec, ...]
    messages: tuple[ChatEvent, ...]
    token_estimate: int

    def __post_init__(self):
        if not self.system_instruction:
            raise ValueError("system_instruction must be present")
        if self.token_estimate < 0:
            raise ValueError("token_estimate must be non-negative")
        object.__setattr__(self, "tool_specs", tuple(self.tool_specs))
        object.__setattr__(self, "messages", tuple(self.messages))


class GatewayError(Exception):
    pass


class TransportError(GatewayError):
    """Network-level failure; retryable."""


class ProviderError(GatewayError):
    """Protocol-level failure; carries the offending payload when known."""

    def __init__(self, message: str, payload: object = None):
        super().__init__(message)
        self.payload = payload


def estimate_tokens(text: str) -> int:
    """Cheap length proxy: one token per four characters, rounded up."""
    return (len(text) + 3) // 4


class Provider(Protocol):
    def complete(self, prompt: PromptPackage) -> ModelTurn: ...

    def embed(self, texts: Sequence[str]) -> list[list[float]]: ...


def complete(provider: Provider, prompt: PromptPackage, *, retries: int = 2,
             backoff: float = 0.5, sleep=time.sleep) -> ModelTurn:
    """One model turn, with bounded retry on transport failure.

    A call naming a function outside the global registry is a protocol
    violation (the provider invented a tool) and raises ProviderError.
    """
    attempt = 0
    while True:
        try:
            turn = provider.complete(prompt)
            break
        except TransportError:
            if attempt >= retries:
                raise
            sleep(backoff * 2**attempt)
            attempt += 1
    if turn.kind is TurnKind.CALL and turn.call.name not in SPECS_BY_NAME:
        raise ProviderError(
            f"provider called unregistered function {turn.call.name!r}",
            payload=turn.call,
        )
    return turn


def embed(provider: Provider, texts: Sequence[str], *, retries: int = 2,
          backoff: float = 0.5, sleep=time.sleep) -> list[list[float]]:
    """Embed a non-empty batch; all vectors must share one dimension."""
    if not texts:
        raise ValueError("embed requires at least one text")
    attempt = 0
    while True:
        try:
            vectors = provider.embed(texts)
            break
        except TransportError:
            if attempt >= retries:
                raise
            sleep(backoff * 2**attempt)
            attempt += 1
    dims = {len(v) for v in vectors}
    if len(vectors) != len(texts) or len(dims) != 1:
        raise ProviderError(
            f"embedding batch shape mismatch: {len(vectors)} vectors, dims {sorted(dims)}"
        )
    return vectors


# ---------------------------------------------------------------------------
# Offline deterministic embedding

_WORD = re.compile(r"[a-z0-9']+")


def hash_embed(text: str, dim: int = EMBED_DIM) -> list[float]:
    """Hashed term-frequency vector; same text always maps to the same vector."""
    vec = [0.0] * dim
    words = _WORD.findall(text.lower())
    if not words:
        vec[0] = 1.0
        return vec
    for word in words:
        bucket = int.from_bytes(hashlib.md5(word.encode()).digest()[:4], "big") % dim
        vec[bucket] += 1.0
    norm = math.sqrt(sum(x * x for x in vec))
    return [x / norm for x in vec]


# ---------------------------------------------------------------------------
# Scripted provider


class ScriptedProvider:
    """Replays a fixed script of turns and records the prompts it was given."""

    def __init__(self, script: Sequence[ModelTurn] = (),
                 canned_embeddings: dict[str, Sequence[float]] | None = None):
        self._script = list(script)
        self._cursor = 0
        self.canned_embeddings = dict(canned_embeddings or {})
        self.recorded_prompts: list[PromptPackage] = []

    @property
    def exhausted(self) -> bool:
        return self._cursor >= len(self._script)

    def complete(self, prompt: PromptPackage) -> ModelTurn:
        self.recorded_prompts.append(prompt)
        if self.exhausted:
            return stop_turn()
        turn = self._script[self._cursor]
        self._cursor += 1
        return turn

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        return [
            list(self.canned_embeddings[t]) if t in self.canned_embeddings else hash_embed(t)
            for t in texts
        ]


def scripted_provider(script: Sequence[ModelTurn],
                      canned_embeddings: dict[str, Sequence[float]] | None = None) -> ScriptedProvider:
    return ScriptedProvider(script, canned_embeddings)


# ---------------------------------------------------------------------------
# Live OpenAI-compatible provider

_WIRE_TYPES = {"text": "string", "integer": "integer", "boolean": "boolean"}


def to_wire_tool(spec: FunctionSpec) -> dict:
    """FunctionSpec in the chat-completions tool schema."""
    properties = {
        p.name: {"type": _WIRE_TYPES[p.type], "description": p.description}
        for p in spec.parameters
    }
    return {
        "type": "function",
        "function": {
            "name": spec.name,
            "description": spec.description,
            "parameters": {
                "type": "object",
                "properties": properties,
                "required": [p.name for p in spec.parameters if p.required],
            },
        },
    }


def to_wire_messages(prompt: PromptPackage) -> list[dict]:
    messages: list[dict] = [{"role": "system", "content": prompt.system_instruction}]
    for event in prompt.messages:
        if event.kind is EventKind.PLAYER:
            messages.append({"role": "user", "content": f"{event.speaker}: {event.content}"})
        elif event.kind is EventKind.GM:
            messages.append({"role": "assistant", "content": event.content})
        elif event.kind is EventKind.FUNCTION_CALL:
            messages.append({
                "role": "assistant",
                "content": None,
                "tool_calls": [{
                    "id": event.call.call_id,
                    "type": "function",
                    "function": {
                        "name": event.call.name,
                        "arguments": json.dumps(event.call.arguments),
                    },
                }],
            })
        elif event.kind is EventKind.FUNCTION_RESULT:
            messages.append({
                "role": "tool",
                "tool_call_id": event.call_id,
                "content": event.content,
            })
        elif event.kind is EventKind.SUMMARY:
            messages.append({
                "role": "system",
                "content": f"Summary of earlier play: {event.content}",
            })
        else:
            messages.append({"role": "system", "content": event.content})
    return messages


def _parse_wire_turn(body: dict) -> ModelTurn:
    try:
        message = body["choices"][0]["message"]
    except (KeyError, IndexError, TypeError):
        raise ProviderError("malformed completion response", payload=body)
    tool_calls = message.get("tool_calls")
    if tool_calls:
        call = tool_calls[0]
        try:
            arguments = json.loads(call["function"]["arguments"] or "{}")
            if not isinstance(arguments, dict):
                raise ValueError("arguments must be an object")
            return call_turn(
                FunctionCall(call["function"]["name"], arguments, call.get("id") or "call-0")
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ProviderError(f"malformed tool-call payload: {exc}", payload=call)
    content = message.get("content")
    if content:
        return text_turn(content)
    return stop_turn()


class OpenAIChatProvider:
    """Chat-completions and embeddings over an OpenAI-compatible endpoint.

    Configured from the environment: MAZEGM_API_BASE, MAZEGM_API_KEY,
    MAZEGM_MODEL, MAZEGM_EMBED_MODEL.
    """

    def __init__(self, base_url: str | None = None, api_key: str | None = None,
                 model: str | None = None, embed_model: str | None = None,
                 timeout: float = 60.0, debug: bool = False):
        self.base_url = (base_url or os.environ.get("MAZEGM_API_BASE",
                                                    "https://api.openai.com/v1")).rstrip("/")
        self.api_key = api_key or os.environ.get("MAZEGM_API_KEY", "")
        self.model = model or os.environ.get("MAZEGM_MODEL", "gpt-4")
        self.embed_model = embed_model or os.environ.get(
            "MAZEGM_EMBED_MODEL", "text-embedding-3-small"
        )
        self.timeout = timeout
        self.debug = debug

    def _post(self, path: str, payload: dict) -> dict:
        import httpx

        if self.debug:
            log.debug("POST %s%s %s", self.base_url, path, json.dumps(payload)[:2000])
        try:
            response = httpx.post(
                f"{self.base_url}{path}",
                json=payload,
                headers={"Authorization": f"Bearer {self.api_key}"},
                timeout=self.timeout,
            )
        except httpx.HTTPError as exc:
            raise TransportError(str(exc)) from exc
        if response.status_code >= 500:
            raise TransportError(f"server error {response.status_code}")
        if response.status_code != 200:
            raise ProviderError(f"request failed: {response.status_code}",
                                payload=response.text)
        body = response.json()
        if self.debug:
            log.debug("response %s", json.dumps(body)[:2000])
        return body

    def complete(self, prompt: PromptPackage) -> ModelTurn:
        payload = {"model": self.model, "messages": to_wire_messages(prompt)}
        if prompt.tool_specs:
            payload["tools"] = [to_wire_tool(s) for s in prompt.tool_specs]
        return _parse_wire_turn(self._post("/chat/completions", payload))

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        body = self._post("/embeddings", {"model": self.embed_model, "input": list(texts)})
        try:
            return [row["embedding"] for row in body["data"]]
        except (KeyError, TypeError):
            raise ProviderError("malformed embeddings response", payload=body)
