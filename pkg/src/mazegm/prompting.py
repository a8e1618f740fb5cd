"""Prompt assembly under a token budget, plus chat-history summarization.

The system instruction, rule sentences, and state block are mandatory and are
folded into the package's system text; history messages compete for whatever
budget remains. Call/result pairs are indivisible units throughout: dropping
half a pair produces prompts providers reject.
"""

from __future__ import annotations

import json
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum

from .functions import FunctionSpec
from .gateway import (
    ChatEvent,
    EventKind,
    GatewayError,
    PromptPackage,
    Provider,
    TurnKind,
    complete,
    estimate_tokens,
)
from .retrieval import EmbedFn, cosine


class ConcatMode(str, Enum):
    SIMPLE = "simple"
    RETRIEVAL = "retrieval"


class SummarizationMode(str, Enum):
    OFF = "off"
    PERIODIC = "periodic"
    ALWAYS = "always"


class RuleInjection(str, Enum):
    FULL = "full"
    TOP_K = "top_k"


class PromptBudgetError(ValueError):
    """The mandatory prompt parts alone exceed the context budget."""


@dataclass(frozen=True)
class PromptConfig:
    concat_mode: ConcatMode = ConcatMode.SIMPLE
    retrieval_k: int = 5  # messages kept when concat_mode is RETRIEVAL
    max_messages: int | None = None
    summarization: SummarizationMode = SummarizationMode.OFF
    summary_period: int = 2
    keep_raw_after_summary: bool = False
    rule_injection: RuleInjection = RuleInjection.TOP_K
    rule_k: int = 5
    context_budget: int = 8000

    def __post_init__(self):
        if self.retrieval_k < 1:
            raise ValueError("retrieval_k must be at least 1")
        if self.summary_period < 1:
            raise ValueError("summary_period must be at least 1")
        if self.rule_k < 1:
            raise ValueError("rule_k must be at least 1")
        if self.context_budget < 1:
            raise ValueError("context_budget must be positive")
        if self.max_messages is not None and self.max_messages < 0:
            raise ValueError("max_messages must be non-negative")

    def to_document(self) -> dict:
        return {
            "concat_mode": self.concat_mode.value,
            "retrieval_k": self.retrieval_k,
            "max_messages": self.max_messages,
            "summarization": self.summarization.value,
            "summary_period": self.summary_period,
            "keep_raw_after_summary": self.keep_raw_after_summary,
            "rule_injection": self.rule_injection.value,
            "rule_k": self.rule_k,
            "context_budget": self.context_budget,
        }

    @classmethod
    def from_document(cls, doc: dict) -> "PromptConfig":
        kwargs = dict(doc)
        if "concat_mode" in kwargs:
            kwargs["concat_mode"] = ConcatMode(kwargs["concat_mode"])
        if "summarization" in kwargs:
            kwargs["summarization"] = SummarizationMode(kwargs["summarization"])
        if "rule_injection" in kwargs:
            kwargs["rule_injection"] = RuleInjection(kwargs["rule_injection"])
        unknown = set(kwargs) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ValueError(f"unknown prompt config fields: {sorted(unknown)}")
        return cls(**kwargs)


@dataclass(frozen=True)
class Summary:
    """A condensation of the events whose timestamps fall in covering_range."""

    content: str
    covering_range: tuple[int, int]


def event_cost(event: ChatEvent) -> int:
    text = f"{event.speaker}: {event.content}"
    if event.call is not None:
        text += event.call.name + json.dumps(event.call.arguments)
    return estimate_tokens(text)


def tool_cost(spec: FunctionSpec) -> int:
    text = spec.name + spec.description + "".join(
        p.name + p.type + p.description for p in spec.parameters
    )
    return estimate_tokens(text)


@dataclass(frozen=True)
class _Unit:
    """One indivisible slice of history: a lone event or a call/result pair."""

    events: tuple[ChatEvent, ...]
    cost: int
    is_summary: bool

    @property
    def newest(self) -> int:
        return self.events[-1].timestamp

    @property
    def text(self) -> str:
        return " ".join(e.content for e in self.events if e.content)


def _units_of(history: Sequence[ChatEvent]) -> list[_Unit]:
    units: list[_Unit] = []
    i = 0
    while i < len(history):
        event = history[i]
        group = [event]
        if (
            event.kind is EventKind.FUNCTION_CALL
            and i + 1 < len(history)
            and history[i + 1].kind is EventKind.FUNCTION_RESULT
        ):
            group.append(history[i + 1])
            i += 1
        i += 1
        units.append(
            _Unit(tuple(group), sum(event_cost(e) for e in group),
                  event.kind is EventKind.SUMMARY)
        )
    return units


def _latest_summary(history: Sequence[ChatEvent]) -> ChatEvent | None:
    for event in reversed(history):
        if event.kind is EventKind.SUMMARY:
            return event
    return None


def _system_text(system_instruction: str, rules: Sequence[str],
                 states_block: str | None) -> str:
    parts = [system_instruction]
    if rules:
        parts.append("Game rules:\n" + "\n".join(f"- {r}" for r in rules))
    if states_block:
        parts.append(states_block)
    return "\n\n".join(parts)


def _trailing_player_texts(history: Sequence[ChatEvent]) -> list[str]:
    texts: list[str] = []
    for event in reversed(history):
        if event.kind is EventKind.PLAYER:
            texts.append(event.content)
        else:
            break
    return list(reversed(texts))


def build_prompt(
    history: Sequence[ChatEvent],
    states_block: str | None,
    rules: Sequence[str],
    config: PromptConfig,
    tools: Sequence[FunctionSpec],
    *,
    system_instruction: str,
    embed_fn: EmbedFn | None = None,
    query_messages: Sequence[str] | None = None,
) -> PromptPackage:
    """Assemble a PromptPackage that fits the configured token budget.

    Simple mode drops the oldest plain messages first, keeping a contiguous
    recent suffix, then the oldest summaries; retrieval mode keeps the most
    query-relevant messages and restores chronological order. The system
    instruction, rules, and state block are never dropped.
    """
    system = _system_text(system_instruction, rules, states_block)
    mandatory = estimate_tokens(system) + sum(tool_cost(t) for t in tools)
    if mandatory > config.context_budget:
        raise PromptBudgetError(
            f"mandatory prompt parts need {mandatory} tokens, "
            f"budget is {config.context_budget}"
        )

    events = list(history)
    if config.summarization is SummarizationMode.ALWAYS:
        # summarized play collapses to the latest summary plus what follows it
        latest = _latest_summary(events)
        if latest is not None:
            events = [e for e in events if e.timestamp >= latest.timestamp]

    units = _units_of(events)
    available = config.context_budget - mandatory

    def fits(selection: list[_Unit]) -> bool:
        cost = sum(u.cost for u in selection)
        count = sum(len(u.events) for u in selection)
        if config.max_messages is not None and count > config.max_messages:
            return False
        return cost <= available

    if config.concat_mode is ConcatMode.SIMPLE:
        normals = [u for u in units if not u.is_summary]
        summaries = [u for u in units if u.is_summary]
        while not fits(summaries + normals) and normals:
            normals.pop(0)  # least recent first
        while not fits(summaries + normals) and summaries:
            summaries.pop(0)
        kept = summaries + normals
    else:
        if embed_fn is None:
            raise ValueError("retrieval concatenation requires an embedder")
        queries = list(query_messages) if query_messages else _trailing_player_texts(events)
        if units and queries:
            texts = [u.text or " " for u in units]
            vectors = embed_fn(texts + queries)
            unit_vecs, query_vecs = vectors[: len(units)], vectors[len(units):]
            scores = [
                max(cosine(uv, qv) for qv in query_vecs) for uv in unit_vecs
            ]
        else:
            scores = [0.0] * len(units)
        limit = config.retrieval_k
        if config.max_messages is not None:
            limit = min(limit, config.max_messages)
        kept = []
        kept_count = 0
        kept_cost = 0
        by_relevance = sorted(
            range(len(units)), key=lambda i: (-scores[i], -units[i].newest)
        )
        for i in by_relevance:
            unit = units[i]
            if kept_count + len(unit.events) > limit:
                continue
            if kept_cost + unit.cost > available:
                continue
            kept.append(unit)
            kept_count += len(unit.events)
            kept_cost += unit.cost

    ordered = sorted(kept, key=lambda u: u.newest)
    messages = tuple(e for u in ordered for e in u.events)
    token_estimate = mandatory + sum(u.cost for u in ordered)
    return PromptPackage(system, tuple(tools), messages, token_estimate)


def count_completed_interactions(events: Sequence[ChatEvent]) -> int:
    """Player-run/GM-reply exchanges: a GM message closing one or more player
    messages counts as one completed interaction."""
    count = 0
    pending_player = False
    for event in events:
        if event.kind is EventKind.PLAYER:
            pending_player = True
        elif event.kind is EventKind.GM and pending_player:
            count += 1
            pending_player = False
    return count


SUMMARIZER_INSTRUCTION = (
    "You keep the campaign log for a tabletop role-playing game. Condense the "
    "following play history into a short summary that preserves every fact the "
    "game master still needs: discovered objects, bargains struck, injuries, "
    "NPC attitudes, dice outcomes that changed the fiction, and unresolved threats."
)


def maybe_summarize(
    history: Sequence[ChatEvent], config: PromptConfig, provider: Provider
) -> tuple[Summary, list[ChatEvent]] | None:
    """Summarize the uncovered span of history when the config calls for it.

    Returns the Summary and the new history (raw messages replaced by the
    summary event unless keep_raw_after_summary), or None when nothing fires.
    Provider failures degrade to None: the turn goes on with raw history.
    """
    if config.summarization is SummarizationMode.OFF or not history:
        return None
    previous = _latest_summary(history)
    if previous is None:
        first = min(e.timestamp for e in history)
        fresh = list(history)
    else:
        first = previous.data["covering_range"][1] + 1
        fresh = [e for e in history if e.timestamp > previous.timestamp]
    last = max(e.timestamp for e in history)
    in_range = [e for e in history if first <= e.timestamp <= last]
    if not in_range:
        return None
    threshold = 1 if config.summarization is SummarizationMode.ALWAYS else config.summary_period
    if count_completed_interactions(fresh) < threshold:
        return None

    pkg = PromptPackage(
        SUMMARIZER_INSTRUCTION,
        (),
        tuple(in_range),
        estimate_tokens(SUMMARIZER_INSTRUCTION) + sum(event_cost(e) for e in in_range),
    )
    try:
        turn = complete(provider, pkg)
    except GatewayError:
        return None
    if turn.kind is not TurnKind.TEXT:
        return None

    summary = Summary(turn.content, (first, last))
    event = ChatEvent(
        EventKind.SUMMARY,
        "summarizer",
        turn.content,
        timestamp=last + 1,
        data={"covering_range": [first, last]},
    )
    if config.keep_raw_after_summary:
        new_history = list(history) + [event]
    else:
        new_history = [e for e in history if e.timestamp < first] + [event]
    return summary, new_history
