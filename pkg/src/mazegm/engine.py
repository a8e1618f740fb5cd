"""Session orchestration: the function-calling turn loop, outcome checking,
clock advancement, and scripted scene self-play.

One Session is one logical thread of execution. The GameMaster binds a
provider and rule store and can drive any number of sessions, each owning its
state and random source.
"""

from __future__ import annotations

import json
from collections.abc import Callable, Iterator, Sequence
from dataclasses import dataclass, field
from enum import Enum
from random import Random

from . import gateway
from .functions import active_registry, dispatch
from .gateway import (
    ChatEvent,
    EventKind,
    GatewayError,
    PromptPackage,
    Provider,
    TurnKind,
    estimate_tokens,
)
from .profiles import GmSettingProfile, StateUpdateMode, StateVisibility
from .prompting import (
    PromptConfig,
    RuleInjection,
    build_prompt,
    maybe_summarize,
)
from .retrieval import RuleStore, full_injection_k, top_k_rules
from .transcript import GameLog, TurnSnapshot
from .state import (
    GameClock,
    NpcSpec,
    PlayerState,
    SceneState,
    StateError,
    StateValidationError,
    apply_diff,
    diff_states,
    parse_player_state,
    parse_scene_state,
    render_state_block,
)

DEFAULT_GM_INSTRUCTION = (
    "You are the game master of a labyrinth-crawl tabletop role-playing game. "
    "Narrate the world vividly but briefly, play every NPC, and keep the "
    "players under pressure from the thirteen-hour clock. When a player "
    "attempts something with an uncertain outcome, call for a dice test and "
    "set a difficulty from 1 to 6; a relevant trait lets them keep the higher "
    "of two dice, a relevant flaw the lower. Use the provided functions to "
    "change the world instead of merely describing changes, and never invent "
    "rules that contradict the ones given. Address the players in the second "
    "person and end your turn when the spotlight returns to them."
)

REPLACEMENT_STATES_INSTRUCTION = (
    "Rewrite the full game state to reflect everything that just happened in "
    "play. Reply with a single JSON object of the form "
    '{"scene": {...}, "players": [{...}]} using exactly the field layout of '
    "the current state shown below. Keep every player present, keep field "
    "names unchanged, and carry over values that did not change."
)

NPC_GENERATOR_INSTRUCTION = (
    "You invent non-player characters for a labyrinth-crawl game. Reply with "
    'a single JSON object {"kin": ..., "persona": ..., "goal": ..., '
    '"trait": ..., "flaw": ...}, each value one short phrase, no other text.'
)

JUDGE_INSTRUCTION = (
    "You referee a tabletop game scene. Given the success condition, the "
    "failure condition, and the recent play, answer with exactly one word: "
    "SUCCESS if the success condition has been met, FAILURE if the failure "
    "condition has been met, or CONTINUE if neither has happened yet."
)

MAX_CALLS_PER_TURN = 10
MAX_ROUNDS_PER_TURN = 40  # total provider round-trips; guards Text-only loops


class SessionStatus(str, Enum):
    RUNNING = "running"
    SUCCESS = "success"
    FAILURE = "failure"


class Outcome(str, Enum):
    CONTINUE = "continue"
    SUCCESS = "success"
    FAILURE = "failure"


class SessionTerminatedError(RuntimeError):
    pass


class ClockTrigger(str, Enum):
    FAILED_TEST = "failed_test"
    SCENE_FAILURE = "scene_failure"
    EXPLICIT_GM_INCREMENT = "explicit_gm_increment"


@dataclass
class Session:
    """All mutable state of one play session."""

    scene: SceneState
    players: tuple[PlayerState, ...]
    profile: GmSettingProfile
    prompt_config: PromptConfig
    seed: int
    scene_id: str = ""
    clock: GameClock = field(default_factory=GameClock)
    status: SessionStatus = SessionStatus.RUNNING
    transcript: list[ChatEvent] = field(default_factory=list)  # append-only
    history: list[ChatEvent] = field(default_factory=list)  # prompt memory
    snapshots: list[TurnSnapshot] = field(default_factory=list)
    rng: Random = field(init=False)
    turns_completed: int = 0
    _counter: int = 0

    def __post_init__(self):
        self.players = tuple(self.players)
        self.rng = Random(self.seed)
        if not self.snapshots:
            self.snapshots.append(snapshot(self))

    def next_timestamp(self) -> int:
        self._counter += 1
        return self._counter

    def player_named(self, name: str) -> PlayerState | None:
        return next((p for p in self.players if p.name == name), None)

    @property
    def running(self) -> bool:
        return self.status is SessionStatus.RUNNING


def new_session(
    scene: SceneState,
    players: Sequence[PlayerState],
    profile: GmSettingProfile,
    prompt_config: PromptConfig,
    seed: int,
    scene_id: str = "",
) -> Session:
    return Session(scene, tuple(players), profile, prompt_config, seed, scene_id)


NpcGenerator = Callable[[str, str], NpcSpec]


class GameMaster:
    """Binds a provider and rule store; drives sessions through turns."""

    def __init__(
        self,
        provider: Provider,
        rule_store: RuleStore | None = None,
        system_instruction: str = DEFAULT_GM_INSTRUCTION,
        npc_generator: NpcGenerator | None = None,
        judge_provider: Provider | None = None,
        clock_on_failed_test: bool = False,
        max_calls_per_turn: int = MAX_CALLS_PER_TURN,
    ):
        self.provider = provider
        self.rule_store = rule_store
        self.system_instruction = system_instruction
        self.npc_generator = npc_generator
        self.judge_provider = judge_provider or provider
        self.clock_on_failed_test = clock_on_failed_test
        self.max_calls_per_turn = max_calls_per_turn

    # -- prompt assembly -----------------------------------------------------

    def _embed_fn(self):
        return lambda texts: gateway.embed(self.provider, texts)

    def _states_block(self, session: Session) -> str | None:
        visibility = session.profile.states_in_prompt
        if visibility is StateVisibility.EVERY_TURN or session.turns_completed == 0:
            return render_state_block(session.scene, session.players)
        return None

    def _build(self, session: Session, queries: Sequence[str]) -> PromptPackage:
        config = session.prompt_config
        rules: list[str] = []
        if self.rule_store is not None:
            if config.rule_injection is RuleInjection.FULL or not queries:
                rules = list(self.rule_store.sentences)
            else:
                result = top_k_rules(self.rule_store, queries,
                                     min(config.rule_k, full_injection_k(self.rule_store)),
                                     self._embed_fn())
                rules = [self.rule_store.sentences[i] for i in result.ids]
        return build_prompt(
            session.history,
            self._states_block(session),
            rules,
            config,
            active_registry(session.profile),
            system_instruction=self.system_instruction,
            embed_fn=self._embed_fn(),
            query_messages=queries or None,
        )

    # -- event plumbing -------------------------------------------------------

    def _append(self, session: Session, kind: EventKind, speaker: str, content: str,
                **kw) -> ChatEvent:
        event = ChatEvent(kind, speaker, content, session.next_timestamp(), **kw)
        session.transcript.append(event)
        session.history.append(event)
        return event

    # -- NPC sub-generation ----------------------------------------------------

    def _default_npc_generator(self, session: Session) -> NpcGenerator:
        def generate(name: str, context: str) -> NpcSpec:
            request = ChatEvent(
                EventKind.PLAYER, "system",
                f"Invent the NPC named {name!r}. Context: {context}", 1,
            )
            pkg = PromptPackage(
                NPC_GENERATOR_INSTRUCTION, (), (request,),
                estimate_tokens(NPC_GENERATOR_INSTRUCTION + request.content),
            )
            try:
                turn = gateway.complete(self.provider, pkg)
            except GatewayError as exc:
                raise StateError(f"NPC generator unavailable: {exc}")
            if turn.kind is not TurnKind.TEXT:
                raise StateError("NPC generator returned no text")
            try:
                doc = json.loads(_strip_fences(turn.content))
                return NpcSpec(**{k: doc[k] for k in ("kin", "persona", "goal",
                                                      "trait", "flaw")})
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise StateError(f"NPC generator emitted an invalid spec: {exc}")

        return generate

    # -- the turn loop ----------------------------------------------------------

    def iter_gm_turn(
        self, session: Session, player_messages: Sequence[tuple[str, str]]
    ) -> Iterator[ChatEvent]:
        """Run one GM turn, yielding each transcript event as it is produced."""
        if not session.running:
            raise SessionTerminatedError(f"session already ended: {session.status.value}")

        queries = [text for _, text in player_messages]
        for player, text in player_messages:
            yield self._append(session, EventKind.PLAYER, player, text)

        allowed = {spec.name for spec in active_registry(session.profile)}
        npc_generator = self.npc_generator or self._default_npc_generator(session)
        calls_made = 0
        produced_text = False

        for _ in range(MAX_ROUNDS_PER_TURN):
            prompt = self._build(session, queries)
            turn = gateway.complete(self.provider, prompt)

            if turn.kind is TurnKind.STOP:
                break

            if turn.kind is TurnKind.TEXT:
                produced_text = True
                yield self._append(session, EventKind.GM, "GM", turn.content)
                continue

            call = turn.call
            yield self._append(session, EventKind.FUNCTION_CALL, "GM", "", call=call)
            if call.name not in allowed:
                # gated off in this setting; the model is told, state untouched
                yield self._append(
                    session, EventKind.FUNCTION_RESULT, "system",
                    f"The function {call.name!r} is not available in this setting.",
                    call_id=call.call_id, data={"rejected": True},
                )
            else:
                outcome = dispatch(
                    call, session.scene, session.players, session.rng,
                    sub_generator=npc_generator,
                )
                data: dict = {"is_error": outcome.is_error}
                if outcome.test_result is not None:
                    data["test_result"] = outcome.test_result.to_document()
                if not outcome.diff.is_empty():
                    data["diff"] = outcome.diff.to_document()
                yield self._append(
                    session, EventKind.FUNCTION_RESULT, "system", outcome.message,
                    call_id=call.call_id, data=data,
                )
                if (
                    session.profile.state_update_mode is StateUpdateMode.BY_FUNCTIONS
                    and not outcome.diff.is_empty()
                ):
                    session.scene, session.players = apply_diff(
                        outcome.diff, (session.scene, session.players)
                    )
                if (
                    self.clock_on_failed_test
                    and outcome.test_result is not None
                    and not outcome.test_result.success
                ):
                    yield self.advance_clock(session, ClockTrigger.FAILED_TEST)

            calls_made += 1
            if calls_made >= self.max_calls_per_turn:
                yield self._append(
                    session, EventKind.SYSTEM, "system",
                    f"Function-call limit of {self.max_calls_per_turn} reached "
                    "for this turn; play continues without further calls.",
                    data={"guard": "call_cap"},
                )
                break
        else:
            yield self._append(
                session, EventKind.SYSTEM, "system",
                "Round limit reached for this turn.", data={"guard": "round_cap"},
            )

        if session.profile.state_update_mode is StateUpdateMode.BY_GENERATION and produced_text:
            yield from self._regenerate_states(session)

        session.turns_completed += 1
        summarized = maybe_summarize(session.history, session.prompt_config, self.provider)
        if summarized is not None:
            summary, new_history = summarized
            session.history = new_history
            summary_event = next(e for e in reversed(new_history)
                                 if e.kind is EventKind.SUMMARY)
            session.transcript.append(summary_event)
            session._counter = max(session._counter, summary_event.timestamp)
            yield summary_event
        session.snapshots.append(snapshot(session))

    def gm_turn(
        self, session: Session, player_messages: Sequence[tuple[str, str]]
    ) -> list[ChatEvent]:
        return list(self.iter_gm_turn(session, player_messages))

    # -- ByGeneration state replacement -----------------------------------------

    def _regenerate_states(self, session: Session) -> Iterator[ChatEvent]:
        block = render_state_block(session.scene, session.players)
        recent = session.history[-12:]
        request = ChatEvent(
            EventKind.PLAYER, "system",
            f"Current state:\n{block}\n\nRewrite the state now.",
            max((e.timestamp for e in recent), default=0) + 1,
        )
        pkg = PromptPackage(
            REPLACEMENT_STATES_INSTRUCTION,
            (),
            tuple(recent) + (request,),
            estimate_tokens(REPLACEMENT_STATES_INSTRUCTION)
            + estimate_tokens(block)
            + sum(estimate_tokens(e.content) for e in recent),
        )
        try:
            turn = gateway.complete(self.provider, pkg)
        except GatewayError as exc:
            yield self._append(session, EventKind.SYSTEM, "system",
                               f"State regeneration failed ({exc}); previous states kept.",
                               data={"state_regen": "failed"})
            return
        replacement = _parse_replacement(turn.content if turn.kind is TurnKind.TEXT else None,
                                         session.players)
        if replacement is None:
            yield self._append(session, EventKind.SYSTEM, "system",
                               "State regeneration was invalid; previous states kept.",
                               data={"state_regen": "invalid"})
            return
        new_scene, new_players = replacement
        diff = diff_states((session.scene, session.players), (new_scene, new_players))
        session.scene, session.players = new_scene, new_players
        yield self._append(session, EventKind.SYSTEM, "system",
                           "The game state has been rewritten to match the story.",
                           data={"state_regen": "applied", "diff": diff.to_document()})

    # -- outcomes and clock ------------------------------------------------------

    def check_outcome(self, session: Session) -> Outcome:
        """Decide whether the scene has ended; the clock limit trumps the judge."""
        if not session.running:
            return Outcome(session.status.value)
        if session.clock.at_limit:
            session.status = SessionStatus.FAILURE
            self._append(session, EventKind.SYSTEM, "system",
                         "The thirteenth hour arrives. The scene ends in failure.",
                         data={"outcome": "failure", "reason": "clock"})
            return Outcome.FAILURE

        recent = [e for e in session.transcript if e.kind in
                  (EventKind.PLAYER, EventKind.GM)][-12:]
        lines = "\n".join(f"{e.speaker}: {e.content}" for e in recent)
        request = ChatEvent(
            EventKind.PLAYER, "system",
            f"Success condition: {session.scene.success_condition}\n"
            f"Failure condition: {session.scene.failure_condition}\n"
            f"Recent play:\n{lines}\n\nOne word: SUCCESS, FAILURE, or CONTINUE.",
            1,
        )
        pkg = PromptPackage(JUDGE_INSTRUCTION, (), (request,),
                            estimate_tokens(JUDGE_INSTRUCTION + request.content))
        try:
            turn = gateway.complete(self.judge_provider, pkg)
        except GatewayError:
            return Outcome.CONTINUE  # never terminate a scene on a transport error
        verdict = (turn.content or "").strip().upper() if turn.kind is TurnKind.TEXT else ""
        if verdict == "SUCCESS":
            session.status = SessionStatus.SUCCESS
            self._append(session, EventKind.SYSTEM, "system",
                         "The success condition has been met. The scene ends.",
                         data={"outcome": "success"})
            return Outcome.SUCCESS
        if verdict == "FAILURE":
            session.status = SessionStatus.FAILURE
            self._append(session, EventKind.SYSTEM, "system",
                         "The failure condition has been met. The scene ends.",
                         data={"outcome": "failure"})
            return Outcome.FAILURE
        if verdict != "CONTINUE":
            self._append(session, EventKind.SYSTEM, "system",
                         "The referee's verdict was unclear; play continues.",
                         data={"outcome": "ambiguous"})
        return Outcome.CONTINUE

    def advance_clock(self, session: Session, trigger: ClockTrigger) -> ChatEvent:
        if not session.running:
            raise SessionTerminatedError(f"session already ended: {session.status.value}")
        session.clock = session.clock.advanced()
        return self._append(
            session, EventKind.SYSTEM, "system",
            f"The clock advances to {session.clock.hours_elapsed} of "
            f"{session.clock.limit} hours.",
            data={"clock": session.clock.hours_elapsed, "trigger": trigger.value},
        )

    # -- scripted/provider-backed self-play ---------------------------------------

    def run_scene(self, session: Session, player_agents: Sequence["PlayerAgent"],
                  max_rounds: int = 20) -> list[ChatEvent]:
        """Alternate player rounds and GM turns until the scene resolves."""
        for _ in range(max_rounds):
            if not session.running:
                break
            messages: list[tuple[str, str]] = []
            try:
                for agent in player_agents:
                    messages.extend(agent.messages(session))
            except Exception as exc:
                self._append(session, EventKind.SYSTEM, "system",
                             f"A player source failed ({exc}); the scene ends here.",
                             data={"agent_error": True})
                break
            if not messages:
                break
            self.gm_turn(session, messages)
            if self.check_outcome(session) is not Outcome.CONTINUE:
                break
        return list(session.transcript)


class PlayerAgent:
    """Message source protocol; implementations yield one round's messages."""

    def messages(self, session: Session) -> list[tuple[str, str]]:  # pragma: no cover
        raise NotImplementedError


class ScriptedPlayerAgent(PlayerAgent):
    """Replays fixed rounds of (player, text) messages, then goes silent."""

    def __init__(self, rounds: Sequence[Sequence[tuple[str, str]]]):
        self._rounds = [list(r) for r in rounds]
        self._cursor = 0

    def messages(self, session: Session) -> list[tuple[str, str]]:
        if self._cursor >= len(self._rounds):
            return []
        round_ = self._rounds[self._cursor]
        self._cursor += 1
        return round_


class ProviderPlayerAgent(PlayerAgent):
    """Asks a provider to speak for one player character."""

    def __init__(self, provider: Provider, player_name: str,
                 instruction: str | None = None):
        self.provider = provider
        self.player_name = player_name
        self.instruction = instruction or (
            f"You play {player_name} in a tabletop game. Reply with one short "
            "in-character message stating what you do or say next."
        )

    def messages(self, session: Session) -> list[tuple[str, str]]:
        recent = [e for e in session.transcript
                  if e.kind in (EventKind.PLAYER, EventKind.GM)][-16:]
        pkg = PromptPackage(
            self.instruction, (), tuple(recent),
            estimate_tokens(self.instruction)
            + sum(estimate_tokens(e.content) for e in recent),
        )
        turn = gateway.complete(self.provider, pkg)
        if turn.kind is not TurnKind.TEXT or not turn.content.strip():
            return []
        return [(self.player_name, turn.content.strip())]


def snapshot(session: Session) -> TurnSnapshot:
    return TurnSnapshot(
        index=session.turns_completed,
        scene=session.scene.to_document(),
        players=[p.to_document() for p in session.players],
        clock_hours=session.clock.hours_elapsed,
        status=session.status.value,
        last_timestamp=session._counter,
    )


def export_log(session: Session) -> GameLog:
    """Assemble the line-delimited play record for a finished or live session."""
    return GameLog(
        scene_id=session.scene_id or session.scene.scene,
        profile_id=session.profile.id,
        seed=session.seed,
        prompt_config=session.prompt_config.to_document(),
        player_names=[p.name for p in session.players],
        events=list(session.transcript),
        turns=list(session.snapshots),
        final_status=session.status.value,
        clock_hours=session.clock.hours_elapsed,
    )


def _strip_fences(text: str) -> str:
    text = text.strip()
    if text.startswith("```"):
        text = text.split("\n", 1)[1] if "\n" in text else ""
        if text.rstrip().endswith("```"):
            text = text.rstrip()[:-3]
    return text.strip()


def _parse_replacement(
    content: str | None, current_players: Sequence[PlayerState]
) -> tuple[SceneState, tuple[PlayerState, ...]] | None:
    """Validated replacement states, or None to keep the previous ones."""
    if not content:
        return None
    try:
        doc = json.loads(_strip_fences(content))
        scene = parse_scene_state(doc["scene"])
        players = tuple(parse_player_state(p) for p in doc["players"])
    except (json.JSONDecodeError, KeyError, TypeError, StateValidationError):
        return None
    if {p.name for p in players} != {p.name for p in current_players} or len(
        players
    ) != len(current_players):
        return None
    # keep the original seating order
    by_name = {p.name: p for p in players}
    return scene, tuple(by_name[p.name] for p in current_players)
