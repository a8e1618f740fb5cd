"""Evaluation machinery: state-update unit tests, suite scoring over trials,
transcript statistics, and deriving new test cases from recorded play.

A unit test loads input states, replays its dialogue as pending context, runs
one GM turn, and passes iff the resulting states exactly equal the expected
states (compared through diff_states, so a failure carries the exact field
mismatches).
"""

from __future__ import annotations

import json
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path

from . import gateway
from .engine import GameMaster, NpcGenerator, new_session
from .gateway import (
    ChatEvent,
    EventKind,
    GatewayError,
    ModelTurn,
    PromptPackage,
    Provider,
    TurnKind,
    event_from_document,
    turn_from_document,
    turn_to_document,
)
from .profiles import GmSettingProfile
from .prompting import PromptConfig
from .state import (
    EMPTY_DIFF,
    PlayerState,
    SceneState,
    StateDiff,
    StateError,
    diff_states,
    parse_player_state,
    parse_scene_state,
)
from .transcript import GameLog


class EvalError(StateError):
    pass


@dataclass(frozen=True)
class UnitTestCase:
    """One state-update test: states plus dialogue in, expected states out.

    ``scripts`` optionally carries named deterministic model scripts (for
    example a correct and an adversarial one) so the case can run offline.
    """

    id: str
    input_scene: SceneState
    input_players: tuple[PlayerState, ...]
    input_dialogue: tuple[ChatEvent, ...]
    expected_scene: SceneState
    expected_players: tuple[PlayerState, ...]
    scripts: dict[str, tuple[ModelTurn, ...]] = field(default_factory=dict)
    paraphrased: bool = False

    def __post_init__(self):
        object.__setattr__(self, "input_players", tuple(self.input_players))
        object.__setattr__(self, "input_dialogue", tuple(self.input_dialogue))
        object.__setattr__(self, "expected_players", tuple(self.expected_players))
        object.__setattr__(
            self, "scripts", {k: tuple(v) for k, v in self.scripts.items()}
        )
        if not self.id:
            raise EvalError("a test case needs an id")
        if not self.input_dialogue:
            raise EvalError(f"case {self.id}: input dialogue must be non-empty")
        target = diff_states(
            (self.input_scene, self.input_players),
            (self.expected_scene, self.expected_players),
        )
        if target.is_empty():
            raise EvalError(
                f"case {self.id}: expected states equal input states; "
                "a test must target at least one change"
            )

    def to_document(self) -> dict:
        return {
            "id": self.id,
            "input": {
                "scene": self.input_scene.to_document(),
                "players": [p.to_document() for p in self.input_players],
                "dialogue": [e.to_document() for e in self.input_dialogue],
            },
            "expected": {
                "scene": self.expected_scene.to_document(),
                "players": [p.to_document() for p in self.expected_players],
            },
            "scripts": {
                name: [turn_to_document(t) for t in turns]
                for name, turns in self.scripts.items()
            },
            "paraphrased": self.paraphrased,
        }


def case_from_document(doc: Mapping) -> UnitTestCase:
    return UnitTestCase(
        id=doc["id"],
        input_scene=parse_scene_state(doc["input"]["scene"]),
        input_players=tuple(parse_player_state(p) for p in doc["input"]["players"]),
        input_dialogue=tuple(event_from_document(e) for e in doc["input"]["dialogue"]),
        expected_scene=parse_scene_state(doc["expected"]["scene"]),
        expected_players=tuple(
            parse_player_state(p) for p in doc["expected"]["players"]
        ),
        scripts={
            name: tuple(turn_from_document(t) for t in turns)
            for name, turns in doc.get("scripts", {}).items()
        },
        paraphrased=bool(doc.get("paraphrased", False)),
    )


def load_case(path: str | Path) -> UnitTestCase:
    return case_from_document(json.loads(Path(path).read_text(encoding="utf-8")))


def write_case(path: str | Path, case: UnitTestCase) -> None:
    Path(path).write_text(
        json.dumps(case.to_document(), ensure_ascii=False, indent=2, sort_keys=True)
        + "\n",
        encoding="utf-8",
    )


def load_suite(directory: str | Path) -> list[UnitTestCase]:
    """Load every case listed by the directory's manifest, in manifest order."""
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    if not manifest_path.exists():
        raise EvalError(f"no manifest.json in {directory}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    cases = [load_case(directory / name) for name in manifest["cases"]]
    if not cases:
        raise EvalError("suite manifest lists no cases")
    return cases


# ---------------------------------------------------------------------------
# Running cases


@dataclass(frozen=True)
class CaseResult:
    case_id: str
    passed: bool
    diff: StateDiff
    errored: bool = False
    error: str = ""

    def to_document(self) -> dict:
        return {
            "case_id": self.case_id,
            "passed": self.passed,
            "diff": self.diff.to_document(),
            "errored": self.errored,
            "error": self.error,
        }


@dataclass(frozen=True)
class SuiteReport:
    per_case: tuple[CaseResult, ...]

    @property
    def passes(self) -> int:
        return sum(r.passed for r in self.per_case)

    @property
    def scored(self) -> int:
        return sum(not r.errored for r in self.per_case)

    @property
    def errored(self) -> int:
        return sum(r.errored for r in self.per_case)

    @property
    def score(self) -> Fraction:
        if self.scored == 0:
            return Fraction(0)
        return Fraction(self.passes, self.scored)

    def to_document(self) -> dict:
        return {
            "per_case": [r.to_document() for r in self.per_case],
            "passes": self.passes,
            "scored": self.scored,
            "errored": self.errored,
            "score": f"{self.passes}/{self.scored}" if self.scored else "0/0",
        }


def split_trigger(
    dialogue: Sequence[ChatEvent],
) -> tuple[list[ChatEvent], list[tuple[str, str]]]:
    """Context events and the trailing player messages that start the turn."""
    cut = len(dialogue)
    while cut > 0 and dialogue[cut - 1].kind is EventKind.PLAYER:
        cut -= 1
    context = list(dialogue[:cut])
    trigger = [(e.speaker, e.content) for e in dialogue[cut:]]
    return context, trigger


def run_unit_test(
    case: UnitTestCase,
    profile: GmSettingProfile,
    provider: Provider,
    *,
    seed: int = 0,
    npc_generator: NpcGenerator | None = None,
) -> CaseResult:
    """Replay the case dialogue, run one GM turn, compare states exactly."""
    context, trigger = split_trigger(case.input_dialogue)
    session = new_session(
        case.input_scene, case.input_players, profile, PromptConfig(), seed,
        scene_id=case.id,
    )
    session.transcript.extend(context)
    session.history.extend(context)
    session._counter = max((e.timestamp for e in context), default=0)
    gm = GameMaster(provider, npc_generator=npc_generator)
    try:
        gm.gm_turn(session, trigger)
    except GatewayError as exc:
        return CaseResult(case.id, False, EMPTY_DIFF, errored=True, error=str(exc))
    diff = diff_states(
        (case.expected_scene, case.expected_players),
        (session.scene, session.players),
    )
    return CaseResult(case.id, diff.is_empty(), diff)


ProviderSource = Provider | Callable[[UnitTestCase], Provider]


def _provider_for(source: ProviderSource, case: UnitTestCase) -> Provider:
    if hasattr(source, "complete"):
        return source
    return source(case)


def score_suite(
    cases: Sequence[UnitTestCase],
    profile: GmSettingProfile,
    provider: ProviderSource,
    trials: int = 1,
    *,
    seed: int = 0,
    npc_generator: NpcGenerator | None = None,
) -> list[SuiteReport]:
    """One report per trial.

    ``provider`` is either a shared Provider or a per-case factory
    ``case -> Provider``; scripted runs need the factory so each case starts
    from a fresh script every trial.
    """
    if not cases:
        raise EvalError("score_suite needs at least one case")
    if trials < 1:
        raise EvalError(f"trials must be positive, got {trials}")
    reports = []
    for _ in range(trials):
        results = tuple(
            run_unit_test(
                case, profile, _provider_for(provider, case),
                seed=seed, npc_generator=npc_generator,
            )
            for case in cases
        )
        reports.append(SuiteReport(results))
    return reports


def format_suite_table(rows: Mapping[str, Sequence[SuiteReport]]) -> str:
    """Plain-text score table: one row per setting, one column per trial."""
    trial_count = max((len(reports) for reports in rows.values()), default=0)
    headers = ["Setting"] + [f"Trial {i + 1}" for i in range(trial_count)] + ["Avg"]
    lines = ["  ".join(f"{h:>10}" for h in headers).rstrip()]
    for name, reports in rows.items():
        scores = [float(r.score) for r in reports]
        avg = sum(scores) / len(scores) if scores else 0.0
        cells = [f"{name:>10}"] + [f"{s:>10.4f}" for s in scores] + [f"{avg:>10.4f}"]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Transcript statistics


@dataclass(frozen=True)
class TranscriptStats:
    total_scripts: int
    total_scenes: int
    total_utterances: int
    avg_utterances_per_script: float
    total_generated_responses: int
    avg_generated: float
    total_function_calls: int
    avg_calls_per_script_with_functions: float

    def to_document(self) -> dict:
        return {
            "total_scripts": self.total_scripts,
            "total_scenes": self.total_scenes,
            "total_utterances": self.total_utterances,
            "avg_utterances_per_script": self.avg_utterances_per_script,
            "total_generated_responses": self.total_generated_responses,
            "avg_generated": self.avg_generated,
            "total_function_calls": self.total_function_calls,
            "avg_calls_per_script_with_functions":
                self.avg_calls_per_script_with_functions,
        }


def _is_utterance(event: ChatEvent) -> bool:
    return event.kind in (EventKind.PLAYER, EventKind.GM) and bool(event.content)


def transcript_stats(logs: Sequence[GameLog]) -> TranscriptStats:
    """Corpus counts; the function-call average covers only scripts that
    contain at least one call, and empty-content responses never count."""
    utterances = 0
    generated = 0
    calls = 0
    scripts_with_calls = 0
    for log in logs:
        script_calls = sum(e.kind is EventKind.FUNCTION_CALL for e in log.events)
        utterances += sum(_is_utterance(e) for e in log.events)
        generated += sum(
            e.kind is EventKind.GM and bool(e.content) for e in log.events
        )
        calls += script_calls
        scripts_with_calls += script_calls > 0
    scripts = len(logs)
    scenes = len({log.scene_id for log in logs}) if logs else 0
    return TranscriptStats(
        total_scripts=scripts,
        total_scenes=scenes,
        total_utterances=utterances,
        avg_utterances_per_script=utterances / scripts if scripts else 0.0,
        total_generated_responses=generated,
        avg_generated=generated / scripts if scripts else 0.0,
        total_function_calls=calls,
        avg_calls_per_script_with_functions=(
            calls / scripts_with_calls if scripts_with_calls else 0.0
        ),
    )


def format_stats_table(stats: TranscriptStats) -> str:
    rows = [
        ("Scripts", f"{stats.total_scripts}"),
        ("Scenes", f"{stats.total_scenes}"),
        ("Utterances", f"{stats.total_utterances}"),
        ("Average utterances per script", f"{stats.avg_utterances_per_script:.2f}"),
        ("Generated responses", f"{stats.total_generated_responses}"),
        ("Average generated responses", f"{stats.avg_generated:.2f}"),
        ("Function calls", f"{stats.total_function_calls}"),
        ("Average calls per script with functions",
         f"{stats.avg_calls_per_script_with_functions:.2f}"),
    ]
    width = max(len(label) for label, _ in rows)
    return "\n".join(f"{label:<{width}}  {value:>10}" for label, value in rows)


# ---------------------------------------------------------------------------
# Case derivation from recorded play

PARAPHRASE_INSTRUCTION = (
    "Rephrase the given game message in different words while preserving the "
    "overall content, speaker intent, and every name and number. Reply with "
    "the rephrased message only."
)


def _paraphrase(provider: Provider, event: ChatEvent) -> ChatEvent:
    request = ChatEvent(EventKind.PLAYER, "system", event.content, 1)
    pkg = PromptPackage(
        PARAPHRASE_INSTRUCTION, (), (request,),
        gateway.estimate_tokens(PARAPHRASE_INSTRUCTION + event.content),
    )
    try:
        turn = gateway.complete(provider, pkg)
    except GatewayError as exc:
        raise EvalError(f"paraphraser failed: {exc}")
    if turn.kind is not TurnKind.TEXT or not turn.content.strip():
        raise EvalError("paraphraser returned no text")
    return replace(event, content=turn.content.strip())


def derive_case_from_transcript(
    log: GameLog,
    turn_index: int,
    paraphraser: Provider | None = None,
    case_id: str | None = None,
) -> UnitTestCase:
    """Cut one state-changing turn out of a play log as a fresh test case.

    Input states come from the snapshot before the turn, expected states from
    the snapshot after it, and the dialogue is everything up to and including
    the player messages that started the turn.
    """
    by_index = {t.index: t for t in log.turns}
    if turn_index < 1 or turn_index not in by_index or turn_index - 1 not in by_index:
        raise EvalError(f"log has no turn {turn_index} with a preceding snapshot")
    before, after = by_index[turn_index - 1], by_index[turn_index]
    input_scene = parse_scene_state(before.scene)
    input_players = tuple(parse_player_state(p) for p in before.players)
    expected_scene = parse_scene_state(after.scene)
    expected_players = tuple(parse_player_state(p) for p in after.players)
    if diff_states(
        (input_scene, input_players), (expected_scene, expected_players)
    ).is_empty():
        raise EvalError(f"turn {turn_index} did not change any state")

    context = [e for e in log.events if e.timestamp <= before.last_timestamp]
    window = [
        e for e in log.events
        if before.last_timestamp < e.timestamp <= after.last_timestamp
    ]
    trigger = [e for e in window if e.kind is EventKind.PLAYER]
    dialogue = context + trigger

    paraphrased = False
    if paraphraser is not None:
        rewritten = []
        for event in dialogue:
            if event.kind in (EventKind.PLAYER, EventKind.GM) and event.content:
                rewritten.append(_paraphrase(paraphraser, event))
                paraphrased = True
            else:
                rewritten.append(event)
        dialogue = rewritten

    return UnitTestCase(
        id=case_id or f"{log.scene_id}-turn-{turn_index}",
        input_scene=input_scene,
        input_players=input_players,
        input_dialogue=tuple(dialogue),
        expected_scene=expected_scene,
        expected_players=expected_players,
        paraphrased=paraphrased,
    )
