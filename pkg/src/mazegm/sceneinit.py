"""Scene initialization: turn a raw book-style scene into a typed SceneState.

The pipeline asks the provider to classify each random table (unused, or used
to seed NPCs, objects, or both), decide sample counts for the seeding tables,
then generate the full scene components conditioned on the sampled entries.
Tables spent on initialization are removed from the resulting state.
"""

from __future__ import annotations

import json
import re
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from random import Random

from . import gateway
from .gateway import ChatEvent, EventKind, GatewayError, PromptPackage, Provider, TurnKind
from .state import SceneState, StateError, StateValidationError, parse_scene_state


class SceneInitError(StateError):
    pass


@dataclass(frozen=True)
class RawScene:
    """A scene as parsed from the game book: loosely structured prose."""

    scene: str
    description: str
    chapter: str = ""
    locations: tuple[str, ...] = ()
    notes: tuple[str, ...] = ()
    random_tables: dict[str, tuple[str, ...]] = field(default_factory=dict)
    extra: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.scene.strip() or not self.description.strip():
            raise SceneInitError("a raw scene needs at least a name and a description")
        object.__setattr__(self, "locations", tuple(self.locations))
        object.__setattr__(self, "notes", tuple(self.notes))
        object.__setattr__(
            self,
            "random_tables",
            {name: tuple(entries) for name, entries in self.random_tables.items()},
        )
        object.__setattr__(self, "extra", dict(self.extra))

    def to_document(self) -> dict:
        doc = {
            "scene": self.scene,
            "description": self.description,
            "chapter": self.chapter,
            "locations": list(self.locations),
            "notes": list(self.notes),
            "random_tables": {k: list(v) for k, v in self.random_tables.items()},
        }
        doc.update(self.extra)
        return doc


_KNOWN_RAW_FIELDS = {"scene", "description", "chapter", "locations", "notes", "random_tables"}


def parse_raw_scene(document: str | Mapping) -> RawScene:
    doc = json.loads(document) if isinstance(document, str) else document
    if not isinstance(doc, Mapping):
        raise SceneInitError("raw scene must be a JSON object")
    tables = doc.get("random_tables", {})
    if not isinstance(tables, Mapping):
        raise SceneInitError("random_tables must map table names to entry lists")
    extra = {
        k: str(v) for k, v in doc.items() if k not in _KNOWN_RAW_FIELDS
    }
    return RawScene(
        scene=str(doc.get("scene", "")),
        description=str(doc.get("description", "")),
        chapter=str(doc.get("chapter", "")),
        locations=tuple(str(x) for x in doc.get("locations", ())),
        notes=tuple(str(x) for x in doc.get("notes", ())),
        random_tables={str(k): tuple(str(e) for e in v) for k, v in tables.items()},
        extra=extra,
    )


def load_raw_scene(path: str | Path) -> RawScene:
    return parse_raw_scene(Path(path).read_text(encoding="utf-8"))


def load_scene_pack(directory: str | Path) -> list[tuple[str, RawScene]]:
    """All raw scenes in a directory, sorted by file name for stable order."""
    pack = []
    for path in sorted(Path(directory).glob("*.json")):
        pack.append((path.stem, load_raw_scene(path)))
    if not pack:
        raise SceneInitError(f"no raw scene files found in {directory}")
    return pack


SCENE_INIT_INSTRUCTION = (
    "You prepare scenes for a labyrinth-crawl tabletop game. Answer each "
    "request exactly in the format it asks for, with no extra commentary."
)

TABLE_USAGES = ("unused", "npcs", "objects", "both")


def _ask(provider: Provider, request: str) -> str:
    event = ChatEvent(EventKind.PLAYER, "system", request, 1)
    pkg = PromptPackage(
        SCENE_INIT_INSTRUCTION, (), (event,),
        gateway.estimate_tokens(SCENE_INIT_INSTRUCTION + request),
    )
    try:
        turn = gateway.complete(provider, pkg)
    except GatewayError as exc:
        raise SceneInitError(f"scene initialization provider failed: {exc}")
    if turn.kind is not TurnKind.TEXT:
        raise SceneInitError("scene initialization needs a text reply, got none")
    return turn.content


def _classify_table(provider: Provider, raw: RawScene, name: str) -> str:
    entries = "\n".join(f"- {e}" for e in raw.random_tables[name])
    answer = _ask(
        provider,
        f"Scene: {raw.scene}\n{raw.description}\n\n"
        f"Classify the random table {name!r} by how it should be used when "
        f"setting up this scene.\nEntries:\n{entries}\n\n"
        "Answer with exactly one word: unused (kept for play), npcs (seeds "
        "starting NPCs), objects (seeds starting objects), or both.",
    )
    lowered = answer.strip().lower()
    for usage in TABLE_USAGES:
        if usage in lowered:
            return usage
    return "unused"  # unrecognized answers keep the table for play


def _sample_count(provider: Provider, raw: RawScene, name: str) -> int:
    entries = raw.random_tables[name]
    answer = _ask(
        provider,
        f"Scene: {raw.scene}\n\nHow many entries should be sampled from the "
        f"random table {name!r} ({len(entries)} entries) to set up this scene? "
        "If the scene text states an exact number, use it. "
        "Answer with a single number.",
    )
    match = re.search(r"\d+", answer)
    count = int(match.group()) if match else 1
    return max(1, min(count, len(entries)))


_GENERATED_FIELDS = (
    "scene_summary", "npcs", "success_condition", "failure_condition",
    "game_flow", "environment",
)


def _generation_request(raw: RawScene, rules: Sequence[str],
                        samples: dict[str, tuple[str, tuple[str, ...]]]) -> str:
    lines = [
        "Generate the initialized scene components from this raw scene:",
        json.dumps(raw.to_document(), ensure_ascii=False, sort_keys=True),
        "",
        "Game rules summary:",
    ]
    lines += [f"- {r}" for r in rules]
    for table, (usage, drawn) in samples.items():
        lines.append("")
        lines.append(f"Sampled for {usage} from table {table!r}:")
        lines += [f"- {e}" for e in drawn]
        lines.append("Work every sampled entry into the generated components.")
    lines += [
        "",
        "Reply with a single JSON object with keys scene_summary (list of "
        "strings), npcs (object mapping each NPC name to kin, persona, goal, "
        "trait, flaw), success_condition, failure_condition, game_flow (list "
        "of strings), environment (object mapping object names to "
        "descriptions), and consequences.",
    ]
    return "\n".join(lines)


def _merge_scene_doc(raw: RawScene, generated: Mapping, init_tables: set[str]) -> dict:
    remaining = {
        name: list(entries)
        for name, entries in raw.random_tables.items()
        if name not in init_tables
    }
    doc = {field_name: generated.get(field_name) for field_name in _GENERATED_FIELDS}
    doc.update(
        chapter=raw.chapter or "Labyrinth",
        scene=raw.scene,
        random_tables=remaining,
        consequences=generated.get("consequences", ""),
        is_action_scene=False,
    )
    return doc


def _parse_generated(text: str) -> Mapping:
    cleaned = text.strip()
    if cleaned.startswith("```"):
        cleaned = cleaned.split("\n", 1)[1] if "\n" in cleaned else ""
        if cleaned.rstrip().endswith("```"):
            cleaned = cleaned.rstrip()[:-3]
    try:
        doc = json.loads(cleaned)
    except json.JSONDecodeError as exc:
        raise SceneInitError(f"scene generation output is not valid JSON: {exc}")
    if not isinstance(doc, Mapping):
        raise SceneInitError("scene generation output must be a JSON object")
    return doc


def init_scene(
    raw: RawScene, rules: Sequence[str], provider: Provider, rng: Random
) -> SceneState:
    """Initialize a raw scene into a validated SceneState.

    Invalid provider output gets one structured repair attempt (the
    validation issues are sent back verbatim) before giving up.
    """
    usages = {
        name: _classify_table(provider, raw, name) for name in raw.random_tables
    }
    init_tables = {name for name, usage in usages.items() if usage != "unused"}
    samples: dict[str, tuple[str, tuple[str, ...]]] = {}
    for name in raw.random_tables:
        if name not in init_tables:
            continue
        count = _sample_count(provider, raw, name)
        drawn = tuple(rng.sample(list(raw.random_tables[name]), count))
        samples[name] = (usages[name], drawn)

    request = _generation_request(raw, rules, samples)
    generated = _parse_generated(_ask(provider, request))
    try:
        return parse_scene_state(_merge_scene_doc(raw, generated, init_tables))
    except StateValidationError as first_failure:
        issues = "\n".join(
            f"- {issue.path}: {issue.message}" for issue in first_failure.issues
        )
        repaired = _parse_generated(
            _ask(
                provider,
                "The previous scene output failed validation:\n"
                f"{issues}\n\nOriginal request follows. Reply again with the "
                f"corrected JSON object only.\n\n{request}",
            )
        )
        try:
            return parse_scene_state(_merge_scene_doc(raw, repaired, init_tables))
        except StateValidationError as second_failure:
            raise SceneInitError(
                "scene initialization failed validation twice: "
                + "; ".join(i.path for i in second_failure.issues)
            )
