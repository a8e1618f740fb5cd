"""Typed scene and player state: validation, rendering, and diffing.

State values are immutable after construction; every mutation produces a new
value (see :func:`diff_states` / :func:`apply_diff`), so states can be shared
freely across sessions and threads.
"""

from __future__ import annotations

import json
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

NPC_FIELDS = ("kin", "persona", "goal", "trait", "flaw")

SCENE_FIELDS = (
    "chapter",
    "scene",
    "scene_summary",
    "npcs",
    "success_condition",
    "failure_condition",
    "game_flow",
    "environment",
    "random_tables",
    "consequences",
    "is_action_scene",
)

PLAYER_FIELDS = (
    "name",
    "kin",
    "goal",
    "traits",
    "flaws",
    "inventory",
    "additional_notes",
)


class StateError(ValueError):
    """Base class for state construction and diffing errors."""


@dataclass(frozen=True)
class ValidationIssue:
    """One field-level problem found while parsing a state document."""

    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: {self.message}"


class StateValidationError(StateError):
    """Raised with the complete list of issues; validation never fails fast."""

    def __init__(self, issues: Sequence[ValidationIssue]):
        self.issues = tuple(issues)
        super().__init__("; ".join(str(i) for i in self.issues))


class RosterMismatchError(StateError):
    """Raised when diffing two sides with different player rosters."""


class DiffApplyError(StateError):
    """Raised when a diff's before-values do not match the target state."""


@dataclass(frozen=True)
class NpcSpec:
    """Specification of one non-player character."""

    kin: str
    persona: str
    goal: str
    trait: str
    flaw: str

    def __post_init__(self):
        empty = [f for f in NPC_FIELDS if not getattr(self, f)]
        if empty:
            raise StateError(f"NPC fields must be non-empty: {', '.join(empty)}")

    def to_document(self) -> dict:
        return {f: getattr(self, f) for f in NPC_FIELDS}


@dataclass(frozen=True)
class SceneState:
    """The world: summary, NPCs, conditions, flow, environment, and tables."""

    chapter: str
    scene: str
    scene_summary: tuple[str, ...]
    npcs: dict[str, NpcSpec]
    success_condition: str
    failure_condition: str
    game_flow: tuple[str, ...]
    environment: dict[str, str]
    random_tables: dict[str, tuple[str, ...]]
    consequences: str
    is_action_scene: bool = False

    def __post_init__(self):
        object.__setattr__(self, "scene_summary", tuple(self.scene_summary))
        object.__setattr__(self, "game_flow", tuple(self.game_flow))
        object.__setattr__(self, "npcs", dict(self.npcs))
        object.__setattr__(self, "environment", dict(self.environment))
        object.__setattr__(
            self,
            "random_tables",
            {name: tuple(entries) for name, entries in self.random_tables.items()},
        )

    def to_document(self) -> dict:
        """Plain-data form of this state, field order as rendered."""
        return {
            "chapter": self.chapter,
            "scene": self.scene,
            "scene_summary": list(self.scene_summary),
            "npcs": {name: spec.to_document() for name, spec in self.npcs.items()},
            "success_condition": self.success_condition,
            "failure_condition": self.failure_condition,
            "game_flow": list(self.game_flow),
            "environment": dict(self.environment),
            "random_tables": {
                name: list(entries) for name, entries in self.random_tables.items()
            },
            "consequences": self.consequences,
            "is_action_scene": self.is_action_scene,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_document(), ensure_ascii=False, indent=2)


@dataclass(frozen=True)
class PlayerState:
    """One player character: identity, properties, and inventory."""

    name: str
    kin: str
    goal: str
    traits: dict[str, str]
    flaws: dict[str, str]
    inventory: dict[str, str]
    additional_notes: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "traits", dict(self.traits))
        object.__setattr__(self, "flaws", dict(self.flaws))
        object.__setattr__(self, "inventory", dict(self.inventory))
        object.__setattr__(self, "additional_notes", tuple(self.additional_notes))

    def to_document(self) -> dict:
        return {
            "name": self.name,
            "kin": self.kin,
            "goal": self.goal,
            "traits": dict(self.traits),
            "flaws": dict(self.flaws),
            "inventory": dict(self.inventory),
            "additional_notes": list(self.additional_notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_document(), ensure_ascii=False, indent=2)


DEFAULT_CLOCK_LIMIT = 13


@dataclass(frozen=True)
class GameClock:
    """Hours burned by the party; hitting the limit is a terminal failure."""

    hours_elapsed: int = 0
    limit: int = DEFAULT_CLOCK_LIMIT

    def __post_init__(self):
        if self.limit <= 0:
            raise StateError(f"clock limit must be positive, got {self.limit}")
        if not 0 <= self.hours_elapsed <= self.limit:
            raise StateError(
                f"hours_elapsed must be in [0, {self.limit}], got {self.hours_elapsed}"
            )

    @property
    def at_limit(self) -> bool:
        return self.hours_elapsed >= self.limit

    def advanced(self) -> "GameClock":
        """One more hour lost, capped at the limit."""
        return GameClock(min(self.hours_elapsed + 1, self.limit), self.limit)


# ---------------------------------------------------------------------------
# Parsing


def _parse_json_tracking_duplicates(text: str) -> tuple[object, list[str]]:
    duplicates: list[str] = []

    def hook(pairs):
        obj: dict = {}
        for key, value in pairs:
            if key in obj:
                duplicates.append(key)
            obj[key] = value
        return obj

    return json.loads(text, object_pairs_hook=hook), duplicates


def _check_str(doc: Mapping, name: str, issues: list[ValidationIssue], *, prefix: str = ""):
    path = f"{prefix}{name}"
    if name not in doc:
        issues.append(ValidationIssue(path, "missing required field"))
        return None
    value = doc[name]
    if not isinstance(value, str):
        issues.append(ValidationIssue(path, f"expected text, got {type(value).__name__}"))
        return None
    return value


def _check_str_list(doc: Mapping, name: str, issues: list[ValidationIssue]):
    if name not in doc:
        issues.append(ValidationIssue(name, "missing required field"))
        return None
    value = doc[name]
    if not isinstance(value, list) or any(not isinstance(v, str) for v in value):
        issues.append(ValidationIssue(name, "expected a list of text entries"))
        return None
    return tuple(value)


def _check_str_map(doc: Mapping, name: str, issues: list[ValidationIssue]):
    if name not in doc:
        issues.append(ValidationIssue(name, "missing required field"))
        return None
    value = doc[name]
    if not isinstance(value, Mapping) or any(
        not isinstance(k, str) or not isinstance(v, str) for k, v in value.items()
    ):
        issues.append(ValidationIssue(name, "expected a map of name to text"))
        return None
    return dict(value)


def _duplicate_issues(duplicates: list[str], doc: Mapping, map_fields: Sequence[str]) -> list[ValidationIssue]:
    issues = []
    for key in duplicates:
        parent = next(
            (
                f
                for f in map_fields
                if isinstance(doc.get(f), Mapping) and key in doc[f]
            ),
            None,
        )
        path = f"{parent}.{key}" if parent else key
        issues.append(ValidationIssue(path, f"duplicate key {key!r}"))
    return issues


def parse_scene_state(document: str | Mapping) -> SceneState:
    """Parse a scene document (JSON text or plain mapping) into a SceneState.

    Collects every field-level problem instead of failing on the first one and
    raises :class:`StateValidationError` carrying the full list.
    """
    issues: list[ValidationIssue] = []
    if isinstance(document, str):
        try:
            doc, duplicates = _parse_json_tracking_duplicates(document)
        except json.JSONDecodeError as exc:
            raise StateValidationError([ValidationIssue("$", f"invalid JSON: {exc}")])
        issues.extend(
            _duplicate_issues(duplicates, doc if isinstance(doc, Mapping) else {},
                              ("npcs", "environment", "random_tables"))
        )
    else:
        doc = document
    if not isinstance(doc, Mapping):
        raise StateValidationError([ValidationIssue("$", "document must be an object")])

    chapter = _check_str(doc, "chapter", issues)
    scene = _check_str(doc, "scene", issues)
    scene_summary = _check_str_list(doc, "scene_summary", issues)
    success = _check_str(doc, "success_condition", issues)
    failure = _check_str(doc, "failure_condition", issues)
    game_flow = _check_str_list(doc, "game_flow", issues)
    environment = _check_str_map(doc, "environment", issues)
    consequences = _check_str(doc, "consequences", issues)

    npcs: dict[str, NpcSpec] = {}
    if "npcs" not in doc:
        issues.append(ValidationIssue("npcs", "missing required field"))
    elif not isinstance(doc["npcs"], Mapping):
        issues.append(ValidationIssue("npcs", "expected a map of NPC name to spec"))
    else:
        for name, spec in doc["npcs"].items():
            if not isinstance(spec, Mapping):
                issues.append(ValidationIssue(f"npcs.{name}", "expected an NPC spec object"))
                continue
            fields = {}
            for f in NPC_FIELDS:
                value = spec.get(f)
                if not isinstance(value, str) or not value:
                    issues.append(
                        ValidationIssue(f"npcs.{name}.{f}", "missing or empty NPC field")
                    )
                else:
                    fields[f] = value
            if len(fields) == len(NPC_FIELDS):
                npcs[name] = NpcSpec(**fields)

    tables: dict[str, tuple[str, ...]] = {}
    if "random_tables" not in doc:
        issues.append(ValidationIssue("random_tables", "missing required field"))
    elif not isinstance(doc["random_tables"], Mapping):
        issues.append(ValidationIssue("random_tables", "expected a map of table name to entries"))
    else:
        for name, entries in doc["random_tables"].items():
            if (
                not isinstance(entries, list)
                or any(not isinstance(e, str) for e in entries)
            ):
                issues.append(
                    ValidationIssue(f"random_tables.{name}", "expected a list of text entries")
                )
            elif not entries:
                issues.append(ValidationIssue(f"random_tables.{name}", "empty random table"))
            else:
                tables[name] = tuple(entries)

    is_action = doc.get("is_action_scene", False)
    if not isinstance(is_action, bool):
        issues.append(ValidationIssue("is_action_scene", "expected a boolean"))
        is_action = False

    if issues:
        raise StateValidationError(issues)
    return SceneState(
        chapter=chapter,
        scene=scene,
        scene_summary=scene_summary,
        npcs=npcs,
        success_condition=success,
        failure_condition=failure,
        game_flow=game_flow,
        environment=environment,
        random_tables=tables,
        consequences=consequences,
        is_action_scene=is_action,
    )


def parse_player_state(document: str | Mapping) -> PlayerState:
    """Parse a player document; collects all issues like :func:`parse_scene_state`."""
    issues: list[ValidationIssue] = []
    if isinstance(document, str):
        try:
            doc, duplicates = _parse_json_tracking_duplicates(document)
        except json.JSONDecodeError as exc:
            raise StateValidationError([ValidationIssue("$", f"invalid JSON: {exc}")])
        issues.extend(
            _duplicate_issues(duplicates, doc if isinstance(doc, Mapping) else {},
                              ("traits", "flaws", "inventory"))
        )
    else:
        doc = document
    if not isinstance(doc, Mapping):
        raise StateValidationError([ValidationIssue("$", "document must be an object")])

    name = _check_str(doc, "name", issues)
    if name == "":
        issues.append(ValidationIssue("name", "player name must not be empty"))
    kin = _check_str(doc, "kin", issues)
    goal = _check_str(doc, "goal", issues)
    traits = _check_str_map(doc, "traits", issues)
    flaws = _check_str_map(doc, "flaws", issues)
    inventory = _check_str_map(doc, "inventory", issues)
    notes = _check_str_list(doc, "additional_notes", issues)

    if issues:
        raise StateValidationError(issues)
    return PlayerState(
        name=name,
        kin=kin,
        goal=goal,
        traits=traits,
        flaws=flaws,
        inventory=inventory,
        additional_notes=notes,
    )


# ---------------------------------------------------------------------------
# Flat-text rendering


def _render_lines(title: str | None, pairs: list[tuple[str, object]]) -> list[str]:
    lines = [] if title is None else [title]
    for label, value in pairs:
        if isinstance(value, bool):
            lines.append(f"{label}: {'true' if value else 'false'}")
        elif isinstance(value, str):
            lines.append(f"{label}: {value}")
        elif isinstance(value, tuple):
            if not value:
                lines.append(f"{label}: (none)")
            else:
                lines.append(f"{label}:")
                lines.extend(f"  {i}. {item}" for i, item in enumerate(value, 1))
        elif isinstance(value, dict):
            if not value:
                lines.append(f"{label}: (none)")
            else:
                lines.append(f"{label}:")
                for key in sorted(value):
                    entry = value[key]
                    if isinstance(entry, NpcSpec):
                        lines.append(f"  {key}:")
                        lines.extend(f"    {f}: {getattr(entry, f)}" for f in NPC_FIELDS)
                    elif isinstance(entry, tuple):
                        lines.append(f"  {key}:")
                        lines.extend(f"    - {e}" for e in entry)
                    else:
                        lines.append(f"  {key}: {entry}")
        else:  # pragma: no cover - field types are closed
            lines.append(f"{label}: {value}")
    return lines


def render_scene_block(scene: SceneState) -> str:
    pairs = [(f, getattr(scene, f)) for f in SCENE_FIELDS]
    return "\n".join(_render_lines("[Scene]", pairs))


def render_player_block(player: PlayerState) -> str:
    pairs = [(f, getattr(player, f)) for f in PLAYER_FIELDS]
    return "\n".join(_render_lines(f"[Player: {player.name}]", pairs))


def render_state_block(scene: SceneState, players: Sequence[PlayerState]) -> str:
    """Deterministic flat-text rendering of the scene plus every player.

    Field order follows the state definitions; map entries are sorted by key,
    so equal states always render byte-identically.
    """
    blocks = [render_scene_block(scene)]
    blocks.extend(render_player_block(p) for p in players)
    return "\n\n".join(blocks)


# ---------------------------------------------------------------------------
# Diffing


@dataclass(frozen=True)
class FieldChange:
    """One field-level mutation; ``before``/``after`` of None mean absence."""

    path: tuple[str, ...]
    before: object
    after: object

    @property
    def dotted(self) -> str:
        return ".".join(self.path)

    def reversed(self) -> "FieldChange":
        return FieldChange(self.path, self.after, self.before)


@dataclass(frozen=True)
class StateDiff:
    """Field-level difference between two (scene, players) snapshots."""

    scene_changes: tuple[FieldChange, ...] = ()
    player_changes: dict[str, tuple[FieldChange, ...]] = field(default_factory=dict)

    def is_empty(self) -> bool:
        return not self.scene_changes and not any(self.player_changes.values())

    def reversed(self) -> "StateDiff":
        return StateDiff(
            tuple(c.reversed() for c in self.scene_changes),
            {name: tuple(c.reversed() for c in changes)
             for name, changes in self.player_changes.items()},
        )

    def to_document(self) -> dict:
        return {
            "scene_changes": [
                {"path": c.dotted, "before": c.before, "after": c.after}
                for c in self.scene_changes
            ],
            "player_changes": {
                name: [
                    {"path": c.dotted, "before": c.before, "after": c.after}
                    for c in changes
                ]
                for name, changes in self.player_changes.items()
            },
        }


EMPTY_DIFF = StateDiff()

_SCENE_SCALARS = ("chapter", "scene", "success_condition", "failure_condition",
                  "consequences", "is_action_scene")
_PLAYER_SCALARS = ("name", "kin", "goal")


def _diff_map(field_name: str, before: Mapping, after: Mapping, to_plain) -> list[FieldChange]:
    changes = []
    for key in sorted(set(before) | set(after)):
        b = to_plain(before[key]) if key in before else None
        a = to_plain(after[key]) if key in after else None
        if b != a:
            changes.append(FieldChange((field_name, key), b, a))
    return changes


def _diff_npcs(before: Mapping[str, NpcSpec], after: Mapping[str, NpcSpec]) -> list[FieldChange]:
    changes = []
    for name in sorted(set(before) | set(after)):
        if name not in before:
            changes.append(FieldChange(("npcs", name), None, after[name].to_document()))
        elif name not in after:
            changes.append(FieldChange(("npcs", name), before[name].to_document(), None))
        elif before[name] != after[name]:
            for f in NPC_FIELDS:
                b, a = getattr(before[name], f), getattr(after[name], f)
                if b != a:
                    changes.append(FieldChange(("npcs", name, f), b, a))
    return changes


def _diff_scene(before: SceneState, after: SceneState) -> tuple[FieldChange, ...]:
    changes: list[FieldChange] = []
    for f in _SCENE_SCALARS:
        b, a = getattr(before, f), getattr(after, f)
        if b != a:
            changes.append(FieldChange((f,), b, a))
    for f in ("scene_summary", "game_flow"):
        b, a = getattr(before, f), getattr(after, f)
        if b != a:
            changes.append(FieldChange((f,), list(b), list(a)))
    changes.extend(_diff_npcs(before.npcs, after.npcs))
    changes.extend(_diff_map("environment", before.environment, after.environment, lambda v: v))
    changes.extend(_diff_map("random_tables", before.random_tables, after.random_tables, list))
    return tuple(sorted(changes, key=lambda c: c.path))


def _diff_player(before: PlayerState, after: PlayerState) -> tuple[FieldChange, ...]:
    changes: list[FieldChange] = []
    for f in _PLAYER_SCALARS:
        b, a = getattr(before, f), getattr(after, f)
        if b != a:
            changes.append(FieldChange((f,), b, a))
    for f in ("traits", "flaws", "inventory"):
        changes.extend(_diff_map(f, getattr(before, f), getattr(after, f), lambda v: v))
    if before.additional_notes != after.additional_notes:
        changes.append(FieldChange(("additional_notes",),
                                   list(before.additional_notes),
                                   list(after.additional_notes)))
    return tuple(sorted(changes, key=lambda c: c.path))


GameStatePair = tuple[SceneState, Sequence[PlayerState]]


def diff_states(before: GameStatePair, after: GameStatePair) -> StateDiff:
    """Minimal field-level diff between two (scene, players) snapshots.

    Both sides must carry the same player roster (matched by name).
    Reversing the result equals diffing the swapped arguments.
    """
    scene_b, players_b = before
    scene_a, players_a = after
    roster_b = {p.name: p for p in players_b}
    roster_a = {p.name: p for p in players_a}
    if len(roster_b) != len(players_b) or len(roster_a) != len(players_a):
        raise RosterMismatchError("duplicate player names in roster")
    if set(roster_b) != set(roster_a):
        raise RosterMismatchError(
            f"player rosters differ: {sorted(roster_b)} vs {sorted(roster_a)}"
        )
    player_changes = {}
    for name in sorted(roster_b):
        changes = _diff_player(roster_b[name], roster_a[name])
        if changes:
            player_changes[name] = changes
    return StateDiff(_diff_scene(scene_b, scene_a), player_changes)


def _apply_scene_change(scene: SceneState, change: FieldChange) -> SceneState:
    doc = scene.to_document()
    root = change.path[0]
    if len(change.path) == 1:
        current = doc[root]
        if current != change.before:
            raise DiffApplyError(
                f"scene.{change.dotted}: expected {change.before!r}, found {current!r}"
            )
        doc[root] = change.after
    elif root == "npcs" and len(change.path) == 3:
        name, f = change.path[1], change.path[2]
        if name not in doc["npcs"] or doc["npcs"][name].get(f) != change.before:
            raise DiffApplyError(f"scene.{change.dotted}: before-value mismatch")
        doc["npcs"][name][f] = change.after
    else:
        container = doc[root]
        key = change.path[1]
        current = container.get(key)
        if current != change.before:
            raise DiffApplyError(
                f"scene.{change.dotted}: expected {change.before!r}, found {current!r}"
            )
        if change.after is None:
            del container[key]
        else:
            container[key] = change.after
    return parse_scene_state(doc)


def _apply_player_change(player: PlayerState, change: FieldChange) -> PlayerState:
    doc = player.to_document()
    root = change.path[0]
    if len(change.path) == 1:
        if doc[root] != change.before:
            raise DiffApplyError(
                f"player.{change.dotted}: expected {change.before!r}, found {doc[root]!r}"
            )
        doc[root] = change.after
    else:
        container = doc[root]
        key = change.path[1]
        if container.get(key) != change.before:
            raise DiffApplyError(f"player.{change.dotted}: before-value mismatch")
        if change.after is None:
            del container[key]
        else:
            container[key] = change.after
    return parse_player_state(doc)


def apply_diff(diff: StateDiff, before: GameStatePair) -> tuple[SceneState, tuple[PlayerState, ...]]:
    """Apply a diff to its before-state, producing the after-state."""
    scene, players = before
    unknown = set(diff.player_changes) - {p.name for p in players}
    if unknown:
        raise DiffApplyError(f"diff names absent players: {sorted(unknown)}")
    for change in diff.scene_changes:
        scene = _apply_scene_change(scene, change)
    new_players = []
    for player in players:
        for change in diff.player_changes.get(player.name, ()):
            player = _apply_player_change(player, change)
        new_players.append(player)
    return scene, tuple(new_players)
