"""The callable tool registry: one dice-test function plus 13 state functions.

Dispatch is total: every game-level problem (unknown player, missing item,
bad argument) comes back as an error result message with an empty StateDiff,
so the orchestration loop can hand the failure to the model as narration
material instead of crashing the turn.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass
from enum import Enum
from random import Random

from .dice import DiceError, Modifier, TestResult, roll_test
from .profiles import GmSettingProfile, ToolGating
from .state import (
    EMPTY_DIFF,
    NpcSpec,
    PlayerState,
    SceneState,
    StateDiff,
    StateError,
    diff_states,
    parse_player_state,
    parse_scene_state,
)


class FunctionCategory(str, Enum):
    DICE_ROLL = "dice_roll"
    STATE = "state"


@dataclass(frozen=True)
class ParamSpec:
    name: str
    type: str  # "text" | "integer" | "boolean"
    required: bool
    description: str


@dataclass(frozen=True)
class FunctionSpec:
    name: str
    description: str
    parameters: tuple[ParamSpec, ...]
    category: FunctionCategory


@dataclass(frozen=True)
class FunctionCall:
    name: str
    arguments: dict
    call_id: str

    def __post_init__(self):
        object.__setattr__(self, "arguments", dict(self.arguments))


@dataclass(frozen=True)
class DispatchOutcome:
    """Result message plus the state mutation it implies."""

    message: str
    diff: StateDiff
    is_error: bool = False
    test_result: TestResult | None = None


def _p(name: str, type_: str, required: bool, description: str) -> ParamSpec:
    return ParamSpec(name, type_, required, description)


REGISTRY: tuple[FunctionSpec, ...] = (
    FunctionSpec(
        "activate_test",
        "Roll a six-sided dice test for a player against a difficulty number. "
        "Name an applicable trait to roll two dice and keep the highest, or an "
        "applicable flaw to keep the lowest; naming both cancels out.",
        (
            _p("difficulty", "integer", True, "Target number from 1 (trivial) to 6 (nearly impossible)"),
            _p("player", "text", False, "Name of the player making the test"),
            _p("trait", "text", False, "Player trait that helps this test, if any"),
            _p("flaw", "text", False, "Player flaw that hinders this test, if any"),
        ),
        FunctionCategory.DICE_ROLL,
    ),
    FunctionSpec(
        "activate_action_scene",
        "Start an action scene in which time pressure and turn order matter.",
        (),
        FunctionCategory.STATE,
    ),
    FunctionSpec(
        "terminate_action_scene",
        "End the current action scene and return to free play.",
        (),
        FunctionCategory.STATE,
    ),
    FunctionSpec(
        "create_npc",
        "Create a new named NPC; a full specification is generated from the "
        "given context and added to the scene.",
        (
            _p("name", "text", True, "Unique name for the new NPC"),
            _p("context", "text", True, "What the NPC is and why it appears now"),
        ),
        FunctionCategory.STATE,
    ),
    FunctionSpec(
        "add_trait",
        "Give a player a new trait.",
        (
            _p("player", "text", True, "Player name"),
            _p("name", "text", True, "Trait name"),
            _p("description", "text", True, "What the trait means in play"),
        ),
        FunctionCategory.STATE,
    ),
    FunctionSpec(
        "remove_trait",
        "Remove a trait from a player.",
        (
            _p("player", "text", True, "Player name"),
            _p("name", "text", True, "Trait name to remove"),
        ),
        FunctionCategory.STATE,
    ),
    FunctionSpec(
        "add_flaw",
        "Give a player a new flaw.",
        (
            _p("player", "text", True, "Player name"),
            _p("name", "text", True, "Flaw name"),
            _p("description", "text", True, "What the flaw means in play"),
        ),
        FunctionCategory.STATE,
    ),
    FunctionSpec(
        "remove_flaw",
        "Remove a flaw from a player.",
        (
            _p("player", "text", True, "Player name"),
            _p("name", "text", True, "Flaw name to remove"),
        ),
        FunctionCategory.STATE,
    ),
    FunctionSpec(
        "add_item",
        "Put a new item into a player's inventory.",
        (
            _p("player", "text", True, "Player name"),
            _p("name", "text", True, "Item name"),
            _p("description", "text", True, "What the item is"),
        ),
        FunctionCategory.STATE,
    ),
    FunctionSpec(
        "remove_item",
        "Take an item out of a player's inventory, leaving it in the environment.",
        (
            _p("player", "text", True, "Player name"),
            _p("name", "text", True, "Item name to remove"),
        ),
        FunctionCategory.STATE,
    ),
    FunctionSpec(
        "use_item",
        "Have a player use an item they carry; consumable items are spent.",
        (
            _p("player", "text", True, "Player name"),
            _p("item", "text", True, "Item name to use"),
            _p("consumed", "boolean", False, "True if the item is used up (default false)"),
        ),
        FunctionCategory.STATE,
    ),
    FunctionSpec(
        "add_object",
        "Introduce a new object into the scene environment.",
        (
            _p("name", "text", True, "Object name"),
            _p("description", "text", True, "What the object is"),
        ),
        FunctionCategory.STATE,
    ),
    FunctionSpec(
        "use_environment",
        "Have a player interact with an object in the environment; the player "
        "can choose to take it.",
        (
            _p("player", "text", True, "Player name"),
            _p("object", "text", True, "Environment object name"),
            _p("take", "boolean", False, "True if the player takes the object (default false)"),
        ),
        FunctionCategory.STATE,
    ),
    FunctionSpec(
        "use_random_table",
        "Sample entries from one of the scene's random tables to introduce new "
        "context; sampled entries are crossed off by default.",
        (
            _p("table", "text", True, "Random table name"),
            _p("n", "integer", True, "How many entries to sample"),
            _p("consume_entries", "boolean", False, "Cross off sampled entries (default true)"),
            _p("consume_table", "boolean", False, "Discard the whole table afterwards (default false)"),
        ),
        FunctionCategory.STATE,
    ),
)

SPECS_BY_NAME: dict[str, FunctionSpec] = {s.name: s for s in REGISTRY}

DICE_FUNCTIONS = tuple(s for s in REGISTRY if s.category is FunctionCategory.DICE_ROLL)
STATE_FUNCTIONS = tuple(s for s in REGISTRY if s.category is FunctionCategory.STATE)

assert len(DICE_FUNCTIONS) == 1 and len(STATE_FUNCTIONS) == 13

def active_registry(profile: GmSettingProfile) -> tuple[FunctionSpec, ...]:
    """The function specs a given setting profile exposes to the model."""
    return {
        ToolGating.ALL: REGISTRY,
        ToolGating.DICE_ONLY: DICE_FUNCTIONS,
        ToolGating.STATES_ONLY: STATE_FUNCTIONS,
        ToolGating.NONE: (),
    }[profile.tool_gating]


_TYPE_CHECKS: dict[str, Callable[[object], bool]] = {
    "text": lambda v: isinstance(v, str),
    "integer": lambda v: isinstance(v, int) and not isinstance(v, bool),
    "boolean": lambda v: isinstance(v, bool),
}


def validate_call(call: FunctionCall, specs: Sequence[FunctionSpec]) -> list[str]:
    """Problems with a call against a registry; empty list means valid.

    Unknown extra arguments are tolerated (models pad calls with junk).
    """
    by_name = {s.name: s for s in specs}
    if call.name not in by_name:
        return [f"unknown function {call.name!r}"]
    problems = []
    for param in by_name[call.name].parameters:
        if param.name not in call.arguments:
            if param.required:
                problems.append(f"missing required argument {param.name!r}")
            continue
        value = call.arguments[param.name]
        if not _TYPE_CHECKS[param.type](value):
            problems.append(
                f"argument {param.name!r} must be {param.type}, got {type(value).__name__}"
            )
    return problems


TableSampler = Callable[[Sequence[str], int, Random], list[str]]
SubGenerator = Callable[[str, str], NpcSpec]


def default_table_sampler(entries: Sequence[str], n: int, rng: Random) -> list[str]:
    """Uniform sample without replacement, in draw order."""
    return rng.sample(list(entries), n)


def _replace_scene(scene: SceneState, **changes) -> SceneState:
    return parse_scene_state({**scene.to_document(), **{k: v for k, v in changes.items()}})


def _replace_player(player: PlayerState, **changes) -> PlayerState:
    return parse_player_state({**player.to_document(), **changes})


class _SoftError(Exception):
    """Internal: converted into an error DispatchOutcome."""


def _find_player(players: Sequence[PlayerState], name: str) -> PlayerState:
    for p in players:
        if p.name == name:
            return p
    raise _SoftError(f"There is no player named {name!r}.")


def _outcome_for(scene, players, new_scene, new_players, message) -> DispatchOutcome:
    diff = diff_states((scene, players), (new_scene, new_players))
    return DispatchOutcome(message, diff)


def dispatch(
    call: FunctionCall,
    scene: SceneState,
    players: Sequence[PlayerState],
    rng: Random,
    table_sampler: TableSampler = default_table_sampler,
    sub_generator: SubGenerator | None = None,
) -> DispatchOutcome:
    """Execute one validated function call against the current state.

    Returns the result message and the state diff it implies. Never raises for
    game-level failures; those come back as ``is_error`` outcomes with an
    empty diff.
    """
    players = tuple(players)
    problems = validate_call(call, REGISTRY)
    if problems:
        return DispatchOutcome(
            f"Function call {call.name!r} rejected: {'; '.join(problems)}.",
            EMPTY_DIFF,
            is_error=True,
        )
    args = call.arguments
    try:
        return _HANDLERS[call.name](args, scene, players, rng, table_sampler, sub_generator)
    except _SoftError as exc:
        return DispatchOutcome(str(exc), EMPTY_DIFF, is_error=True)


# ---------------------------------------------------------------------------
# Per-function handlers


def _h_activate_test(args, scene, players, rng, table_sampler, sub_generator):
    difficulty = args["difficulty"]
    player = None
    if args.get("player") is not None:
        player = _find_player(players, args["player"])
    advantage = disadvantage = False
    trait, flaw = args.get("trait"), args.get("flaw")
    if trait:
        if player is not None and trait not in player.traits:
            raise _SoftError(f"{player.name} has no trait named {trait!r}.")
        advantage = True
    if flaw:
        if player is not None and flaw not in player.flaws:
            raise _SoftError(f"{player.name} has no flaw named {flaw!r}.")
        disadvantage = True
    if advantage and disadvantage:
        modifier = Modifier.NONE  # a relevant trait and flaw cancel out
    elif advantage:
        modifier = Modifier.ADVANTAGE
    elif disadvantage:
        modifier = Modifier.DISADVANTAGE
    else:
        modifier = Modifier.NONE
    try:
        result = roll_test(difficulty, modifier, rng)
    except DiceError as exc:
        raise _SoftError(f"Dice test rejected: {exc}")
    who = f"{player.name} rolls" if player is not None else "The dice come up"
    shown = " and ".join(str(r) for r in result.rolls)
    qualifier = {
        Modifier.NONE: "",
        Modifier.ADVANTAGE: " with advantage, keeping the highest",
        Modifier.DISADVANTAGE: " with disadvantage, keeping the lowest",
    }[modifier]
    verdict = "Success" if result.success else "Failure"
    message = (
        f"Dice test against difficulty {difficulty}{qualifier}: {who} {shown}, "
        f"keeping {result.kept}. {verdict}."
    )
    return DispatchOutcome(message, EMPTY_DIFF, test_result=result)


def _h_activate_action_scene(args, scene, players, rng, table_sampler, sub_generator):
    new_scene = _replace_scene(scene, is_action_scene=True)
    return _outcome_for(scene, players, new_scene, players, "An action scene begins.")


def _h_terminate_action_scene(args, scene, players, rng, table_sampler, sub_generator):
    new_scene = _replace_scene(scene, is_action_scene=False)
    return _outcome_for(scene, players, new_scene, players, "The action scene ends.")


def _h_create_npc(args, scene, players, rng, table_sampler, sub_generator):
    name = args["name"]
    if name in scene.npcs:
        raise _SoftError(f"An NPC named {name!r} already exists in the scene.")
    if sub_generator is None:
        raise _SoftError("No NPC generator is available.")
    try:
        spec = sub_generator(name, args["context"])
    except StateError as exc:
        raise _SoftError(f"NPC generation for {name!r} produced an invalid spec: {exc}")
    npcs = {**scene.to_document()["npcs"], name: spec.to_document()}
    new_scene = _replace_scene(scene, npcs=npcs)
    message = (
        f"{name} joins the scene: a {spec.kin}. {spec.persona} "
        f"Goal: {spec.goal} Trait: {spec.trait}. Flaw: {spec.flaw}."
    )
    return _outcome_for(scene, players, new_scene, players, message)


def _with_player_swapped(players, updated):
    return tuple(updated if p.name == updated.name else p for p in players)


def _h_add_trait(args, scene, players, rng, table_sampler, sub_generator):
    player = _find_player(players, args["player"])
    updated = _replace_player(player, traits={**player.traits, args["name"]: args["description"]})
    message = f"{player.name} gains the trait {args['name']!r}: {args['description']}"
    return _outcome_for(scene, players, scene, _with_player_swapped(players, updated), message)


def _h_remove_trait(args, scene, players, rng, table_sampler, sub_generator):
    player = _find_player(players, args["player"])
    name = args["name"]
    if name not in player.traits:
        raise _SoftError(f"{player.name} has no trait named {name!r}.")
    traits = {k: v for k, v in player.traits.items() if k != name}
    updated = _replace_player(player, traits=traits)
    message = f"{player.name} loses the trait {name!r}."
    return _outcome_for(scene, players, scene, _with_player_swapped(players, updated), message)


def _h_add_flaw(args, scene, players, rng, table_sampler, sub_generator):
    player = _find_player(players, args["player"])
    updated = _replace_player(player, flaws={**player.flaws, args["name"]: args["description"]})
    message = f"{player.name} gains the flaw {args['name']!r}: {args['description']}"
    return _outcome_for(scene, players, scene, _with_player_swapped(players, updated), message)


def _h_remove_flaw(args, scene, players, rng, table_sampler, sub_generator):
    player = _find_player(players, args["player"])
    name = args["name"]
    if name not in player.flaws:
        raise _SoftError(f"{player.name} has no flaw named {name!r}.")
    flaws = {k: v for k, v in player.flaws.items() if k != name}
    updated = _replace_player(player, flaws=flaws)
    message = f"{player.name} overcomes the flaw {name!r}."
    return _outcome_for(scene, players, scene, _with_player_swapped(players, updated), message)


def _h_add_item(args, scene, players, rng, table_sampler, sub_generator):
    player = _find_player(players, args["player"])
    updated = _replace_player(
        player, inventory={**player.inventory, args["name"]: args["description"]}
    )
    message = f"{player.name} now carries {args['name']!r}: {args['description']}"
    return _outcome_for(scene, players, scene, _with_player_swapped(players, updated), message)


def _h_remove_item(args, scene, players, rng, table_sampler, sub_generator):
    player = _find_player(players, args["player"])
    name = args["name"]
    if name not in player.inventory:
        raise _SoftError(f"{player.name} has no item named {name!r}.")
    description = player.inventory[name]
    inventory = {k: v for k, v in player.inventory.items() if k != name}
    updated = _replace_player(player, inventory=inventory)
    # the discarded item stays in the scene for anyone to pick up
    new_scene = _replace_scene(scene, environment={**scene.environment, name: description})
    message = f"{player.name} leaves {name!r} behind; it remains in the environment."
    return _outcome_for(scene, players, new_scene, _with_player_swapped(players, updated), message)


def _h_use_item(args, scene, players, rng, table_sampler, sub_generator):
    player = _find_player(players, args["player"])
    item = args["item"]
    if item not in player.inventory:
        raise _SoftError(f"{player.name} has no item named {item!r}.")
    if args.get("consumed", False):
        inventory = {k: v for k, v in player.inventory.items() if k != item}
        updated = _replace_player(player, inventory=inventory)
        message = f"{player.name} uses {item!r}; it is spent."
        return _outcome_for(scene, players, scene, _with_player_swapped(players, updated), message)
    return DispatchOutcome(f"{player.name} uses {item!r}.", EMPTY_DIFF)


def _h_add_object(args, scene, players, rng, table_sampler, sub_generator):
    new_scene = _replace_scene(
        scene, environment={**scene.environment, args["name"]: args["description"]}
    )
    message = f"A new object appears in the scene: {args['name']!r}. {args['description']}"
    return _outcome_for(scene, players, new_scene, players, message)


def _h_use_environment(args, scene, players, rng, table_sampler, sub_generator):
    player = _find_player(players, args["player"])
    obj = args["object"]
    if obj not in scene.environment:
        raise _SoftError(f"There is no object named {obj!r} in the environment.")
    if args.get("take", False):
        description = scene.environment[obj]
        environment = {k: v for k, v in scene.environment.items() if k != obj}
        new_scene = _replace_scene(scene, environment=environment)
        updated = _replace_player(player, inventory={**player.inventory, obj: description})
        message = f"{player.name} takes {obj!r} from the environment."
        return _outcome_for(scene, players, new_scene, _with_player_swapped(players, updated), message)
    return DispatchOutcome(f"{player.name} interacts with {obj!r}.", EMPTY_DIFF)


def _h_use_random_table(args, scene, players, rng, table_sampler, sub_generator):
    table = args["table"]
    if table not in scene.random_tables:
        raise _SoftError(f"There is no random table named {table!r}.")
    n = args["n"]
    if n < 1:
        raise _SoftError(f"Sample count must be at least 1, got {n}.")
    entries = scene.random_tables[table]
    n = min(n, len(entries))  # never ask the sampler for more than exists
    sampled = table_sampler(entries, n, rng)
    consume_entries = args.get("consume_entries", True)
    consume_table = args.get("consume_table", False)
    tables = {k: list(v) for k, v in scene.random_tables.items()}
    if consume_table:
        del tables[table]
    elif consume_entries:
        remaining = [e for e in entries if e not in sampled]
        if remaining:
            tables[table] = remaining
        else:
            # an empty table is not allowed to linger; drop it outright
            del tables[table]
    new_scene = _replace_scene(scene, random_tables=tables)
    listed = "; ".join(sampled)
    message = f"Drawn from the {table!r} table: {listed}."
    return _outcome_for(scene, players, new_scene, players, message)


_HANDLERS = {
    "activate_test": _h_activate_test,
    "activate_action_scene": _h_activate_action_scene,
    "terminate_action_scene": _h_terminate_action_scene,
    "create_npc": _h_create_npc,
    "add_trait": _h_add_trait,
    "remove_trait": _h_remove_trait,
    "add_flaw": _h_add_flaw,
    "remove_flaw": _h_remove_flaw,
    "add_item": _h_add_item,
    "remove_item": _h_remove_item,
    "use_item": _h_use_item,
    "add_object": _h_add_object,
    "use_environment": _h_use_environment,
    "use_random_table": _h_use_random_table,
}

assert set(_HANDLERS) == set(SPECS_BY_NAME)
