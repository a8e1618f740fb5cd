"""Deterministic offline stand-ins for every provider role: scene
initialization, self-play simulation, judging, and NPC generation.

Nothing here touches the network. Given the same inputs and seed, every
function produces byte-identical output, which is what makes `--offline`
simulation reproducible and testable.
"""

from __future__ import annotations

import hashlib
import json
import re
from collections.abc import Sequence

from .characters import Catalog, create_character
from .engine import ScriptedPlayerAgent
from .functions import FunctionCall
from .gateway import (
    ModelTurn,
    PromptPackage,
    ScriptedProvider,
    call_turn,
    hash_embed,
    stop_turn,
    text_turn,
)
from .state import NpcSpec, PlayerState, SceneState


# ---------------------------------------------------------------------------
# Scene initialization

_SAMPLED_LINE = re.compile(r"^Sampled for (\w+) from table '(.*)':$")


class OfflineSceneInitProvider:
    """Answers the scene-initialization prompts by rule.

    Tables are always classified as object seeds with two samples each; the
    generation step echoes the sampled entries back as environment objects and
    derives the other components from the raw scene text. The replies adapt to
    whatever the request contains, so sampling stays with the caller's rng.
    """

    def __init__(self, table_usage: str = "objects", sample_count: int = 2):
        self.table_usage = table_usage
        self.sample_count = sample_count

    def complete(self, prompt: PromptPackage) -> ModelTurn:
        request = prompt.messages[-1].content
        if "Classify the random table" in request:
            return text_turn(self.table_usage)
        if "How many entries should be sampled" in request:
            return text_turn(str(self.sample_count))
        if "Generate the initialized scene" in request or "corrected JSON" in request:
            return text_turn(json.dumps(self._generate(request), ensure_ascii=False))
        return stop_turn()

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        return [hash_embed(t) for t in texts]

    def _generate(self, request: str) -> dict:
        raw = _raw_scene_doc(request)
        samples = _sampled_entries(request)
        sentences = [s.strip() for s in raw.get("description", "").split(".") if s.strip()]
        environment = {}
        npcs = {}
        for usage, entry in samples:
            if usage in ("objects", "both"):
                name = _object_name(entry, environment)
                environment[name] = entry
            if usage in ("npcs", "both"):
                npcs[_object_name(entry, npcs)] = {
                    "kin": "Maze-dweller",
                    "persona": entry,
                    "goal": "Pursue what the entry describes",
                    "trait": "Knows this hall",
                    "flaw": "Trusts no outsider",
                }
        flow = list(raw.get("notes", ())) or [
            "The party takes in the scene.",
            "The scene's challenge presents itself.",
            "The party finds a way onward or pays for the delay.",
        ]
        return {
            "scene_summary": [s + "." for s in sentences[:3]],
            "npcs": npcs,
            "success_condition": "The party overcomes the scene's challenge "
                                 "and finds the way onward.",
            "failure_condition": "The party is stopped or the thirteenth hour "
                                 "arrives first.",
            "game_flow": flow,
            "environment": environment,
            "consequences": "A loud failure here echoes into the next hall.",
        }


def _raw_scene_doc(request: str) -> dict:
    for line in request.splitlines():
        line = line.strip()
        if line.startswith("{"):
            try:
                return json.loads(line)
            except json.JSONDecodeError:
                continue
    return {}


def _sampled_entries(request: str) -> list[tuple[str, str]]:
    samples = []
    usage = None
    for line in request.splitlines():
        match = _SAMPLED_LINE.match(line.strip())
        if match:
            usage = match.group(1)
            continue
        if usage and line.startswith("- "):
            samples.append((usage, line[2:]))
        elif usage and not line.startswith("- "):
            usage = None
    return samples


def _object_name(entry: str, taken) -> str:
    words = entry.split()
    name = " ".join(words[:4]) if words else "Found object"
    base = name
    suffix = 2
    while name in taken:
        name = f"{base} ({suffix})"
        suffix += 1
    return name


# ---------------------------------------------------------------------------
# NPC generation


_NPC_KINS = ("Shadowfoot", "Stoneborn", "Mosskin", "Gloamwing", "Maze-dweller")
_NPC_GOALS = (
    "Trade maze secrets for supplies",
    "Guard this hall against all comers",
    "Find a way out before the clock turns",
    "Collect a debt from the next traveler",
    "Map every corridor before it shifts",
)
_NPC_TRAITS = ("Sharp ears", "Patient", "Well-connected", "Fearless", "Observant")
_NPC_FLAWS = ("Superstitious", "Greedy", "Short-tempered", "Gossipy", "Cowardly")


def offline_npc_generator(name: str, context: str) -> NpcSpec:
    """A complete NPC spec derived only from the name and context text."""
    digest = hashlib.md5(f"{name}|{context}".encode()).digest()
    return NpcSpec(
        kin=_NPC_KINS[digest[0] % len(_NPC_KINS)],
        persona=f"{name}, drawn into the scene: {context}",
        goal=_NPC_GOALS[digest[1] % len(_NPC_GOALS)],
        trait=_NPC_TRAITS[digest[2] % len(_NPC_TRAITS)],
        flaw=_NPC_FLAWS[digest[3] % len(_NPC_FLAWS)],
    )


# ---------------------------------------------------------------------------
# Self-play simulation


def offline_party(catalog: Catalog) -> tuple[PlayerState, PlayerState]:
    """Two fixed characters built from the bundled catalog."""
    return (
        create_character(
            "Bram", "Shadowfoot",
            "Reach the maze's heart before the thirteenth bell", "Brave",
            "Reckless", catalog,
        ),
        create_character(
            "Wren", "Mosskin",
            "Recover her stolen name from the Goblin Market", "Sharp-eyed",
            "Boastful", catalog,
        ),
    )


def offline_sim_provider(
    scene: SceneState, players: Sequence[PlayerState]
) -> ScriptedProvider:
    """A three-round GM script adapted to the given scene and party."""
    lead = players[0]
    trait = next(iter(lead.traits), None)
    test_args = {"difficulty": 3, "player": lead.name}
    if trait:
        test_args["trait"] = trait
    script: list[ModelTurn] = [
        call_turn(FunctionCall("activate_test", test_args, "sim-1")),
        text_turn(
            f"{lead.name} tests the way forward while the others watch the dark."
        ),
        stop_turn(),
    ]
    if scene.random_tables:
        table = next(iter(scene.random_tables))
        script += [
            call_turn(FunctionCall("use_random_table", {"table": table, "n": 1},
                                   "sim-2")),
        ]
    else:
        script += [
            call_turn(FunctionCall(
                "add_object",
                {"name": "Scratched waymark",
                 "description": "An arrow scratched into the stone, pointing inward."},
                "sim-2",
            )),
        ]
    script += [
        text_turn("Something new comes to light, and the clock keeps counting."),
        stop_turn(),
        call_turn(FunctionCall(
            "add_item",
            {"player": lead.name, "name": "Waymark token",
             "description": "A stone chip marking the safe path taken so far."},
            "sim-3",
        )),
        text_turn("The way onward stands open."),
        stop_turn(),
    ]
    return ScriptedProvider(script)


def offline_judge_provider(rounds_before_success: int = 2) -> ScriptedProvider:
    script = [text_turn("CONTINUE")] * rounds_before_success + [text_turn("SUCCESS")]
    return ScriptedProvider(script)


def offline_player_agents(players: Sequence[PlayerState]) -> list[ScriptedPlayerAgent]:
    lead = players[0].name
    rounds = [
        [(lead, "I scout the path ahead and try the most promising way.")],
        [(lead, "I search the area for anything we can use.")],
        [(lead, "I gather what we found and press on toward the center.")],
    ]
    return [ScriptedPlayerAgent(rounds)]
