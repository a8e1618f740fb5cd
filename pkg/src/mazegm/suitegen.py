"""Builder for the bundled state-update test suite.

Each case is written out as a standalone JSON document with its expected
states computed by hand here (literal dict surgery, never by running the
engine) plus two scripts: ``correct`` performs the intended state change and
``adversarial`` either matches it or only rolls dice, so a known subset of
cases fails under the adversarial script.

Run ``python -m mazegm.suitegen`` to regenerate the files under
``data/unittests``.
"""

from __future__ import annotations

import copy
import json
from pathlib import Path
from random import Random

from .evalkit import UnitTestCase, write_case
from .functions import FunctionCall
from .gateway import ChatEvent, EventKind, call_turn, stop_turn, text_turn
from .offline import offline_npc_generator
from .state import parse_player_state, parse_scene_state

BASE_SCENE = {
    "chapter": "The Outer Rings",
    "scene": "The Lantern Cistern",
    "scene_summary": [
        "A drowned vault where hundreds of lanterns float on black water.",
        "A chain winch can raise the sunken stair, but the noise carries.",
    ],
    "npcs": {
        "Sel": {
            "kin": "Gloamwing",
            "persona": "A lantern-keeper who paddles between the lights, trimming wicks.",
            "goal": "Keep every lantern burning until the water forgets her debt",
            "trait": "Echo sense",
            "flaw": "Day-blind",
        }
    },
    "success_condition": "The party raises the sunken stair and climbs out dry.",
    "failure_condition": "The lanterns go out or the winch chain snaps.",
    "game_flow": [
        "Sel offers to guide the party for a favor.",
        "The winch must be worked quietly or the water stirs.",
        "The stair rises one notch per successful turn of the winch.",
    ],
    "environment": {
        "Chain winch": "A drum of wet chain geared to the sunken stair.",
        "Boat hook": "A long ash pole with a brass hook, leaning on the rail.",
        "Rusted gaff": "A short gaff with a rusted point, half underwater.",
        "Copper skiff": "A patched skiff that seats two, riding low.",
    },
    "random_tables": {
        "Cistern flotsam": [
            "A sealed letter in a bottle, addressed to the maze itself",
            "A drowned lantern whose flame still burns under glass",
            "A knotted ladder of eelskin, slick but sound",
            "A tin of pitch good for one patch or one torch",
        ],
        "Echo omens": [
            "The drip ahead counts exactly thirteen and stops",
            "A second set of oars answers every stroke",
            "The lanterns all lean the same way at once",
        ],
    },
    "consequences": "Raising the stair loudly tells the deep water where the party went.",
    "is_action_scene": False,
}

BASE_PLAYERS = [
    {
        "name": "Bram",
        "kin": "Shadowfoot",
        "goal": "Reach the maze's heart before the thirteenth bell",
        "traits": {
            "Silent step": "Moves without a sound on stone, gravel, or creaking boards.",
            "Brave": "Keeps a steady head and a steady hand when others panic.",
        },
        "flaws": {
            "Sticky fingers": "Pockets small shiny things without quite deciding to.",
            "Reckless": "Acts before weighing the cost.",
        },
        "inventory": {
            "Lockpicks": "A leather roll of bent pins, hooks, and tension bars.",
            "Travel rations": "Three days of hard bread and dried fruit, two days stale.",
        },
        "additional_notes": [
            "An outsider who walked into the maze with a purpose and a deadline."
        ],
    },
    {
        "name": "Wren",
        "kin": "Mosskin",
        "goal": "Recover her stolen name from the Goblin Market",
        "traits": {
            "Path memory": "Can retrace any route they have traveled, even in the dark.",
            "Sharp-eyed": "Notices the seam in the wall and the lie in the smile.",
        },
        "flaws": {
            "Roots down": "Falls into a rooted doze when staying still too long.",
            "Boastful": "Announces every success loudly, often too early.",
        },
        "inventory": {
            "Seed pouch": "A pouch of quick-sprouting seeds that grow a handhold or a snack.",
            "Rushlight": "A reed soaked in fat, good for one hour of dim light.",
        },
        "additional_notes": [
            "A quiet plant-person who drinks light and remembers every path once walked."
        ],
    },
]

# Cases that also pass under the adversarial script (it repeats the correct
# calls there); every other case gets the dice-only adversarial script and
# fails. 13 of 30 keeps the suite's two scores distinct and exact.
ADVERSARIAL_PASSES = {
    "case-01-add-item-bram",
    "case-02-add-item-wren",
    "case-04-use-item-consumed",
    "case-07-add-trait-wren",
    "case-09-add-flaw-bram",
    "case-11-action-scene-on",
    "case-14-item-and-flaw",
    "case-16-table-draw",
    "case-17-table-consumed",
    "case-20-add-trait-bram",
    "case-23-two-speakers",
    "case-25-add-object-chart",
    "case-28-action-and-flaw",
}

DICE_ONLY_SCRIPT = (
    call_turn(FunctionCall(
        "activate_test",
        {"difficulty": 4, "player": "Bram", "trait": "Brave"},
        "adv-1",
    )),
    text_turn("A tense moment passes, but nothing else changes."),
    stop_turn(),
)


def _dialogue(context: str, trigger: list[tuple[str, str]]) -> tuple[ChatEvent, ...]:
    events = [ChatEvent(EventKind.GM, "GM", context, 1)]
    for offset, (speaker, text) in enumerate(trigger):
        events.append(ChatEvent(EventKind.PLAYER, speaker, text, 2 + offset))
    return tuple(events)


def _script(calls: list[FunctionCall], closing: str) -> tuple:
    return tuple(
        [call_turn(c) for c in calls] + [text_turn(closing), stop_turn()]
    )


def _case_spec():
    """(id, context, trigger, calls, closing text, mutate) for all 30 cases."""
    first_flotsam = Random(0).sample(list(BASE_SCENE["random_tables"]["Cistern flotsam"]), 1)
    torvald = offline_npc_generator(
        "Torvald", "An old bargeman poling out of the dark."
    ).to_document()
    imp = offline_npc_generator(
        "Imp of the Overflow", "A dripping imp squeezed out of the overflow pipe."
    ).to_document()

    def inv(players, who, name, desc=None):
        if desc is None:
            del players[who]["inventory"][name]
        else:
            players[who]["inventory"][name] = desc

    def spec(trait_or_flaw, players, who, field, name, desc=None):
        if desc is None:
            del players[who][field][name]
        else:
            players[who][field][name] = desc

    return [
        (
            "case-01-add-item-bram",
            "Sel fishes a coil of line from under a thwart and holds it out.",
            [("Bram", "I take the line and the hook; we will need a way up the stair.")],
            [FunctionCall("add_item", {
                "player": "Bram", "name": "Grappling hook",
                "description": "A three-pronged hook on a knotted line.",
            }, "c1")],
            "Bram coils the line over one shoulder.",
            lambda s, p: inv(p, "Bram", "Grappling hook",
                             "A three-pronged hook on a knotted line."),
        ),
        (
            "case-02-add-item-wren",
            "The toll table in the corner holds odds and ends nobody reclaimed.",
            [("Wren", "I pocket the chalk stub; marking the path has saved us twice.")],
            [FunctionCall("add_item", {
                "player": "Wren", "name": "Chalk stub",
                "description": "White chalk for marking the path.",
            }, "c1")],
            "Wren tucks the chalk away.",
            lambda s, p: inv(p, "Wren", "Chalk stub", "White chalk for marking the path."),
        ),
        (
            "case-03-remove-item-lockpicks",
            "Sel names her price for guiding the party: the finest tool Bram carries.",
            [("Bram", "Fine. I set my lockpicks on the rail where she can see them.")],
            [FunctionCall("remove_item", {"player": "Bram", "name": "Lockpicks"}, "c1")],
            "The leather roll sits on the rail between them.",
            lambda s, p: (
                inv(p, "Bram", "Lockpicks"),
                s["environment"].__setitem__(
                    "Lockpicks", "A leather roll of bent pins, hooks, and tension bars."
                ),
            ),
        ),
        (
            "case-04-use-item-consumed",
            "The far ledge is pitch dark and the lantern light stops at the water.",
            [("Wren", "I light my rushlight and hold it high so we can read the far wall.")],
            [FunctionCall("use_item", {
                "player": "Wren", "item": "Rushlight", "consumed": True,
            }, "c1")],
            "The rushlight flares, burns fast, and is gone within the hour.",
            lambda s, p: inv(p, "Wren", "Rushlight"),
        ),
        (
            "case-05-take-boat-hook",
            "The boat hook leans against the rail, longer than Bram is tall.",
            [("Bram", "I take the boat hook; we can pole the skiff with it.")],
            [FunctionCall("use_environment", {
                "player": "Bram", "object": "Boat hook", "take": True,
            }, "c1")],
            "Bram hefts the boat hook and finds its balance.",
            lambda s, p: (
                s["environment"].pop("Boat hook"),
                inv(p, "Bram", "Boat hook",
                    "A long ash pole with a brass hook, leaning on the rail."),
            ),
        ),
        (
            "case-06-canister",
            "Bram pries the crate open: inside sits a dented brass canister of "
            "sleeping gas, hissing faintly.",
            [("Bram", "I wedge it upright by the winch where we can grab it fast.")],
            [FunctionCall("add_object", {
                "name": "Sleeping gas canister",
                "description": "A dented brass canister of sleeping gas, hissing faintly.",
            }, "c1")],
            "The canister sits by the winch, hissing to itself.",
            lambda s, p: s["environment"].__setitem__(
                "Sleeping gas canister",
                "A dented brass canister of sleeping gas, hissing faintly.",
            ),
        ),
        (
            "case-07-add-trait-wren",
            "Wren reads the waterline scars like a book, calling the cistern's "
            "moods before they change.",
            [("Wren", "I have the rhythm of this place now. I can feel when it breathes.")],
            [FunctionCall("add_trait", {
                "player": "Wren", "name": "Cistern-wise",
                "description": "Reads how water moves through the maze before it moves.",
            }, "c1")],
            "The cistern holds no more surprises for Wren.",
            lambda s, p: spec(None, p, "Wren", "traits", "Cistern-wise",
                              "Reads how water moves through the maze before it moves."),
        ),
        (
            "case-08-remove-trait-bram",
            "Bram's boots are soaked through; every step on the ledge squelches "
            "and echoes.",
            [("Bram", "So much for sneaking anywhere until these dry out.")],
            [FunctionCall("remove_trait", {"player": "Bram", "name": "Silent step"}, "c1")],
            "For now, Bram is as loud as everyone else.",
            lambda s, p: spec(None, p, "Bram", "traits", "Silent step"),
        ),
        (
            "case-09-add-flaw-bram",
            "The cold water has gotten into Bram's boots and his bones.",
            [("Bram", "I can't stop shivering. We need to move before I seize up.")],
            [FunctionCall("add_flaw", {
                "player": "Bram", "name": "Waterlogged",
                "description": "Soaked and chilled; every quiet step squelches.",
            }, "c1")],
            "Bram wrings out a sleeve and keeps moving.",
            lambda s, p: spec(None, p, "Bram", "flaws", "Waterlogged",
                              "Soaked and chilled; every quiet step squelches."),
        ),
        (
            "case-10-remove-flaw-wren",
            "Wren bites back the boast this time and lets the silence hold.",
            [("Wren", "Not a word from me until we are out. I have learned that much.")],
            [FunctionCall("remove_flaw", {"player": "Wren", "name": "Boastful"}, "c1")],
            "The lanterns bob quietly; nothing answers.",
            lambda s, p: spec(None, p, "Wren", "flaws", "Boastful"),
        ),
        (
            "case-11-action-scene-on",
            "The winch chain jumps its gear with a crack; the whole stair lurches "
            "and black water surges.",
            [("Bram", "Everyone grab something, now! Wren, the winch!")],
            [FunctionCall("activate_action_scene", {}, "c1")],
            "Everything happens at once.",
            lambda s, p: s.__setitem__("is_action_scene", True),
        ),
        (
            "case-12-action-scene-off",
            "The chain catches, the stair settles, and the water smooths to glass.",
            [("Wren", "It held. Everyone breathe; we are past it.")],
            [FunctionCall("terminate_action_scene", {}, "c1")],
            "The urgency drains away with the ripples.",
            lambda s, p: s.__setitem__("is_action_scene", False),
        ),
        (
            "case-13-create-npc",
            "A pole taps against stone somewhere beyond the lantern light.",
            [("Bram", "Who's there? Show yourself on the water.")],
            [FunctionCall("create_npc", {
                "name": "Torvald",
                "context": "An old bargeman poling out of the dark.",
            }, "c1")],
            "An old bargeman poles his flat boat into the light.",
            lambda s, p: s["npcs"].__setitem__("Torvald", torvald),
        ),
        (
            "case-14-item-and-flaw",
            "Sel trades a stoppered flask for a favor owed, but the bargain rings "
            "in Wren's ears like a struck bell.",
            [("Wren", "I take the flask. Why is everything so loud all of a sudden?")],
            [
                FunctionCall("add_item", {
                    "player": "Wren", "name": "Oil flask",
                    "description": "A stoppered flask of lamp oil, nearly full.",
                }, "c1"),
                FunctionCall("add_flaw", {
                    "player": "Wren", "name": "Ringing ears",
                    "description": "A bargain's echo drowns out quiet sounds.",
                }, "c2"),
            ],
            "The flask is cool; the ringing is not.",
            lambda s, p: (
                inv(p, "Wren", "Oil flask", "A stoppered flask of lamp oil, nearly full."),
                spec(None, p, "Wren", "flaws", "Ringing ears",
                     "A bargain's echo drowns out quiet sounds."),
            ),
        ),
        (
            "case-15-object-then-inspect",
            "Bram's light finds an iron ring set into the wall at the waterline.",
            [("Wren", "A mooring ring. I look it over for fresh rope marks.")],
            [
                FunctionCall("add_object", {
                    "name": "Mooring ring",
                    "description": "An iron mooring ring set into the wall at the waterline.",
                }, "c1"),
                FunctionCall("use_environment", {
                    "player": "Wren", "object": "Mooring ring", "take": False,
                }, "c2"),
            ],
            "The ring bears fresh rope marks; someone moors here often.",
            lambda s, p: s["environment"].__setitem__(
                "Mooring ring",
                "An iron mooring ring set into the wall at the waterline.",
            ),
        ),
        (
            "case-16-table-draw",
            "Something pale rides the ripples toward the skiff.",
            [("Bram", "I fish it out with the gaff before it drifts past.")],
            [FunctionCall("use_random_table", {
                "table": "Cistern flotsam", "n": 1,
            }, "c1")],
            "Bram lifts the dripping find into the lantern light.",
            lambda s, p: s["random_tables"].__setitem__(
                "Cistern flotsam",
                [e for e in s["random_tables"]["Cistern flotsam"]
                 if e not in first_flotsam],
            ),
        ),
        (
            "case-17-table-consumed",
            "The cistern's echoes gather as if to speak once and never again.",
            [("Wren", "Quiet. Listen with me; the water is trying to say something.")],
            [FunctionCall("use_random_table", {
                "table": "Echo omens", "n": 1, "consume_table": True,
            }, "c1")],
            "The echo fades, and the cistern keeps its remaining secrets forever.",
            lambda s, p: s["random_tables"].pop("Echo omens"),
        ),
        (
            "case-18-table-drained",
            "Every echo in the vault sounds at once, tripping over itself.",
            [("Bram", "Let it all out then. We listen to every last omen.")],
            [FunctionCall("use_random_table", {
                "table": "Echo omens", "n": 3,
            }, "c1")],
            "The last echo dies; the vault has nothing more to say.",
            lambda s, p: s["random_tables"].pop("Echo omens"),
        ),
        (
            "case-19-dice-then-item",
            "Dry tinder sits on a high ledge above the waterline, just out of reach.",
            [("Bram", "I climb the slick wall for it. We need a fire more than I need dry clothes.")],
            [
                FunctionCall("activate_test", {
                    "difficulty": 3, "player": "Bram", "trait": "Brave",
                }, "c1"),
                FunctionCall("add_item", {
                    "player": "Bram", "name": "Dry tinder",
                    "description": "A bundle of bone-dry tinder wrapped in oilcloth.",
                }, "c2"),
            ],
            "Scraped but successful, Bram drops back down with the bundle.",
            lambda s, p: inv(p, "Bram", "Dry tinder",
                             "A bundle of bone-dry tinder wrapped in oilcloth."),
        ),
        (
            "case-20-add-trait-bram",
            "After a dozen turns of the drum, Bram works the winch like he was "
            "born to it.",
            [("Bram", "Quarter turn, let it breathe, quarter turn. There's a trick to her.")],
            [FunctionCall("add_trait", {
                "player": "Bram", "name": "Winch-handed",
                "description": "Works chain drums and capstans smoothly and silently.",
            }, "c1")],
            "The stair rises another notch without a sound.",
            lambda s, p: spec(None, p, "Bram", "traits", "Winch-handed",
                              "Works chain drums and capstans smoothly and silently."),
        ),
        (
            "case-21-remove-flaw-bram",
            "Bram empties his pockets onto the thwart: every shiny thing goes back.",
            [("Bram", "I am done pocketing trouble. The maze can keep its trinkets.")],
            [FunctionCall("remove_flaw", {"player": "Bram", "name": "Sticky fingers"}, "c1")],
            "His pockets stay empty, and feel lighter for it.",
            lambda s, p: spec(None, p, "Bram", "flaws", "Sticky fingers"),
        ),
        (
            "case-22-take-rusted-gaff",
            "The rusted gaff knocks against the stair with every ripple.",
            [("Wren", "Better in my hand than ringing like a bell. I take the gaff.")],
            [FunctionCall("use_environment", {
                "player": "Wren", "object": "Rusted gaff", "take": True,
            }, "c1")],
            "The knocking stops.",
            lambda s, p: (
                s["environment"].pop("Rusted gaff"),
                inv(p, "Wren", "Rusted gaff",
                    "A short gaff with a rusted point, half underwater."),
            ),
        ),
        (
            "case-23-two-speakers",
            "Sel pays the party for hauling her lantern skiff off the mud bar.",
            [
                ("Bram", "Heave on three. One, two, heave!"),
                ("Wren", "It's free! Sel, we will take that knotted cord as thanks."),
            ],
            [FunctionCall("add_item", {
                "player": "Wren", "name": "Knotted cord",
                "description": "Ten feet of eelskin cord, knotted every hand's width.",
            }, "c1")],
            "Sel presses the coiled cord into Wren's hands.",
            lambda s, p: inv(p, "Wren", "Knotted cord",
                             "Ten feet of eelskin cord, knotted every hand's width."),
        ),
        (
            "case-24-create-npc-imp",
            "The overflow pipe gurgles, then produces a knot of wet limbs.",
            [("Wren", "Something just squeezed out of the pipe. Talk first, gaff second.")],
            [FunctionCall("create_npc", {
                "name": "Imp of the Overflow",
                "context": "A dripping imp squeezed out of the overflow pipe.",
            }, "c1")],
            "A dripping imp shakes itself like a dog and bows.",
            lambda s, p: s["npcs"].__setitem__("Imp of the Overflow", imp),
        ),
        (
            "case-25-add-object-chart",
            "Chalk lines cover the back of the winch housing: columns of hours "
            "and depths.",
            [("Bram", "That's a tide chart. Leave it where it is but mark it on our map.")],
            [FunctionCall("add_object", {
                "name": "Tide chart",
                "description": "A chalked table of when the cistern breathes in and out.",
            }, "c1")],
            "The chart's last column ends at thirteen.",
            lambda s, p: s["environment"].__setitem__(
                "Tide chart",
                "A chalked table of when the cistern breathes in and out.",
            ),
        ),
        (
            "case-26-remove-item-wren",
            "The mud bar grips the skiff; only quick roots could pull it free.",
            [("Wren", "I empty my seed pouch into the mud. Grow, little ones, and push.")],
            [FunctionCall("remove_item", {"player": "Wren", "name": "Seed pouch"}, "c1")],
            "Pale roots web the mud bar; the emptied pouch bobs on the water.",
            lambda s, p: (
                inv(p, "Wren", "Seed pouch"),
                s["environment"].__setitem__(
                    "Seed pouch",
                    "A pouch of quick-sprouting seeds that grow a handhold or a snack.",
                ),
            ),
        ),
        (
            "case-27-use-rations",
            "The party has not eaten since the gallery, and the winch work shows it.",
            [("Bram", "We split the last of my rations now; hungry hands slip.")],
            [FunctionCall("use_item", {
                "player": "Bram", "item": "Travel rations", "consumed": True,
            }, "c1")],
            "The bread is stale and gone too fast, but the shaking stops.",
            lambda s, p: inv(p, "Bram", "Travel rations"),
        ),
        (
            "case-28-action-and-flaw",
            "The skiff tips; Bram goes into the black water and comes up gasping "
            "between the lanterns.",
            [("Wren", "Bram is in the water! Grab the rail, I am coming!")],
            [
                FunctionCall("activate_action_scene", {}, "c1"),
                FunctionCall("add_flaw", {
                    "player": "Bram", "name": "Shaken",
                    "description": "Rattled by the cold plunge; hands will not steady.",
                }, "c2"),
            ],
            "Every heartbeat counts now.",
            lambda s, p: (
                s.__setitem__("is_action_scene", True),
                spec(None, p, "Bram", "flaws", "Shaken",
                     "Rattled by the cold plunge; hands will not steady."),
            ),
        ),
        (
            "case-29-remove-trait-wren",
            "The cistern's false echoes have crossed Wren's inner map until no "
            "two turnings agree.",
            [("Wren", "I... cannot find the thread. Every path I remember bends wrong here.")],
            [FunctionCall("remove_trait", {"player": "Wren", "name": "Path memory"}, "c1")],
            "For the first time, Wren is as lost as everyone else.",
            lambda s, p: spec(None, p, "Wren", "traits", "Path memory"),
        ),
        (
            "case-30-add-then-consume",
            "Sel trades a pitch torch for the last of Bram's rations, waving off "
            "any haggling.",
            [("Bram", "Done. The torch is worth more than stale bread down here.")],
            [
                FunctionCall("add_item", {
                    "player": "Bram", "name": "Pitch torch",
                    "description": "A pitch-soaked torch good for a long, smoky burn.",
                }, "c1"),
                FunctionCall("use_item", {
                    "player": "Bram", "item": "Travel rations", "consumed": True,
                }, "c2"),
            ],
            "Sel tucks the rations away and paddles back to her rounds.",
            lambda s, p: (
                inv(p, "Bram", "Pitch torch",
                    "A pitch-soaked torch good for a long, smoky burn."),
                inv(p, "Bram", "Travel rations"),
            ),
        ),
    ]


def build_cases() -> list[UnitTestCase]:
    cases = []
    for case_id, context, trigger, calls, closing, mutate in _case_spec():
        scene_doc = copy.deepcopy(BASE_SCENE)
        players_doc = copy.deepcopy(BASE_PLAYERS)
        if case_id == "case-12-action-scene-off":
            scene_doc["is_action_scene"] = True
        input_scene = parse_scene_state(scene_doc)
        input_players = tuple(parse_player_state(p) for p in players_doc)

        expected_scene_doc = copy.deepcopy(scene_doc)
        expected_players_doc = copy.deepcopy(players_doc)
        mutate(expected_scene_doc, {p["name"]: p for p in expected_players_doc})

        correct = _script(calls, closing)
        adversarial = correct if case_id in ADVERSARIAL_PASSES else DICE_ONLY_SCRIPT
        cases.append(UnitTestCase(
            id=case_id,
            input_scene=input_scene,
            input_players=input_players,
            input_dialogue=_dialogue(context, trigger),
            expected_scene=parse_scene_state(expected_scene_doc),
            expected_players=tuple(
                parse_player_state(p) for p in expected_players_doc
            ),
            scripts={"correct": correct, "adversarial": adversarial},
        ))
    return cases


def write_suite(directory: str | Path) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    names = []
    for case in build_cases():
        name = f"{case.id}.json"
        write_case(directory / name, case)
        names.append(name)
    manifest = {"cases": names}
    (directory / "manifest.json").write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
    )
    return [directory / n for n in names]


if __name__ == "__main__":
    target = Path(__file__).parent / "data" / "unittests"
    written = write_suite(target)
    print(f"wrote {len(written)} cases to {target}")
