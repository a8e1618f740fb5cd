"""Shared fixtures and hypothesis strategies for state-bearing tests."""

import string

from hypothesis import strategies as st

from mazegm.state import NpcSpec, PlayerState, SceneState

# Single-line text keeps the flat rendering unambiguous; real field values
# are sentences and names, never raw control characters.
_CHARS = string.ascii_letters + string.digits + " ',.!?-"


def sane_text(min_size=1, max_size=40):
    return st.text(alphabet=_CHARS, min_size=min_size, max_size=max_size).map(
        lambda s: s.strip() or "x"
    )


def name_text():
    return st.text(alphabet=string.ascii_letters, min_size=1, max_size=12)


def npc_specs():
    return st.builds(
        NpcSpec,
        kin=sane_text(),
        persona=sane_text(),
        goal=sane_text(),
        trait=sane_text(),
        flaw=sane_text(),
    )


def scene_states():
    return st.builds(
        SceneState,
        chapter=sane_text(),
        scene=sane_text(),
        scene_summary=st.lists(sane_text(), max_size=4),
        npcs=st.dictionaries(name_text(), npc_specs(), max_size=3),
        success_condition=sane_text(),
        failure_condition=sane_text(),
        game_flow=st.lists(sane_text(), max_size=4),
        environment=st.dictionaries(name_text(), sane_text(), max_size=4),
        random_tables=st.dictionaries(
            name_text(), st.lists(sane_text(), min_size=1, max_size=4), max_size=3
        ),
        consequences=sane_text(),
        is_action_scene=st.booleans(),
    )


def player_states(name=None):
    return st.builds(
        PlayerState,
        name=st.just(name) if name else name_text(),
        kin=sane_text(),
        goal=sane_text(),
        traits=st.dictionaries(name_text(), sane_text(), max_size=3),
        flaws=st.dictionaries(name_text(), sane_text(), max_size=3),
        inventory=st.dictionaries(name_text(), sane_text(), max_size=4),
        additional_notes=st.lists(sane_text(), max_size=3),
    )


def rosters(max_size=3):
    """Lists of players with unique names."""
    return st.lists(name_text(), unique=True, min_size=1, max_size=max_size).flatmap(
        lambda names: st.tuples(*(player_states(name=n) for n in names))
    )


def game_state_pairs():
    """Two (scene, players) snapshots over the same roster."""
    def pair_for(names):
        side = st.tuples(
            scene_states(), st.tuples(*(player_states(name=n) for n in names))
        )
        return st.tuples(side, side)

    return st.lists(name_text(), unique=True, min_size=1, max_size=2).flatmap(pair_for)


# ---------------------------------------------------------------------------
# Concrete fixtures, reused across modules


def make_scene(**overrides) -> SceneState:
    base = dict(
        chapter="The Spiral Descent",
        scene="Hall of Chained Bells",
        scene_summary=(
            "The party enters a long hall hung with silent bronze bells.",
            "A toll-keeper blocks the far gate and demands payment.",
        ),
        npcs={
            "Merel": NpcSpec(
                kin="Ratling",
                persona="Nervous toll-keeper who counts everything twice",
                goal="Collect one toll from every traveler",
                trait="Sharp ears",
                flaw="Easily bribed",
            ),
            "Odo": NpcSpec(
                kin="Stone giant",
                persona="Sleepy gatekeeper fused to the archway",
                goal="Keep the gate shut until the bells ring",
                trait="Immovable",
                flaw="Slow to wake",
            ),
        },
        success_condition="The party passes the far gate with the bells still silent.",
        failure_condition="Any bell tolls and the wardens are summoned.",
        game_flow=(
            "Merel demands a toll of one treasured possession.",
            "If refused, Merel threatens to ring the smallest bell.",
            "Odo opens the gate only when Merel signals.",
        ),
        environment={
            "Bronze bells": "Dozens of bells of every size, hung from blackened rafters.",
            "Toll table": "A stone table scattered with trinkets taken as payment.",
        },
        random_tables={
            "Confiscated trinkets": (
                "A glass eye that watches the nearest door",
                "A tin whistle with no finger holes",
                "A candle that burns cold",
                "A knotted rope that unties itself",
            ),
        },
        consequences="If the wardens are summoned, the next scene starts in pursuit.",
        is_action_scene=False,
    )
    base.update(overrides)
    return SceneState(**base)


def make_player(**overrides) -> PlayerState:
    base = dict(
        name="Jake",
        kin="Human",
        goal="Find his missing sister before the thirteenth hour",
        traits={"Brave": "Keeps a steady head when others panic"},
        flaws={"Reckless": "Acts before weighing the cost"},
        inventory={
            "Lantern": "A hooded oil lantern, half full",
            "Chalk": "A stub of white chalk for marking walls",
        },
        additional_notes=("Owes a debt to the toll-keepers' guild",),
    )
    base.update(overrides)
    return PlayerState(**base)
