"""Tests for the evaluation toolkit: cases, suite scoring, stats, derivation."""

import json
from fractions import Fraction

import pytest

from conftest import make_player, make_scene
from mazegm.engine import GameMaster, export_log, new_session
from mazegm.evalkit import (
    EvalError,
    UnitTestCase,
    case_from_document,
    derive_case_from_transcript,
    format_stats_table,
    format_suite_table,
    load_case,
    load_suite,
    run_unit_test,
    score_suite,
    split_trigger,
    transcript_stats,
    write_case,
)
from mazegm.functions import FunctionCall
from mazegm.gateway import (
    ChatEvent,
    EventKind,
    ProviderError,
    ScriptedProvider,
    call_turn,
    stop_turn,
    text_turn,
)
from mazegm.profiles import get_profile
from mazegm.prompting import PromptConfig
from mazegm.state import parse_player_state, parse_scene_state

FG_ALL = get_profile("FG-all")


def dialogue(*lines):
    """(speaker, text) pairs into ChatEvents; 'GM' speaks as the GM."""
    events = []
    for ts, (speaker, text) in enumerate(lines, start=1):
        kind = EventKind.GM if speaker == "GM" else EventKind.PLAYER
        events.append(ChatEvent(kind, speaker, text, ts))
    return tuple(events)


def lantern_case(case_id="jake-lantern", scripts=None):
    """Jake hands over his lantern: one remove_item is the expected change."""
    scene = make_scene()
    player = make_player()
    expected_env = dict(scene.environment)
    expected_env["Lantern"] = player.inventory["Lantern"]
    expected_scene = make_scene(environment=expected_env)
    expected_player = make_player(
        inventory={k: v for k, v in player.inventory.items() if k != "Lantern"}
    )
    return UnitTestCase(
        id=case_id,
        input_scene=scene,
        input_players=(player,),
        input_dialogue=dialogue(
            ("GM", "Merel taps the toll table and waits."),
            ("Jake", "I set my lantern on the table. Take it and open the gate."),
        ),
        expected_scene=expected_scene,
        expected_players=(expected_player,),
        scripts=scripts or {},
    )


CORRECT_SCRIPT = (
    call_turn(FunctionCall("remove_item", {"player": "Jake", "name": "Lantern"}, "t1")),
    text_turn("Merel sweeps the lantern off the table and nods to Odo."),
    stop_turn(),
)
WRONG_SCRIPT = (
    call_turn(FunctionCall(
        "activate_test", {"difficulty": 3, "player": "Jake", "trait": "Brave"}, "t1",
    )),
    text_turn("Merel squints at the lantern but takes nothing."),
    stop_turn(),
)


class TestCaseValidation:
    def test_requires_id(self):
        with pytest.raises(EvalError, match="needs an id"):
            lantern_case(case_id="")

    def test_requires_dialogue(self):
        case = lantern_case()
        with pytest.raises(EvalError, match="dialogue"):
            UnitTestCase(
                id="x",
                input_scene=case.input_scene,
                input_players=case.input_players,
                input_dialogue=(),
                expected_scene=case.expected_scene,
                expected_players=case.expected_players,
            )

    def test_requires_a_targeted_change(self):
        case = lantern_case()
        with pytest.raises(EvalError, match="at least one change"):
            UnitTestCase(
                id="x",
                input_scene=case.input_scene,
                input_players=case.input_players,
                input_dialogue=case.input_dialogue,
                expected_scene=case.input_scene,
                expected_players=case.input_players,
            )


class TestCaseSerialization:
    def test_document_round_trip(self):
        case = lantern_case(scripts={"correct": CORRECT_SCRIPT})
        again = case_from_document(case.to_document())
        assert again == case

    def test_file_round_trip(self, tmp_path):
        case = lantern_case(scripts={"correct": CORRECT_SCRIPT})
        path = tmp_path / "case.json"
        write_case(path, case)
        assert load_case(path) == case

    def test_document_is_plain_json(self, tmp_path):
        path = tmp_path / "case.json"
        write_case(path, lantern_case(scripts={"correct": CORRECT_SCRIPT}))
        doc = json.loads(path.read_text(encoding="utf-8"))
        assert doc["id"] == "jake-lantern"
        assert doc["scripts"]["correct"][0]["kind"] == "call"


class TestSplitTrigger:
    def test_trailing_player_run_becomes_trigger(self):
        events = dialogue(("GM", "a"), ("Jake", "b"), ("Mira", "c"))
        context, trigger = split_trigger(events)
        assert [e.content for e in context] == ["a"]
        assert trigger == [("Jake", "b"), ("Mira", "c")]

    def test_gm_tail_means_empty_trigger(self):
        events = dialogue(("Jake", "a"), ("GM", "b"))
        context, trigger = split_trigger(events)
        assert len(context) == 2
        assert trigger == []


class TestRunUnitTest:
    def test_correct_script_passes(self):
        result = run_unit_test(
            lantern_case(), FG_ALL, ScriptedProvider(CORRECT_SCRIPT)
        )
        assert result.passed
        assert result.diff.is_empty()
        assert not result.errored

    def test_wrong_script_fails_with_exact_diff(self):
        result = run_unit_test(lantern_case(), FG_ALL, ScriptedProvider(WRONG_SCRIPT))
        assert not result.passed
        doc = result.diff.to_document()
        flat = json.dumps(doc)
        assert "Lantern" in flat  # the missed inventory change is named

    def test_context_is_replayed_before_the_turn(self):
        provider = ScriptedProvider(CORRECT_SCRIPT)
        run_unit_test(lantern_case(), FG_ALL, provider)
        prompt = provider.recorded_prompts[0]
        contents = [m.content for m in prompt.messages]
        assert any("Merel taps the toll table" in c for c in contents)
        assert any("I set my lantern" in c for c in contents)

    def test_provider_error_marks_case_errored(self):
        class BrokenProvider:
            def complete(self, prompt):
                raise ProviderError("model rejected the request")

            def embed(self, texts):
                return [[0.0] for _ in texts]

        result = run_unit_test(lantern_case(), FG_ALL, BrokenProvider())
        assert result.errored
        assert not result.passed
        assert "rejected" in result.error


class TestScoreSuite:
    def test_factory_provides_fresh_scripts_per_case(self):
        cases = [lantern_case(scripts={"correct": CORRECT_SCRIPT}),
                 lantern_case(case_id="second", scripts={"correct": CORRECT_SCRIPT})]
        reports = score_suite(
            cases, FG_ALL, lambda case: ScriptedProvider(case.scripts["correct"]),
            trials=3,
        )
        assert len(reports) == 3
        for report in reports:
            assert report.passes == 2
            assert report.score == Fraction(1)
        # byte-identical trials
        docs = [json.dumps(r.to_document(), sort_keys=True) for r in reports]
        assert len(set(docs)) == 1

    def test_errored_cases_leave_the_denominator(self):
        class BrokenProvider:
            def complete(self, prompt):
                raise ProviderError("no")

            def embed(self, texts):
                return [[0.0] for _ in texts]

        def factory(case):
            if case.id == "second":
                return BrokenProvider()
            return ScriptedProvider(case.scripts["correct"])

        cases = [lantern_case(scripts={"correct": CORRECT_SCRIPT}),
                 lantern_case(case_id="second", scripts={"correct": CORRECT_SCRIPT})]
        report = score_suite(cases, FG_ALL, factory)[0]
        assert report.scored == 1
        assert report.errored == 1
        assert report.score == Fraction(1)

    def test_rejects_empty_suite_and_bad_trials(self):
        with pytest.raises(EvalError):
            score_suite([], FG_ALL, ScriptedProvider())
        with pytest.raises(EvalError):
            score_suite([lantern_case()], FG_ALL, ScriptedProvider(), trials=0)

    def test_table_formatting(self):
        cases = [lantern_case(scripts={"correct": CORRECT_SCRIPT,
                                       "adversarial": WRONG_SCRIPT})]
        rows = {
            key: score_suite(
                cases, FG_ALL, lambda c, k=key: ScriptedProvider(c.scripts[k]),
                trials=2,
            )
            for key in ("correct", "adversarial")
        }
        table = format_suite_table(rows)
        lines = table.splitlines()
        assert "Setting" in lines[0] and "Trial 2" in lines[0] and "Avg" in lines[0]
        assert "1.0000" in lines[1]
        assert "0.0000" in lines[2]


class TestBundledSuite:
    def test_loads_thirty_cases_with_two_scripts_each(self):
        from importlib import resources

        suite_dir = resources.files("mazegm") / "data" / "unittests"
        cases = load_suite(str(suite_dir))
        assert len(cases) == 30
        assert len({c.id for c in cases}) == 30
        for case in cases:
            assert set(case.scripts) == {"correct", "adversarial"}
            assert not case.paraphrased

    def test_missing_manifest_is_an_error(self, tmp_path):
        with pytest.raises(EvalError, match="manifest"):
            load_suite(tmp_path)


# ---------------------------------------------------------------------------
# Transcript statistics


def played_log(scene_id="hall", script=(), rounds=(("Jake", "I look around."),)):
    session = new_session(
        make_scene(), (make_player(),), FG_ALL, PromptConfig(), 3, scene_id=scene_id,
    )
    gm = GameMaster(ScriptedProvider(script))
    gm.gm_turn(session, list(rounds))
    return export_log(session)


class TestTranscriptStats:
    def test_counts_one_simple_log(self):
        log = played_log(script=(text_turn("The bells hang silent."), stop_turn()))
        stats = transcript_stats([log])
        assert stats.total_scripts == 1
        assert stats.total_scenes == 1
        # one player line plus one GM line
        assert stats.total_utterances == 2
        assert stats.total_generated_responses == 1
        assert stats.total_function_calls == 0
        # no script contains a call, so the call average has no denominator
        assert stats.avg_calls_per_script_with_functions == 0.0

    def test_call_average_skips_callless_scripts(self):
        with_calls = played_log(script=CORRECT_SCRIPT)
        without = played_log(scene_id="other",
                             script=(text_turn("Nothing stirs."), stop_turn()))
        stats = transcript_stats([with_calls, without, without])
        assert stats.total_scripts == 3
        assert stats.total_scenes == 2
        assert stats.total_function_calls == 1
        assert stats.avg_calls_per_script_with_functions == 1.0

    def test_counts_are_additive_over_logs(self):
        a = played_log(script=CORRECT_SCRIPT)
        b = played_log(scene_id="b", script=(text_turn("Quiet."), stop_turn()))
        combined = transcript_stats([a, b])
        alone = [transcript_stats([log]) for log in (a, b)]
        assert combined.total_utterances == sum(s.total_utterances for s in alone)
        assert combined.total_function_calls == sum(
            s.total_function_calls for s in alone
        )
        assert combined.total_generated_responses == sum(
            s.total_generated_responses for s in alone
        )

    def test_empty_corpus(self):
        stats = transcript_stats([])
        assert stats.total_scripts == 0
        assert stats.total_scenes == 0
        assert stats.avg_utterances_per_script == 0.0

    def test_stats_table_uses_two_decimals(self):
        log = played_log(script=(text_turn("Hm."), stop_turn()))
        table = format_stats_table(transcript_stats([log]))
        assert "Average utterances per script" in table
        assert "2.00" in table


# ---------------------------------------------------------------------------
# Case derivation


def two_turn_log():
    session = new_session(
        make_scene(), (make_player(),), FG_ALL, PromptConfig(), 11, scene_id="hall",
    )
    gm = GameMaster(ScriptedProvider([
        # turn 1: Jake picks up a trinket
        call_turn(FunctionCall("add_item", {
            "player": "Jake", "name": "Glass eye",
            "description": "A glass eye that watches the nearest door.",
        }, "d1")),
        text_turn("The glass eye swivels to watch Jake as he pockets it."),
        stop_turn(),
        # turn 2: Jake pays the toll with his chalk
        call_turn(FunctionCall("remove_item", {"player": "Jake", "name": "Chalk"}, "d2")),
        text_turn("Merel files the chalk stub under C."),
        stop_turn(),
    ]))
    gm.gm_turn(session, [("Jake", "I pick up the glass eye from the toll table.")])
    gm.gm_turn(session, [("Jake", "I pay with my chalk stub.")])
    return export_log(session)


class TestDeriveCase:
    def test_derived_case_matches_snapshots(self):
        log = two_turn_log()
        case = derive_case_from_transcript(log, 2)
        assert case.id == "hall-turn-2"
        assert case.input_players[0].inventory.get("Glass eye")  # after turn 1
        assert "Chalk" in case.input_players[0].inventory
        assert "Chalk" not in case.expected_players[0].inventory
        assert not case.paraphrased

    def test_dialogue_ends_with_triggering_player_message(self):
        case = derive_case_from_transcript(two_turn_log(), 2)
        assert case.input_dialogue[-1].kind is EventKind.PLAYER
        assert "chalk stub" in case.input_dialogue[-1].content
        # context includes turn 1's events, not turn 2's GM reply
        contents = [e.content for e in case.input_dialogue]
        assert any("glass eye swivels" in c for c in contents)
        assert not any("files the chalk" in c for c in contents)

    def test_first_turn_derives_against_initial_snapshot(self):
        case = derive_case_from_transcript(two_turn_log(), 1)
        assert "Glass eye" not in case.input_players[0].inventory
        assert "Glass eye" in case.expected_players[0].inventory

    def test_derived_case_passes_under_its_own_script(self):
        # consistency: replaying the same model turns reproduces the snapshot
        log = two_turn_log()
        case = derive_case_from_transcript(log, 2)
        provider = ScriptedProvider([
            call_turn(FunctionCall("remove_item", {"player": "Jake", "name": "Chalk"}, "d2")),
            text_turn("Merel files the chalk stub under C."),
            stop_turn(),
        ])
        assert run_unit_test(case, FG_ALL, provider).passed

    def test_rejects_turns_without_state_change(self):
        session = new_session(
            make_scene(), (make_player(),), FG_ALL, PromptConfig(), 1, scene_id="idle",
        )
        gm = GameMaster(ScriptedProvider([text_turn("Nothing happens."), stop_turn()]))
        gm.gm_turn(session, [("Jake", "I wait.")])
        with pytest.raises(EvalError, match="did not change"):
            derive_case_from_transcript(export_log(session), 1)

    def test_rejects_unknown_turn_index(self):
        log = two_turn_log()
        for bad in (0, 3, -1):
            with pytest.raises(EvalError, match="no turn"):
                derive_case_from_transcript(log, bad)

    def test_paraphraser_rewrites_spoken_lines_only(self):
        log = two_turn_log()
        plain = derive_case_from_transcript(log, 2)
        paraphraser = ScriptedProvider([
            text_turn(f"(reworded) line {i}") for i in range(20)
        ])
        case = derive_case_from_transcript(log, 2, paraphraser=paraphraser)
        assert case.paraphrased
        for original, rewritten in zip(plain.input_dialogue, case.input_dialogue):
            if original.kind in (EventKind.PLAYER, EventKind.GM) and original.content:
                assert rewritten.content.startswith("(reworded)")
            else:
                assert rewritten.content == original.content
            assert rewritten.kind is original.kind
            assert rewritten.timestamp == original.timestamp
        # states are untouched by paraphrasing
        assert case.input_scene == plain.input_scene
        assert case.expected_players == plain.expected_players

    def test_paraphraser_failure_is_an_error(self):
        class MuteProvider:
            def complete(self, prompt):
                return stop_turn()

            def embed(self, texts):
                return [[0.0] for _ in texts]

        with pytest.raises(EvalError, match="paraphraser"):
            derive_case_from_transcript(two_turn_log(), 2, paraphraser=MuteProvider())
