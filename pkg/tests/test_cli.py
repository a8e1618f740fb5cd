"""Tests for the command-line interface (offline providers throughout)."""

import json
from pathlib import Path

import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

from mazegm.cli import CliContext, build_app, main
from mazegm.state import parse_player_state, parse_scene_state
from mazegm.transcript import read_log


@pytest.fixture()
def runner():
    return CliRunner()


def ok(result):
    assert result.exit_code == 0, result.output + getattr(result, "stderr", "")
    return result


def json_error(result):
    assert result.exit_code == 1
    payload = json.loads(result.stderr.strip().splitlines()[-1])
    assert set(payload["error"]) == {"type", "message"}
    return payload["error"]


class TestUnitTestCommand:
    def test_correct_script_scores_one(self, runner):
        result = ok(runner.invoke(main, ["--offline", "unit-test", "--trials", "3"]))
        assert result.output.count("1.0000") == 4  # three trials plus the average
        assert "failing" not in result.output

    def test_adversarial_script_scores_thirteen_thirtieths(self, runner):
        result = ok(runner.invoke(
            main, ["--offline", "unit-test", "--script", "adversarial"]
        ))
        assert "0.4333" in result.output
        assert "case-06-canister" in result.output  # listed among the failures

    def test_lowercase_profile_flag(self, runner):
        result = ok(runner.invoke(
            main, ["--offline", "--profile", "fg-states", "unit-test"]
        ))
        assert "FG-states" in result.output

    def test_three_trials_are_deterministic(self, runner):
        # the bundled table-draw case pins its expectation to the default seed
        args = ["--offline", "unit-test", "--trials", "3", "--json"]
        one = ok(runner.invoke(main, args)).output
        two = ok(runner.invoke(main, args)).output
        assert one == two
        reports = json.loads(one)
        assert len(reports) == 3
        assert all(r["passes"] == 30 and r["scored"] == 30 for r in reports)


class TestSimulateCommand:
    def test_one_transcript_per_scene(self, runner, tmp_path):
        out = tmp_path / "transcripts"
        result = ok(runner.invoke(
            main, ["--offline", "--seed", "4", "simulate", "--out", str(out)]
        ))
        summary = json.loads(result.output)["simulated"]
        assert len(summary) == 3
        files = sorted(out.glob("*.log"))
        assert [f.name for f in files] == [f"{row['scene']}.log" for row in summary]
        for row in summary:
            assert row["status"] == "success"
            log = read_log(row["file"])
            assert log.final_status == "success"
            assert log.seed == 4

    def test_same_seed_is_byte_identical(self, runner, tmp_path):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            ok(runner.invoke(
                main, ["--offline", "--seed", "7", "simulate", "--out", str(out)]
            ))
            outs.append({
                p.name: p.read_bytes() for p in sorted(out.glob("*.log"))
            })
        assert outs[0] == outs[1]

    def test_different_seeds_differ(self, runner, tmp_path):
        blobs = []
        for seed, name in ((1, "a"), (2, "b")):
            out = tmp_path / name
            ok(runner.invoke(
                main, ["--offline", "--seed", str(seed), "simulate", "--out", str(out)]
            ))
            blobs.append(b"".join(p.read_bytes() for p in sorted(out.glob("*.log"))))
        assert blobs[0] != blobs[1]

    def test_custom_scene_directory(self, runner, tmp_path):
        scene_dir = tmp_path / "pack"
        scene_dir.mkdir()
        (scene_dir / "only.json").write_text(json.dumps({
            "scene": "The Test Cell",
            "description": "A bare cell with one obvious exit.",
            "random_tables": {"Cell debris": ["a bent nail", "a dry crust"]},
        }), encoding="utf-8")
        out = tmp_path / "logs"
        result = ok(runner.invoke(main, [
            "--offline", "simulate", "--scenes", str(scene_dir), "--out", str(out),
        ]))
        summary = json.loads(result.output)["simulated"]
        assert [row["scene"] for row in summary] == ["only"]


class TestStatsCommand:
    @pytest.fixture()
    def transcripts(self, runner, tmp_path):
        out = tmp_path / "transcripts"
        ok(runner.invoke(
            main, ["--offline", "--seed", "4", "simulate", "--out", str(out)]
        ))
        return out

    def test_table_over_simulated_corpus(self, runner, transcripts):
        result = ok(runner.invoke(main, ["stats", str(transcripts)]))
        assert "Scripts" in result.output
        assert "Scenes" in result.output
        # 3 scenes x (3 player lines + 3 GM lines)
        assert "18" in result.output

    def test_json_output(self, runner, transcripts):
        result = ok(runner.invoke(main, ["stats", str(transcripts), "--json"]))
        doc = json.loads(result.output)
        assert doc["total_scripts"] == 3
        assert doc["total_scenes"] == 3
        assert doc["total_function_calls"] == 9
        assert doc["avg_calls_per_script_with_functions"] == 3.0

    def test_empty_directory_is_a_machine_error(self, runner, tmp_path):
        error = json_error(runner.invoke(main, ["stats", str(tmp_path)]))
        assert "no .log transcripts" in error["message"]


class TestInitSceneCommand:
    def test_stdout_scene_is_valid(self, runner):
        result = ok(runner.invoke(main, [
            "--offline", "--seed", "2", "init-scene",
            "src/mazegm/data/scenes/01-gallery-of-doors.json",
        ]))
        scene = parse_scene_state(json.loads(result.output))
        assert scene.scene == "Gallery of a Hundred Doors"
        assert scene.random_tables == {}  # offline init spends the tables

    def test_out_file_and_determinism(self, runner, tmp_path):
        args = lambda path: [
            "--offline", "--seed", "2", "init-scene",
            "src/mazegm/data/scenes/01-gallery-of-doors.json", "--out", str(path),
        ]
        ok(runner.invoke(main, args(tmp_path / "one.json")))
        ok(runner.invoke(main, args(tmp_path / "two.json")))
        assert (tmp_path / "one.json").read_bytes() == (tmp_path / "two.json").read_bytes()

    def test_missing_file_fails(self, runner):
        result = runner.invoke(main, ["--offline", "init-scene", "nope.json"])
        assert result.exit_code != 0


class TestCreateCharacterCommand:
    def test_creates_a_valid_player(self, runner):
        result = ok(runner.invoke(main, [
            "create-character", "--name", "Idra", "--kin", "Gloamwing",
            "--goal", "See the sky again", "--trait", "Nimble",
            "--flaw", "Forgetful",
        ]))
        player = parse_player_state(json.loads(result.output))
        assert player.name == "Idra"
        assert "Nimble" in player.traits

    def test_list_prints_catalog(self, runner):
        result = ok(runner.invoke(main, ["create-character", "--list"]))
        catalog = json.loads(result.output)
        assert set(catalog) == {"kins", "traits", "flaws"}

    def test_missing_options_fail_with_json_error(self, runner):
        error = json_error(runner.invoke(main, ["create-character", "--name", "X"]))
        assert "--kin" in error["message"]

    def test_unknown_kin_fails_with_json_error(self, runner):
        error = json_error(runner.invoke(main, [
            "create-character", "--name", "X", "--kin", "Dragon", "--goal", "g",
            "--trait", "Brave", "--flaw", "Reckless",
        ]))
        assert error["type"] == "CatalogError"


class TestPlayCommand:
    def test_scripted_stdin_round(self, runner):
        result = ok(runner.invoke(
            main, ["--offline", "play"],
            input="I scout the path ahead.\n/quit\n",
        ))
        assert "[call] activate_test" in result.output
        assert "GM:" in result.output
        assert "Session over" in result.output

    def test_state_command_prints_world(self, runner):
        result = ok(runner.invoke(
            main, ["--offline", "play"], input="/state\n/quit\n",
        ))
        assert '"clock_hours": 0' in result.output

    def test_unknown_scene_is_a_machine_error(self, runner):
        error = json_error(runner.invoke(
            main, ["--offline", "play", "--scene", "tenth-circle"], input="/quit\n",
        ))
        assert "tenth-circle" in error["message"]

    def test_speak_as_unknown_player_fails(self, runner):
        error = json_error(runner.invoke(
            main, ["--offline", "play", "--player", "Zed"], input="/quit\n",
        ))
        assert "Zed" in error["message"]


class TestConfigFile:
    def test_config_sets_profile_and_seed(self, runner, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({
            "profile": "FG-dice", "seed": 11, "prompt_config": {"rule_k": 3},
        }), encoding="utf-8")
        result = ok(runner.invoke(
            main, ["--config", str(config), "--offline", "unit-test"]
        ))
        assert "FG-dice" in result.output

    def test_flags_override_config(self, runner, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"profile": "FG-dice"}), encoding="utf-8")
        result = ok(runner.invoke(main, [
            "--config", str(config), "--profile", "FG-all", "--offline", "unit-test",
        ]))
        assert "FG-all" in result.output

    def test_bad_prompt_config_is_a_machine_error(self, runner, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"prompt_config": {"rule_k": 0}}),
                          encoding="utf-8")
        error = json_error(runner.invoke(
            main, ["--config", str(config), "--offline", "unit-test"]
        ))
        assert "rule_k" in error["message"]


class TestServeApp:
    def test_offline_app_serves_scenes(self):
        app = build_app(CliContext(offline=True))
        client = TestClient(app)
        assert client.get("/scenes").status_code == 200
        assert client.get("/catalog").status_code == 200
