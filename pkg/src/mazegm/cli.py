"""Command-line interface: interactive play, batch self-play simulation,
scene initialization, character creation, suite evaluation, transcript
statistics, and the HTTP server.

Every failure exits non-zero with a one-line JSON error on stderr. With
--offline, only the deterministic scripted providers are constructed, so no
command can touch the network.
"""

from __future__ import annotations

import functools
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from random import Random

import click

from . import gateway
from .bundled import bundled_rules, bundled_scene_pack, bundled_suite
from .characters import load_catalog, create_character
from .engine import (
    GameMaster,
    Outcome,
    ProviderPlayerAgent,
    export_log,
    new_session,
)
from .evalkit import (
    format_stats_table,
    format_suite_table,
    load_suite,
    score_suite,
    transcript_stats,
)
from .gateway import EventKind, OpenAIChatProvider, ScriptedProvider
from .offline import (
    OfflineSceneInitProvider,
    offline_judge_provider,
    offline_npc_generator,
    offline_party,
    offline_player_agents,
    offline_sim_provider,
)
from .profiles import PROFILES, get_profile
from .prompting import PromptConfig
from .retrieval import load_rule_store
from .sceneinit import init_scene, load_raw_scene, load_scene_pack
from .server.app import create_app, offline_app
from .state import parse_player_state
from .transcript import read_log, write_log


@dataclass
class CliContext:
    profile_id: str = "FG-all"
    seed: int = 0
    offline: bool = False
    prompt_config: PromptConfig = field(default_factory=PromptConfig)
    provider_settings: dict = field(default_factory=dict)


def _fail(exc: BaseException) -> None:
    # str() wraps a KeyError's message in quotes; unwrap the bare message
    message = exc.args[0] if isinstance(exc, KeyError) and exc.args else str(exc)
    payload = {"error": {"type": type(exc).__name__, "message": message}}
    click.echo(json.dumps(payload), err=True)
    sys.exit(1)


def machine_errors(fn):
    """Convert any domain failure into the JSON-on-stderr exit contract."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (click.ClickException, click.Abort, SystemExit):
            raise
        except Exception as exc:
            _fail(exc)

    return wrapper


def _profile(ctx: CliContext):
    """Profile lookup tolerant of casing, so `--profile fg-states` works."""
    try:
        return get_profile(ctx.profile_id)
    except KeyError:
        for profile_id in PROFILES:
            if profile_id.lower() == ctx.profile_id.lower():
                return PROFILES[profile_id]
        raise


def _network_provider(ctx: CliContext) -> OpenAIChatProvider:
    return OpenAIChatProvider(**ctx.provider_settings)


def _init_provider(ctx: CliContext):
    return OfflineSceneInitProvider() if ctx.offline else _network_provider(ctx)


def _load_party(path: str | None):
    if path is None:
        return list(offline_party(load_catalog()))
    docs = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(docs, list) or not docs:
        raise ValueError("party file must hold a non-empty JSON list of players")
    return [parse_player_state(doc) for doc in docs]


def _resolve_raw_scene(scene_ref: str | None):
    """A bundled scene id, a raw scene file path, or the first bundled scene."""
    pack = bundled_scene_pack()
    if scene_ref is None:
        return pack[0]
    for scene_id, raw in pack:
        if scene_id == scene_ref:
            return scene_id, raw
    path = Path(scene_ref)
    if path.exists():
        return path.stem, load_raw_scene(path)
    known = ", ".join(scene_id for scene_id, _ in pack)
    raise ValueError(f"no scene {scene_ref!r}; bundled ids: {known}")


def _game_master(ctx: CliContext, scene, players) -> GameMaster:
    if ctx.offline:
        provider = offline_sim_provider(scene, players)
        judge = offline_judge_provider()
        npc_generator = offline_npc_generator
    else:
        provider = _network_provider(ctx)
        judge = None
        npc_generator = None
    store = load_rule_store(bundled_rules(), lambda t: gateway.embed(provider, t))
    return GameMaster(
        provider, rule_store=store, npc_generator=npc_generator,
        judge_provider=judge,
    )


def _write_or_echo(out: str, text: str) -> None:
    if out == "-":
        click.echo(text)
    else:
        Path(out).write_text(text + "\n", encoding="utf-8")
        click.echo(json.dumps({"written": out}))


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="JSON config: profile, seed, prompt_config, provider.")
@click.option("--seed", type=int, default=None, help="Session seed.")
@click.option("--profile", "profile_id", default=None,
              help="GM setting profile id (e.g. FG-all, FG-dice, DG).")
@click.option("--offline", is_flag=True,
              help="Use only the deterministic scripted providers; no network.")
@click.pass_context
@machine_errors
def main(ctx, config_path, seed, profile_id, offline):
    """Game-master engine for a labyrinth-crawl tabletop game."""
    config = {}
    if config_path:
        config = json.loads(Path(config_path).read_text(encoding="utf-8"))
    provider_settings = dict(config.get("provider", {}))
    if os.environ.get("MAZEGM_API_KEY"):
        provider_settings.pop("api_key", None)  # secrets from env win
    ctx.obj = CliContext(
        profile_id=profile_id or config.get("profile", "FG-all"),
        seed=seed if seed is not None else int(config.get("seed", 0)),
        offline=offline,
        prompt_config=PromptConfig.from_document(config.get("prompt_config", {})),
        provider_settings=provider_settings,
    )


def _echo_event(event) -> None:
    if event.kind is EventKind.PLAYER:
        click.echo(f"{event.speaker}: {event.content}")
    elif event.kind is EventKind.GM:
        click.echo(f"GM: {event.content}")
    elif event.kind is EventKind.FUNCTION_CALL:
        args = json.dumps(event.call.arguments, ensure_ascii=False)
        click.echo(f"  [call] {event.call.name} {args}")
    elif event.kind is EventKind.FUNCTION_RESULT:
        click.echo(f"  [result] {event.content}")
    else:
        click.echo(f"  [{event.kind.value}] {event.content}")


@main.command()
@click.option("--scene", "scene_ref", default=None,
              help="Bundled scene id or path to a raw scene file.")
@click.option("--party", "party_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="JSON list of player documents.")
@click.option("--player", "speak_as", default=None,
              help="Party member you speak as (default: the first).")
@click.pass_obj
@machine_errors
def play(obj: CliContext, scene_ref, party_path, speak_as):
    """Play a scene interactively at the terminal."""
    players = _load_party(party_path)
    speak_as = speak_as or players[0].name
    if all(p.name != speak_as for p in players):
        raise ValueError(f"no party member named {speak_as!r}")
    scene_id, raw = _resolve_raw_scene(scene_ref)
    scene = init_scene(raw, bundled_rules(), _init_provider(obj), Random(obj.seed))
    gm = _game_master(obj, scene, players)
    session = new_session(
        scene, tuple(players), _profile(obj), obj.prompt_config, obj.seed,
        scene_id=scene_id,
    )
    click.echo(f"Scene: {scene.scene}")
    for line in scene.scene_summary:
        click.echo(f"  {line}")
    click.echo(f"You speak as {speak_as}. /state shows the world, /quit leaves.")
    while session.running:
        try:
            text = click.prompt(speak_as, prompt_suffix="> ")
        except (click.Abort, EOFError):
            break
        if not text.strip():
            continue
        if text.strip() in ("/quit", "/q"):
            break
        if text.strip() == "/state":
            click.echo(json.dumps({
                "scene": session.scene.to_document(),
                "players": [p.to_document() for p in session.players],
                "clock_hours": session.clock.hours_elapsed,
                "status": session.status.value,
            }, indent=2, ensure_ascii=False))
            continue
        for event in gm.iter_gm_turn(session, [(speak_as, text)]):
            if event.kind is not EventKind.PLAYER:
                _echo_event(event)
        outcome = gm.check_outcome(session)
        if outcome is not Outcome.CONTINUE:
            break
    click.echo(f"Session over: {session.status.value} "
               f"after {session.turns_completed} turns, "
               f"{session.clock.hours_elapsed} hours on the clock.")


@main.command()
@click.option("--scenes", "scenes_dir", type=click.Path(exists=True, file_okay=False),
              default=None, help="Directory of raw scene files (default: bundled pack).")
@click.option("--party", "party_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="JSON list of player documents.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False),
              default="transcripts", show_default=True)
@click.option("--rounds", type=int, default=20, show_default=True,
              help="Maximum player rounds per scene.")
@click.pass_obj
@machine_errors
def simulate(obj: CliContext, scenes_dir, party_path, out_dir, rounds):
    """Self-play every scene in a pack and export one transcript per scene."""
    pack = load_scene_pack(scenes_dir) if scenes_dir else bundled_scene_pack()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    profile = _profile(obj)
    rules = bundled_rules()
    results = []
    for scene_id, raw in pack:
        scene = init_scene(raw, rules, _init_provider(obj), Random(obj.seed))
        players = _load_party(party_path)
        gm = _game_master(obj, scene, players)
        session = new_session(
            scene, tuple(players), profile, obj.prompt_config, obj.seed,
            scene_id=scene_id,
        )
        if obj.offline:
            agents = offline_player_agents(players)
        else:
            agents = [ProviderPlayerAgent(_network_provider(obj), players[0].name)]
        gm.run_scene(session, agents, max_rounds=rounds)
        path = out / f"{scene_id}.log"
        write_log(path, export_log(session))
        results.append({
            "scene": scene_id,
            "status": session.status.value,
            "turns": session.turns_completed,
            "clock_hours": session.clock.hours_elapsed,
            "file": str(path),
        })
    click.echo(json.dumps({"simulated": results}, indent=2))


@main.command("init-scene")
@click.argument("raw_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", default="-", show_default=True,
              help="Output file for the initialized scene ('-' for stdout).")
@click.pass_obj
@machine_errors
def init_scene_cmd(obj: CliContext, raw_path, out):
    """Initialize a raw scene file into a full scene state."""
    raw = load_raw_scene(raw_path)
    scene = init_scene(raw, bundled_rules(), _init_provider(obj), Random(obj.seed))
    _write_or_echo(out, json.dumps(scene.to_document(), indent=2, ensure_ascii=False))


@main.command("create-character")
@click.option("--name", default=None)
@click.option("--kin", default=None)
@click.option("--goal", default=None)
@click.option("--trait", default=None)
@click.option("--flaw", default=None)
@click.option("--catalog", "catalog_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Catalog file (default: bundled).")
@click.option("--list", "list_options", is_flag=True,
              help="Print the catalog options instead of creating.")
@click.option("--out", default="-", show_default=True)
@machine_errors
def create_character_cmd(name, kin, goal, trait, flaw, catalog_path, list_options, out):
    """Create a player character from the catalog."""
    catalog = load_catalog(catalog_path)
    if list_options:
        click.echo(json.dumps(catalog.to_document(), indent=2, ensure_ascii=False))
        return
    missing = [label for label, value in
               (("--name", name), ("--kin", kin), ("--goal", goal),
                ("--trait", trait), ("--flaw", flaw)) if not value]
    if missing:
        raise ValueError(f"missing options: {', '.join(missing)} (or use --list)")
    player = create_character(name, kin, goal, trait, flaw, catalog)
    _write_or_echo(out, json.dumps(player.to_document(), indent=2, ensure_ascii=False))


@main.command("unit-test")
@click.option("--suite", "suite_dir", type=click.Path(exists=True, file_okay=False),
              default=None, help="Suite directory (default: bundled cases).")
@click.option("--script", "script_name", default="correct", show_default=True,
              help="Named script to replay in offline mode.")
@click.option("--trials", type=int, default=1, show_default=True)
@click.option("--json", "as_json", is_flag=True, help="Emit the full report as JSON.")
@click.pass_obj
@machine_errors
def unit_test(obj: CliContext, suite_dir, script_name, trials, as_json):
    """Run the state-update suite and print the per-trial score table."""
    cases = load_suite(suite_dir) if suite_dir else bundled_suite()
    profile = _profile(obj)
    if obj.offline:
        provider_source = lambda case: ScriptedProvider(case.scripts.get(script_name, ()))
        npc_generator = offline_npc_generator
    else:
        provider_source = _network_provider(obj)
        npc_generator = None
    reports = score_suite(
        cases, profile, provider_source, trials,
        seed=obj.seed, npc_generator=npc_generator,
    )
    if as_json:
        click.echo(json.dumps([r.to_document() for r in reports], indent=2))
        return
    click.echo(format_suite_table({profile.id: reports}))
    failed = sorted({
        r.case_id for report in reports for r in report.per_case if not r.passed
    })
    if failed:
        click.echo(f"failing: {', '.join(failed)}")


@main.command()
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
@click.option("--json", "as_json", is_flag=True)
@machine_errors
def stats(directory, as_json):
    """Corpus statistics over a directory of transcript files."""
    paths = sorted(Path(directory).glob("*.log"))
    if not paths:
        raise ValueError(f"no .log transcripts in {directory}")
    logs = [read_log(p) for p in paths]
    report = transcript_stats(logs)
    if as_json:
        click.echo(json.dumps(report.to_document(), indent=2))
    else:
        click.echo(format_stats_table(report))


def build_app(ctx: CliContext):
    """The FastAPI app the `serve` command runs; split out for tests."""
    if ctx.offline:
        return offline_app()
    return create_app(
        lambda scene, players: _network_provider(ctx),
        judge_provider_factory=lambda: _network_provider(ctx),
        init_provider_factory=lambda: _network_provider(ctx),
    )


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.pass_obj
@machine_errors
def serve(obj: CliContext, host, port):
    """Start the HTTP session API."""
    import uvicorn

    uvicorn.run(build_app(obj), host=host, port=port)


if __name__ == "__main__":
    main()
