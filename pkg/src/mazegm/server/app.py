"""FastAPI service exposing sessions over HTTP.

Session state lives in process memory. Requests for distinct sessions run
concurrently; messages to one session serialize on a per-session lock, so they
are processed strictly in the order they arrive.
"""

from __future__ import annotations

import json
import threading
import uuid
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from datetime import datetime, timezone
from random import Random

from fastapi import FastAPI, HTTPException
from fastapi.responses import PlainTextResponse, StreamingResponse

from .. import gateway
from ..bundled import bundled_rules, bundled_scene_pack
from ..characters import Catalog, CatalogError, create_character, load_catalog
from ..engine import GameMaster, NpcGenerator, Session, export_log, new_session
from ..gateway import GatewayError, Provider
from ..offline import (
    OfflineSceneInitProvider,
    offline_judge_provider,
    offline_npc_generator,
    offline_sim_provider,
)
from ..profiles import get_profile
from ..prompting import PromptConfig
from ..retrieval import load_rule_store
from ..sceneinit import RawScene, SceneInitError, init_scene
from ..state import (
    PlayerState,
    SceneState,
    StateValidationError,
    parse_player_state,
    parse_scene_state,
)
from .schemas import (
    CatalogResponse,
    CharacterPick,
    CreateSessionRequest,
    MessageRequest,
    SceneListEntry,
    SessionHandle,
    SessionStateResponse,
)

GmProviderFactory = Callable[[SceneState, tuple[PlayerState, ...]], Provider]


@dataclass
class _SessionRecord:
    handle: SessionHandle
    session: Session
    gm: GameMaster
    lock: threading.Lock


def _issue_detail(path: str, message: str) -> list[dict]:
    return [{"path": path, "message": message}]


def _validation_422(exc: StateValidationError, prefix: str) -> HTTPException:
    detail = [
        {"path": f"{prefix}.{issue.path}" if issue.path else prefix,
         "message": issue.message}
        for issue in exc.issues
    ]
    return HTTPException(status_code=422, detail=detail)


def _sse(event: str, payload: dict) -> str:
    return f"event: {event}\ndata: {json.dumps(payload, ensure_ascii=False)}\n\n"


def create_app(
    gm_provider_factory: GmProviderFactory,
    *,
    judge_provider_factory: Callable[[], Provider] | None = None,
    init_provider_factory: Callable[[], Provider] = OfflineSceneInitProvider,
    npc_generator: NpcGenerator | None = None,
    rules: Sequence[str] | None = None,
    catalog: Catalog | None = None,
    scene_pack: Sequence[tuple[str, RawScene]] | None = None,
) -> FastAPI:
    """Build the service around a per-session provider factory.

    ``rules`` default to the bundled rule sentences; each session embeds them
    through its own provider so retrieval-mode prompt configs work unchanged.
    """
    app = FastAPI(title="mazegm", version="1.0")
    rule_sentences = list(rules) if rules is not None else bundled_rules()
    the_catalog = catalog or load_catalog()
    pack = list(scene_pack) if scene_pack is not None else bundled_scene_pack()
    raw_scenes = dict(pack)
    records: dict[str, _SessionRecord] = {}
    registry_lock = threading.Lock()

    def _record_or_404(session_id: str) -> _SessionRecord:
        record = records.get(session_id)
        if record is None:
            raise HTTPException(status_code=404,
                                detail=f"no session {session_id!r}")
        return record

    @app.get("/scenes", response_model=list[SceneListEntry])
    def list_scenes() -> list[SceneListEntry]:
        return [
            SceneListEntry(
                id=scene_id,
                scene=raw.scene,
                chapter=raw.chapter,
                description=raw.description,
                random_tables={k: list(v) for k, v in raw.random_tables.items()},
            )
            for scene_id, raw in pack
        ]

    @app.get("/catalog", response_model=CatalogResponse)
    def get_catalog() -> CatalogResponse:
        return CatalogResponse(**the_catalog.to_document())

    @app.post("/sessions", response_model=SessionHandle, status_code=201)
    def create_session(request: CreateSessionRequest) -> SessionHandle:
        try:
            profile = get_profile(request.profile)
        except KeyError as exc:
            # str() would wrap a KeyError's message in quotes
            raise HTTPException(422, detail=_issue_detail("profile", exc.args[0]))
        try:
            prompt_config = PromptConfig.from_document(request.prompt_config)
        except ValueError as exc:
            raise HTTPException(422, detail=_issue_detail("prompt_config", str(exc)))

        players: list[PlayerState] = []
        for i, spec in enumerate(request.players):
            try:
                if isinstance(spec, CharacterPick):
                    players.append(create_character(
                        spec.name, spec.kin, spec.goal, spec.trait, spec.flaw,
                        the_catalog,
                    ))
                else:
                    players.append(parse_player_state(spec.model_dump()))
            except StateValidationError as exc:
                raise _validation_422(exc, f"players[{i}]")
            except CatalogError as exc:
                raise HTTPException(
                    422, detail=_issue_detail(f"players[{i}]", str(exc))
                )
        names = [p.name for p in players]
        if len(set(names)) != len(names):
            raise HTTPException(
                422, detail=_issue_detail("players", "player names must be unique")
            )

        if isinstance(request.scene, str):
            raw = raw_scenes.get(request.scene)
            if raw is None:
                known = ", ".join(sorted(raw_scenes))
                raise HTTPException(422, detail=_issue_detail(
                    "scene", f"unknown scene id {request.scene!r}; one of: {known}"
                ))
            try:
                scene = init_scene(
                    raw, rule_sentences, init_provider_factory(),
                    Random(request.seed),
                )
            except SceneInitError as exc:
                raise HTTPException(502, detail=str(exc))
            scene_id = request.scene
        else:
            try:
                scene = parse_scene_state(request.scene)
            except StateValidationError as exc:
                raise _validation_422(exc, "scene")
            scene_id = scene.scene

        provider = gm_provider_factory(scene, tuple(players))
        store = load_rule_store(
            rule_sentences, lambda texts: gateway.embed(provider, texts)
        )
        judge = judge_provider_factory() if judge_provider_factory else None
        gm = GameMaster(
            provider,
            rule_store=store,
            npc_generator=npc_generator,
            judge_provider=judge,
        )
        session = new_session(
            scene, tuple(players), profile, prompt_config, request.seed,
            scene_id=scene_id,
        )
        handle = SessionHandle(
            session_id=uuid.uuid4().hex,
            created_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
            profile=profile.id,
            scene_id=scene_id,
        )
        with registry_lock:
            records[handle.session_id] = _SessionRecord(
                handle, session, gm, threading.Lock()
            )
        return handle

    @app.post("/sessions/{session_id}/message")
    def post_message(session_id: str, request: MessageRequest) -> StreamingResponse:
        record = _record_or_404(session_id)
        if record.session.player_named(request.player) is None:
            raise HTTPException(422, detail=_issue_detail(
                "player", f"no player named {request.player!r} in this session"
            ))
        # serialize messages per session; the lock is released by the stream
        record.lock.acquire()
        if not record.session.running:
            record.lock.release()
            raise HTTPException(
                409, detail=f"session already ended: {record.session.status.value}"
            )

        def stream():
            session, gm = record.session, record.gm
            try:
                try:
                    for event in gm.iter_gm_turn(
                        session, [(request.player, request.text)]
                    ):
                        yield _sse("chat", event.to_document())
                    gm.check_outcome(session)
                except GatewayError as exc:
                    yield _sse("error", {"message": str(exc)})
                yield _sse("turn_complete", {
                    "clock_hours": session.clock.hours_elapsed,
                    "clock_limit": session.clock.limit,
                    "status": session.status.value,
                    "turns_completed": session.turns_completed,
                })
            finally:
                record.lock.release()

        return StreamingResponse(stream(), media_type="text/event-stream")

    @app.get("/sessions/{session_id}/state", response_model=SessionStateResponse)
    def get_state(session_id: str) -> SessionStateResponse:
        session = _record_or_404(session_id).session
        return SessionStateResponse(
            scene=session.scene.to_document(),
            players=[p.to_document() for p in session.players],
            clock_hours=session.clock.hours_elapsed,
            clock_limit=session.clock.limit,
            status=session.status.value,
            turns_completed=session.turns_completed,
        )

    @app.get("/sessions/{session_id}/transcript", response_class=PlainTextResponse)
    def get_transcript(session_id: str) -> str:
        session = _record_or_404(session_id).session
        return export_log(session).to_text()

    return app


def offline_app(judge_rounds: int = 2) -> FastAPI:
    """The service wired entirely to the deterministic offline providers."""
    return create_app(
        offline_sim_provider,
        judge_provider_factory=lambda: offline_judge_provider(judge_rounds),
        init_provider_factory=OfflineSceneInitProvider,
        npc_generator=offline_npc_generator,
    )
