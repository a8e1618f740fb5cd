"""Request and response bodies for the HTTP session API."""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field


class CharacterPick(BaseModel):
    """Character creation by catalog choices; the server builds the state."""

    model_config = ConfigDict(extra="forbid")

    name: str
    kin: str
    goal: str
    trait: str
    flaw: str


class PlayerDocument(BaseModel):
    """A fully specified player state."""

    model_config = ConfigDict(extra="forbid")

    name: str
    kin: str
    goal: str
    traits: dict[str, str]
    flaws: dict[str, str]
    inventory: dict[str, str] = Field(default_factory=dict)
    additional_notes: list[str] = Field(default_factory=list)


PlayerSpec = CharacterPick | PlayerDocument


class CreateSessionRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    scene: str | dict
    """A bundled scene id, or a full initialized scene document."""

    players: list[PlayerSpec] = Field(min_length=1)
    profile: str = "FG-all"
    prompt_config: dict = Field(default_factory=dict)
    seed: int = 0


class SessionHandle(BaseModel):
    session_id: str
    created_at: str
    profile: str
    scene_id: str


class MessageRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    player: str
    text: str = Field(min_length=1)


class SessionStateResponse(BaseModel):
    scene: dict
    players: list[dict]
    clock_hours: int
    clock_limit: int
    status: str
    turns_completed: int


class SceneListEntry(BaseModel):
    id: str
    scene: str
    chapter: str
    description: str
    random_tables: dict[str, list[str]]


class CatalogResponse(BaseModel):
    kins: dict[str, dict]
    traits: dict[str, str]
    flaws: dict[str, str]


class FieldIssue(BaseModel):
    path: str
    message: str
