"""Line-delimited gameplay logs: header, events, per-turn state snapshots.

The format is deterministic (sorted keys, fixed separators, no wall-clock
fields), so a seeded scripted run serializes byte-identically every time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .gateway import ChatEvent, event_from_document


@dataclass(frozen=True)
class TurnSnapshot:
    """State of the world after one completed GM turn.

    Index 0 is the freshly initialized session; ``last_timestamp`` is the
    newest transcript timestamp the snapshot covers, so a log can be sliced
    back into per-turn event windows.
    """

    index: int
    scene: dict
    players: list[dict]
    clock_hours: int
    status: str
    last_timestamp: int = 0

    def to_document(self) -> dict:
        return {
            "index": self.index,
            "scene": self.scene,
            "players": self.players,
            "clock_hours": self.clock_hours,
            "status": self.status,
            "last_timestamp": self.last_timestamp,
        }


@dataclass
class GameLog:
    """One scene's full play record."""

    scene_id: str
    profile_id: str
    seed: int
    prompt_config: dict
    player_names: list[str]
    events: list[ChatEvent] = field(default_factory=list)
    turns: list[TurnSnapshot] = field(default_factory=list)
    final_status: str = "running"
    clock_hours: int = 0

    def header(self) -> dict:
        return {
            "record": "header",
            "scene_id": self.scene_id,
            "profile": self.profile_id,
            "seed": self.seed,
            "prompt_config": self.prompt_config,
            "players": self.player_names,
        }

    def to_lines(self) -> list[str]:
        dump = lambda doc: json.dumps(doc, sort_keys=True, separators=(",", ":"),
                                      ensure_ascii=False)
        lines = [dump(self.header())]
        lines.extend(dump({"record": "event", **e.to_document()}) for e in self.events)
        lines.extend(dump({"record": "turn", **t.to_document()}) for t in self.turns)
        lines.append(dump({"record": "end", "status": self.final_status,
                           "clock_hours": self.clock_hours}))
        return lines

    def to_text(self) -> str:
        return "\n".join(self.to_lines()) + "\n"


def write_log(path: str | Path, log: GameLog) -> None:
    Path(path).write_text(log.to_text(), encoding="utf-8")


def parse_log(text: str) -> GameLog:
    header = None
    events: list[ChatEvent] = []
    turns: list[TurnSnapshot] = []
    status = "running"
    clock_hours = 0
    for line in text.splitlines():
        if not line.strip():
            continue
        doc = json.loads(line)
        record = doc.pop("record")
        if record == "header":
            header = doc
        elif record == "event":
            events.append(event_from_document(doc))
        elif record == "turn":
            turns.append(TurnSnapshot(**doc))
        elif record == "end":
            status = doc["status"]
            clock_hours = doc["clock_hours"]
        else:
            raise ValueError(f"unknown record type {record!r}")
    if header is None:
        raise ValueError("log has no header record")
    return GameLog(
        scene_id=header["scene_id"],
        profile_id=header["profile"],
        seed=header["seed"],
        prompt_config=header["prompt_config"],
        player_names=header["players"],
        events=events,
        turns=turns,
        final_status=status,
        clock_hours=clock_hours,
    )


def read_log(path: str | Path) -> GameLog:
    return parse_log(Path(path).read_text(encoding="utf-8"))
