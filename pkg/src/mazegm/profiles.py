"""The six GM setting profiles: tool gating, state exposure, update mode."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class ToolGating(str, Enum):
    ALL = "all"
    DICE_ONLY = "dice_only"
    STATES_ONLY = "states_only"
    NONE = "none"


class StateVisibility(str, Enum):
    EVERY_TURN = "every_turn"
    FIRST_TURN_ONLY = "first_turn_only"


class StateUpdateMode(str, Enum):
    BY_FUNCTIONS = "by_functions"
    FROZEN = "frozen"
    BY_GENERATION = "by_generation"


@dataclass(frozen=True)
class GmSettingProfile:
    id: str
    tool_gating: ToolGating
    states_in_prompt: StateVisibility
    state_update_mode: StateUpdateMode


PROFILES: dict[str, GmSettingProfile] = {
    p.id: p
    for p in (
        GmSettingProfile(
            "FG-all", ToolGating.ALL, StateVisibility.EVERY_TURN, StateUpdateMode.BY_FUNCTIONS
        ),
        GmSettingProfile(
            "FG-dice", ToolGating.DICE_ONLY, StateVisibility.EVERY_TURN, StateUpdateMode.BY_FUNCTIONS
        ),
        GmSettingProfile(
            "FG-states", ToolGating.STATES_ONLY, StateVisibility.EVERY_TURN, StateUpdateMode.BY_FUNCTIONS
        ),
        GmSettingProfile(
            "FG-default", ToolGating.NONE, StateVisibility.EVERY_TURN, StateUpdateMode.FROZEN
        ),
        GmSettingProfile(
            "FG-gen", ToolGating.NONE, StateVisibility.EVERY_TURN, StateUpdateMode.BY_GENERATION
        ),
        GmSettingProfile(
            "DG", ToolGating.NONE, StateVisibility.FIRST_TURN_ONLY, StateUpdateMode.FROZEN
        ),
    )
}

DEFAULT_PROFILE_ID = "FG-all"


def get_profile(profile_id: str) -> GmSettingProfile:
    try:
        return PROFILES[profile_id]
    except KeyError:
        raise KeyError(
            f"unknown setting profile {profile_id!r}; expected one of {', '.join(PROFILES)}"
        ) from None
