"""Access to the data files shipped inside the package: the rule sentences,
the raw scene pack, the character catalog, and the state-update test suite.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .evalkit import UnitTestCase, load_suite
from .sceneinit import RawScene, load_scene_pack


def data_path(*parts: str) -> Path:
    return Path(str(resources.files("mazegm").joinpath("data", *parts)))


def bundled_rules() -> list[str]:
    text = data_path("rules", "core_rules.txt").read_text(encoding="utf-8")
    return [line.strip() for line in text.splitlines() if line.strip()]


def bundled_scene_pack() -> list[tuple[str, RawScene]]:
    return load_scene_pack(data_path("scenes"))


def bundled_suite() -> list[UnitTestCase]:
    return load_suite(data_path("unittests"))
