"""Character creation: a catalog of kins and pickable traits/flaws, merged
with the player's free-form name and goal into a PlayerState.
"""

from __future__ import annotations

import json
from collections.abc import Mapping
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .state import PlayerState, StateError


class CatalogError(StateError):
    pass


@dataclass(frozen=True)
class KinSpec:
    """One playable kin and everything it grants by default."""

    name: str
    persona: str
    default_traits: dict[str, str] = field(default_factory=dict)
    default_flaws: dict[str, str] = field(default_factory=dict)
    default_items: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.name or not self.persona:
            raise CatalogError("a kin needs a name and a persona")
        object.__setattr__(self, "default_traits", dict(self.default_traits))
        object.__setattr__(self, "default_flaws", dict(self.default_flaws))
        object.__setattr__(self, "default_items", dict(self.default_items))

    def to_document(self) -> dict:
        return {
            "persona": self.persona,
            "default_traits": dict(self.default_traits),
            "default_flaws": dict(self.default_flaws),
            "default_items": dict(self.default_items),
        }


@dataclass(frozen=True)
class Catalog:
    """The character-creation options: kins plus shared trait/flaw lists."""

    kins: dict[str, KinSpec]
    traits: dict[str, str]
    flaws: dict[str, str]

    def __post_init__(self):
        if not self.kins:
            raise CatalogError("catalog has no kins")
        if not self.traits or not self.flaws:
            raise CatalogError("catalog needs at least one trait and one flaw")

    def to_document(self) -> dict:
        return {
            "kins": {name: kin.to_document() for name, kin in self.kins.items()},
            "traits": dict(self.traits),
            "flaws": dict(self.flaws),
        }


def _str_map(doc: Mapping, name: str, where: str) -> dict[str, str]:
    value = doc.get(name, {})
    if not isinstance(value, Mapping) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in value.items()
    ):
        raise CatalogError(f"{where}.{name} must map names to text descriptions")
    return dict(value)


def parse_catalog(document: str | Mapping) -> Catalog:
    doc = json.loads(document) if isinstance(document, str) else document
    if not isinstance(doc, Mapping):
        raise CatalogError("catalog must be a JSON object")
    kins_doc = doc.get("kins")
    if not isinstance(kins_doc, Mapping):
        raise CatalogError("catalog.kins must be an object")
    kins = {}
    for name, spec in kins_doc.items():
        if not isinstance(spec, Mapping) or not isinstance(spec.get("persona"), str):
            raise CatalogError(f"kins.{name} needs a persona")
        kins[name] = KinSpec(
            name=name,
            persona=spec["persona"],
            default_traits=_str_map(spec, "default_traits", f"kins.{name}"),
            default_flaws=_str_map(spec, "default_flaws", f"kins.{name}"),
            default_items=_str_map(spec, "default_items", f"kins.{name}"),
        )
    return Catalog(
        kins=kins,
        traits=_str_map(doc, "traits", "catalog"),
        flaws=_str_map(doc, "flaws", "catalog"),
    )


def load_catalog(path: str | Path | None = None) -> Catalog:
    """The bundled catalog, or one read from an explicit file."""
    if path is not None:
        return parse_catalog(Path(path).read_text(encoding="utf-8"))
    text = resources.files("mazegm").joinpath("data/catalog.json").read_text("utf-8")
    return parse_catalog(text)


def create_character(
    name: str,
    kin: str,
    goal: str,
    trait: str,
    flaw: str,
    catalog: Catalog,
) -> PlayerState:
    """Merge kin defaults with one chosen trait and flaw into a PlayerState.

    The chosen trait and flaw must come from the catalog lists; the kin's
    persona is carried along as a character note since the player schema has
    no persona field of its own.
    """
    if not name.strip():
        raise CatalogError("a character needs a name")
    if not goal.strip():
        raise CatalogError("a character needs a goal")
    kin_spec = catalog.kins.get(kin)
    if kin_spec is None:
        raise CatalogError(
            f"unknown kin {kin!r}; choose one of: {', '.join(sorted(catalog.kins))}"
        )
    if trait not in catalog.traits:
        raise CatalogError(
            f"unknown trait {trait!r}; choose one of: {', '.join(sorted(catalog.traits))}"
        )
    if flaw not in catalog.flaws:
        raise CatalogError(
            f"unknown flaw {flaw!r}; choose one of: {', '.join(sorted(catalog.flaws))}"
        )
    traits = {**kin_spec.default_traits, trait: catalog.traits[trait]}
    flaws = {**kin_spec.default_flaws, flaw: catalog.flaws[flaw]}
    return PlayerState(
        name=name.strip(),
        kin=kin,
        goal=goal.strip(),
        traits=traits,
        flaws=flaws,
        inventory=dict(kin_spec.default_items),
        additional_notes=(kin_spec.persona,),
    )
