"""ODD parameter kinds, permission profiles, and the drivable-area query.

The nominal profile admits only regular roads. The extended profile
temporarily adds parameter kinds (bus driveways, parking areas, sidewalks,
off-road surfaces, solid-line crossings), each with a positive preference
coefficient expressing how acceptable driving on it is.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path as FilePath
from typing import TYPE_CHECKING

from .errors import MapSchemaError, NotDrivableError

if TYPE_CHECKING:
    from .map_core import Lanelet, LaneletMap


class OddParameterKind(str, Enum):
    REGULAR_ROAD = "regular_road"
    BUS_DRIVEWAY = "bus_driveway"
    PARKING_AREA = "parking_area"
    SIDEWALK = "sidewalk"
    OFF_ROAD = "off_road"
    SOLID_LINE_CROSSING = "solid_line_crossing"


#: Default preference coefficients. Only the relative order of the extended
#: kinds is externally meaningful; the spread keeps preference terms visible
#: next to typical distance terms at unit weights.
DEFAULT_PREFERENCES: dict[OddParameterKind, float] = {
    OddParameterKind.REGULAR_ROAD: 8.0,
    OddParameterKind.BUS_DRIVEWAY: 5.0,
    OddParameterKind.PARKING_AREA: 4.0,
    OddParameterKind.SIDEWALK: 3.0,
    OddParameterKind.OFF_ROAD: 2.0,
    OddParameterKind.SOLID_LINE_CROSSING: 1.0,
}


@dataclass(frozen=True)
class OddProfile:
    """A permitted-parameter set with per-kind preference coefficients."""

    permitted: frozenset[OddParameterKind]
    preference: dict[OddParameterKind, float]

    def __post_init__(self):
        if OddParameterKind.REGULAR_ROAD not in self.permitted:
            raise ValueError("every profile must permit regular_road")
        for kind in self.permitted:
            if kind not in self.preference:
                raise ValueError(f"permitted kind '{kind.value}' has no preference")
            if self.preference[kind] <= 0.0:
                raise ValueError(f"preference for '{kind.value}' must be > 0")


@dataclass(frozen=True)
class CostWeights:
    """Balance between distance (w1) and inverse preference (w2)."""

    w1: float = 1.0
    w2: float = 1.0

    def __post_init__(self):
        if self.w1 < 0.0 or self.w2 < 0.0:
            raise ValueError("weights must be non-negative")
        if self.w1 + self.w2 <= 0.0:
            raise ValueError("at least one weight must be positive")


def nominal_profile() -> OddProfile:
    return load_profile(resources.files("dcpp.data").joinpath("nominal.json").read_text())


def extended_profile() -> OddProfile:
    return load_profile(resources.files("dcpp.data").joinpath("extended.json").read_text())


def load_profile(source) -> OddProfile:
    """Load a profile from a JSON document (path, JSON string, or dict)."""
    if isinstance(source, dict):
        doc = source
    elif isinstance(source, FilePath):
        doc = json.loads(source.read_text())
    elif isinstance(source, str):
        doc = json.loads(source) if source.lstrip().startswith("{") \
            else json.loads(FilePath(source).read_text())
    else:
        raise MapSchemaError(f"unsupported profile source: {type(source).__name__}")
    if "permitted" not in doc:
        raise MapSchemaError("profile document missing 'permitted'")
    try:
        permitted = frozenset(OddParameterKind(k) for k in doc["permitted"])
        preference = {OddParameterKind(k): float(v)
                      for k, v in doc.get("preference", {}).items()}
    except ValueError as exc:
        raise MapSchemaError(f"profile document: {exc}")
    for kind in permitted:
        preference.setdefault(kind, DEFAULT_PREFERENCES[kind])
    return OddProfile(permitted=permitted, preference=preference)


def lanelet_preference(lanelet: "Lanelet", profile: OddProfile) -> float:
    """Aggregate preference of a lanelet: sum of coefficients of its permitted tags."""
    total = sum(profile.preference[tag] for tag in lanelet.odd_tags
                if tag in profile.permitted)
    if total <= 0.0:
        raise NotDrivableError(
            f"lanelet {lanelet.id} has no tag permitted by the profile")
    return total


def is_drivable(lanelet: "Lanelet", profile: OddProfile) -> bool:
    return not lanelet.blocked and any(tag in profile.permitted
                                       for tag in lanelet.odd_tags)


def drivable_area(lanelet_map: "LaneletMap", profile: OddProfile) -> set[int]:
    """Ids of non-blocked lanelets with at least one permitted tag."""
    return {lanelet.id for lanelet in lanelet_map.lanelets.values()
            if is_drivable(lanelet, profile)}


def modifications_for(lanelet: "Lanelet", nominal: OddProfile,
                      extended: OddProfile) -> frozenset[OddParameterKind]:
    """ODD modifications a path through this lanelet entails.

    The lanelet's tags that the extended profile permits but the nominal one
    does not; empty for nominal-only lanelets.
    """
    return frozenset(tag for tag in lanelet.odd_tags
                     if tag in extended.permitted and tag not in nominal.permitted)
