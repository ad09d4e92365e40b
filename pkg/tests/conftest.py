import numpy as np
import pytest

from dcpp.map_core import Lanelet, LaneletMap, OccupancyGrid
from dcpp.odd import OddParameterKind

SCENARIO_DIR = None


def pytest_configure(config):
    global SCENARIO_DIR
    from pathlib import Path
    SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


def straight_lanelet(lid, x0, x1, y=0.0, half_width=2.0,
                     tags=("regular_road",), successors=()):
    """Axis-aligned rectangular lanelet along the x axis."""
    n = max(2, int(round(x1 - x0)) + 1)
    xs = np.linspace(x0, x1, n)
    center = np.column_stack([xs, np.full(n, y)])
    left = center + [0.0, half_width]
    right = center - [0.0, half_width]
    return Lanelet(id=lid, centerline=center, left_boundary=left,
                   right_boundary=right, successors=tuple(successors),
                   odd_tags=frozenset(OddParameterKind(t) for t in tags))


def corridor_map(length=40.0, tags=("regular_road",)):
    """Single-lanelet map: one straight corridor."""
    lanelet = straight_lanelet(1, 0.0, length, tags=tags)
    return LaneletMap(lanelets={1: lanelet})


def make_grid(width=200, height=200, resolution=0.25, origin=(-5.0, -25.0)):
    return OccupancyGrid(origin=np.asarray(origin, dtype=float),
                         resolution=resolution, width=width, height=height,
                         cells=np.zeros((height, width), dtype=np.uint8))


@pytest.fixture
def scenario_dir():
    return SCENARIO_DIR


@pytest.fixture
def blocked_lane_two_detours(scenario_dir):
    from dcpp.sim import load_scenario
    return load_scenario(scenario_dir / "blocked_lane_two_detours.json")


@pytest.fixture
def narrow_corridor(scenario_dir):
    from dcpp.sim import load_scenario
    return load_scenario(scenario_dir / "narrow_corridor.json")


@pytest.fixture
def straight_scenario(scenario_dir):
    from dcpp.sim import load_scenario
    return load_scenario(scenario_dir / "straight.json")
