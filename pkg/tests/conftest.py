import json
from dataclasses import dataclass

import pytest

from safelight import (
    PartitionGrid,
    Scenario,
    TransitionSystem,
    WinningSet,
    build_partition,
    build_transitions,
    label_cells,
    load_scenario,
    safety_game,
)


@dataclass
class SynthesisBundle:
    scenario: Scenario
    grid: PartitionGrid
    safe_cells: frozenset
    ts: TransitionSystem
    win: WinningSet


def _synthesize(scenario, restrict=True):
    grid = build_partition(scenario.net, scenario.safeset, scenario.breakpoints)
    safe_cells = label_cells(grid, scenario.safeset)
    ts = build_transitions(
        scenario.net, grid, safe_cells, restrict_to_safe=restrict
    )
    win = safety_game(ts, safe_cells)
    return SynthesisBundle(scenario, grid, safe_cells, ts, win)


@pytest.fixture(scope="session")
def desk2():
    return load_scenario("desk2")


@pytest.fixture(scope="session")
def desk2_raw():
    from importlib.resources import files

    return json.loads(files("safelight.scenarios").joinpath("desk2.json").read_text())


@pytest.fixture(scope="session")
def desk2_bundle(desk2):
    # unrestricted transitions so the attractor tests can roam everywhere
    return _synthesize(desk2, restrict=False)


@pytest.fixture(scope="session")
def arterial4():
    return load_scenario("arterial4")


@pytest.fixture(scope="session")
def arterial4_bundle(arterial4):
    return _synthesize(arterial4, restrict=False)


@pytest.fixture(scope="session")
def paper9():
    return load_scenario("paper_fig2")


@pytest.fixture(scope="session")
def paper9_raw():
    from importlib.resources import files

    return json.loads(
        files("safelight.scenarios").joinpath("paper_fig2.json").read_text()
    )


@pytest.fixture(scope="session")
def paper9_bundle(paper9):
    """The expensive one: synthesized once, shared by everything below."""
    return _synthesize(paper9, restrict=True)
