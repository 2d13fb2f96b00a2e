"""Safety and reachability fixpoints against naive full-rescan oracles."""

import copy
import random

import pytest

from safelight import (
    EmptyWinningSetError,
    build_partition,
    build_transitions,
    label_cells,
    parse_scenario,
    reachability_game,
    safety_game,
    winning_boxes,
)

from oracles import naive_attractor, naive_safety_fixpoint


def test_desk_winning_set_exact(desk2_bundle):
    win = safety_game(desk2_bundle.ts, desk2_bundle.safe_cells)
    assert win.cells == frozenset({0})
    # only green-green confines the box [0,5]^2
    assert win.admissible[0] == (3,)


def test_winning_set_is_inside_safe_set(paper9_bundle):
    win = paper9_bundle.win
    assert win.cells <= paper9_bundle.safe_cells
    assert len(win.cells) == 252
    for q in win.cells:
        assert win.admissible[q]  # at least one pattern each


def test_fixpoint_matches_naive_rescan(desk2_bundle, arterial4_bundle):
    for bundle in (desk2_bundle, arterial4_bundle):
        win = safety_game(bundle.ts, bundle.safe_cells)
        want_cells, want_adm = naive_safety_fixpoint(
            bundle.ts.delta, bundle.safe_cells
        )
        assert win.cells == frozenset(want_cells)
        assert win.admissible == want_adm


def test_fixpoint_is_idempotent(desk2_bundle, arterial4_bundle, paper9_bundle):
    for bundle in (desk2_bundle, arterial4_bundle, paper9_bundle):
        again = safety_game(bundle.ts, bundle.win.cells)
        assert again.cells == bundle.win.cells
        assert again.admissible == bundle.win.admissible


def test_no_removed_cell_confines_into_the_final_set(paper9_bundle):
    # nested fixpoints: delta(q,u) inside W_final would imply inside every
    # intermediate set, so q could never have been removed
    ts = paper9_bundle.ts
    win = paper9_bundle.win
    for q in paper9_bundle.safe_cells - win.cells:
        for succs in ts.delta[q]:
            assert not (set(succs) <= win.cells)


def test_admissible_patterns_confine(paper9_bundle):
    ts = paper9_bundle.ts
    win = paper9_bundle.win
    rng = random.Random(5)
    for q in rng.sample(sorted(win.cells), 40):
        for u in range(ts.n_controls):
            inside = set(ts.delta[q][u]) <= win.cells
            assert inside == (u in win.admissible[q])


def test_safety_game_needs_rows_for_safe_cells(desk2):
    grid = build_partition(desk2.net, desk2.safeset, desk2.breakpoints)
    safe = label_cells(grid, desk2.safeset)
    ts = build_transitions(desk2.net, grid, safe, restrict_to_safe=True)
    with pytest.raises(EmptyWinningSetError, match="no transitions"):
        safety_game(ts, safe | {3})  # cell 3 has no computed row


def test_winning_boxes_concretise(desk2_bundle):
    win = safety_game(desk2_bundle.ts, desk2_bundle.safe_cells)
    region = winning_boxes(win, desk2_bundle.grid)
    rng = random.Random(1)
    for _ in range(1000):
        x = (rng.uniform(0, 10), rng.uniform(0, 10))
        assert region.contains(x) == (x[0] <= 5.0 and x[1] <= 5.0)


def test_winning_boxes_refuse_empty(desk2_raw):
    raw = copy.deepcopy(desk2_raw)
    raw["demand_boxes"] = [{"lower": [0, 0], "upper": [6, 0]}]
    sc = parse_scenario(raw, name="hot-desk")
    grid = build_partition(sc.net, sc.safeset, sc.breakpoints)
    safe = label_cells(grid, sc.safeset)
    ts = build_transitions(sc.net, grid, safe, restrict_to_safe=True)
    win = safety_game(ts, safe)
    assert not win.cells  # demand 6 outruns the saturation flow 4
    with pytest.raises(EmptyWinningSetError, match="refine the partition"):
        winning_boxes(win, grid)


class TestReachabilityGame:
    def test_desk_attractor_is_only_the_target(self, desk2_bundle):
        att = reachability_game(desk2_bundle.ts, frozenset({0}))
        # a full link 2 pins f_1 at zero while demand refills link 1, so
        # no other cell can force its way in
        assert att.cells == frozenset({0})
        assert att.steps == {0: 0}
        assert att.control == {0: None}

    def test_matches_naive_rounds(self, desk2_bundle, arterial4_bundle):
        for bundle in (desk2_bundle, arterial4_bundle):
            for target in (bundle.win.cells, frozenset({0})):
                att = reachability_game(bundle.ts, target)
                cells, control, steps = naive_attractor(bundle.ts.delta, target)
                assert att.cells == frozenset(cells)
                assert att.steps == steps
                assert att.control == control  # same lowest-index tie break

    def test_steps_decrease_toward_target(self, arterial4_bundle):
        ts = arterial4_bundle.ts
        att = reachability_game(ts, arterial4_bundle.win.cells)
        for q in att.cells:
            if att.steps[q] == 0:
                continue
            u = att.control[q]
            worst = max(att.steps[s] for s in ts.delta[q][u])
            assert worst < att.steps[q]
            assert set(ts.delta[q][u]) <= att.cells
