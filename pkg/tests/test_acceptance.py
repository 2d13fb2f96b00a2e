"""End-to-end acceptance checks, one per shipped guarantee.

Every test measures its own wall clock, asserts the stated budget, and
prints a single pass/fail line so the output doubles as a release
checklist (run with `pytest -s tests/test_acceptance.py`).
"""

import contextlib
import random
import time

import pytest

from safelight import (
    build_mld,
    build_partition,
    build_transitions,
    check_substitution,
    closed_loop,
    label_cells,
    reachability_game,
    reach_h,
    reach_one,
    robustness,
    safe_contains,
    safety_game,
    sample_demand,
    step,
)
from safelight.reach import ReachBox

from oracles import box_inside, naive_attractor, naive_safety_fixpoint


@contextlib.contextmanager
def criterion(num, name, budget_s):
    info = {}
    t0 = time.perf_counter()
    try:
        yield info
    except BaseException:
        print(f"criterion {num} ({name}): FAIL")
        raise
    elapsed = time.perf_counter() - t0
    detail = ", ".join(f"{k}={v}" for k, v in info.items())
    print(
        f"criterion {num} ({name}): PASS — {elapsed:.2f} s"
        + (f" [budget {budget_s} s]" if budget_s else "")
        + (f"; {detail}" if detail else "")
    )
    if budget_s:
        assert elapsed < budget_s, f"budget exceeded: {elapsed:.1f} s"


@pytest.fixture(scope="module")
def paper9_grid(paper9):
    return build_partition(paper9.net, paper9.safeset, paper9.breakpoints)


@pytest.fixture(scope="module")
def paper9_full_ts(paper9, paper9_grid):
    # unrestricted transitions: every cell, safe or not, gets successors
    return build_transitions(paper9.net, paper9_grid)


def test_c1_exact_dynamics_regression(desk2):
    with criterion(1, "exact dynamics regression", 1) as info:
        net = desk2.net
        drained = step(net, (6.0, 8.0), (1, 1), (0.0, 0.0))
        assert max(abs(a - b) for a, b in zip(drained, (2.0, 6.0))) <= 1e-12
        gridlock = step(net, (10.0, 10.0), (1, 0), (2.0, 0.0))
        assert max(abs(a - b) for a, b in zip(gridlock, (10.0, 10.0))) <= 1e-12
        info["cases"] = 2


def test_c2_reach_soundness_monte_carlo(desk2, arterial4, paper9):
    with criterion(2, "reach soundness", 60) as info:
        rng = random.Random(2024)
        total = 0
        for scenario in (desk2, arterial4, paper9):
            net = scenario.net
            for horizon in (1, 2, 3):
                lo = tuple(rng.uniform(0.0, 0.6 * c) for c in net.cap)
                hi = tuple(
                    min(l + rng.uniform(0.0, 0.4 * c), c)
                    for l, c in zip(lo, net.cap)
                )
                seq = tuple(
                    net.controls[rng.randrange(len(net.controls))]
                    for _ in range(horizon)
                )
                frontiers = reach_h(net, ReachBox(lo, hi), seq)
                for _ in range(10_000):
                    x = tuple(rng.uniform(a, b) for a, b in zip(lo, hi))
                    for t, u in enumerate(seq):
                        x = step(net, x, u, sample_demand(net, rng))
                        assert any(
                            all(
                                b.lo[l] - 1e-9 <= x[l] <= b.hi[l] + 1e-9
                                for l in range(net.n)
                            )
                            for b in frontiers[t]
                        ), (scenario.name, horizon, t)
                    total += 1
        info["trajectories"] = total


def test_c3_simulation_relation(paper9, paper9_full_ts):
    with criterion(3, "simulation relation", 60) as info:
        net = paper9.net
        ts = paper9_full_ts
        grid = ts.grid
        rng = random.Random(93)
        for _ in range(100_000):
            x = tuple(rng.uniform(0.0, c) for c in net.cap)
            ui = rng.randrange(len(net.controls))
            d = sample_demand(net, rng)
            q = grid.locate(x)
            x2 = step(net, x, net.controls[ui], d)
            assert grid.locate(x2) in ts.delta[q][ui]
        info["samples"] = 100_000
        info["violations"] = 0


def test_c4_invariance_complete_check(paper9, paper9_bundle):
    with criterion(4, "invariant-set coverage", None) as info:
        net = paper9.net
        grid = paper9_bundle.grid
        win = paper9_bundle.win
        assert win.cells
        checked = 0
        for q in win.cells:
            lo, hi = grid.cell_closure(q)
            assert win.admissible[q]
            for ui in win.admissible[q]:
                for b in reach_one(net, ReachBox(lo, hi), net.controls[ui]):
                    assert box_inside(grid, b.lo, b.hi, win.cells), (q, ui)
                    checked += 1
        info["cells"] = len(win.cells)
        info["boxes_checked"] = checked


def test_c5_recursive_feasibility_and_safety(paper9, paper9_bundle):
    with criterion(5, "closed-loop feasibility and safety", 300) as info:
        b = paper9_bundle
        infeasible = 0
        min_rho = float("inf")
        for seed in range(100):
            trace = closed_loop(
                paper9.net, paper9.x0, paper9.mpc, b.grid, b.safe_cells,
                b.win, paper9.safeset, steps=20, seed=seed,
            )
            infeasible += trace.infeasible_events
            assert trace.prephase_steps == 0
            for rec in trace.records:
                assert rec.feasible
                assert safe_contains(paper9.safeset, rec.x)
                assert rec.rho > 0.0
                min_rho = min(min_rho, rec.rho)
            assert safe_contains(paper9.safeset, trace.final_state)
            assert trace.final_rho > 0.0
        assert infeasible == 0
        info["runs"] = 100
        info["infeasible_events"] = infeasible
        info["min_rho"] = f"{min_rho:.3f}"


def test_c6_abstraction_scale_and_fixpoint(paper9):
    with criterion(6, "abstraction scale", 120) as info:
        net = paper9.net
        grid = build_partition(net, paper9.safeset, paper9.breakpoints)
        assert grid.n_cells == 3888
        safe_cells = label_cells(grid, paper9.safeset)
        ts = build_transitions(net, grid, safe_cells, restrict_to_safe=True)
        win = safety_game(ts, safe_cells)
        assert win.cells, "winning set must be non-empty"
        naive_w, naive_adm = naive_safety_fixpoint(ts.delta, safe_cells)
        assert win.cells == frozenset(naive_w)
        assert {q: tuple(us) for q, us in win.admissible.items()} == {
            q: tuple(us) for q, us in naive_adm.items()
        }
        info["cells"] = grid.n_cells
        info["safe"] = len(safe_cells)
        info["winning"] = len(win.cells)


def test_c7_mld_substitution(desk2, paper9):
    with criterion(7, "MLD substitution", 30) as info:
        windows = 0
        for scenario in (desk2, paper9):
            net = scenario.net
            rng = random.Random(77)
            x = tuple(rng.uniform(0.0, c) for c in net.cap)
            states, controls, demands = [x], [], []
            for _ in range(100):
                u = net.controls[rng.randrange(len(net.controls))]
                d = sample_demand(net, rng)
                x = step(net, x, u, d)
                states.append(x)
                controls.append(u)
                demands.append(d)
            model = build_mld(net, 3)
            report = check_substitution(model, states, controls, demands, tol=1e-9)
            assert report.ok, report.violations[:3]
            windows += report.windows
            corrupt = [list(s) for s in states]
            corrupt[50][0] += 0.5
            bad = check_substitution(
                model, [tuple(s) for s in corrupt], controls, demands, tol=1e-9
            )
            assert not bad.ok
        info["windows"] = windows
        info["corruption_rejected"] = True


def test_c8_game_oracle_equality(desk2_bundle, arterial4_bundle, desk2, arterial4):
    with criterion(8, "game fixpoint equality", None) as info:
        compared = 0
        for scenario, full in ((desk2, desk2_bundle), (arterial4, arterial4_bundle)):
            net = scenario.net
            grid = full.grid
            assert grid.n_cells <= 256
            safe_cells = full.safe_cells
            ts = build_transitions(net, grid, safe_cells, restrict_to_safe=True)
            win = safety_game(ts, safe_cells)
            naive_w, naive_adm = naive_safety_fixpoint(ts.delta, safe_cells)
            assert win.cells == frozenset(naive_w)
            assert {q: tuple(us) for q, us in win.admissible.items()} == {
                q: tuple(us) for q, us in naive_adm.items()
            }
            for target in (win.cells, frozenset({0})):
                if not target:
                    continue
                att = reachability_game(full.ts, target)
                n_att, n_ctrl, n_steps = naive_attractor(full.ts.delta, target)
                assert att.cells == frozenset(n_att)
                assert dict(att.control) == n_ctrl
                assert dict(att.steps) == n_steps
                compared += 1
        info["safety_games"] = 2
        info["reachability_games"] = compared


def test_c9_monotonicity_directions(desk2, arterial4, paper9):
    with criterion(9, "monotone coupling directions", None) as info:
        rng = random.Random(55)
        plan = ((desk2, 2000), (arterial4, 2000), (paper9, 6000))
        checked = {"own": 0, "down": 0, "up": 0, "adj": 0}
        for scenario, n_pairs in plan:
            net = scenario.net
            assert net.flow_bound_ok
            rels = []
            for l in range(net.n):
                rels.append((l, l, +1, "own"))
                for k, _, _ in net.down[l]:
                    rels.append((l, k, +1, "down"))
                for i, _, _ in net.up[l]:
                    rels.append((l, i, +1, "up"))
                for j in net.adj[l]:
                    rels.append((l, j, -1, "adj"))
            for _ in range(n_pairs):
                l, j, sign, kind = rels[rng.randrange(len(rels))]
                x = tuple(rng.uniform(0.0, 0.9 * c) for c in net.cap)
                u = net.controls[rng.randrange(len(net.controls))]
                d = sample_demand(net, rng)
                eps = rng.uniform(1e-6, net.cap[j] - x[j])
                x_pert = tuple(
                    v + eps if i == j else v for i, v in enumerate(x)
                )
                base = step(net, x, u, d)[l]
                pert = step(net, x_pert, u, d)[l]
                assert sign * (pert - base) >= -1e-9, (scenario.name, kind, l, j)
                checked[kind] += 1
        assert all(v > 0 for v in checked.values())
        info.update(checked)
