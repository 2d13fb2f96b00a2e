"""Mixed logical dynamical encoding: generation, emission, substitution."""

import random

import pytest

from safelight import (
    MldModel,
    build_mld,
    check_substitution,
    closed_box,
    emit_lp,
    sample_demand,
    step,
)

from oracles import eval_rows, parse_lp


def random_trace(net, steps, seed):
    rng = random.Random(seed)
    x = tuple(rng.uniform(0, cap) for cap in net.cap)
    states, controls, demands = [x], [], []
    for _ in range(steps):
        u = net.controls[rng.randrange(len(net.controls))]
        d = sample_demand(net, rng)
        x = step(net, x, u, d)
        states.append(x)
        controls.append(u)
        demands.append(d)
    return states, controls, demands


def test_candidate_menu_per_link(desk2):
    model = build_mld(desk2.net, 1)
    assert model.zcands[0] == (("x",), ("c",), ("space", 1, 2.0))
    assert model.zcands[1] == (("x",), ("c",))


def test_big_m_values(desk2):
    model = build_mld(desk2.net, 1)
    # max over caps, saturations, and ratio * downstream capacity
    assert model.big_m == 20.0
    # cap + demand + upstream saturation share
    assert model.big_m_clamp == 12.0


def test_emission_is_deterministic(desk2, paper9):
    for net, h in ((desk2.net, 3), (paper9.net, 2)):
        a = emit_lp(build_mld(net, h))
        b = emit_lp(build_mld(net, h))
        assert a == b


def test_lp_text_round_trips(desk2):
    model = build_mld(desk2.net, 2)
    objective, rows, bounds, binaries = parse_lp(emit_lp(model))
    assert objective == {"x_l0_t1": 1.0, "x_l1_t1": 1.0,
                         "x_l0_t2": 1.0, "x_l1_t2": 1.0}
    assert len(rows) == len(model.rows)
    by_name = {name: (coeffs, sense, rhs) for name, coeffs, sense, rhs in rows}
    for row in model.rows:
        coeffs, sense, rhs = by_name[row.name]
        assert sense == row.sense
        assert rhs == pytest.approx(row.rhs)
        assert coeffs == pytest.approx(row.coeffs)
    for var in model.variables.values():
        if var.binary:
            assert var.name in binaries
            assert var.name not in bounds
        else:
            assert bounds[var.name] == (var.lo, var.hi)


def test_every_relaxed_row_is_slack_for_all_states(desk2, paper9):
    """Big-M audit: with the relaxing binary at its slack value, the row
    must hold for the worst combination of the remaining bounds."""
    for net in (desk2.net, paper9.net):
        model = build_mld(net, 2)
        checked = 0
        for row in model.rows:
            if row.relax is None:
                continue
            bname, bval = row.relax
            worst = 0.0
            for v, c in row.coeffs.items():
                if v == bname:
                    worst += c * bval
                    continue
                var = model.variables[v]
                if row.sense == "<=":
                    worst += c * (var.hi if c > 0 else var.lo)
                else:
                    worst += c * (var.lo if c > 0 else var.hi)
            if row.sense == "<=":
                assert worst <= row.rhs + 1e-9, row.name
            else:
                assert worst >= row.rhs - 1e-9, row.name
            checked += 1
        assert checked > 0


def test_substitution_accepts_simulator_traces(desk2):
    net = desk2.net
    model = build_mld(net, 3)
    states, controls, demands = random_trace(net, 60, seed=8)
    report = check_substitution(model, states, controls, demands)
    assert report.ok
    assert report.windows == 58
    assert report.violations == ()


def test_substitution_accepts_case_study_trace(paper9):
    net = paper9.net
    model = build_mld(net, 3)
    states, controls, demands = random_trace(net, 25, seed=5)
    report = check_substitution(model, states, controls, demands)
    assert report.ok


def test_substitution_rejects_corrupted_state(desk2):
    net = desk2.net
    model = build_mld(net, 3)
    states, controls, demands = random_trace(net, 30, seed=9)
    states = [list(s) for s in states]
    states[12][0] += 0.5
    report = check_substitution(
        model, [tuple(s) for s in states], controls, demands
    )
    assert not report.ok
    names = {v.row for v in report.violations}
    # the corruption must surface in the clamp/pin block, not vanish
    assert any(n.startswith(("pin_x", "xub_zp", "xlb_zp", "xlb_cap")) for n in names)


def test_substitution_accepts_ties_in_the_minimum(desk2):
    # x exactly at the saturation flow: two selector assignments are valid
    # and the checker must accept the canonical first-argmin one
    net = desk2.net
    states = [(4.0, 4.0)]
    controls = [(1, 1)]
    demands = [(1.0, 0.0)]
    states.append(step(net, states[0], controls[0], demands[0]))
    model = build_mld(net, 1)
    report = check_substitution(model, states, controls, demands)
    assert report.ok


def test_parsed_rows_reject_tampered_assignments(desk2):
    net = desk2.net
    model = build_mld(net, 1)
    states, controls, demands = random_trace(net, 1, seed=3)
    from safelight.milp import assignment_for_window

    assign = assignment_for_window(model, states, controls, demands, 0)
    _, rows, _, _ = parse_lp(emit_lp(model))
    assert eval_rows(rows, assign) == []
    assign["f_l0_t0"] += 0.25
    assert eval_rows(rows, assign) != []


def test_safe_and_terminal_boxes_add_rows(desk2):
    net = desk2.net
    safe = closed_box((0.0, 0.0), (5.0, 10.0))
    term = closed_box((1.0, 0.0), (5.0, 5.0))
    model = build_mld(net, 2, safe_box=safe, terminal_box=term)
    names = [r.name for r in model.rows]
    assert "safe_l0_t1" in names and "safe_l0_t2" in names
    assert "safe_l1_t1" not in names  # cap-wide bounds add nothing
    assert "term_l0" in names and "term_l1" in names
    assert "termlo_l0" in names and "termlo_l1" not in names


def test_trace_length_validation(desk2):
    model = build_mld(desk2.net, 3)
    with pytest.raises(ValueError, match="too short"):
        check_substitution(model, [(0.0, 0.0)], [], [])
    with pytest.raises(ValueError, match="one control"):
        check_substitution(
            model,
            [(0.0, 0.0)] * 5,
            [(1, 1)] * 3,
            [(0.0, 0.0)] * 4,
        )


def test_rejects_negative_horizon(desk2):
    with pytest.raises(ValueError, match="non-negative"):
        build_mld(desk2.net, -1)
