"""Command-line front end.

    safelight synthesize --scenario paper_fig2 --out out/fig2
    safelight run --scenario paper_fig2 --seed 7 --steps 20 --out out/fig2
    safelight emit-milp --scenario desk2 --horizon 4 --out out/desk2

synthesize partitions the state space, builds the abstract transition
system, solves the safety game, and stores the winning cells with their
admissible patterns (summary.txt, winning.txt, cache.json).  run replays
the receding-horizon loop against randomly drawn demands, reusing the
cached synthesis when the scenario fingerprint matches, and writes
trace.csv plus run_summary.txt.  emit-milp exports the one-shot
mixed-integer encoding of the dynamics in LP format.

Exit codes: 0 success, 2 invalid scenario or arguments, 3 empty winning
set, 4 closed-loop infeasibility.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
import time
from pathlib import Path

from .abstraction import build_partition, build_transitions, label_cells
from .errors import (
    EmptyWinningSetError,
    PlanInfeasibleError,
    RecursiveFeasibilityError,
    SafelightError,
    ScenarioError,
    SpecValidationError,
    UnrecoverableStateError,
)
from .games import WinningSet, safety_game
from .milp import build_mld, emit_lp
from .mpc import closed_loop
from .scenario import Scenario, load_scenario

log = logging.getLogger(__name__)


def _out_dir(args, scenario: Scenario) -> Path:
    out = Path(args.out) if args.out else Path("out") / scenario.name
    out.mkdir(parents=True, exist_ok=True)
    return out


def _synthesize(scenario: Scenario):
    net = scenario.net
    grid = build_partition(net, scenario.safeset, scenario.breakpoints)
    safe_cells = label_cells(grid, scenario.safeset)
    ts = build_transitions(net, grid, safe_cells, restrict_to_safe=True)
    win = safety_game(ts, safe_cells)
    if not win.cells:
        raise EmptyWinningSetError(
            f"{scenario.name}: the safety game removed every cell; "
            "refine the partition or relax the demand set"
        )
    return grid, safe_cells, win


def _write_synthesis(out: Path, scenario: Scenario, grid, safe_cells, win, elapsed):
    lines = [
        f"scenario: {scenario.name}",
        f"fingerprint: {scenario.fingerprint()}",
        f"links: {scenario.net.n}",
        f"admissible patterns: {len(scenario.net.controls)}",
        f"cells: {grid.n_cells}",
        f"safe cells: {len(safe_cells)}",
        f"winning cells: {len(win.cells)}",
        f"synthesis seconds: {elapsed:.2f}",
    ]
    for l, breaks in enumerate(grid.breaks):
        lines.append(f"breakpoints {scenario.net.ids[l]}: {list(breaks)}")
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    with (out / "winning.txt").open("w") as fh:
        for q in sorted(win.cells):
            fh.write(f"{q}: {' '.join(map(str, win.admissible[q]))}\n")
    cache = {
        "fingerprint": scenario.fingerprint(),
        "breaks": [list(b) for b in grid.breaks],
        "safe_cells": sorted(safe_cells),
        "win_cells": sorted(win.cells),
        "admissible": {str(q): list(win.admissible[q]) for q in sorted(win.cells)},
    }
    (out / "cache.json").write_text(json.dumps(cache))


def _load_cache(out: Path, scenario: Scenario):
    path = out / "cache.json"
    if not path.exists():
        return None
    try:
        cache = json.loads(path.read_text())
    except json.JSONDecodeError:
        return None
    if cache.get("fingerprint") != scenario.fingerprint():
        return None
    from .abstraction import PartitionGrid

    grid = PartitionGrid(tuple(tuple(float(v) for v in b) for b in cache["breaks"]))
    safe_cells = frozenset(cache["safe_cells"])
    win = WinningSet(
        frozenset(cache["win_cells"]),
        {int(q): tuple(us) for q, us in cache["admissible"].items()},
    )
    return grid, safe_cells, win


def cmd_synthesize(args) -> int:
    scenario = load_scenario(args.scenario)
    out = _out_dir(args, scenario)
    t0 = time.perf_counter()
    grid, safe_cells, win = _synthesize(scenario)
    elapsed = time.perf_counter() - t0
    _write_synthesis(out, scenario, grid, safe_cells, win, elapsed)
    print(
        f"{scenario.name}: {grid.n_cells} cells, {len(safe_cells)} safe, "
        f"{len(win.cells)} winning ({elapsed:.2f} s) -> {out}"
    )
    return 0


def cmd_run(args) -> int:
    scenario = load_scenario(args.scenario)
    cfg = scenario.mpc
    if args.horizon is not None:
        cfg = dataclasses.replace(cfg, horizon=args.horizon)
    out = _out_dir(args, scenario)
    cached = _load_cache(out, scenario)
    if cached is None:
        t0 = time.perf_counter()
        grid, safe_cells, win = _synthesize(scenario)
        _write_synthesis(out, scenario, grid, safe_cells, win, time.perf_counter() - t0)
    else:
        grid, safe_cells, win = cached
        log.info("reusing cached synthesis for %s", scenario.name)
    net = scenario.net

    def transitions():
        return build_transitions(net, grid)

    trace = closed_loop(
        net, scenario.x0, cfg, grid, safe_cells, win, scenario.safeset,
        steps=args.steps, seed=args.seed, attractor_source=transitions,
    )

    ids = net.ids
    header = (
        ["step"]
        + [f"x_{i}" for i in ids]
        + [f"u_{i}" for i in ids]
        + [f"d_{i}" for i in ids]
        + ["J_e", "rho", "feasible"]
    )
    with (out / "trace.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for rec in trace.records:
            row = [rec.t]
            row += [f"{v:.6f}" for v in rec.x]
            row += list(rec.u) if rec.u is not None else [""] * net.n
            row += [f"{v:.6f}" for v in rec.d] if rec.d is not None else [""] * net.n
            row += [
                f"{rec.cost:.6f}" if rec.cost is not None else "",
                f"{rec.rho:.6f}",
                int(rec.feasible),
            ]
            w.writerow(row)
        final = [len(trace.records)]
        final += [f"{v:.6f}" for v in trace.final_state]
        final += [""] * (2 * net.n) + ["", f"{trace.final_rho:.6f}", ""]
        w.writerow(final)

    min_rho = min(
        [rec.rho for rec in trace.records] + [trace.final_rho]
    )
    total_occ = sum(sum(rec.x) for rec in trace.records)
    summary = [
        f"scenario: {scenario.name}",
        f"seed: {args.seed}",
        f"steps: {len(trace.records)}",
        f"horizon: {cfg.horizon}",
        f"min rho: {min_rho:.6f}",
        f"total occupancy: {total_occ:.6f}",
        f"infeasibility events: {trace.infeasible_events}",
        f"prephase steps: {trace.prephase_steps}",
    ]
    (out / "run_summary.txt").write_text("\n".join(summary) + "\n")
    print(
        f"{scenario.name} seed {args.seed}: {len(trace.records)} steps, "
        f"min rho {min_rho:.3f}, {trace.infeasible_events} infeasibility events "
        f"-> {out}"
    )
    return 0


def cmd_emit_milp(args) -> int:
    scenario = load_scenario(args.scenario)
    horizon = args.horizon if args.horizon is not None else scenario.mpc.horizon
    out = _out_dir(args, scenario)
    model = build_mld(scenario.net, horizon)
    path = out / f"{scenario.name}_H{horizon}.lp"
    path.write_text(emit_lp(model))
    print(
        f"{scenario.name}: horizon {horizon}, {len(model.variables)} variables, "
        f"{len(model.rows)} rows -> {path}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="safelight",
        description="Safety-enforcing traffic signal synthesis and control.",
    )
    p.add_argument("--verbose", action="store_true", help="chatty logging")
    sub = p.add_subparsers(dest="command", required=True)

    def add_verbose(sp):
        # accept --verbose after the subcommand as well
        sp.add_argument(
            "--verbose", action="store_true",
            default=argparse.SUPPRESS, help=argparse.SUPPRESS,
        )

    ps = sub.add_parser("synthesize", help="solve the safety game for a scenario")
    add_verbose(ps)
    ps.add_argument("--scenario", required=True, help="scenario file or bundled name")
    ps.add_argument("--out", help="output directory (default out/<name>)")
    ps.set_defaults(func=cmd_synthesize)

    pr = sub.add_parser("run", help="run the closed loop with random demands")
    add_verbose(pr)
    pr.add_argument("--scenario", required=True, help="scenario file or bundled name")
    pr.add_argument("--seed", type=int, default=0, help="demand RNG seed")
    pr.add_argument("--steps", type=int, default=20, help="closed-loop steps")
    pr.add_argument("--horizon", type=int, help="override the scenario's MPC horizon")
    pr.add_argument("--out", help="output directory (default out/<name>)")
    pr.set_defaults(func=cmd_run)

    pm = sub.add_parser("emit-milp", help="export the LP-format MILP encoding")
    add_verbose(pm)
    pm.add_argument("--scenario", required=True, help="scenario file or bundled name")
    pm.add_argument("--horizon", type=int, help="encoding horizon (default scenario's)")
    pm.add_argument("--out", help="output directory (default out/<name>)")
    pm.set_defaults(func=cmd_emit_milp)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ScenarioError, SpecValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except EmptyWinningSetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (PlanInfeasibleError, RecursiveFeasibilityError, UnrecoverableStateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except SafelightError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
