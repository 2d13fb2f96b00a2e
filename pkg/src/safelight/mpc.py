"""Receding-horizon control with set-membership safety constraints.

The planner enumerates control sequences over the horizon in
lexicographic order.  A sequence is feasible when every interval reach
box along the way lies inside the safe cells and every final box lies
inside the winning cells of the safety game; both containments reduce to
exact cell-cover tests because the grid refines the safe set.  Among
feasible sequences the planner minimises the total predicted occupancy
under a nominal demand, ties resolved by enumeration order.

Once a step starts inside the certified region, applying the chosen
first pattern keeps the realised state inside it for every admissible
demand, so the loop can be repeated indefinitely.  The shifted previous
plan, extended by an admissible pattern of the cells reached at the end,
is rechecked each step as an explicit feasibility witness.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from itertools import product

from .abstraction import PartitionGrid
from .errors import (
    EnumerationCapError,
    PlanInfeasibleError,
    RecursiveFeasibilityError,
    UnrecoverableStateError,
)
from .games import Attractor, WinningSet, reachability_game
from .geometry import SafeSet, robustness
from .network import ControlPattern, DemandVector, State, ValidatedNetwork, step
from .reach import ReachBox, reach_one

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MpcConfig:
    horizon: int = 3
    nominal: str = "midpoint"  # midpoint | zero | random
    enumeration_cap: int = 100_000
    branch_cap: int = 4096


@dataclass(frozen=True)
class Plan:
    first: ControlPattern
    sequence: tuple[ControlPattern, ...]
    cost: float


@dataclass
class StepRecord:
    t: int
    x: State
    u: ControlPattern | None
    d: DemandVector | None
    cost: float | None
    rho: float
    feasible: bool
    witness_ok: bool | None


@dataclass
class Trace:
    records: list[StepRecord]
    final_state: State
    final_rho: float
    horizon: int
    seed: int
    prephase_steps: int = 0
    infeasible_events: int = 0


def box_in_cellunion(box: ReachBox, grid: PartitionGrid, cells: frozenset[int]) -> bool:
    """Exact test that a closed box lies inside a union of grid cells.

    The cells meeting the box form a full index rectangle, so membership
    of the box is membership of every cell in that rectangle.
    """
    ranges = []
    for l in range(grid.n_links):
        a, b = grid.range1d(l, box.lo[l], box.hi[l])
        ranges.append(range(a, b + 1))
    strides = grid.strides
    for idx in product(*ranges):
        if sum(i * s for i, s in zip(idx, strides)) not in cells:
            return False
    return True


def nominal_demands(
    net: ValidatedNetwork, cfg: MpcConfig, rng: random.Random | None
) -> tuple[DemandVector, ...]:
    """Demand guesses used only for ranking feasible sequences."""
    if cfg.nominal == "zero":
        d = (0.0,) * net.n
        return (d,) * cfg.horizon
    if cfg.nominal == "midpoint":
        box = net.demand[0]
        d = tuple((lo + hi) / 2.0 for lo, hi in zip(box.lower, box.upper))
        return (d,) * cfg.horizon
    if cfg.nominal == "random":
        if rng is None:
            raise ValueError("nominal='random' needs an rng")
        return tuple(sample_demand(net, rng) for _ in range(cfg.horizon))
    raise ValueError(f"unknown nominal demand mode {cfg.nominal!r}")


def sample_demand(net: ValidatedNetwork, rng: random.Random) -> DemandVector:
    """Draw uniformly from a uniformly chosen demand box."""
    idx = rng.randrange(len(net.demand)) if len(net.demand) > 1 else 0
    box = net.demand[idx]
    return tuple(
        rng.uniform(lo, hi) if hi > lo else lo
        for lo, hi in zip(box.lower, box.upper)
    )


def plan(
    net: ValidatedNetwork,
    x: State,
    cfg: MpcConfig,
    grid: PartitionGrid,
    safe_cells: frozenset[int],
    win: WinningSet,
    nominal: tuple[DemandVector, ...] | None = None,
    rng: random.Random | None = None,
) -> Plan:
    """Pick the cheapest robustly safe control sequence from state x.

    Enumerates the full sequence space depth first in lexicographic
    order, pruning a prefix as soon as one of its reach boxes leaves the
    safe cells or its accumulated nominal cost can no longer win.  Raises
    PlanInfeasibleError with rejection counts when nothing survives.
    """
    h = cfg.horizon
    if h < 1:
        raise ValueError("horizon must be at least 1")
    total = len(net.controls) ** h
    if total > cfg.enumeration_cap:
        raise EnumerationCapError(
            f"|U|^H = {total} exceeds the enumeration cap {cfg.enumeration_cap}"
        )
    if nominal is None:
        nominal = nominal_demands(net, cfg, rng)
    if len(nominal) != h:
        raise ValueError("nominal demand sequence length must equal the horizon")

    n_d = len(net.demand)
    start = (ReachBox(tuple(x), tuple(x)),)
    best_cost = [float("inf")]
    best_seq: list[tuple[ControlPattern, ...] | None] = [None]
    counters = {"checked": 0, "path": 0, "terminal": 0}

    def descend(depth, boxes, xe, cost, prefix):
        if len(boxes) * n_d > cfg.branch_cap:
            raise EnumerationCapError(
                f"reach frontier would exceed {cfg.branch_cap} boxes"
            )
        for u in net.controls:
            new_boxes = [rb for b in boxes for rb in reach_one(net, b, u)]
            ok = all(
                box_in_cellunion(rb, grid, safe_cells) for rb in new_boxes
            )
            if not ok:
                counters["path"] += 1
                continue
            xe2 = step(net, xe, u, nominal[depth])
            cost2 = cost + sum(xe2)
            if cost2 >= best_cost[0]:
                continue
            if depth + 1 == h:
                counters["checked"] += 1
                if all(box_in_cellunion(rb, grid, win.cells) for rb in new_boxes):
                    best_cost[0] = cost2
                    best_seq[0] = prefix + (u,)
                else:
                    counters["terminal"] += 1
            else:
                descend(depth + 1, new_boxes, xe2, cost2, prefix + (u,))

    descend(0, start, tuple(x), 0.0, ())
    if best_seq[0] is None:
        raise PlanInfeasibleError(
            f"no feasible control sequence over horizon {h}: "
            f"{counters['path']} prefixes left the safe cells, "
            f"{counters['terminal']} sequences missed the terminal cells",
            checked=counters["checked"],
            path_failures=counters["path"],
            terminal_failures=counters["terminal"],
        )
    seq = best_seq[0]
    return Plan(first=seq[0], sequence=seq, cost=best_cost[0])


def shifted_witness(
    net: ValidatedNetwork,
    x: State,
    tail: tuple[ControlPattern, ...],
    grid: PartitionGrid,
    safe_cells: frozenset[int],
    win: WinningSet,
) -> tuple[ControlPattern, ...] | None:
    """Recheck the previous plan's tail from the realised state, extended
    by one pattern admissible in every cell the final boxes touch.

    Returns the full extended sequence when it passes the same
    feasibility test the planner uses, else None.
    """
    boxes: list[ReachBox] = [ReachBox(tuple(x), tuple(x))]
    for u in tail:
        boxes = [rb for b in boxes for rb in reach_one(net, b, u)]
        for rb in boxes:
            if not box_in_cellunion(rb, grid, safe_cells):
                return None
    touched: set[int] = set()
    strides = grid.strides
    for rb in boxes:
        ranges = []
        for l in range(grid.n_links):
            a, b = grid.range1d(l, rb.lo[l], rb.hi[l])
            ranges.append(range(a, b + 1))
        for idx in product(*ranges):
            touched.add(sum(i * s for i, s in zip(idx, strides)))
    if not touched <= win.cells:
        return None
    common = None
    for q in touched:
        adm = set(win.admissible[q])
        common = adm if common is None else common & adm
    for u_idx in sorted(common or ()):
        u = net.controls[u_idx]
        final = [rb for b in boxes for rb in reach_one(net, b, u)]
        if all(box_in_cellunion(rb, grid, win.cells) for rb in final):
            return tail + (u,)
    return None


def closed_loop(
    net: ValidatedNetwork,
    x0: State,
    cfg: MpcConfig,
    grid: PartitionGrid,
    safe_cells: frozenset[int],
    win: WinningSet,
    safeset: SafeSet,
    steps: int,
    seed: int,
    attractor_source=None,
) -> Trace:
    """Run the receding-horizon loop for a number of steps.

    Demands are drawn uniformly from the demand boxes with the given
    seed.  If the very first plan is infeasible and attractor_source
    provides a transition system (or a callable returning one), the
    reachability-game policy drives the state into the winning cells
    first; feasibility failures after a feasible start raise
    RecursiveFeasibilityError.
    """
    rng = random.Random(seed)
    x = tuple(x0)
    records: list[StepRecord] = []
    trace = Trace(records, x, 0.0, cfg.horizon, seed)
    t = 0
    prev: Plan | None = None
    started_feasible = False

    def run_prephase():
        nonlocal x, t
        source = attractor_source() if callable(attractor_source) else attractor_source
        if source is None:
            raise UnrecoverableStateError(
                "initial plan infeasible and no transition system available "
                "for the reachability fallback"
            )
        att = source if isinstance(source, Attractor) else reachability_game(source, win.cells)
        while t < steps and grid.locate(x) not in win.cells:
            q = grid.locate(x)
            if q not in att.cells:
                raise UnrecoverableStateError(
                    f"cell {q} cannot be driven into the winning cells"
                )
            u = att.control[q]
            u_pat = net.controls[u]
            d = sample_demand(net, rng)
            records.append(StepRecord(
                t, x, u_pat, d, None, robustness(safeset, x), False, None,
            ))
            x = step(net, x, u_pat, d)
            t += 1
            trace.prephase_steps += 1
            trace.infeasible_events += 1

    while t < steps:
        nominal = nominal_demands(net, cfg, rng)
        witness_ok = None
        if prev is not None:
            witness_ok = (
                shifted_witness(net, x, prev.sequence[1:], grid, safe_cells, win)
                is not None
            )
        try:
            pl = plan(net, x, cfg, grid, safe_cells, win, nominal=nominal)
        except PlanInfeasibleError:
            if started_feasible:
                raise RecursiveFeasibilityError(
                    f"plan became infeasible at step {t} after a feasible start"
                )
            if grid.locate(x) in win.cells:
                # Already inside the certified region; a shorter horizon is
                # the only recourse, not the reachability fallback.
                raise
            run_prephase()
            if t >= steps:
                break
            prev = None
            continue
        started_feasible = True
        d = sample_demand(net, rng)
        records.append(StepRecord(
            t, x, pl.first, d, pl.cost, robustness(safeset, x), True, witness_ok,
        ))
        x = step(net, x, pl.first, d)
        t += 1
        prev = pl

    trace.final_state = x
    trace.final_rho = robustness(safeset, x)
    return trace
