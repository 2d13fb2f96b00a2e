"""Fixpoint games on the abstract transition system.

The safety game keeps the largest set of safe cells from which some
pattern confines every abstract successor to the set itself (a greatest
fixpoint).  Concretising the surviving cells yields a robust controlled
invariant region of the original dynamics.  The reachability game grows
the set of cells from which the terminal set can be forced in finitely
many steps regardless of demand (a least fixpoint), recording one pattern
and the worst-case step count per cell.
"""

from __future__ import annotations

import logging
import time
from collections import deque
from dataclasses import dataclass

from .abstraction import PartitionGrid, TransitionSystem
from .errors import EmptyWinningSetError
from .geometry import SafeSet
from .network import ControlPattern

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class WinningSet:
    """Surviving cells of the safety game with their admissible patterns."""

    cells: frozenset[int]
    admissible: dict[int, tuple[int, ...]]


@dataclass(frozen=True)
class Attractor:
    """Cells from which the target is forcible, with chosen pattern and
    worst-case number of steps.  Target cells carry step 0 and no pattern."""

    cells: frozenset[int]
    control: dict[int, int | None]
    steps: dict[int, int]


def safety_game(ts: TransitionSystem, safe_cells: frozenset[int]) -> WinningSet:
    """Greatest fixpoint: repeatedly discard cells with no pattern whose
    successors all stay inside the current set."""
    t0 = time.perf_counter()
    n_u = ts.n_controls
    alive = set(safe_cells)
    bad: dict[tuple[int, int], int] = {}
    good = {}
    rev: dict[int, list[tuple[int, int]]] = {}
    for q in alive:
        row = ts.delta[q]
        g = 0
        for u in range(n_u):
            succs = row[u]
            if succs is None:
                raise EmptyWinningSetError(
                    f"no transitions computed for safe cell {q}"
                )
            outside = 0
            for s in succs:
                if s in alive:
                    rev.setdefault(s, []).append((q, u))
                else:
                    outside += 1
            bad[(q, u)] = outside
            if outside == 0:
                g += 1
        good[q] = g
    queue = deque(q for q in alive if good[q] == 0)
    while queue:
        r = queue.popleft()
        if r not in alive:
            continue
        alive.discard(r)
        for q, u in rev.get(r, ()):
            if q not in alive:
                continue
            bad[(q, u)] += 1
            if bad[(q, u)] == 1:
                good[q] -= 1
                if good[q] == 0:
                    queue.append(q)
    admissible = {
        q: tuple(u for u in range(n_u) if bad[(q, u)] == 0)
        for q in sorted(alive)
    }
    log.info(
        "safety game: %d of %d safe cells survive, %.1f ms",
        len(alive), len(safe_cells), 1e3 * (time.perf_counter() - t0),
    )
    return WinningSet(frozenset(alive), admissible)


def winning_boxes(win: WinningSet, grid: PartitionGrid) -> SafeSet:
    """Concretise the winning cells into a box union.

    Raises EmptyWinningSetError when nothing survived; refine the
    partition (more breakpoints) and resynthesise.
    """
    if not win.cells:
        raise EmptyWinningSetError(
            "the safety game removed every cell; refine the partition"
        )
    caps = tuple(b[-1] for b in grid.breaks)
    boxes = tuple(grid.cell_box(q) for q in sorted(win.cells))
    return SafeSet(boxes, caps)


def reachability_game(ts: TransitionSystem, target: frozenset[int]) -> Attractor:
    """Least fixpoint of the forcible-predecessor operator.

    A cell joins at round k+1 when some pattern sends all successors into
    the set built so far; ties between patterns go to the lowest index.
    The round number is the worst-case number of steps to the target.
    """
    t0 = time.perf_counter()
    n_u = ts.n_controls
    inside = set(target)
    steps: dict[int, int] = {q: 0 for q in target}
    control: dict[int, int | None] = {q: None for q in target}
    remaining = [
        q for q in range(ts.n_cells)
        if q not in inside and ts.delta[q][0] is not None
    ]
    k = 0
    while True:
        k += 1
        added = []
        for q in remaining:
            row = ts.delta[q]
            for u in range(n_u):
                if all(s in inside for s in row[u]):
                    added.append((q, u))
                    break
        if not added:
            break
        for q, u in added:
            inside.add(q)
            steps[q] = k
            control[q] = u
        taken = {q for q, _u in added}
        remaining = [q for q in remaining if q not in taken]
    log.info(
        "reachability game: %d cells reach the %d-cell target, %d rounds, %.1f ms",
        len(inside), len(target), k - 1, 1e3 * (time.perf_counter() - t0),
    )
    return Attractor(frozenset(inside), control, steps)
