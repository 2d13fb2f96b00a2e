"""Finite abstraction: partition grids over the state space and the
induced over-approximating transition system.

Each link's occupancy range [0, cap] is cut at breakpoints into intervals
that are closed at the low end only for the first interval:
[b0, b1], (b1, b2], ..., (b_{m-1}, b_m].  A cell is a product of one
interval per link, indexed in mixed radix with the first link most
significant.  Because every safe-set threshold is required to be a
breakpoint, each cell is entirely safe or entirely unsafe.

The abstract successor set delta(q, u) collects every cell that meets the
one-step interval image of the cell's closure, for each demand box.  Any
concrete step from inside q therefore lands in a cell of delta(q, u),
which is the simulation property the safety game relies on.
"""

from __future__ import annotations

import logging
import time
from bisect import bisect_left
from dataclasses import dataclass
from itertools import product

from .errors import GridError
from .geometry import Box, SafeSet
from .network import ControlPattern, State, ValidatedNetwork
from .reach import ReachBox, reach_one

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PartitionGrid:
    """Per-link breakpoint table, including 0 and the capacity."""

    breaks: tuple[tuple[float, ...], ...]

    @property
    def n_links(self) -> int:
        return len(self.breaks)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(b) - 1 for b in self.breaks)

    @property
    def n_cells(self) -> int:
        out = 1
        for m in self.shape:
            out *= m
        return out

    @property
    def strides(self) -> tuple[int, ...]:
        shape = self.shape
        strides = [1] * len(shape)
        for l in range(len(shape) - 2, -1, -1):
            strides[l] = strides[l + 1] * shape[l + 1]
        return tuple(strides)

    def locate1d(self, l: int, v: float) -> int:
        breaks = self.breaks[l]
        if v < breaks[0] or v > breaks[-1]:
            raise GridError(
                f"value {v} outside [{breaks[0]}, {breaks[-1]}] on link {l}"
            )
        idx = bisect_left(breaks, v) - 1
        return idx if idx >= 0 else 0

    def locate(self, x: State) -> int:
        q = 0
        for l, stride in enumerate(self.strides):
            q += self.locate1d(l, x[l]) * stride
        return q

    def index_of(self, q: int) -> tuple[int, ...]:
        out = []
        for stride in self.strides:
            out.append(q // stride)
            q %= stride
        return tuple(out)

    def cell_id(self, idx: tuple[int, ...]) -> int:
        return sum(i * s for i, s in zip(idx, self.strides))

    def cell_closure(self, q: int) -> tuple[tuple[float, ...], tuple[float, ...]]:
        idx = self.index_of(q)
        lo = tuple(self.breaks[l][i] for l, i in enumerate(idx))
        hi = tuple(self.breaks[l][i + 1] for l, i in enumerate(idx))
        return lo, hi

    def cell_box(self, q: int) -> Box:
        """The cell as a half-open box (the first interval is fully closed)."""
        idx = self.index_of(q)
        lo, hi = self.cell_closure(q)
        n = self.n_links
        return Box(lo, hi, tuple(idx[l] > 0 for l in range(n)), (False,) * n)

    def range1d(self, l: int, lo: float, hi: float) -> tuple[int, int]:
        """Inclusive index range of intervals meeting the closed span [lo, hi]."""
        return self.locate1d(l, lo), self.locate1d(l, hi)


def build_partition(
    net: ValidatedNetwork,
    safeset: SafeSet,
    extra: dict[str, tuple[float, ...]] | None = None,
) -> PartitionGrid:
    """Cut each link at 0, the capacity, every safe-set threshold on that
    link, and any extra breakpoints supplied per link id."""
    extra = extra or {}
    for lid in extra:
        if lid not in net.index:
            raise GridError(f"breakpoints given for unknown link {lid!r}")
    cuts: list[set[float]] = [set() for _ in range(net.n)]
    for box in safeset.boxes:
        for l in range(net.n):
            if box.hi[l] < net.cap[l]:
                cuts[l].add(box.hi[l])
    for lid, values in extra.items():
        l = net.index[lid]
        for v in values:
            if not (0.0 < v < net.cap[l]):
                raise GridError(
                    f"breakpoint {v} outside (0, {net.cap[l]}) on link {lid!r}"
                )
            cuts[l].add(v)
    breaks = tuple(
        tuple([0.0] + sorted(cuts[l]) + [net.cap[l]]) for l in range(net.n)
    )
    return PartitionGrid(breaks)


def label_cells(grid: PartitionGrid, safeset: SafeSet) -> frozenset[int]:
    """Ids of cells entirely inside the safe set.

    Refuses when some safe-set threshold is not a breakpoint, since the
    grid would then split cells across the safety boundary.
    """
    limits = []
    for box in safeset.boxes:
        lim = []
        for l in range(grid.n_links):
            breaks = grid.breaks[l]
            hi = box.hi[l]
            if hi >= breaks[-1]:
                lim.append(len(breaks) - 1)
                continue
            pos = bisect_left(breaks, hi)
            if pos == len(breaks) or breaks[pos] != hi:
                raise GridError(
                    f"safe-set threshold {hi} on link {l} is not a grid breakpoint"
                )
            lim.append(pos)
        limits.append(tuple(lim))
    safe = []
    for q, idx in enumerate(product(*[range(m) for m in grid.shape])):
        if any(all(idx[l] < lim[l] for l in range(grid.n_links)) for lim in limits):
            safe.append(q)
    return frozenset(safe)


@dataclass(frozen=True)
class TransitionSystem:
    """delta[q][u] = sorted cell ids meeting the one-step image of cell q."""

    grid: PartitionGrid
    controls: tuple[ControlPattern, ...]
    delta: tuple[tuple[tuple[int, ...] | None, ...], ...]
    safe_cells: frozenset[int] | None = None

    @property
    def n_cells(self) -> int:
        return len(self.delta)

    @property
    def n_controls(self) -> int:
        return len(self.controls)


def build_transitions(
    net: ValidatedNetwork,
    grid: PartitionGrid,
    safe_cells: frozenset[int] | None = None,
    restrict_to_safe: bool = False,
) -> TransitionSystem:
    """Abstract successor table for every (cell, pattern) pair.

    With restrict_to_safe, rows are only computed for cells in safe_cells
    (the safety game never reads others); unrestricted rows are needed for
    the reachability game and are the default.
    """
    t0 = time.perf_counter()
    strides = grid.strides
    n = grid.n_links
    n_d = len(net.demand)
    rows = []
    restrict = safe_cells if restrict_to_safe else None
    for q in range(grid.n_cells):
        if restrict is not None and q not in restrict:
            rows.append(tuple(None for _ in net.controls))
            continue
        lo, hi = grid.cell_closure(q)
        cell = ReachBox(lo, hi)
        per_u = []
        for u in net.controls:
            succs: set[int] = set()
            for rbox in reach_one(net, cell, u):
                ranges = [
                    range(*_incl(grid.range1d(l, rbox.lo[l], rbox.hi[l])))
                    for l in range(n)
                ]
                for idx in product(*ranges):
                    succs.add(sum(i * s for i, s in zip(idx, strides)))
            per_u.append(tuple(sorted(succs)))
        rows.append(tuple(per_u))
    ts = TransitionSystem(grid, net.controls, tuple(rows), safe_cells)
    n_edges = sum(
        len(d) for row in rows for d in row if d is not None
    )
    log.info(
        "abstraction: %d cells, %d patterns, %d demand boxes, %d edges, %.1f ms",
        grid.n_cells, len(net.controls), n_d, n_edges,
        1e3 * (time.perf_counter() - t0),
    )
    return ts


def _incl(pair: tuple[int, int]) -> tuple[int, int]:
    a, b = pair
    return a, b + 1


def export_edges(ts: TransitionSystem, fileobj) -> int:
    """Write 'cell control successor...' lines; returns the line count."""
    count = 0
    for q, row in enumerate(ts.delta):
        for u, succs in enumerate(row):
            if succs is None:
                continue
            fileobj.write(f"{q} {u} {' '.join(map(str, succs))}\n")
            count += 1
    return count
