"""Interval over-approximation of one-step and multi-step reachable sets.

Occupancy updates are componentwise monotone once every link satisfies the
flow-bound headroom condition: x_l' never decreases when l itself, a
downstream link, or an upstream feeder fills up, and never increases when
a rival link (one competing for the same feeder's output) fills up.  The
image of a box under one step is therefore bounded by evaluating the
update at two mixed corners per output coordinate:

    upper:  own / downstream / upstream at their upper bounds,
            rivals at their lower bounds, demand at its upper bound;
    lower:  the mirror image.

Both profiles are clamped to [0, cap].  Multi-step reach iterates the
one-step operator on every (box, demand-box) branch, so the frontier
grows by a factor of the number of demand boxes each step.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import AssumptionViolationError, ReachExplosionError
from .network import ControlPattern, ValidatedNetwork


@dataclass(frozen=True)
class ReachBox:
    """Closed interval hull of a one-step image."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]


def _require_sound(net: ValidatedNetwork) -> None:
    if not net.flow_bound_ok:
        raise AssumptionViolationError(
            "flow-bound headroom violated: corner bounds would be unsound "
            "(see check_flow_bound_assumption for the failing pairs)"
        )
    if not net.corner_sound:
        raise AssumptionViolationError(
            "a link is both a rival and an own/upstream/downstream neighbour "
            "of the same link; corner bounds would be unsound"
        )


def _profile(net, a, b, u, d):
    """Evaluate the update at a mixed corner.

    a carries the coordinates read with the aligned sign (own, downstream,
    upstream); b carries rival coordinates.  Term order matches step() so
    a degenerate box reproduces the simulator bit for bit.
    """
    out = []
    cap = net.cap
    sat = net.sat
    for l in range(net.n):
        xl = a[l]
        if u[l]:
            m = xl if xl < sat[l] else sat[l]
            for k, ratio in net.out_plan[l]:
                room = ratio * (cap[k] - a[k])
                if room < m:
                    m = room
            v = xl - m
        else:
            v = xl
        for i, beta, ci, gates in net.in_plan[l]:
            if u[i]:
                m = a[i] if a[i] < ci else ci
                for k, ratio, own in gates:
                    room = ratio * (cap[k] - (a[k] if own else b[k]))
                    if room < m:
                        m = room
                v += beta * m
        v += d[l]
        if v > cap[l]:
            v = cap[l]
        elif v < 0.0:
            v = 0.0
        out.append(v)
    return tuple(out)


def reach_one_box(
    net: ValidatedNetwork, box: ReachBox, u: ControlPattern, demand_index: int = 0
) -> ReachBox:
    """One-step image bound of a box under pattern u and one demand box."""
    _require_sound(net)
    dbox = net.demand[demand_index]
    hi = _profile(net, box.hi, box.lo, u, dbox.upper)
    lo = _profile(net, box.lo, box.hi, u, dbox.lower)
    return ReachBox(lo, hi)


def reach_one(net: ValidatedNetwork, box: ReachBox, u: ControlPattern) -> tuple[ReachBox, ...]:
    """One-step image bounds, one box per demand box."""
    return tuple(
        reach_one_box(net, box, u, idx) for idx in range(len(net.demand))
    )


def reach_h(
    net: ValidatedNetwork,
    box: ReachBox,
    controls: tuple[ControlPattern, ...],
    branch_cap: int = 4096,
) -> list[tuple[ReachBox, ...]]:
    """Reach unions after 1..H steps under a fixed control sequence.

    Returns one tuple of boxes per step.  The frontier multiplies by the
    number of demand boxes each step; when it would exceed branch_cap a
    ReachExplosionError is raised (coarsen the demand boxes or shorten
    the horizon).
    """
    _require_sound(net)
    n_d = len(net.demand)
    frontier: tuple[ReachBox, ...] = (box,)
    out = []
    for u in controls:
        if len(frontier) * n_d > branch_cap:
            raise ReachExplosionError(
                f"reach frontier would grow to {len(frontier) * n_d} boxes "
                f"(cap {branch_cap}); coarsen demand boxes or shorten the horizon"
            )
        frontier = tuple(
            reach_one_box(net, b, u, idx)
            for b in frontier
            for idx in range(n_d)
        )
        out.append(frontier)
    return out
