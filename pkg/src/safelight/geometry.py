"""Axis-aligned boxes, safe-set expressions, and robustness margins.

Safe sets are boolean combinations of one-sided occupancy atoms
(x_l <= r).  Compilation expands the expression into disjunctive normal
form, yielding a union of boxes each of the form
prod_l [0, r_l] with r_l the tightest bound the conjunct imposes on l
(capacity when unconstrained).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .errors import SpecValidationError
from .network import ValidatedNetwork


@dataclass(frozen=True)
class Atom:
    """x_link <= bound"""

    link: str
    bound: float


@dataclass(frozen=True)
class AllOf:
    args: tuple


@dataclass(frozen=True)
class AnyOf:
    args: tuple


SafetyExpr = Atom | AllOf | AnyOf


def holds(expr: SafetyExpr, net: ValidatedNetwork, x) -> bool:
    """Evaluate a safety expression directly on an occupancy vector."""
    if isinstance(expr, Atom):
        return x[net.index[expr.link]] <= expr.bound
    if isinstance(expr, AllOf):
        return all(holds(a, net, x) for a in expr.args)
    if isinstance(expr, AnyOf):
        return any(holds(a, net, x) for a in expr.args)
    raise TypeError(f"not a safety expression: {expr!r}")


@dataclass(frozen=True)
class Box:
    """Axis-aligned box with per-face openness flags (True = open face)."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    lo_open: tuple[bool, ...]
    hi_open: tuple[bool, ...]

    def contains(self, x) -> bool:
        for l in range(len(self.lo)):
            v = x[l]
            if v < self.lo[l] or (v == self.lo[l] and self.lo_open[l]):
                return False
            if v > self.hi[l] or (v == self.hi[l] and self.hi_open[l]):
                return False
        return True

    def is_empty(self) -> bool:
        for l in range(len(self.lo)):
            if self.lo[l] > self.hi[l]:
                return True
            if self.lo[l] == self.hi[l] and (self.lo_open[l] or self.hi_open[l]):
                return True
        return False


def closed_box(lo, hi) -> Box:
    n = len(lo)
    return Box(tuple(lo), tuple(hi), (False,) * n, (False,) * n)


def box_intersect(a: Box, b: Box) -> Box | None:
    """Exact intersection; None when empty.  On tied faces the open flag
    wins, since an open face excludes the boundary point."""
    lo, hi, lo_open, hi_open = [], [], [], []
    for l in range(len(a.lo)):
        if a.lo[l] > b.lo[l]:
            lo.append(a.lo[l])
            lo_open.append(a.lo_open[l])
        elif a.lo[l] < b.lo[l]:
            lo.append(b.lo[l])
            lo_open.append(b.lo_open[l])
        else:
            lo.append(a.lo[l])
            lo_open.append(a.lo_open[l] or b.lo_open[l])
        if a.hi[l] < b.hi[l]:
            hi.append(a.hi[l])
            hi_open.append(a.hi_open[l])
        elif a.hi[l] > b.hi[l]:
            hi.append(b.hi[l])
            hi_open.append(b.hi_open[l])
        else:
            hi.append(a.hi[l])
            hi_open.append(a.hi_open[l] or b.hi_open[l])
    out = Box(tuple(lo), tuple(hi), tuple(lo_open), tuple(hi_open))
    return None if out.is_empty() else out


@dataclass(frozen=True)
class SafeSet:
    """Union of boxes inside the state space prod_l [0, cap_l]."""

    boxes: tuple[Box, ...]
    caps: tuple[float, ...]

    def contains(self, x) -> bool:
        return any(box.contains(x) for box in self.boxes)


def _conjuncts(expr: SafetyExpr) -> list[dict[str, float]]:
    """DNF expansion: a list of {link: tightest upper bound} mappings."""
    if isinstance(expr, Atom):
        return [{expr.link: expr.bound}]
    if isinstance(expr, AnyOf):
        out = []
        for a in expr.args:
            out.extend(_conjuncts(a))
        return out
    if isinstance(expr, AllOf):
        parts = [_conjuncts(a) for a in expr.args]
        out = []
        for combo in itertools.product(*parts):
            merged: dict[str, float] = {}
            for term in combo:
                for lid, r in term.items():
                    if lid not in merged or r < merged[lid]:
                        merged[lid] = r
            out.append(merged)
        return out
    raise TypeError(f"not a safety expression: {expr!r}")


def compile_safety_expr(
    net: ValidatedNetwork, expr: SafetyExpr, prune: bool = True
) -> SafeSet:
    """Compile an expression to a box union over the network's state space.

    Every atom must bound a known link strictly inside (0, cap).  With
    prune enabled, boxes contained in another box are dropped.
    """
    for atom in _atoms(expr):
        if atom.link not in net.index:
            raise SpecValidationError(f"safety atom on unknown link {atom.link!r}")
        cap = net.cap[net.index[atom.link]]
        if not (0.0 < atom.bound < cap):
            raise SpecValidationError(
                f"safety atom bound {atom.bound} on link {atom.link!r} "
                f"outside (0, {cap})"
            )
    n = net.n
    boxes = []
    for conj in _conjuncts(expr):
        hi = list(net.cap)
        for lid, r in conj.items():
            hi[net.index[lid]] = r
        boxes.append(closed_box((0.0,) * n, hi))
    if prune:
        boxes = _prune_subsumed(boxes)
    return SafeSet(tuple(boxes), net.cap)


def _atoms(expr: SafetyExpr):
    if isinstance(expr, Atom):
        yield expr
    elif isinstance(expr, (AllOf, AnyOf)):
        for a in expr.args:
            yield from _atoms(a)
    else:
        raise TypeError(f"not a safety expression: {expr!r}")


def _prune_subsumed(boxes: list[Box]) -> list[Box]:
    keep = []
    for i, box in enumerate(boxes):
        subsumed = False
        for j, other in enumerate(boxes):
            if i == j:
                continue
            if all(other.hi[l] >= box.hi[l] for l in range(len(box.hi))):
                # Strictly larger, or an identical earlier/later duplicate:
                # keep the first occurrence only.
                if any(other.hi[l] > box.hi[l] for l in range(len(box.hi))) or j < i:
                    subsumed = True
                    break
        if not subsumed:
            keep.append(box)
    return keep


def safe_contains(s: SafeSet, x) -> bool:
    return s.contains(x)


def robustness(s: SafeSet, x) -> float:
    """Signed Euclidean distance from x to the safety-violation boundary.

    Positive inside the safe set, negative outside, zero on the boundary.
    Faces of a safe box lying on the boundary of the state space itself
    (x_l = 0 or x_l = cap_l) cannot be crossed into a violation and are
    ignored; if some box has no other face the set cannot be violated at
    all and the margin is infinite.
    """
    if s.contains(x):
        return _violation_distance(s, x)
    best = None
    for box in s.boxes:
        acc = 0.0
        for l in range(len(x)):
            gap = 0.0
            if x[l] < box.lo[l]:
                gap = box.lo[l] - x[l]
            elif x[l] > box.hi[l]:
                gap = x[l] - box.hi[l]
            acc += gap * gap
        if best is None or acc < best:
            best = acc
    return -math.sqrt(best)


def _violation_distance(s: SafeSet, x) -> float:
    # A violating point must leave every box through some interior face.
    # Per dimension we may push x upward past an upper face or downward
    # past a lower face; search the cheapest combination covering all
    # boxes.  Faces on the state-space boundary are not violable.
    n = len(x)
    nb = len(s.boxes)
    all_mask = (1 << nb) - 1
    options: list[list[tuple[float, int]]] = []
    for l in range(n):
        ups = sorted({box.hi[l] for box in s.boxes if box.hi[l] < s.caps[l]})
        dns = sorted(
            {box.lo[l] for box in s.boxes if box.lo[l] > 0.0}, reverse=True
        )
        up_opts = []
        for t in ups:
            mask = 0
            for i, box in enumerate(s.boxes):
                if box.hi[l] <= t:
                    mask |= 1 << i
            up_opts.append((t, mask))
        dn_opts = []
        for t in dns:
            mask = 0
            for i, box in enumerate(s.boxes):
                if box.lo[l] >= t:
                    mask |= 1 << i
            dn_opts.append((t, mask))
        opts = []
        for t, mask in up_opts:
            cost = max(0.0, t - x[l])
            opts.append((cost * cost, mask))
        for t, mask in dn_opts:
            cost = max(0.0, x[l] - t)
            opts.append((cost * cost, mask))
        # One coordinate may clear an upper face of one box and a lower
        # face of another at once when a gap separates them.
        for t_up, m_up in up_opts:
            for t_dn, m_dn in dn_opts:
                if t_up < t_dn:
                    cost = max(0.0, t_up - x[l], x[l] - t_dn)
                    opts.append((cost * cost, m_up | m_dn))
        options.append(opts)
    if any(
        all(box.hi[l] >= s.caps[l] for l in range(n))
        and all(box.lo[l] <= 0.0 for l in range(n))
        for box in s.boxes
    ):
        return math.inf

    best = [math.inf]

    def search(dim: int, covered: int, acc: float) -> None:
        if acc >= best[0]:
            return
        if covered == all_mask:
            best[0] = acc
            return
        if dim == n:
            return
        for cost2, mask in options[dim]:
            if mask & ~covered:
                search(dim + 1, covered | mask, acc + cost2)
        search(dim + 1, covered, acc)

    search(0, 0, 0.0)
    return math.sqrt(best[0]) if best[0] < math.inf else math.inf
