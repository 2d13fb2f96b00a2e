"""Link-level traffic network model with binary signal controls.

A network is a set of one-way links joined at named intersections.  Each
link l holds an occupancy x_l in [0, capacity].  When its light is green
(u_l = 1) the link releases

    f_l = min( x_l, c_l, min over downstream k of (alpha_lk/beta_lk) * (cap_k - x_k) )

vehicles per step: never more than are present, never more than the
saturation flow c_l, and never more than the share of downstream spare
capacity granted to l.  A fraction beta_lk of the released vehicles joins
each downstream link k (the rest leaves the modelled network), so the
occupancy update is

    x_l' = min( x_l - f_l + sum over upstream i of beta_il * f_i + d_l, cap_l )

with d_l the exogenous demand entering link l during the step.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import SpecValidationError

State = tuple[float, ...]
ControlPattern = tuple[int, ...]
DemandVector = tuple[float, ...]

DEFAULT_TOL = 1e-9

# Enumerating admissible signal patterns walks the full binary cube, which
# is only sensible for the small networks this package targets.
MAX_ENUM_LINKS = 20


@dataclass(frozen=True)
class Turn:
    """Directed connection from one link into a downstream link.

    beta is the fraction of released vehicles that takes this turn; alpha
    is the fraction of the downstream link's spare capacity available to
    the sender while its light is green.
    """

    to: str
    beta: float
    alpha: float


@dataclass(frozen=True)
class Link:
    id: str
    capacity: float
    saturation: float
    head: str
    tail: str | None = None
    downstream: tuple[Turn, ...] = ()


@dataclass(frozen=True)
class PhaseConstraint:
    """Linear restriction on signal patterns: sum of u over links (==|<=) rhs."""

    links: tuple[str, ...]
    equality: bool = True
    rhs: int = 1


@dataclass(frozen=True)
class DemandBox:
    """Componentwise interval [lower, upper] of exogenous demands."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]


@dataclass(frozen=True)
class NetworkSpec:
    links: tuple[Link, ...]
    phases: tuple[PhaseConstraint, ...] = ()
    demand: tuple[DemandBox, ...] = ()


@dataclass(frozen=True)
class FlowBoundEntry:
    link: str
    upstream: str
    capacity: float
    required: float
    ok: bool


@dataclass(frozen=True)
class FlowBoundReport:
    """Per-(link, upstream) check of cap_l >= c_l + c_i * beta_il / alpha_il.

    The inequality guarantees that a link constrained by downstream space
    has already stopped being constrained by its own occupancy, which is
    what makes one-step corner bounds sound.
    """

    entries: tuple[FlowBoundEntry, ...]

    @property
    def ok(self) -> bool:
        return all(e.ok for e in self.entries)

    def failures(self) -> tuple[FlowBoundEntry, ...]:
        return tuple(e for e in self.entries if not e.ok)


@dataclass(frozen=True)
class ValidatedNetwork:
    """Index-based form of a NetworkSpec with derived adjacency tables.

    down[l] / up[l] hold (other_index, beta, alpha) triples taken from the
    declared turns.  adj[l] lists links that compete with l for the output
    of a shared upstream feeder.  out_plan / in_plan are flattened loop
    tables used by the simulator and the interval-bound kernel.
    """

    spec: NetworkSpec
    ids: tuple[str, ...]
    index: dict[str, int]
    cap: tuple[float, ...]
    sat: tuple[float, ...]
    head: tuple[str, ...]
    tail: tuple[str | None, ...]
    down: tuple[tuple[tuple[int, float, float], ...], ...]
    up: tuple[tuple[tuple[int, float, float], ...], ...]
    adj: tuple[tuple[int, ...], ...]
    controls: tuple[ControlPattern, ...]
    demand: tuple[DemandBox, ...]
    out_plan: tuple[tuple[tuple[int, float], ...], ...]
    in_plan: tuple[tuple[tuple[int, float, float, tuple[tuple[int, float, bool], ...]], ...], ...]
    flow_bound_ok: bool
    corner_sound: bool
    tol: float = DEFAULT_TOL

    @property
    def n(self) -> int:
        return len(self.ids)

    def demand_bounds(self) -> tuple[DemandVector, DemandVector]:
        """Componentwise bounding box over all demand boxes."""
        lo = tuple(min(b.lower[l] for b in self.demand) for l in range(self.n))
        hi = tuple(max(b.upper[l] for b in self.demand) for l in range(self.n))
        return lo, hi


def _check_links(spec: NetworkSpec) -> dict[str, int]:
    if not spec.links:
        raise SpecValidationError("network has no links")
    index: dict[str, int] = {}
    for l, link in enumerate(spec.links):
        if link.id in index:
            raise SpecValidationError(f"duplicate link id {link.id!r}")
        index[link.id] = l
    for link in spec.links:
        if not (link.capacity > 0 and link.capacity < float("inf")):
            raise SpecValidationError(f"link {link.id!r}: capacity must be positive and finite")
        if not (link.saturation > 0 and link.saturation < float("inf")):
            raise SpecValidationError(f"link {link.id!r}: saturation flow must be positive and finite")
        if link.tail is not None and link.tail == link.head:
            raise SpecValidationError(f"link {link.id!r}: tail and head name the same intersection")
    return index


def _check_turns(spec: NetworkSpec, index: dict[str, int], tol: float) -> None:
    for link in spec.links:
        beta_sum = 0.0
        seen: set[str] = set()
        for turn in link.downstream:
            if turn.to not in index:
                raise SpecValidationError(
                    f"link {link.id!r}: turn into unknown link {turn.to!r}"
                )
            if turn.to == link.id:
                raise SpecValidationError(f"link {link.id!r}: turn into itself")
            if turn.to in seen:
                raise SpecValidationError(f"link {link.id!r}: duplicate turn into {turn.to!r}")
            seen.add(turn.to)
            if not (0.0 < turn.beta <= 1.0):
                raise SpecValidationError(
                    f"link {link.id!r}: turn ratio into {turn.to!r} outside (0, 1]"
                )
            if not (0.0 < turn.alpha <= 1.0):
                raise SpecValidationError(
                    f"link {link.id!r}: capacity ratio into {turn.to!r} outside (0, 1]"
                )
            target = spec.links[index[turn.to]]
            if target.tail is None or target.tail != link.head:
                raise SpecValidationError(
                    f"dangling intersection reference: link {link.id!r} turns into "
                    f"{turn.to!r} but tail({turn.to!r}) = {target.tail!r} != head({link.id!r}) = {link.head!r}"
                )
            beta_sum += turn.beta
        if beta_sum > 1.0 + tol:
            raise SpecValidationError(
                f"link {link.id!r}: turn ratios sum to {beta_sum}, exceeding 1"
            )


def _check_demand(spec: NetworkSpec, n: int) -> tuple[DemandBox, ...]:
    demand = spec.demand or (DemandBox((0.0,) * n, (0.0,) * n),)
    for b, box in enumerate(demand):
        if len(box.lower) != n or len(box.upper) != n:
            raise SpecValidationError(f"demand box {b}: length does not match link count")
        for l in range(n):
            if not (0.0 <= box.lower[l] <= box.upper[l]):
                raise SpecValidationError(
                    f"demand box {b}, component {l}: need 0 <= lower <= upper"
                )
    return tuple(demand)


def admissible_controls(spec: NetworkSpec) -> tuple[ControlPattern, ...]:
    """Enumerate signal patterns satisfying every phase constraint.

    Patterns are produced in lexicographic order of the binary vector
    (first link most significant).
    """
    n = len(spec.links)
    if n > MAX_ENUM_LINKS:
        raise SpecValidationError(
            f"control enumeration over {n} links is not supported (max {MAX_ENUM_LINKS})"
        )
    index = {link.id: l for l, link in enumerate(spec.links)}
    compiled = []
    for phase in spec.phases:
        try:
            cols = tuple(index[lid] for lid in phase.links)
        except KeyError as exc:
            raise SpecValidationError(f"phase constraint references unknown link {exc.args[0]!r}")
        if phase.rhs < 0:
            raise SpecValidationError("phase constraint has negative right-hand side")
        compiled.append((cols, phase.equality, phase.rhs))
    out = []
    for bits in itertools.product((0, 1), repeat=n):
        ok = True
        for cols, equality, rhs in compiled:
            s = sum(bits[c] for c in cols)
            if (s != rhs) if equality else (s > rhs):
                ok = False
                break
        if ok:
            out.append(bits)
    return tuple(out)


def validate_spec(spec: NetworkSpec, tol: float = DEFAULT_TOL) -> ValidatedNetwork:
    """Check a NetworkSpec and derive the index tables used everywhere else.

    Raises SpecValidationError with the offending link id on malformed
    input: duplicate ids, bad ratios, turns that disagree with the
    intersection labelling, inconsistent demand boxes, an empty control
    set, or capacity ratios oversubscribed under some admissible pattern.
    """
    index = _check_links(spec)
    _check_turns(spec, index, tol)
    n = len(spec.links)
    demand = _check_demand(spec, n)

    down: list[list[tuple[int, float, float]]] = [[] for _ in range(n)]
    up: list[list[tuple[int, float, float]]] = [[] for _ in range(n)]
    for l, link in enumerate(spec.links):
        for turn in link.downstream:
            k = index[turn.to]
            down[l].append((k, turn.beta, turn.alpha))
            up[k].append((l, turn.beta, turn.alpha))

    controls = admissible_controls(spec)
    if not controls:
        raise SpecValidationError("empty control set: phase constraints are contradictory")

    # Under any admissible pattern the green upstream links of l may not be
    # granted more than the whole of l's spare capacity, otherwise the
    # update can lose monotonicity in x_l.
    for l in range(n):
        if not up[l]:
            continue
        for u in controls:
            share = sum(alpha for i, _beta, alpha in up[l] if u[i])
            if share > 1.0 + tol:
                raise SpecValidationError(
                    f"link {spec.links[l].id!r}: capacity ratios oversubscribed "
                    f"(sum {share} > 1) under pattern {u}"
                )

    # Links competing with l for the output of a shared feeder.
    adj: list[tuple[int, ...]] = []
    for l in range(n):
        rivals: set[int] = set()
        for i, _beta, _alpha in up[l]:
            rivals.update(k for k, _b, _a in down[i])
        rivals.discard(l)
        adj.append(tuple(sorted(rivals)))

    # Corner bounds assign each coordinate a single monotonicity role, so a
    # rival of l must not simultaneously be l itself, upstream, or downstream.
    corner_sound = True
    for l in range(n):
        local = {l} | {k for k, _b, _a in down[l]} | {i for i, _b, _a in up[l]}
        if local & set(adj[l]):
            corner_sound = False
            break

    cap = tuple(link.capacity for link in spec.links)
    sat = tuple(link.saturation for link in spec.links)
    out_plan = tuple(
        tuple((k, alpha / beta) for k, beta, alpha in down[l]) for l in range(n)
    )
    in_plan = []
    for l in range(n):
        rows = []
        for i, beta_il, _alpha_il in up[l]:
            gates = tuple((k, alpha / beta, k == l) for k, beta, alpha in down[i])
            rows.append((i, beta_il, sat[i], gates))
        in_plan.append(tuple(rows))

    flow_bound_ok = all(
        cap[l] >= sat[l] + sat[i] * beta / alpha - tol
        for l in range(n)
        for i, beta, alpha in up[l]
    )

    return ValidatedNetwork(
        spec=spec,
        ids=tuple(link.id for link in spec.links),
        index=index,
        cap=cap,
        sat=sat,
        head=tuple(link.head for link in spec.links),
        tail=tuple(link.tail for link in spec.links),
        down=tuple(tuple(row) for row in down),
        up=tuple(tuple(row) for row in up),
        adj=tuple(adj),
        controls=controls,
        demand=demand,
        out_plan=out_plan,
        in_plan=tuple(in_plan),
        flow_bound_ok=flow_bound_ok,
        corner_sound=corner_sound,
        tol=tol,
    )


def check_flow_bound_assumption(net: ValidatedNetwork) -> FlowBoundReport:
    """Evaluate cap_l >= c_l + c_i * beta_il / alpha_il for every feeder pair."""
    entries = []
    for l in range(net.n):
        for i, beta, alpha in net.up[l]:
            required = net.sat[l] + net.sat[i] * beta / alpha
            entries.append(
                FlowBoundEntry(
                    link=net.ids[l],
                    upstream=net.ids[i],
                    capacity=net.cap[l],
                    required=required,
                    ok=net.cap[l] >= required - net.tol,
                )
            )
    return FlowBoundReport(tuple(entries))


def outflow(net: ValidatedNetwork, x: State, u: ControlPattern, l: int) -> float:
    """Vehicles leaving link l in one step under occupancy x and pattern u."""
    if not u[l]:
        return 0.0
    m = x[l] if x[l] < net.sat[l] else net.sat[l]
    for k, ratio in net.out_plan[l]:
        room = ratio * (net.cap[k] - x[k])
        if room < m:
            m = room
    return m


def step(net: ValidatedNetwork, x: State, u: ControlPattern, d: DemandVector) -> State:
    """One synchronous update of every link occupancy."""
    f = [outflow(net, x, u, l) for l in range(net.n)]
    out = []
    for l in range(net.n):
        v = x[l] - f[l]
        for i, beta, _alpha in net.up[l]:
            v += beta * f[i]
        v += d[l]
        cap = net.cap[l]
        out.append(v if v < cap else cap)
    return tuple(out)
