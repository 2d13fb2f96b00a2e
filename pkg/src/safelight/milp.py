"""Mixed-logical-dynamical encoding of the network dynamics.

The one-step update is exactly representable with linear constraints over
continuous variables plus indicator binaries:

  * z_l = min(x_l, c_l, per-turn downstream room) via one selector binary
    per candidate; the selector of an achieved minimum is 0 and the
    selectors sum to (candidates - 1), so exactly one lower bound binds;
  * f_l = u_l * z_l via a standard product linearisation with the signal
    binary;
  * z'_l = x_l - f_l + sum_i beta_il f_i + d_l is linear;
  * x_l[t+1] = min(z'_l, cap_l) via one clamp binary.

Big-M constants are chosen from the variable boxes so every relaxed row
is satisfiable whatever the continuous variables do.  emit_lp renders the
model in LP text format with deterministic bytes; check_substitution
replays a simulated trace through every constraint row.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .geometry import Box
from .network import ValidatedNetwork

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class VarDef:
    name: str
    lo: float
    hi: float
    binary: bool = False


@dataclass(frozen=True)
class LinRow:
    """sum(coeffs) (sense) rhs; relax names the binary (and its value)
    under which the row is deliberately slack."""

    name: str
    coeffs: dict[str, float]
    sense: str  # "<=", ">=", "="
    rhs: float
    relax: tuple[str, int] | None = None


@dataclass
class MldModel:
    net: ValidatedNetwork
    horizon: int
    big_m: float
    big_m_clamp: float
    variables: dict[str, VarDef]
    rows: list[LinRow]
    # Per link: the z-block candidate descriptors, in selector order.
    zcands: tuple[tuple[tuple, ...], ...]

    def var_names(self) -> tuple[str, ...]:
        return tuple(self.variables)


def xvar(l: int, t: int) -> str:
    return f"x_l{l}_t{t}"


def uvar(l: int, t: int) -> str:
    return f"u_l{l}_t{t}"


def dvar(l: int, t: int) -> str:
    return f"d_l{l}_t{t}"


def zvar(l: int, t: int) -> str:
    return f"z_l{l}_t{t}"


def fvar(l: int, t: int) -> str:
    return f"f_l{l}_t{t}"


def zpvar(l: int, t: int) -> str:
    return f"zp_l{l}_t{t}"


def selvar(l: int, c: int, t: int) -> str:
    return f"dsel_l{l}_c{c}_t{t}"


def clampvar(l: int, t: int) -> str:
    return f"dclamp_l{l}_t{t}"


def build_mld(
    net: ValidatedNetwork,
    horizon: int,
    safe_box: Box | None = None,
    terminal_box: Box | None = None,
) -> MldModel:
    """Assemble variables and rows for a given horizon.

    safe_box, when given, adds per-step state membership rows for
    t = 1..H; terminal_box adds them at t = H only.  Both must be single
    boxes: unions are not linearly representable here.
    """
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    n = net.n
    dlo, dhi = net.demand_bounds()

    big_m = max(net.cap + net.sat)
    for l in range(n):
        for k, ratio in net.out_plan[l]:
            big_m = max(big_m, ratio * net.cap[k])
    big_m_clamp = 0.0
    for l in range(n):
        z_hi = net.cap[l] + dhi[l]
        for i, beta, _alpha in net.up[l]:
            z_hi += beta * net.sat[i]
        big_m_clamp = max(big_m_clamp, z_hi)

    zcands = []
    for l in range(n):
        cands: list[tuple] = [("x",), ("c",)]
        for k, ratio in net.out_plan[l]:
            cands.append(("space", k, ratio))
        zcands.append(tuple(cands))

    variables: dict[str, VarDef] = {}

    def add_var(name, lo, hi, binary=False):
        variables[name] = VarDef(name, lo, hi, binary)

    for t in range(horizon + 1):
        for l in range(n):
            add_var(xvar(l, t), 0.0, net.cap[l])
    for t in range(horizon):
        for l in range(n):
            add_var(uvar(l, t), 0.0, 1.0, binary=True)
        for l in range(n):
            add_var(dvar(l, t), dlo[l], dhi[l])
        for l in range(n):
            add_var(zvar(l, t), 0.0, net.sat[l])
            add_var(fvar(l, t), 0.0, net.sat[l])
            add_var(zpvar(l, t), 0.0, big_m_clamp)
            for c in range(len(zcands[l])):
                add_var(selvar(l, c, t), 0.0, 1.0, binary=True)
            add_var(clampvar(l, t), 0.0, 1.0, binary=True)

    rows: list[LinRow] = []

    def add_row(name, coeffs, sense, rhs, relax=None):
        rows.append(LinRow(name, coeffs, sense, rhs, relax))

    for t in range(horizon):
        for l in range(n):
            z = zvar(l, t)
            # z <= each candidate; z >= candidate - M * selector.
            add_row(f"zub_x_l{l}_t{t}", {z: 1.0, xvar(l, t): -1.0}, "<=", 0.0)
            add_row(
                f"zlb_x_l{l}_t{t}",
                {z: 1.0, xvar(l, t): -1.0, selvar(l, 0, t): big_m},
                ">=",
                0.0,
                relax=(selvar(l, 0, t), 1),
            )
            add_row(f"zub_c_l{l}_t{t}", {z: 1.0}, "<=", net.sat[l])
            add_row(
                f"zlb_c_l{l}_t{t}",
                {z: 1.0, selvar(l, 1, t): big_m},
                ">=",
                net.sat[l],
                relax=(selvar(l, 1, t), 1),
            )
            for c, cand in enumerate(zcands[l]):
                if cand[0] != "space":
                    continue
                _tag, k, ratio = cand
                add_row(
                    f"zub_s_l{l}_k{k}_t{t}",
                    {z: 1.0, xvar(k, t): ratio},
                    "<=",
                    ratio * net.cap[k],
                )
                add_row(
                    f"zlb_s_l{l}_k{k}_t{t}",
                    {z: 1.0, xvar(k, t): ratio, selvar(l, c, t): big_m},
                    ">=",
                    ratio * net.cap[k],
                    relax=(selvar(l, c, t), 1),
                )
            add_row(
                f"zsel_l{l}_t{t}",
                {selvar(l, c, t): 1.0 for c in range(len(zcands[l]))},
                "=",
                float(len(zcands[l]) - 1),
            )
            # f = u * z.
            add_row(
                f"fub_u_l{l}_t{t}",
                {fvar(l, t): 1.0, uvar(l, t): -net.sat[l]},
                "<=",
                0.0,
                relax=(uvar(l, t), 1),
            )
            add_row(f"fub_z_l{l}_t{t}", {fvar(l, t): 1.0, zvar(l, t): -1.0}, "<=", 0.0)
            add_row(
                f"flb_l{l}_t{t}",
                {fvar(l, t): 1.0, zvar(l, t): -1.0, uvar(l, t): -net.sat[l]},
                ">=",
                -net.sat[l],
                relax=(uvar(l, t), 0),
            )
            # z' = x - f + inflow + d.
            coeffs = {
                zpvar(l, t): 1.0,
                xvar(l, t): -1.0,
                fvar(l, t): 1.0,
                dvar(l, t): -1.0,
            }
            for i, beta, _alpha in net.up[l]:
                coeffs[fvar(i, t)] = coeffs.get(fvar(i, t), 0.0) - beta
            add_row(f"zpdef_l{l}_t{t}", coeffs, "=", 0.0)
            # x[t+1] = min(z', cap): the upper bound against cap is the
            # variable bound; the clamp binary picks which lower bound binds.
            add_row(
                f"xub_zp_l{l}_t{t}",
                {xvar(l, t + 1): 1.0, zpvar(l, t): -1.0},
                "<=",
                0.0,
            )
            add_row(
                f"xlb_zp_l{l}_t{t}",
                {xvar(l, t + 1): 1.0, zpvar(l, t): -1.0, clampvar(l, t): big_m_clamp},
                ">=",
                0.0,
                relax=(clampvar(l, t), 1),
            )
            add_row(
                f"xlb_cap_l{l}_t{t}",
                {xvar(l, t + 1): 1.0, clampvar(l, t): -big_m_clamp},
                ">=",
                net.cap[l] - big_m_clamp,
                relax=(clampvar(l, t), 0),
            )
        for p, phase in enumerate(net.spec.phases):
            coeffs = {uvar(net.index[lid], t): 1.0 for lid in phase.links}
            add_row(
                f"phase{p}_t{t}",
                coeffs,
                "=" if phase.equality else "<=",
                float(phase.rhs),
            )
    if safe_box is not None:
        for t in range(1, horizon + 1):
            for l in range(n):
                if safe_box.hi[l] < net.cap[l]:
                    add_row(
                        f"safe_l{l}_t{t}", {xvar(l, t): 1.0}, "<=", safe_box.hi[l]
                    )
    if terminal_box is not None and horizon >= 1:
        for l in range(n):
            if terminal_box.hi[l] < net.cap[l]:
                add_row(
                    f"term_l{l}", {xvar(l, horizon): 1.0}, "<=", terminal_box.hi[l]
                )
            if terminal_box.lo[l] > 0.0:
                add_row(
                    f"termlo_l{l}", {xvar(l, horizon): 1.0}, ">=", terminal_box.lo[l]
                )

    return MldModel(
        net=net,
        horizon=horizon,
        big_m=big_m,
        big_m_clamp=big_m_clamp,
        variables=variables,
        rows=rows,
        zcands=tuple(zcands),
    )


def _num(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _terms(coeffs: dict[str, float]) -> str:
    parts = []
    for name, c in coeffs.items():
        if c == 0.0:
            continue
        mag = abs(c)
        body = name if mag == 1.0 else f"{_num(mag)} {name}"
        if not parts:
            parts.append(body if c > 0 else f"- {body}")
        else:
            parts.append(f"+ {body}" if c > 0 else f"- {body}")
    return " ".join(parts)


def emit_lp(model: MldModel) -> str:
    """Render the model as LP-format text with deterministic bytes."""
    n = model.net.n
    lines = [
        f"\\ mld dynamics: {n} links, horizon {model.horizon}",
        "Minimize",
    ]
    obj = {
        xvar(l, t): 1.0
        for t in range(1, model.horizon + 1)
        for l in range(n)
    }
    body = _terms(obj)
    lines.append(f" obj: {body}" if body else " obj:")
    lines.append("Subject To")
    for row in model.rows:
        lines.append(f" {row.name}: {_terms(row.coeffs)} {row.sense} {_num(row.rhs)}")
    lines.append("Bounds")
    for var in model.variables.values():
        if not var.binary:
            lines.append(f" {_num(var.lo)} <= {var.name} <= {_num(var.hi)}")
    lines.append("Binaries")
    for var in model.variables.values():
        if var.binary:
            lines.append(f" {var.name}")
    lines.append("End")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class RowViolation:
    window: int
    row: str
    lhs: float
    sense: str
    rhs: float
    amount: float


@dataclass(frozen=True)
class SubstitutionReport:
    ok: bool
    windows: int
    violations: tuple[RowViolation, ...]


def _candidate_values(model, l, xs):
    net = model.net
    out = []
    for cand in model.zcands[l]:
        if cand[0] == "x":
            out.append(xs[l])
        elif cand[0] == "c":
            out.append(net.sat[l])
        else:
            _tag, k, ratio = cand
            out.append(ratio * (net.cap[k] - xs[k]))
    return out


def assignment_for_window(model: MldModel, states, controls, demands, w: int) -> dict[str, float]:
    """Variable assignment replaying one horizon-length trace window.

    Selector binaries mark the first candidate achieving each minimum;
    ties admit other markings, and any of them satisfies the rows.
    """
    net = model.net
    n = net.n
    h = model.horizon
    assign: dict[str, float] = {}
    for t in range(h + 1):
        for l in range(n):
            assign[xvar(l, t)] = states[w + t][l]
    for t in range(h):
        xs = states[w + t]
        u = controls[w + t]
        d = demands[w + t]
        zs = []
        fs = []
        for l in range(n):
            cands = _candidate_values(model, l, xs)
            zval = min(cands)
            jstar = cands.index(zval)
            zs.append(zval)
            fs.append(u[l] * zval)
            assign[uvar(l, t)] = float(u[l])
            assign[dvar(l, t)] = d[l]
            assign[zvar(l, t)] = zval
            assign[fvar(l, t)] = u[l] * zval
            for c in range(len(cands)):
                assign[selvar(l, c, t)] = 0.0 if c == jstar else 1.0
        for l in range(n):
            zp = xs[l] - fs[l]
            for i, beta, _alpha in net.up[l]:
                zp += beta * fs[i]
            zp += d[l]
            assign[zpvar(l, t)] = zp
            assign[clampvar(l, t)] = 1.0 if zp > net.cap[l] else 0.0
    return assign


def implied_bounds(model: MldModel, assign: dict[str, float], name: str) -> tuple[float, float]:
    """Interval for one variable implied by its bounds and every row,
    holding all other variables at their assigned values."""
    var = model.variables[name]
    lb, ub = var.lo, var.hi
    for row in model.rows:
        if name not in row.coeffs:
            continue
        coef = row.coeffs[name]
        if coef == 0.0:
            continue
        rest = sum(
            c * assign[v] for v, c in row.coeffs.items() if v != name
        )
        residual = row.rhs - rest
        if row.sense == "<=":
            if coef > 0:
                ub = min(ub, residual / coef)
            else:
                lb = max(lb, residual / coef)
        elif row.sense == ">=":
            if coef > 0:
                lb = max(lb, residual / coef)
            else:
                ub = min(ub, residual / coef)
        else:
            v = residual / coef
            lb = max(lb, v)
            ub = min(ub, v)
    return lb, ub


def check_substitution(
    model: MldModel, states, controls, demands, tol: float = DEFAULT_TOL
) -> SubstitutionReport:
    """Replay a trace through every constraint row of the model.

    Slides a horizon-length window over the trace.  For each window the
    derived assignment must satisfy every row within tol, sit inside the
    variable bounds, and pin each next state to the trace value: the
    implied interval for x[t+1] must collapse to the simulator's number.
    """
    h = model.horizon
    if len(states) < h + 1:
        raise ValueError(f"trace too short for horizon {h}")
    if len(controls) != len(states) - 1 or len(demands) != len(states) - 1:
        raise ValueError("need exactly one control and demand per transition")
    n = model.net.n
    violations: list[RowViolation] = []
    windows = len(states) - h
    for w in range(windows):
        assign = assignment_for_window(model, states, controls, demands, w)
        for var in model.variables.values():
            val = assign[var.name]
            if val < var.lo - tol or val > var.hi + tol:
                amount = max(var.lo - val, val - var.hi)
                violations.append(
                    RowViolation(w, f"bounds_{var.name}", val, "in", var.hi, amount)
                )
        for row in model.rows:
            lhs = sum(c * assign[v] for v, c in row.coeffs.items())
            if row.sense == "<=":
                amount = lhs - row.rhs
            elif row.sense == ">=":
                amount = row.rhs - lhs
            else:
                amount = abs(lhs - row.rhs)
            if amount > tol:
                violations.append(
                    RowViolation(w, row.name, lhs, row.sense, row.rhs, amount)
                )
        for t in range(h):
            for l in range(n):
                name = xvar(l, t + 1)
                lb, ub = implied_bounds(model, assign, name)
                val = assign[name]
                if ub - lb > 2 * tol or val < lb - tol or val > ub + tol:
                    violations.append(
                        RowViolation(
                            w, f"pin_{name}", val, "pin",
                            lb, max(ub - lb, lb - val, val - ub),
                        )
                    )
    return SubstitutionReport(not violations, windows, tuple(violations))
