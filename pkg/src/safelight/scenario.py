"""Scenario files: JSON descriptions of a network, its safety requirement,
the partition refinement, and the closed-loop configuration.

A scenario bundles everything one synthesis-and-run needs:

    {
      "name": "desk2",
      "links": [
        {"id": "1", "capacity": 10, "saturation": 4, "head": "A",
         "turns": [{"to": "2", "beta": 0.5, "alpha": 1.0}]},
        {"id": "2", "capacity": 10, "saturation": 4, "tail": "A", "head": "B"}
      ],
      "phases": [{"links": ["1", "2"], "equality": false, "rhs": 2}],
      "demand_boxes": [{"lower": [0, 0], "upper": [2, 0]}],
      "safety": {"all": [{"link": "1", "max": 5}]},
      "breakpoints": {"2": [5]},
      "mpc": {"horizon": 2, "nominal": "midpoint"},
      "x0": [0, 0]
    }

safety nodes are {"link": id, "max": bound}, {"all": [...]}, or
{"any": [...]}.  Scenario names passed to the CLI resolve first as file
paths, then against the files bundled under safelight/scenarios/.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import ScenarioError
from .geometry import AllOf, AnyOf, Atom, SafeSet, SafetyExpr, compile_safety_expr
from .mpc import MpcConfig
from .network import (
    DemandBox,
    Link,
    NetworkSpec,
    PhaseConstraint,
    Turn,
    ValidatedNetwork,
    validate_spec,
)


@dataclass(frozen=True)
class Scenario:
    name: str
    net: ValidatedNetwork
    safety: SafetyExpr
    safeset: SafeSet
    breakpoints: dict[str, tuple[float, ...]]
    mpc: MpcConfig
    x0: tuple[float, ...]
    raw: dict

    def fingerprint(self) -> str:
        """Stable content hash used to key synthesis caches."""
        blob = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _req(obj: dict, key: str, where: str):
    if key not in obj:
        raise ScenarioError(f"{where}: missing required key {key!r}")
    return obj[key]


def parse_safety(node) -> SafetyExpr:
    if not isinstance(node, dict):
        raise ScenarioError(f"safety node must be an object, got {type(node).__name__}")
    if "link" in node:
        bound = _req(node, "max", "safety atom")
        return Atom(str(node["link"]), float(bound))
    if "all" in node:
        args = node["all"]
        if not isinstance(args, list) or not args:
            raise ScenarioError("safety 'all' needs a non-empty list")
        return AllOf(tuple(parse_safety(a) for a in args))
    if "any" in node:
        args = node["any"]
        if not isinstance(args, list) or not args:
            raise ScenarioError("safety 'any' needs a non-empty list")
        return AnyOf(tuple(parse_safety(a) for a in args))
    raise ScenarioError(f"safety node needs 'link', 'all', or 'any': {node!r}")


def _parse_link(obj: dict) -> Link:
    lid = str(_req(obj, "id", "link"))
    where = f"link {lid!r}"
    turns = tuple(
        Turn(
            to=str(_req(t, "to", f"{where} turn")),
            beta=float(_req(t, "beta", f"{where} turn")),
            alpha=float(t.get("alpha", 1.0)),
        )
        for t in obj.get("turns", ())
    )
    return Link(
        id=lid,
        capacity=float(_req(obj, "capacity", where)),
        saturation=float(_req(obj, "saturation", where)),
        head=str(_req(obj, "head", where)),
        tail=None if obj.get("tail") is None else str(obj["tail"]),
        downstream=turns,
    )


def parse_scenario(obj: dict, name: str | None = None) -> Scenario:
    if not isinstance(obj, dict):
        raise ScenarioError("scenario must be a JSON object")
    sname = str(obj.get("name") or name or "scenario")
    links = _req(obj, "links", sname)
    if not isinstance(links, list) or not links:
        raise ScenarioError(f"{sname}: 'links' must be a non-empty list")
    phases = tuple(
        PhaseConstraint(
            links=tuple(str(l) for l in _req(p, "links", f"{sname} phase")),
            equality=bool(p.get("equality", True)),
            rhs=int(p.get("rhs", 1)),
        )
        for p in obj.get("phases", ())
    )
    demand = tuple(
        DemandBox(
            lower=tuple(float(v) for v in _req(b, "lower", f"{sname} demand box")),
            upper=tuple(float(v) for v in _req(b, "upper", f"{sname} demand box")),
        )
        for b in obj.get("demand_boxes", ())
    )
    spec = NetworkSpec(
        links=tuple(_parse_link(l) for l in links),
        phases=phases,
        demand=demand,
    )
    net = validate_spec(spec)

    expr = parse_safety(_req(obj, "safety", sname))
    safeset = compile_safety_expr(net, expr)

    bp_raw = obj.get("breakpoints", {})
    if not isinstance(bp_raw, dict):
        raise ScenarioError(f"{sname}: 'breakpoints' must map link ids to lists")
    breakpoints = {
        str(lid): tuple(float(v) for v in values) for lid, values in bp_raw.items()
    }

    mpc_raw = obj.get("mpc", {})
    mpc = MpcConfig(
        horizon=int(mpc_raw.get("horizon", 3)),
        nominal=str(mpc_raw.get("nominal", "midpoint")),
        enumeration_cap=int(mpc_raw.get("enumeration_cap", 100_000)),
        branch_cap=int(mpc_raw.get("branch_cap", 4096)),
    )
    if mpc.horizon < 1:
        raise ScenarioError(f"{sname}: mpc horizon must be at least 1")
    if mpc.nominal not in ("midpoint", "zero", "random"):
        raise ScenarioError(f"{sname}: unknown nominal demand mode {mpc.nominal!r}")

    x0_raw = obj.get("x0")
    if x0_raw is None:
        x0 = (0.0,) * net.n
    else:
        x0 = tuple(float(v) for v in x0_raw)
        if len(x0) != net.n:
            raise ScenarioError(f"{sname}: x0 has {len(x0)} entries for {net.n} links")
        for l, v in enumerate(x0):
            if not (0.0 <= v <= net.cap[l]):
                raise ScenarioError(
                    f"{sname}: x0[{l}] = {v} outside [0, {net.cap[l]}]"
                )

    return Scenario(
        name=sname,
        net=net,
        safety=expr,
        safeset=safeset,
        breakpoints=breakpoints,
        mpc=mpc,
        x0=x0,
        raw=obj,
    )


def bundled_names() -> tuple[str, ...]:
    root = resources.files("safelight") / "scenarios"
    return tuple(
        sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))
    )


def load_scenario(name_or_path: str | Path) -> Scenario:
    """Load a scenario from a file path or a bundled scenario name."""
    path = Path(name_or_path)
    if path.suffix == ".json" and path.exists():
        try:
            obj = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"{path}: not valid JSON ({exc})")
        return parse_scenario(obj, name=path.stem)
    candidate = resources.files("safelight") / "scenarios" / f"{name_or_path}.json"
    if candidate.is_file():
        return parse_scenario(json.loads(candidate.read_text()), name=str(name_or_path))
    raise ScenarioError(
        f"no scenario file {name_or_path!r}; bundled scenarios: "
        + ", ".join(bundled_names())
    )
